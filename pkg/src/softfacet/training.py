"""Learning action-model states from session logs.

Every filter selected in a purchasing session is attributed to the
purchased item, so the observation set maps (query, item) to the brand
indices and range midpoints seen for that item. Training initializes
priors over the whole catalog and folds the observations in with one
batch update per pair; conjugacy makes incremental refreshes agree with
retraining from scratch.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .conjugate import (
    DEFAULT_OPEN_END_WIDTH,
    DEFAULT_OWN_BRAND_MASS,
    DEFAULT_SIGMA_FLOOR,
    DEFAULT_SMOOTHING_MASS,
    DirichletState,
    NIGState,
    categorical_prior_init,
    dirichlet_update,
    nig_prior_init,
    nig_update,
    range_midpoint,
)
from .facets import Catalog, CategoricalFilter, FacetFilter, RangeFilter
from .rerank import ItemModel


@dataclass(frozen=True)
class Session:
    """One logged search interaction: filter actions plus an optional purchase."""

    session_id: str
    query: str
    actions: tuple[FacetFilter, ...]
    purchased: Optional[str] = None


@dataclass
class ModelConfig:
    """All prior hyper-parameters in one versioned document."""

    version: int = 1
    own_brand_mass: float = DEFAULT_OWN_BRAND_MASS
    smoothing_mass: float = DEFAULT_SMOOTHING_MASS
    kappa0: float = 1.0
    alpha0: float = 1.0
    beta0: float = 1.0
    open_end_width: float = DEFAULT_OPEN_END_WIDTH
    sigma_floor: float = DEFAULT_SIGMA_FLOOR

    def __post_init__(self):
        for name in ("smoothing_mass", "kappa0", "alpha0", "beta0", "open_end_width", "sigma_floor"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if self.own_brand_mass < 0.0:
            raise ValueError("own_brand_mass must be >= 0")

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "own_brand_mass": self.own_brand_mass,
            "smoothing_mass": self.smoothing_mass,
            "kappa0": self.kappa0,
            "alpha0": self.alpha0,
            "beta0": self.beta0,
            "open_end_width": self.open_end_width,
            "sigma_floor": self.sigma_floor,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ModelConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**doc)


@dataclass
class ItemObservations:
    """Raw evidence attributed to one (query, item) pair."""

    brand_obs: list[int] = field(default_factory=list)
    price_midpoints: list[float] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not self.brand_obs and not self.price_midpoints


@dataclass
class ObservationSet:
    """Observations grouped per (query, item), plus counts of skipped references."""

    per_pair: dict[tuple[str, str], ItemObservations]
    rejects: dict[str, int]

    def queries(self) -> list[str]:
        return sorted({q for q, _ in self.per_pair})


def extract_observations(
    sessions: Iterable[Session],
    catalog: Catalog,
    open_end_width: float = DEFAULT_OPEN_END_WIDTH,
) -> ObservationSet:
    """Attribute every filter in a purchasing session to the purchased item.

    Sessions without a purchase carry no attribution signal and are
    ignored. Unknown purchased items and out-of-vocabulary brand indices
    are skipped and tallied in the rejects report. Ranges open on both
    ends have no midpoint and are skipped likewise.
    """
    per_pair: dict[tuple[str, str], ItemObservations] = {}
    rejects = {"unknown_item": 0, "invalid_brand": 0, "unusable_range": 0}
    k = len(catalog.vocabulary)
    for session in sessions:
        if session.purchased is None:
            continue
        if session.purchased not in catalog:
            rejects["unknown_item"] += 1
            continue
        key = (session.query, session.purchased)
        obs = per_pair.get(key)
        if obs is None:
            obs = per_pair[key] = ItemObservations()
        for action in session.actions:
            if isinstance(action, CategoricalFilter):
                if action.brand_index >= k:
                    rejects["invalid_brand"] += 1
                    continue
                obs.brand_obs.append(action.brand_index)
            elif isinstance(action, RangeFilter):
                if math.isinf(action.lo) and math.isinf(action.hi):
                    rejects["unusable_range"] += 1
                    continue
                obs.price_midpoints.append(range_midpoint(action, open_end_width))
            else:
                raise TypeError(f"not a facet filter: {action!r}")
        if obs.is_empty():
            del per_pair[key]
    return ObservationSet(per_pair=per_pair, rejects=rejects)


@dataclass
class QueryModel:
    """Model states and prior relevance for one query."""

    query: str
    states: dict[str, ItemModel]
    relevance: dict[str, float]
    session_count: int


@dataclass
class TrainedModel:
    """Per-query action models over a catalog."""

    config: ModelConfig
    catalog: Catalog
    queries: dict[str, QueryModel]
    session_count: int
    trained_at: Optional[str] = None


def prior_item_model(item, catalog: Catalog, config: ModelConfig) -> ItemModel:
    return ItemModel(
        item=item,
        dirichlet=categorical_prior_init(
            item, catalog.vocabulary, config.own_brand_mass, config.smoothing_mass
        ),
        nig=nig_prior_init(item, config.kappa0, config.alpha0, config.beta0),
    )


def prior_states(catalog: Catalog, config: ModelConfig) -> dict[str, ItemModel]:
    """Prior-initialized states for every catalog item."""
    return {item.id: prior_item_model(item, catalog, config) for item in catalog.items}


def _now_iso() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def train(catalog: Catalog, sessions: Sequence[Session], config: ModelConfig) -> TrainedModel:
    """Fit states for every query seen in the log.

    Each (query, item) pair gets the prior followed by a single batch
    update over its observations; items without observations keep the
    prior. The per-query relevance is a smoothed purchase count, which
    gives the serving layer a usable prior ranking.
    """
    observations = extract_observations(sessions, catalog, config.open_end_width)
    purchases_per_query: dict[str, int] = {}
    purchase_counts: dict[tuple[str, str], int] = {}
    all_queries: set[str] = set()
    for s in sessions:
        all_queries.add(s.query)
        if s.purchased is not None and s.purchased in catalog:
            purchases_per_query[s.query] = purchases_per_query.get(s.query, 0) + 1
            key = (s.query, s.purchased)
            purchase_counts[key] = purchase_counts.get(key, 0) + 1
    pairs_per_query: dict[str, list[tuple[str, ItemObservations]]] = {}
    for (q, item_id), obs in observations.per_pair.items():
        pairs_per_query.setdefault(q, []).append((item_id, obs))

    queries: dict[str, QueryModel] = {}
    for query in sorted(all_queries):
        states = prior_states(catalog, config)
        for item_id, obs in pairs_per_query.get(query, []):
            base = states[item_id]
            states[item_id] = ItemModel(
                item=base.item,
                dirichlet=dirichlet_update(base.dirichlet, obs.brand_obs),
                nig=nig_update(base.nig, obs.price_midpoints),
            )
        relevance = {
            item.id: 1.0 + purchase_counts.get((query, item.id), 0)
            for item in catalog.items
        }
        queries[query] = QueryModel(
            query=query,
            states=states,
            relevance=relevance,
            session_count=purchases_per_query.get(query, 0),
        )
    return TrainedModel(
        config=config,
        catalog=catalog,
        queries=queries,
        session_count=len(sessions),
        trained_at=_now_iso(),
    )


def incremental_update(model: TrainedModel, new_sessions: Sequence[Session]) -> TrainedModel:
    """Fold a fresh batch of sessions into an existing model.

    Conjugacy makes this agree with retraining on the concatenated log:
    the existing posterior simply serves as the prior for the new batch.
    New queries are initialized from scratch.
    """
    catalog = model.catalog
    config = model.config
    observations = extract_observations(new_sessions, catalog, config.open_end_width)

    queries = {
        q: QueryModel(
            query=qm.query,
            states=dict(qm.states),
            relevance=dict(qm.relevance),
            session_count=qm.session_count,
        )
        for q, qm in model.queries.items()
    }
    for s in new_sessions:
        qm = queries.get(s.query)
        if qm is None:
            qm = queries[s.query] = QueryModel(
                query=s.query,
                states=prior_states(catalog, config),
                relevance={item.id: 1.0 for item in catalog.items},
                session_count=0,
            )
        if s.purchased is None or s.purchased not in catalog:
            continue
        qm.session_count += 1
        qm.relevance[s.purchased] = qm.relevance.get(s.purchased, 1.0) + 1.0

    for (query, item_id), obs in observations.per_pair.items():
        qm = queries[query]
        base = qm.states[item_id]
        qm.states[item_id] = ItemModel(
            item=base.item,
            dirichlet=dirichlet_update(base.dirichlet, obs.brand_obs),
            nig=nig_update(base.nig, obs.price_midpoints),
        )
    return TrainedModel(
        config=config,
        catalog=catalog,
        queries=queries,
        session_count=model.session_count + len(new_sessions),
        trained_at=_now_iso(),
    )


def item_state_doc(model: ItemModel) -> dict:
    """Serializable document for one item's states."""
    return {
        "item_id": model.item.id,
        "dirichlet": {"alpha": list(model.dirichlet.alpha)},
        "nig": {
            "mu": model.nig.mu,
            "kappa": model.nig.kappa,
            "alpha": model.nig.alpha,
            "beta": model.nig.beta,
        },
    }


def item_state_from_doc(doc: Mapping, catalog: Catalog) -> ItemModel:
    item = catalog.get(doc["item_id"])
    return ItemModel(
        item=item,
        dirichlet=DirichletState(tuple(float(a) for a in doc["dirichlet"]["alpha"])),
        nig=NIGState(
            mu=float(doc["nig"]["mu"]),
            kappa=float(doc["nig"]["kappa"]),
            alpha=float(doc["nig"]["alpha"]),
            beta=float(doc["nig"]["beta"]),
        ),
    )
