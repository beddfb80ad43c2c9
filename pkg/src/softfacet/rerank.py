"""Posterior reranking of a result list under facet filter actions.

The prior propensity is the normalized relevance of the original result
list. Each filter action multiplies in a per-item likelihood and
renormalizes, so the posterior of one action becomes the prior of the
next. Hard mode reproduces the classic behaviour of dropping items that
fail the filter while keeping the surviving order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

from .conjugate import (
    DEFAULT_SIGMA_FLOOR,
    DirichletState,
    NIGState,
    categorical_likelihood,
    nig_map_range_likelihood,
    nig_predictive_range_likelihood,
)
from .facets import Catalog, CategoricalFilter, FacetFilter, Item, RangeFilter, satisfies

SUM_TOLERANCE = 1e-9


class ZeroLikelihoodError(ValueError):
    """Every item received zero likelihood; the posterior is undefined."""


@dataclass(frozen=True)
class ItemModel:
    """Action-model states for one item."""

    item: Item
    dirichlet: DirichletState
    nig: NIGState


@dataclass(frozen=True)
class PriorPropensity:
    """Normalized propensity over items, in ranking order."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        ids = [item_id for item_id, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("propensity contains duplicate item ids")
        for item_id, p in self.entries:
            if not (math.isfinite(p) and p >= 0.0):
                raise ValueError(f"propensity of {item_id!r} must be finite and >= 0, got {p}")
        if self.entries:
            total = math.fsum(p for _, p in self.entries)
            if abs(total - 1.0) > SUM_TOLERANCE:
                raise ValueError(f"propensities must sum to 1 within {SUM_TOLERANCE}, got {total}")

    def __len__(self) -> int:
        return len(self.entries)

    def item_ids(self) -> tuple[str, ...]:
        return tuple(item_id for item_id, _ in self.entries)


@dataclass(frozen=True)
class RankedEntry:
    item_id: str
    score: float
    within_filter: bool


@dataclass(frozen=True)
class RankedList:
    """Ordered result of a rerank; scores are nonincreasing."""

    entries: tuple[RankedEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def item_ids(self) -> tuple[str, ...]:
        return tuple(e.item_id for e in self.entries)

    def rank_of(self, item_id: str) -> int:
        """1-based rank of an item, or KeyError if absent."""
        for pos, e in enumerate(self.entries):
            if e.item_id == item_id:
                return pos + 1
        raise KeyError(f"item {item_id!r} not in ranked list")


@dataclass(frozen=True)
class BrowseSession:
    """One browsing interaction: base prior, current posterior, applied filters."""

    session_id: str
    query: str
    base_propensity: PriorPropensity
    current_propensity: PriorPropensity
    applied_filters: tuple[FacetFilter, ...] = ()


def new_session(session_id: str, query: str, prior: PriorPropensity) -> BrowseSession:
    return BrowseSession(
        session_id=session_id,
        query=query,
        base_propensity=prior,
        current_propensity=prior,
        applied_filters=(),
    )


def normalize_prior(scores: Sequence[tuple[str, float]]) -> PriorPropensity:
    """Turn nonnegative relevance scores into a propensity, preserving order.

    Ties in score produce equal propensities. At least one score must be
    positive, otherwise there is nothing to normalize.
    """
    if len(scores) == 0:
        raise ValueError("cannot normalize an empty score list")
    for item_id, s in scores:
        if not (math.isfinite(s) and s >= 0.0):
            raise ValueError(f"score of {item_id!r} must be finite and >= 0, got {s}")
    total = math.fsum(s for _, s in scores)
    if total <= 0.0:
        raise ValueError("at least one relevance score must be positive")
    return PriorPropensity(tuple((item_id, s / total) for item_id, s in scores))


LikelihoodFn = Callable[[ItemModel, FacetFilter], float]


def indicator_likelihood(model: ItemModel, filt: FacetFilter) -> float:
    """Degenerate likelihood: 1 when the item satisfies the filter, else 0.

    Feeding this to a soft rerank collapses it onto hard filtering, which
    is the baseline the smooth models generalize.
    """
    return 1.0 if satisfies(model.item, filt) else 0.0


def model_likelihood_fn(
    price_method: str = "map",
    sigma_floor: float = DEFAULT_SIGMA_FLOOR,
) -> LikelihoodFn:
    """Likelihood from the conjugate states; price ranges via MAP plug-in or predictive t."""
    if price_method not in ("map", "predictive"):
        raise ValueError(f"price_method must be 'map' or 'predictive', got {price_method!r}")

    def fn(model: ItemModel, filt: FacetFilter) -> float:
        if isinstance(filt, CategoricalFilter):
            return categorical_likelihood(model.dirichlet, filt)
        if isinstance(filt, RangeFilter):
            if price_method == "map":
                return nig_map_range_likelihood(model.nig, filt, sigma_floor=sigma_floor)
            return nig_predictive_range_likelihood(model.nig, filt, sigma_floor=sigma_floor)
        raise TypeError(f"not a facet filter: {filt!r}")

    return fn


def rerank(
    prior: PriorPropensity,
    filt: FacetFilter,
    models: Mapping[str, ItemModel],
    mode: str = "soft",
    likelihood_fn: Optional[LikelihoodFn] = None,
) -> tuple[RankedList, PriorPropensity]:
    """Apply one filter action to the prior.

    Soft mode multiplies each propensity by the item's filter likelihood,
    renormalizes, and sorts by posterior (ties broken by prior rank, then
    item id). No item is ever dropped; entries outside the literal filter
    are flagged. The returned propensity is the posterior in ranked
    order, ready to serve as the next action's prior.

    Hard mode drops items that fail the filter, keeps survivors in prior
    order, and renormalizes their propensities.
    """
    if len(prior) == 0:
        raise ValueError("cannot rerank an empty prior")
    if mode not in ("soft", "hard"):
        raise ValueError(f"mode must be 'soft' or 'hard', got {mode!r}")
    missing = [item_id for item_id, _ in prior.entries if item_id not in models]
    if missing:
        raise KeyError(f"no model state for items: {missing[:5]}")

    if mode == "hard":
        survivors = [
            (item_id, p)
            for item_id, p in prior.entries
            if satisfies(models[item_id].item, filt)
        ]
        total = math.fsum(p for _, p in survivors)
        if survivors and total > 0.0:
            propensity = PriorPropensity(tuple((i, p / total) for i, p in survivors))
        else:
            propensity = PriorPropensity(())
        ranked = RankedList(
            tuple(RankedEntry(item_id, p, True) for item_id, p in propensity.entries)
        )
        return ranked, propensity

    fn = likelihood_fn if likelihood_fn is not None else model_likelihood_fn()
    weighted = []
    for pos, (item_id, p) in enumerate(prior.entries):
        lik = fn(models[item_id], filt)
        if not (math.isfinite(lik) and lik >= 0.0):
            raise ValueError(f"likelihood of {item_id!r} must be finite and >= 0, got {lik}")
        weighted.append((item_id, p * lik, pos))
    total = math.fsum(w for _, w, _ in weighted)
    if total <= 0.0:
        raise ZeroLikelihoodError("filter has zero likelihood under every item in the prior")
    posterior = [(item_id, w / total, pos) for item_id, w, pos in weighted]
    posterior.sort(key=lambda t: (-t[1], t[2], t[0]))
    ranked = RankedList(
        tuple(
            RankedEntry(item_id, p, satisfies(models[item_id].item, filt))
            for item_id, p, _ in posterior
        )
    )
    propensity = PriorPropensity(tuple((item_id, p) for item_id, p, _ in posterior))
    return ranked, propensity


def apply_filter_sequence(
    session: BrowseSession,
    filters: Sequence[FacetFilter],
    models: Mapping[str, ItemModel],
    mode: str = "soft",
    likelihood_fn: Optional[LikelihoodFn] = None,
) -> BrowseSession:
    """Fold a sequence of filter actions into the session, chaining posteriors.

    In hard mode the list can empty out; once empty it stays empty while
    the filters are still recorded.
    """
    propensity = session.current_propensity
    for filt in filters:
        if len(propensity) == 0:
            break
        _, propensity = rerank(propensity, filt, models, mode=mode, likelihood_fn=likelihood_fn)
    return BrowseSession(
        session_id=session.session_id,
        query=session.query,
        base_propensity=session.base_propensity,
        current_propensity=propensity,
        applied_filters=session.applied_filters + tuple(filters),
    )


def replay_filters(
    session: BrowseSession,
    filters: Sequence[FacetFilter],
    models: Mapping[str, ItemModel],
    mode: str = "soft",
    likelihood_fn: Optional[LikelihoodFn] = None,
) -> BrowseSession:
    """Recompute the session from its base prior over the given filters.

    This is how a deselection works: drop the filter from the list and
    replay the rest from scratch.
    """
    fresh = new_session(session.session_id, session.query, session.base_propensity)
    return apply_filter_sequence(fresh, filters, models, mode=mode, likelihood_fn=likelihood_fn)


def hard_filter(prior: PriorPropensity, filt: FacetFilter, catalog: Catalog) -> RankedList:
    """Classic filtering: keep items satisfying the filter, in prior order.

    Surviving propensities are renormalized into the scores. The result
    may be empty when nothing matches.
    """
    survivors = [
        (item_id, p) for item_id, p in prior.entries if satisfies(catalog.get(item_id), filt)
    ]
    total = math.fsum(p for _, p in survivors)
    if survivors and total > 0.0:
        return RankedList(tuple(RankedEntry(i, p / total, True) for i, p in survivors))
    return RankedList(tuple(RankedEntry(i, 0.0, True) for i, _ in survivors))
