"""Synthetic browsing scenarios with known ground truth.

A scenario config is a small recipe: catalog shape, a Zipf-like
relevance profile, and per-item action noise. Materializing it with a
seed yields a concrete catalog and per-query truth; the generator then
draws sessions in which a purchase and one filter action are emitted
together. Price points are snapped to a fixed-width bucket grid aligned
at multiples of the width, which is how real storefront filters look and
is what makes filters miss purchases at a controllable rate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .facets import BrandVocabulary, Catalog, CategoricalFilter, Item, RangeFilter
from .training import Session


@dataclass
class CheckSpec:
    """Pass/fail thresholds evaluated by the benchmark's check mode."""

    miss_rate_window: Optional[tuple[float, float]] = None
    p_threshold: Optional[float] = None
    min_queries_significant: Optional[int] = None
    require_mean_soft_less: bool = False
    max_mean_regression: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "miss_rate_window": list(self.miss_rate_window) if self.miss_rate_window else None,
            "p_threshold": self.p_threshold,
            "min_queries_significant": self.min_queries_significant,
            "require_mean_soft_less": self.require_mean_soft_less,
            "max_mean_regression": self.max_mean_regression,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CheckSpec":
        window = doc.get("miss_rate_window")
        return cls(
            miss_rate_window=tuple(window) if window else None,
            p_threshold=doc.get("p_threshold"),
            min_queries_significant=doc.get("min_queries_significant"),
            require_mean_soft_less=bool(doc.get("require_mean_soft_less", False)),
            max_mean_regression=doc.get("max_mean_regression"),
        )


@dataclass
class ScenarioConfig:
    """Recipe for a synthetic benchmark scenario."""

    name: str = "scenario"
    n_items: int = 150
    n_brands: int = 12
    price_min: float = 10.0
    price_max: float = 1010.0
    bucket_width: float = 50.0
    sigma_scale: float = 0.556
    zipf_exponent: float = 1.0
    filter_kind: str = "price"
    brand_filter_prob: float = 0.0
    brand_self_prob: float = 0.6
    n_queries: int = 20
    sessions_per_query: int = 700
    target_miss_rate: Optional[float] = 0.43
    checks: Optional[CheckSpec] = None

    def __post_init__(self):
        if self.n_items < 2:
            raise ValueError("n_items must be >= 2")
        if self.n_brands < 1:
            raise ValueError("n_brands must be >= 1")
        if not self.price_min < self.price_max:
            raise ValueError("price_min must be below price_max")
        if self.bucket_width <= 0:
            raise ValueError("bucket_width must be > 0")
        if self.sigma_scale <= 0:
            raise ValueError("sigma_scale must be > 0")
        if self.filter_kind not in ("price", "brand", "mixed"):
            raise ValueError(f"filter_kind must be price, brand or mixed, got {self.filter_kind!r}")
        if not 0.0 <= self.brand_filter_prob <= 1.0:
            raise ValueError("brand_filter_prob must be in [0, 1]")
        if not 0.0 < self.brand_self_prob <= 1.0:
            raise ValueError("brand_self_prob must be in (0, 1]")

    def to_dict(self) -> dict:
        doc = {
            "name": self.name,
            "n_items": self.n_items,
            "n_brands": self.n_brands,
            "price_min": self.price_min,
            "price_max": self.price_max,
            "bucket_width": self.bucket_width,
            "sigma_scale": self.sigma_scale,
            "zipf_exponent": self.zipf_exponent,
            "filter_kind": self.filter_kind,
            "brand_filter_prob": self.brand_filter_prob,
            "brand_self_prob": self.brand_self_prob,
            "n_queries": self.n_queries,
            "sessions_per_query": self.sessions_per_query,
            "target_miss_rate": self.target_miss_rate,
        }
        if self.checks is not None:
            doc["checks"] = self.checks.to_dict()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        doc = dict(doc)
        checks = doc.pop("checks", None)
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
        cfg = cls(**doc)
        if checks is not None:
            cfg.checks = CheckSpec.from_dict(checks)
        return cfg

    @classmethod
    def load(cls, path: str) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


@dataclass
class QueryTruth:
    """Ground-truth generation parameters for one query."""

    query: str
    relevance: dict[str, float]
    true_mu: np.ndarray
    true_sigma: np.ndarray
    brand_probs: np.ndarray


@dataclass
class SyntheticScenario:
    """Materialized scenario: catalog plus per-query truth."""

    config: ScenarioConfig
    catalog: Catalog
    queries: list[QueryTruth]
    target_miss_rate: Optional[float]


def _zipf_scores(n: int, exponent: float, rng: np.random.Generator) -> np.ndarray:
    """Zipf-like scores assigned over a random permutation of positions."""
    ranks = rng.permutation(n)
    return 1.0 / np.power(ranks + 1.0, exponent)


def materialize(config: ScenarioConfig, n_queries: int, seed: int) -> SyntheticScenario:
    """Build the concrete catalog and query truths for a seed."""
    root = np.random.SeedSequence([int(seed), 0])
    children = root.spawn(n_queries + 1)
    cat_rng = np.random.default_rng(children[0])

    brands = tuple(f"brand-{i:02d}" for i in range(config.n_brands))
    vocab = BrandVocabulary(brands)
    items = []
    brand_idx = cat_rng.integers(0, config.n_brands, size=config.n_items)
    prices = np.round(cat_rng.uniform(config.price_min, config.price_max, size=config.n_items), 2)
    for i in range(config.n_items):
        items.append(
            Item(
                id=f"item-{i:04d}",
                brand_index=int(brand_idx[i]),
                price=float(prices[i]),
                title=f"{brands[brand_idx[i]]} model {i:04d}",
            )
        )
    catalog = Catalog(items, vocab)

    k = config.n_brands
    queries = []
    for q in range(n_queries):
        rng = np.random.default_rng(children[q + 1])
        scores = _zipf_scores(config.n_items, config.zipf_exponent, rng)
        relevance = {items[i].id: float(scores[i]) for i in range(config.n_items)}
        true_mu = prices.astype(float)
        true_sigma = np.full(config.n_items, config.sigma_scale * config.bucket_width)
        if k > 1:
            off = (1.0 - config.brand_self_prob) / (k - 1)
            brand_probs = np.full((config.n_items, k), off)
            brand_probs[np.arange(config.n_items), brand_idx] = config.brand_self_prob
        else:
            brand_probs = np.ones((config.n_items, 1))
        queries.append(
            QueryTruth(
                query=f"q{q:02d}",
                relevance=relevance,
                true_mu=true_mu,
                true_sigma=true_sigma,
                brand_probs=brand_probs,
            )
        )
    return SyntheticScenario(
        config=config,
        catalog=catalog,
        queries=queries,
        target_miss_rate=config.target_miss_rate,
    )


def price_bucket(value: float, width: float) -> RangeFilter:
    """The grid bucket containing a price point; edges at multiples of the width."""
    k = math.floor(value / width)
    return RangeFilter(k * width, (k + 1) * width)


def generate_synthetic_log(
    scenario: SyntheticScenario,
    n_sessions: int,
    seed: int,
) -> list[Session]:
    """Draw n_sessions per query, each with a purchase and one filter action.

    The purchased item follows the query's relevance profile; a price
    filter is the grid bucket around a Gaussian draw centred on the
    item's true price point, a brand filter follows the item's true
    brand-selection vector. Fixed seeds reproduce the log bit for bit.
    """
    config = scenario.config
    items = scenario.catalog.items
    n = len(items)
    root = np.random.SeedSequence([int(seed), 1])
    children = root.spawn(len(scenario.queries))
    sessions: list[Session] = []
    for truth, child in zip(scenario.queries, children):
        rng = np.random.default_rng(child)
        weights = np.array([truth.relevance[it.id] for it in items])
        weights = weights / weights.sum()
        chosen = rng.choice(n, size=n_sessions, p=weights)
        for j in range(n_sessions):
            e = int(chosen[j])
            if config.filter_kind == "brand":
                pick_brand = True
            elif config.filter_kind == "price":
                pick_brand = False
            else:
                pick_brand = bool(rng.random() < config.brand_filter_prob)
            if pick_brand:
                b = int(rng.choice(config.n_brands, p=truth.brand_probs[e]))
                action = CategoricalFilter(b)
            else:
                c = float(rng.normal(truth.true_mu[e], truth.true_sigma[e]))
                action = price_bucket(c, config.bucket_width)
            sessions.append(
                Session(
                    session_id=f"{truth.query}-s{j:05d}",
                    query=truth.query,
                    actions=(action,),
                    purchased=items[e].id,
                )
            )
    return sessions


def measure_miss_rate(sessions: Sequence[Session], catalog: Catalog) -> float:
    """Fraction of selected price filters that exclude the purchased item's price."""
    total = 0
    missed = 0
    for s in sessions:
        if s.purchased is None or s.purchased not in catalog:
            continue
        price = catalog.get(s.purchased).price
        for action in s.actions:
            if isinstance(action, RangeFilter):
                total += 1
                if not (action.lo <= price <= action.hi):
                    missed += 1
    if total == 0:
        raise ValueError("no price filters in purchasing sessions; miss rate undefined")
    return missed / total


def calibrate_sigma_scale(
    config: ScenarioConfig,
    target: float,
    seed: int = 1234,
    n_queries: int = 8,
    sessions_per_query: int = 1500,
    lo: float = 0.05,
    hi: float = 3.0,
    tolerance: float = 0.002,
) -> float:
    """Find the sigma scale whose measured miss rate hits the target.

    Uses bisection with common random numbers: the same seed at every
    candidate scale makes the measured miss rate monotone in the scale,
    because each Gaussian draw leaves the purchase's bucket exactly once
    as the noise grows.
    """

    def miss_at(scale: float) -> float:
        probe = ScenarioConfig.from_dict({**config.to_dict(), "sigma_scale": scale, "checks": None})
        scenario = materialize(probe, n_queries, seed)
        sessions = generate_synthetic_log(scenario, sessions_per_query, seed)
        return measure_miss_rate(sessions, scenario.catalog)

    if not miss_at(lo) <= target <= miss_at(hi):
        raise ValueError(f"target miss rate {target} not bracketed by scales [{lo}, {hi}]")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        m = miss_at(mid)
        if abs(m - target) <= tolerance:
            return mid
        if m < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
