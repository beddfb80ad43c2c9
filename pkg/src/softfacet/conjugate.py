"""Conjugate action models for facet filter behaviour.

Brand selections follow a Categorical distribution with a Dirichlet
prior, price range selections follow a Gaussian over a latent price
point with a Normal-Inverse-Gamma prior. Both admit closed-form batch
updates, so training and incremental refreshes are exact and order
independent. All states are immutable; every update returns a new state.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .facets import CategoricalFilter, FacetFilter, Item, RangeFilter, BrandVocabulary
from .special import std_normal_cdf, student_t_cdf

DEFAULT_OWN_BRAND_MASS = 1.0
DEFAULT_SMOOTHING_MASS = 0.1
DEFAULT_OPEN_END_WIDTH = 100.0
DEFAULT_SIGMA_FLOOR = 1e-6


@dataclass(frozen=True)
class DirichletState:
    """Dirichlet over brand-selection probabilities; alpha[i] > 0 per brand."""

    alpha: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        if len(self.alpha) == 0:
            raise ValueError("alpha must have at least one component")
        for a in self.alpha:
            if not (math.isfinite(a) and a > 0.0):
                raise ValueError(f"alpha components must be positive and finite, got {a}")

    def __len__(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class NIGState:
    """Normal-Inverse-Gamma over the latent price point (mu, kappa, alpha, beta)."""

    mu: float
    kappa: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("mu", "kappa", "alpha", "beta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        for name, v in (("kappa", self.kappa), ("alpha", self.alpha), ("beta", self.beta)):
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {v}")


def categorical_prior_init(
    item: Item,
    vocabulary: BrandVocabulary,
    own_brand_mass: float = DEFAULT_OWN_BRAND_MASS,
    smoothing_mass: float = DEFAULT_SMOOTHING_MASS,
) -> DirichletState:
    """Prior that concentrates on the item's own brand with light smoothing everywhere."""
    if smoothing_mass <= 0.0:
        raise ValueError("smoothing_mass must be > 0 so every brand keeps positive mass")
    if own_brand_mass < 0.0:
        raise ValueError("own_brand_mass must be >= 0")
    k = len(vocabulary)
    if item.brand_index >= k:
        raise IndexError(f"brand index {item.brand_index} outside vocabulary of size {k}")
    alpha = [smoothing_mass] * k
    alpha[item.brand_index] += own_brand_mass
    return DirichletState(tuple(alpha))


def dirichlet_update(state: DirichletState, observations: Iterable[int]) -> DirichletState:
    """Posterior after observing brand selections, given as brand indices."""
    k = len(state)
    counts = Counter()
    for obs in observations:
        idx = int(obs)
        if not 0 <= idx < k:
            raise IndexError(f"brand observation {idx} outside [0, {k})")
        counts[idx] += 1
    if not counts:
        return state
    alpha = tuple(a + counts.get(i, 0) for i, a in enumerate(state.alpha))
    return DirichletState(alpha)


def categorical_estimate(state: DirichletState) -> tuple[float, ...]:
    """Posterior estimate of the brand-selection probabilities alpha_i / sum(alpha)."""
    total = math.fsum(state.alpha)
    return tuple(a / total for a in state.alpha)


def categorical_likelihood(state: DirichletState, filt: FacetFilter) -> float:
    """Probability of selecting the filter's brand under the state's estimate."""
    if not isinstance(filt, CategoricalFilter):
        raise TypeError(f"categorical_likelihood needs a categorical filter, got {type(filt).__name__}")
    if filt.brand_index >= len(state):
        raise IndexError(f"brand index {filt.brand_index} outside [0, {len(state)})")
    return categorical_estimate(state)[filt.brand_index]


def gaussian_range_likelihood(mu: float, sigma: float, filt: RangeFilter) -> float:
    """Mass a Gaussian N(mu, sigma^2) assigns to the closed interval [lo, hi]."""
    if not isinstance(filt, RangeFilter):
        raise TypeError(f"gaussian_range_likelihood needs a range filter, got {type(filt).__name__}")
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise ValueError(f"sigma must be positive and finite, got {sigma}")
    if not math.isfinite(mu):
        raise ValueError("mu must be finite")
    hi = std_normal_cdf((filt.hi - mu) / sigma)
    lo = std_normal_cdf((filt.lo - mu) / sigma)
    return max(0.0, hi - lo)


def nig_prior_init(
    item: Item,
    kappa0: float = 1.0,
    alpha0: float = 1.0,
    beta0: float = 1.0,
) -> NIGState:
    """Prior centred on the item's own price."""
    return NIGState(mu=item.price, kappa=kappa0, alpha=alpha0, beta=beta0)


def range_midpoint(filt: RangeFilter, open_end_width: float = DEFAULT_OPEN_END_WIDTH) -> float:
    """Point summary of a selected range: the midpoint of [lo, hi].

    An open end is first replaced by a synthetic bound open_end_width away
    from the finite end. A range open on both ends has no usable summary
    and is rejected.
    """
    if not isinstance(filt, RangeFilter):
        raise TypeError(f"range_midpoint needs a range filter, got {type(filt).__name__}")
    if open_end_width <= 0.0:
        raise ValueError("open_end_width must be > 0")
    lo, hi = filt.lo, filt.hi
    if math.isinf(lo) and math.isinf(hi):
        raise ValueError("range open on both ends has no midpoint")
    if math.isinf(lo):
        lo = hi - open_end_width
    elif math.isinf(hi):
        hi = lo + open_end_width
    return 0.5 * (lo + hi)


def nig_update(state: NIGState, midpoints: Sequence[float]) -> NIGState:
    """Posterior after a batch of observed range midpoints.

    Uses the closed-form update for a Gaussian likelihood with unknown
    mean and variance: the sample mean shifts mu under kappa weighting,
    and beta absorbs both the within-sample scatter and the shrinkage
    penalty between the prior mean and the sample mean.
    """
    n = len(midpoints)
    if n == 0:
        return state
    for m in midpoints:
        if not math.isfinite(m):
            raise ValueError(f"midpoint observations must be finite, got {m}")
    mean = math.fsum(midpoints) / n
    # sum of squared deviations, i.e. (n-1) times the unbiased sample variance
    m2 = math.fsum((m - mean) ** 2 for m in midpoints)
    mu, kappa, alpha, beta = state.mu, state.kappa, state.alpha, state.beta
    mu_n = (kappa * mu + n * mean) / (kappa + n)
    kappa_n = kappa + n
    alpha_n = alpha + 0.5 * n
    beta_n = beta + 0.5 * m2 + kappa * n * (mu - mean) ** 2 / (2.0 * kappa + 2.0 * n)
    return NIGState(mu=mu_n, kappa=kappa_n, alpha=alpha_n, beta=beta_n)


def nig_map_estimate(state: NIGState) -> tuple[float, float]:
    """Joint posterior mode (mu_hat, sigma2_hat) of the NIG density."""
    return state.mu, state.beta / (state.alpha + 1.5)


def nig_map_range_likelihood(
    state: NIGState,
    filt: RangeFilter,
    sigma_floor: float = DEFAULT_SIGMA_FLOOR,
) -> float:
    """Range likelihood with the MAP plug-in Gaussian.

    Degenerate posteriors can drive sigma_hat to zero; the floor keeps
    the Gaussian well defined while preserving the near-indicator shape.
    """
    mu_hat, var_hat = nig_map_estimate(state)
    sigma = max(math.sqrt(var_hat), sigma_floor)
    return gaussian_range_likelihood(mu_hat, sigma, filt)


def nig_predictive_range_likelihood(
    state: NIGState,
    filt: RangeFilter,
    sigma_floor: float = DEFAULT_SIGMA_FLOOR,
) -> float:
    """Range likelihood under the posterior predictive Student t.

    The predictive has 2*alpha degrees of freedom, location mu, and
    squared scale beta*(kappa+1)/(alpha*kappa); it is always wider than
    the MAP plug-in Gaussian.
    """
    if not isinstance(filt, RangeFilter):
        raise TypeError(f"nig_predictive_range_likelihood needs a range filter, got {type(filt).__name__}")
    dof = 2.0 * state.alpha
    scale = max(math.sqrt(state.beta * (state.kappa + 1.0) / (state.alpha * state.kappa)), sigma_floor)
    hi = student_t_cdf((filt.hi - state.mu) / scale, dof)
    lo = student_t_cdf((filt.lo - state.mu) / scale, dof)
    return max(0.0, hi - lo)
