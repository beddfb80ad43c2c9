"""Soft faceted browsing: Bayesian reranking of search results from filter actions.

Instead of dropping everything outside a selected facet bucket, each
filter action is treated as evidence about what the user wants, and the
result list is reordered by posterior propensity. Hard filtering stays
available as a degenerate special case.
"""

from .conjugate import (
    DirichletState,
    NIGState,
    categorical_estimate,
    categorical_likelihood,
    categorical_prior_init,
    dirichlet_update,
    gaussian_range_likelihood,
    nig_map_estimate,
    nig_map_range_likelihood,
    nig_predictive_range_likelihood,
    nig_prior_init,
    nig_update,
    range_midpoint,
)
from .evaluation import (
    BenchmarkReport,
    EvalRecord,
    QueryResult,
    hard_rank_with_miss_penalty,
    loo_evaluate,
    run_benchmark,
)
from .facets import (
    BrandVocabulary,
    Catalog,
    CategoricalFilter,
    FacetFilter,
    Item,
    RangeFilter,
    satisfies,
)
from .rerank import (
    BrowseSession,
    ItemModel,
    PriorPropensity,
    RankedEntry,
    RankedList,
    ZeroLikelihoodError,
    apply_filter_sequence,
    hard_filter,
    indicator_likelihood,
    new_session,
    normalize_prior,
    rerank,
)
from .special import std_normal_cdf, student_t_cdf
from .synthetic import (
    ScenarioConfig,
    SyntheticScenario,
    calibrate_sigma_scale,
    generate_synthetic_log,
    materialize,
    measure_miss_rate,
)
from .training import (
    ModelConfig,
    ObservationSet,
    Session,
    TrainedModel,
    extract_observations,
    incremental_update,
    train,
)
from .wilcoxon import DegenerateDataError, WilcoxonResult, wilcoxon_signed_rank

__version__ = "0.1.0"
