"""Leave-one-out evaluation of soft reranking against hard filtering.

Each purchasing session with at least one filter action becomes one
fold: the models train on every other session for the query, the
held-out actions drive both schemes, and the purchased item's resulting
rank is recorded per scheme. Hard filtering can drop the purchase
entirely; those folds get a miss penalty of the filtered list length
plus the unfiltered rank, which is where the user would finally find the
item after clearing the filter.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .facets import Catalog, satisfies
from .rerank import (
    ItemModel,
    PriorPropensity,
    RankedEntry,
    RankedList,
    ZeroLikelihoodError,
    apply_filter_sequence,
    new_session,
    normalize_prior,
)
from .synthetic import CheckSpec, ScenarioConfig, SyntheticScenario, generate_synthetic_log, materialize, measure_miss_rate
from .training import (
    ItemObservations,
    ModelConfig,
    Session,
    dirichlet_update,
    extract_observations,
    nig_update,
    prior_item_model,
    prior_states,
)
from .wilcoxon import DegenerateDataError, wilcoxon_signed_rank


@dataclass(frozen=True)
class EvalRecord:
    """One leave-one-out fold."""

    query: str
    session_id: str
    soft_rank: int
    hard_rank: int
    filter_missed_purchase: bool


@dataclass
class QueryResult:
    """Aggregated comparison for one query."""

    query: str
    n_pairs: int
    statistic: float
    p_value: float
    mean_soft: float
    mean_hard: float
    median_soft: float
    median_hard: float
    miss_rate: float

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "n_pairs": self.n_pairs,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "mean_soft": self.mean_soft,
            "mean_hard": self.mean_hard,
            "median_soft": self.median_soft,
            "median_hard": self.median_hard,
            "miss_rate": self.miss_rate,
        }


def hard_rank_with_miss_penalty(
    filtered: RankedList,
    unfiltered: RankedList,
    purchased: str,
) -> int:
    """Rank under hard filtering, penalized when the filter hid the purchase.

    If the purchase survived, its position in the filtered list. If not,
    the user scrolls the whole filtered list, clears the filter, and
    finds the item at its unfiltered rank: filtered length plus that rank.
    """
    try:
        return filtered.rank_of(purchased)
    except KeyError:
        return len(filtered) + unfiltered.rank_of(purchased)


def _retrain_item(
    item_id: str,
    catalog: Catalog,
    config: ModelConfig,
    brand_obs: Sequence[int],
    midpoints: Sequence[float],
) -> ItemModel:
    base = prior_item_model(catalog.get(item_id), catalog, config)
    return ItemModel(
        item=base.item,
        dirichlet=dirichlet_update(base.dirichlet, brand_obs),
        nig=nig_update(base.nig, midpoints),
    )


def loo_evaluate(
    query: str,
    sessions: Sequence[Session],
    catalog: Catalog,
    config: ModelConfig,
    prior_scores: dict[str, float],
) -> list[EvalRecord]:
    """Leave-one-session-out comparison of soft and hard ranking.

    prior_scores is the query's relevance profile; the prior ordering is
    by descending score with item id as the tiebreak. Only purchasing
    sessions with at least one action become folds. Retraining per fold
    reuses the batch update: only the held-out session's purchased item
    has a different observation set, so only its state is refit.
    """
    eligible = [
        s
        for s in sessions
        if s.query == query
        and s.purchased is not None
        and s.purchased in catalog
        and len(s.actions) > 0
    ]
    if len(eligible) < 2:
        raise ValueError(f"query {query!r} needs at least 2 purchasing sessions with actions")

    ordered = sorted(prior_scores.items(), key=lambda kv: (-kv[1], kv[0]))
    prior = normalize_prior(ordered)
    unfiltered = RankedList(
        tuple(RankedEntry(item_id, p, True) for item_id, p in prior.entries)
    )
    prior_position = {item_id: i + 1 for i, (item_id, _) in enumerate(prior.entries)}

    full_states = prior_states(catalog, config)
    observations = extract_observations(eligible, catalog, config.open_end_width)
    per_item: dict[str, ItemObservations] = {}
    for (q, item_id), obs in observations.per_pair.items():
        per_item[item_id] = obs
        full_states[item_id] = _retrain_item(
            item_id, catalog, config, obs.brand_obs, obs.price_midpoints
        )

    # per-session contribution to its purchased item, for fast fold removal
    contributions: list[ItemObservations] = []
    for s in eligible:
        contrib = ItemObservations()
        tmp = extract_observations([s], catalog, config.open_end_width)
        for _, obs in tmp.per_pair.items():
            contrib = obs
        contributions.append(contrib)

    records: list[EvalRecord] = []
    for i, held in enumerate(eligible):
        e = held.purchased
        contrib = contributions[i]
        full = per_item.get(e, ItemObservations())
        remaining_brands = list(full.brand_obs)
        remaining_mids = list(full.price_midpoints)
        for b in contrib.brand_obs:
            remaining_brands.remove(b)
        for m in contrib.price_midpoints:
            remaining_mids.remove(m)
        patched = dict(full_states)
        patched[e] = _retrain_item(e, catalog, config, remaining_brands, remaining_mids)

        # actions whose likelihood is zero for every item are skipped,
        # matching the serving layer, which rejects them unapplied
        soft_session = new_session(held.session_id, query, prior)
        for action in held.actions:
            try:
                soft_session = apply_filter_sequence(
                    soft_session, [action], patched, mode="soft"
                )
            except ZeroLikelihoodError:
                continue
        soft_rank = soft_session.current_propensity.item_ids().index(e) + 1

        survivors = list(prior.item_ids())
        for action in held.actions:
            survivors = [s for s in survivors if satisfies(catalog.get(s), action)]
        filtered = RankedList(tuple(RankedEntry(s, 0.0, True) for s in survivors))
        hard_rank = hard_rank_with_miss_penalty(filtered, unfiltered, e)

        item = catalog.get(e)
        missed = not all(satisfies(item, a) for a in held.actions)
        records.append(
            EvalRecord(
                query=query,
                session_id=held.session_id,
                soft_rank=soft_rank,
                hard_rank=hard_rank,
                filter_missed_purchase=missed,
            )
        )
    return records


def summarize_query(query: str, records: Sequence[EvalRecord]) -> QueryResult:
    """Wilcoxon comparison plus rank summaries for one query's folds."""
    pairs = [(float(r.soft_rank), float(r.hard_rank)) for r in records]
    try:
        test = wilcoxon_signed_rank(pairs, alternative="soft_less")
        statistic, p_value = test.statistic, test.p_value
    except DegenerateDataError:
        # identical ranks everywhere: no evidence either way
        statistic, p_value = 0.0, 1.0
    soft = [r.soft_rank for r in records]
    hard = [r.hard_rank for r in records]
    return QueryResult(
        query=query,
        n_pairs=len(records),
        statistic=statistic,
        p_value=p_value,
        mean_soft=statistics.fmean(soft),
        mean_hard=statistics.fmean(hard),
        median_soft=float(statistics.median(soft)),
        median_hard=float(statistics.median(hard)),
        miss_rate=sum(r.filter_missed_purchase for r in records) / len(records),
    )


@dataclass
class BenchmarkReport:
    """Full benchmark output: per-query results plus the raw fold records."""

    scenario_name: str
    seed: int
    n_queries: int
    sessions_per_query: int
    results: list[QueryResult]
    records: list[EvalRecord]
    overall_miss_rate: float


def run_benchmark(
    config: ScenarioConfig,
    n_queries: Optional[int] = None,
    sessions_per_query: Optional[int] = None,
    seed: int = 0,
    model_config: Optional[ModelConfig] = None,
) -> BenchmarkReport:
    """Generate, evaluate and test every query of a synthetic scenario."""
    nq = n_queries if n_queries is not None else config.n_queries
    spq = sessions_per_query if sessions_per_query is not None else config.sessions_per_query
    mc = model_config if model_config is not None else ModelConfig()
    scenario = materialize(config, nq, seed)
    sessions = generate_synthetic_log(scenario, spq, seed)
    by_query: dict[str, list[Session]] = {}
    for s in sessions:
        by_query.setdefault(s.query, []).append(s)

    results: list[QueryResult] = []
    records: list[EvalRecord] = []
    for truth in scenario.queries:
        q_records = loo_evaluate(
            truth.query, by_query[truth.query], scenario.catalog, mc, truth.relevance
        )
        records.extend(q_records)
        results.append(summarize_query(truth.query, q_records))
    overall = measure_miss_rate(sessions, scenario.catalog) if config.filter_kind != "brand" else 0.0
    return BenchmarkReport(
        scenario_name=config.name,
        seed=seed,
        n_queries=nq,
        sessions_per_query=spq,
        results=results,
        records=records,
        overall_miss_rate=overall,
    )


def summary_table(report: BenchmarkReport) -> str:
    """Human-readable per-query table."""
    header = (
        f"scenario {report.scenario_name}  seed {report.seed}  "
        f"{report.n_queries} queries x {report.sessions_per_query} sessions\n"
        f"overall price-filter miss rate: {report.overall_miss_rate:.4f}\n\n"
    )
    cols = f"{'query':<8}{'n':>5}{'W-':>12}{'p':>12}{'soft_mean':>11}{'hard_mean':>11}{'soft_med':>10}{'hard_med':>10}{'miss':>8}\n"
    rows = []
    for r in report.results:
        rows.append(
            f"{r.query:<8}{r.n_pairs:>5}{r.statistic:>12.1f}{r.p_value:>12.3g}"
            f"{r.mean_soft:>11.2f}{r.mean_hard:>11.2f}{r.median_soft:>10.1f}{r.median_hard:>10.1f}"
            f"{r.miss_rate:>8.3f}"
        )
    return header + cols + "\n".join(rows) + "\n"


def write_report(report: BenchmarkReport, out_dir: str, figures: bool = True) -> list[str]:
    """Write results JSONL, fold records JSONL, the summary table, and figures.

    Returns the list of files written. Output is deterministic for a
    fixed seed; nothing time-dependent lands in the files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    results_path = out / "results.jsonl"
    with open(results_path, "w", encoding="utf-8") as fh:
        for r in report.results:
            fh.write(json.dumps(r.to_dict()) + "\n")
    written.append(str(results_path))

    records_path = out / "records.jsonl"
    with open(records_path, "w", encoding="utf-8") as fh:
        for rec in report.records:
            fh.write(
                json.dumps(
                    {
                        "query": rec.query,
                        "session_id": rec.session_id,
                        "soft_rank": rec.soft_rank,
                        "hard_rank": rec.hard_rank,
                        "filter_missed_purchase": rec.filter_missed_purchase,
                    }
                )
                + "\n"
            )
    written.append(str(records_path))

    summary_path = out / "summary.txt"
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(summary_table(report))
    written.append(str(summary_path))

    if figures:
        from .figures import render_benchmark_figures

        written.extend(render_benchmark_figures(report, str(out / "figures")))
    return written


def check_report(report: BenchmarkReport, checks: Optional[CheckSpec]) -> tuple[bool, list[str]]:
    """Evaluate the scenario's thresholds; returns (ok, messages)."""
    if checks is None:
        return True, ["no checks configured"]
    messages = []
    ok = True

    if checks.miss_rate_window is not None:
        lo, hi = checks.miss_rate_window
        inside = lo <= report.overall_miss_rate <= hi
        ok &= inside
        messages.append(
            f"{'PASS' if inside else 'FAIL'} miss rate {report.overall_miss_rate:.4f} in [{lo}, {hi}]"
        )
    if checks.p_threshold is not None and checks.min_queries_significant is not None:
        significant = sum(1 for r in report.results if r.p_value < checks.p_threshold)
        enough = significant >= checks.min_queries_significant
        ok &= enough
        messages.append(
            f"{'PASS' if enough else 'FAIL'} {significant}/{len(report.results)} queries "
            f"with p < {checks.p_threshold} (need >= {checks.min_queries_significant})"
        )
    if checks.require_mean_soft_less:
        worse = [r.query for r in report.results if not r.mean_soft < r.mean_hard]
        good = not worse
        ok &= good
        messages.append(
            "PASS mean soft rank below mean hard rank on every query"
            if good
            else f"FAIL mean soft rank not below hard on: {', '.join(worse)}"
        )
    if checks.max_mean_regression is not None:
        worst = max(r.mean_soft - r.mean_hard for r in report.results)
        within = worst <= checks.max_mean_regression
        ok &= within
        messages.append(
            f"{'PASS' if within else 'FAIL'} worst mean-rank regression {worst:+.3f} "
            f"<= {checks.max_mean_regression}"
        )
    return bool(ok), messages
