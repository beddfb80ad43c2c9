"""Leave-one-out evaluation: fold mechanics, penalties, and report output."""

from pathlib import Path

import pytest

from softfacet.evaluation import (
    BenchmarkReport,
    EvalRecord,
    QueryResult,
    check_report,
    hard_rank_with_miss_penalty,
    loo_evaluate,
    run_benchmark,
    summarize_query,
    summary_table,
    write_report,
)
from softfacet.facets import CategoricalFilter, RangeFilter, satisfies
from softfacet.rerank import RankedEntry, RankedList, normalize_prior, rerank
from softfacet.synthetic import CheckSpec, ScenarioConfig
from softfacet.training import ModelConfig, Session, train

PRIOR_SCORES = {"item-a": 3.0, "item-b": 2.0, "item-c": 1.5, "item-d": 1.0}


def fixture_sessions():
    return [
        Session("f1", "q", (RangeFilter(90.0, 110.0),), purchased="item-a"),
        Session("f2", "q", (CategoricalFilter(0), RangeFilter(200.0, 300.0)), purchased="item-b"),
        Session("f3", "q", (RangeFilter(400.0, 500.0),), purchased="item-c"),
        Session("f4", "q", (CategoricalFilter(2),), purchased="item-a"),
        Session("f5", "q", (RangeFilter(80.0, 120.0),), purchased="item-a"),
    ]


def naive_loo(query, sessions, catalog, config, prior_scores):
    """Train-on-rest reference: a fresh model per fold, no shared state."""
    eligible = [
        s
        for s in sessions
        if s.query == query and s.purchased in catalog and len(s.actions) > 0
    ]
    ordered = sorted(prior_scores.items(), key=lambda kv: (-kv[1], kv[0]))
    prior = normalize_prior(ordered)
    records = []
    for held in eligible:
        rest = [s for s in eligible if s is not held]
        model = train(catalog, rest, config)
        states = model.queries[query].states
        propensity = prior
        for action in held.actions:
            _, propensity = rerank(propensity, action, states)
        soft_rank = propensity.item_ids().index(held.purchased) + 1

        survivors = [
            item_id
            for item_id in prior.item_ids()
            if all(satisfies(catalog.get(item_id), a) for a in held.actions)
        ]
        if held.purchased in survivors:
            hard_rank = survivors.index(held.purchased) + 1
        else:
            hard_rank = len(survivors) + prior.item_ids().index(held.purchased) + 1
        missed = held.purchased not in survivors
        records.append((held.session_id, soft_rank, hard_rank, missed))
    return records


class TestMissPenalty:
    def test_survivor_keeps_filtered_rank(self):
        filtered = RankedList(
            tuple(RankedEntry(i, 0.0, True) for i in ("x", "y", "z"))
        )
        unfiltered = RankedList(
            tuple(RankedEntry(i, 0.0, True) for i in ("a", "x", "y", "z"))
        )
        assert hard_rank_with_miss_penalty(filtered, unfiltered, "y") == 2

    def test_hidden_purchase_scrolls_then_clears(self):
        # 30 surviving items plus unfiltered rank 12 puts the find at 42
        filtered = RankedList(
            tuple(RankedEntry(f"s{i}", 0.0, True) for i in range(30))
        )
        unfiltered = RankedList(
            tuple(RankedEntry(f"u{i}", 0.0, True) for i in range(20))
        )
        assert hard_rank_with_miss_penalty(filtered, unfiltered, "u11") == 42

    def test_empty_filtered_list(self):
        filtered = RankedList(())
        unfiltered = RankedList((RankedEntry("a", 0.0, True),))
        assert hard_rank_with_miss_penalty(filtered, unfiltered, "a") == 1


class TestLooEvaluate:
    def test_matches_train_on_rest(self, small_catalog):
        config = ModelConfig(kappa0=2.0, beta0=3.0)
        sessions = fixture_sessions()
        records = loo_evaluate("q", sessions, small_catalog, config, PRIOR_SCORES)
        reference = naive_loo("q", sessions, small_catalog, config, PRIOR_SCORES)
        assert len(records) == len(reference) == 5
        for rec, (sid, soft, hard, missed) in zip(records, reference):
            assert rec.session_id == sid
            assert rec.soft_rank == soft
            assert rec.hard_rank == hard
            assert rec.filter_missed_purchase == missed

    def test_miss_flag_set_when_filter_excludes_purchase(self, small_catalog):
        records = loo_evaluate(
            "q", fixture_sessions(), small_catalog, ModelConfig(), PRIOR_SCORES
        )
        by_id = {r.session_id: r for r in records}
        # f4 bought item-a but filtered to the crux brand
        assert by_id["f4"].filter_missed_purchase
        assert not by_id["f1"].filter_missed_purchase
        # item-a is prior rank 1 and no other item survives the crux
        # filter except item-c, so the penalized rank is 1 + 1
        assert by_id["f4"].hard_rank == 2

    def test_ineligible_sessions_are_not_folds(self, small_catalog):
        sessions = fixture_sessions() + [
            Session("no-buy", "q", (CategoricalFilter(0),), purchased=None),
            Session("no-act", "q", (), purchased="item-a"),
            Session("other-query", "other", (CategoricalFilter(0),), purchased="item-a"),
            Session("gone", "q", (CategoricalFilter(0),), purchased="withdrawn"),
        ]
        records = loo_evaluate("q", sessions, small_catalog, ModelConfig(), PRIOR_SCORES)
        assert {r.session_id for r in records} == {"f1", "f2", "f3", "f4", "f5"}

    def test_requires_two_folds(self, small_catalog):
        sessions = [fixture_sessions()[0]]
        with pytest.raises(ValueError, match="at least 2"):
            loo_evaluate("q", sessions, small_catalog, ModelConfig(), PRIOR_SCORES)

    def test_zero_mass_action_skipped_like_the_service(self, small_catalog):
        # a price bucket absurdly far from every item cannot be applied
        # in soft mode, so the fold keeps the unfiltered ordering
        sessions = [
            Session("far", "q", (RangeFilter(90000.0, 90050.0),), purchased="item-b"),
            Session("near", "q", (RangeFilter(90.0, 110.0),), purchased="item-a"),
        ]
        records = loo_evaluate("q", sessions, small_catalog, ModelConfig(), PRIOR_SCORES)
        far = next(r for r in records if r.session_id == "far")
        # prior order is a, b, c, d: the purchase stays at rank 2
        assert far.soft_rank == 2
        assert far.filter_missed_purchase
        assert far.hard_rank == 0 + 2  # empty survivor list, unfiltered rank 2


class TestSummarizeQuery:
    def test_summary_statistics(self):
        records = [
            EvalRecord("q", "s1", 1, 4, False),
            EvalRecord("q", "s2", 2, 2, False),
            EvalRecord("q", "s3", 3, 9, True),
            EvalRecord("q", "s4", 2, 5, True),
        ]
        result = summarize_query("q", records)
        assert result.n_pairs == 4
        assert result.mean_soft == pytest.approx(2.0)
        assert result.mean_hard == pytest.approx(5.0)
        assert result.median_soft == pytest.approx(2.0)
        assert result.median_hard == pytest.approx(4.5)
        assert result.miss_rate == pytest.approx(0.5)
        assert 0.0 < result.p_value < 0.5

    def test_identical_ranks_degenerate_to_p_one(self):
        records = [EvalRecord("q", f"s{i}", 3, 3, False) for i in range(5)]
        result = summarize_query("q", records)
        assert result.p_value == 1.0
        assert result.statistic == 0.0

    def test_roundtrip_dict(self):
        records = [EvalRecord("q", "s1", 1, 2, False), EvalRecord("q", "s2", 1, 3, False)]
        doc = summarize_query("q", records).to_dict()
        assert doc["query"] == "q"
        assert doc["n_pairs"] == 2
        assert set(doc) == {
            "query",
            "n_pairs",
            "statistic",
            "p_value",
            "mean_soft",
            "mean_hard",
            "median_soft",
            "median_hard",
            "miss_rate",
        }


def bench_config(**overrides):
    base = dict(
        name="bench-probe",
        n_items=60,
        n_brands=6,
        n_queries=2,
        sessions_per_query=60,
        sigma_scale=0.57,
        target_miss_rate=None,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


class TestRunBenchmark:
    def test_shapes_and_fold_counts(self):
        report = run_benchmark(bench_config(), seed=17)
        assert report.scenario_name == "bench-probe"
        assert len(report.results) == 2
        assert len(report.records) == 2 * 60
        assert {r.query for r in report.results} == {"q00", "q01"}
        assert 0.0 < report.overall_miss_rate < 1.0

    def test_soft_beats_hard_on_generated_data(self):
        report = run_benchmark(bench_config(sessions_per_query=150), seed=17)
        for r in report.results:
            assert r.mean_soft < r.mean_hard
            assert r.p_value < 0.01

    def test_brand_scenario_has_no_price_misses(self):
        report = run_benchmark(bench_config(filter_kind="brand"), seed=17)
        assert report.overall_miss_rate == 0.0

    def test_reports_are_reproducible(self):
        a = run_benchmark(bench_config(), seed=23)
        b = run_benchmark(bench_config(), seed=23)
        assert a.records == b.records
        assert [r.to_dict() for r in a.results] == [r.to_dict() for r in b.results]

    def test_query_and_session_overrides(self):
        report = run_benchmark(bench_config(), n_queries=1, sessions_per_query=30, seed=17)
        assert report.n_queries == 1
        assert len(report.records) == 30


class TestReportFiles:
    def test_write_report_files(self, tmp_path):
        report = run_benchmark(bench_config(), seed=23)
        written = write_report(report, str(tmp_path / "out"))
        names = {Path(p).name for p in written}
        assert {"results.jsonl", "records.jsonl", "summary.txt"} <= names
        pngs = [p for p in written if p.endswith(".png")]
        assert len(pngs) == 3
        for p in written:
            assert Path(p).stat().st_size > 0
        lines = (tmp_path / "out" / "results.jsonl").read_text().splitlines()
        assert len(lines) == 2

    def test_no_figures_flag(self, tmp_path):
        report = run_benchmark(bench_config(), seed=23)
        written = write_report(report, str(tmp_path / "out"), figures=False)
        assert not any(p.endswith(".png") for p in written)

    def test_delimited_output_is_byte_stable(self, tmp_path):
        # same seed, two full passes: the delimited artifacts must be
        # byte-identical, so nothing time-dependent can be in them
        a = run_benchmark(bench_config(), seed=23)
        b = run_benchmark(bench_config(), seed=23)
        write_report(a, str(tmp_path / "a"), figures=False)
        write_report(b, str(tmp_path / "b"), figures=False)
        for name in ("results.jsonl", "records.jsonl", "summary.txt"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_summary_table_mentions_every_query(self):
        report = run_benchmark(bench_config(), seed=23)
        table = summary_table(report)
        for r in report.results:
            assert r.query in table


class TestCheckReport:
    def make_report(self, results):
        return BenchmarkReport(
            scenario_name="probe",
            seed=0,
            n_queries=len(results),
            sessions_per_query=10,
            results=results,
            records=[],
            overall_miss_rate=0.43,
        )

    def result(self, query, p_value, mean_soft, mean_hard):
        return QueryResult(
            query=query,
            n_pairs=10,
            statistic=0.0,
            p_value=p_value,
            mean_soft=mean_soft,
            mean_hard=mean_hard,
            median_soft=mean_soft,
            median_hard=mean_hard,
            miss_rate=0.4,
        )

    def test_no_checks_passes_trivially(self):
        report = self.make_report([self.result("q00", 1e-6, 2.0, 4.0)])
        ok, messages = check_report(report, None)
        assert ok
        assert messages == ["no checks configured"]

    def test_all_checks_pass(self):
        report = self.make_report(
            [self.result("q00", 1e-6, 2.0, 4.0), self.result("q01", 1e-5, 3.0, 5.0)]
        )
        checks = CheckSpec(
            miss_rate_window=(0.40, 0.46),
            p_threshold=1e-4,
            min_queries_significant=2,
            require_mean_soft_less=True,
            max_mean_regression=0.0,
        )
        ok, messages = check_report(report, checks)
        assert ok
        assert all(m.startswith("PASS") for m in messages)
        assert len(messages) == 4

    def test_miss_rate_window_failure(self):
        report = self.make_report([self.result("q00", 1e-6, 2.0, 4.0)])
        ok, messages = check_report(report, CheckSpec(miss_rate_window=(0.1, 0.2)))
        assert not ok
        assert any(m.startswith("FAIL") and "miss rate" in m for m in messages)

    def test_significance_count_failure(self):
        report = self.make_report(
            [self.result("q00", 1e-6, 2.0, 4.0), self.result("q01", 0.5, 3.0, 5.0)]
        )
        ok, messages = check_report(
            report, CheckSpec(p_threshold=1e-4, min_queries_significant=2)
        )
        assert not ok
        assert any("1/2 queries" in m for m in messages)

    def test_mean_regression_failure(self):
        report = self.make_report([self.result("q00", 1e-6, 9.0, 4.0)])
        ok, messages = check_report(
            report, CheckSpec(require_mean_soft_less=True, max_mean_regression=1.0)
        )
        assert not ok
        assert any("q00" in m for m in messages)
        assert any("+5.000" in m for m in messages)
