"""Acceptance gate: one test per shipping criterion, with pinned tolerances.

Run with -v to get one PASSED/FAILED line per criterion; each test also
prints a PASS line with the measured values it certified.
"""

import itertools
import json
import math
import subprocess
import sys
import time
from pathlib import Path

import mpmath
import numpy as np
import pytest

from softfacet.conjugate import (
    DirichletState,
    NIGState,
    categorical_estimate,
    dirichlet_update,
    nig_map_range_likelihood,
    nig_predictive_range_likelihood,
    nig_update,
)
from softfacet.evaluation import check_report, run_benchmark
from softfacet.facets import (
    BrandVocabulary,
    Catalog,
    CategoricalFilter,
    Item,
    RangeFilter,
)
from softfacet.rerank import (
    ItemModel,
    ZeroLikelihoodError,
    hard_filter,
    indicator_likelihood,
    normalize_prior,
    rerank,
)
from softfacet.special import std_normal_cdf, student_t_cdf
from softfacet.synthetic import ScenarioConfig
from softfacet.wilcoxon import average_ranks, wilcoxon_signed_rank

REPO_ROOT = Path(__file__).resolve().parents[1]
SCENARIO_DIR = REPO_ROOT / "scenarios"

mpmath.mp.dps = 30


class TestConjugateUpdates:
    def test_batch_equals_sequential(self):
        """1000 randomized cases per family; batch and one-by-one updates
        agree to relative 1e-9, inside a 10 second budget."""
        started = time.perf_counter()
        rng = np.random.default_rng(20250815)

        worst = 0.0
        for _ in range(1000):
            k = int(rng.integers(2, 9))
            state = DirichletState(tuple(float(a) for a in rng.uniform(0.05, 3.0, size=k)))
            obs = [int(b) for b in rng.integers(0, k, size=int(rng.integers(1, 31)))]
            batch = dirichlet_update(state, obs)
            seq = state
            for b in obs:
                seq = dirichlet_update(seq, [b])
            for a, b in zip(batch.alpha, seq.alpha):
                worst = max(worst, abs(a - b) / abs(b))
        assert worst <= 1e-9

        worst_nig = 0.0
        for _ in range(1000):
            state = NIGState(
                mu=float(rng.uniform(-50, 500)),
                kappa=float(rng.uniform(0.1, 10)),
                alpha=float(rng.uniform(0.5, 10)),
                beta=float(rng.uniform(0.1, 20)),
            )
            obs = [float(m) for m in rng.uniform(-100, 600, size=int(rng.integers(1, 31)))]
            batch = nig_update(state, obs)
            seq = state
            for m in obs:
                seq = nig_update(seq, [m])
            for a, b in (
                (batch.mu, seq.mu),
                (batch.kappa, seq.kappa),
                (batch.alpha, seq.alpha),
                (batch.beta, seq.beta),
            ):
                worst_nig = max(worst_nig, abs(a - b) / max(abs(b), 1e-12))
        assert worst_nig <= 1e-9

        elapsed = time.perf_counter() - started
        assert elapsed < 10.0
        print(
            f"PASS conjugate batch/sequential: worst dirichlet rel {worst:.2e}, "
            f"worst gaussian rel {worst_nig:.2e}, {elapsed:.1f}s"
        )


class TestHardFilterReduction:
    def test_indicator_soft_rerank_reproduces_hard_filter(self):
        """500 random catalogs up to 1000 items: with 0/1 likelihoods the
        positive-score prefix of the soft output is exactly the hard
        result, inside a 30 second budget."""
        started = time.perf_counter()
        rng = np.random.default_rng(20250815)
        checked = 0
        empty_cases = 0
        for case in range(500):
            n = int(rng.integers(2, 1001))
            k = int(rng.integers(1, 9))
            vocab = BrandVocabulary(tuple(f"b{i}" for i in range(k)))
            items = [
                Item(
                    id=f"i{j:04d}",
                    brand_index=int(rng.integers(0, k)),
                    price=float(rng.uniform(1, 1000)),
                )
                for j in range(n)
            ]
            catalog = Catalog(items, vocab)
            models = {
                it.id: ItemModel(item=it, dirichlet=None, nig=None) for it in items
            }
            scores = sorted(
                ((it.id, float(rng.uniform(0.01, 1.0))) for it in items),
                key=lambda kv: -kv[1],
            )
            prior = normalize_prior(scores)
            if rng.random() < 0.5:
                filt = CategoricalFilter(int(rng.integers(0, k)))
            else:
                lo = float(rng.uniform(0, 1000))
                filt = RangeFilter(lo, lo + float(rng.uniform(0, 300)))
            hard = hard_filter(prior, filt, catalog)
            if len(hard) == 0:
                with pytest.raises(ZeroLikelihoodError):
                    rerank(prior, filt, models, likelihood_fn=indicator_likelihood)
                empty_cases += 1
                continue
            soft, _ = rerank(prior, filt, models, likelihood_fn=indicator_likelihood)
            prefix = tuple(e.item_id for e in soft.entries if e.score > 0)
            assert prefix == hard.item_ids(), f"case {case} diverged"
            checked += 1
        elapsed = time.perf_counter() - started
        assert elapsed < 30.0
        print(
            f"PASS hard-filter reduction: {checked} catalogs matched, "
            f"{empty_cases} empty-result cases raised, {elapsed:.1f}s"
        )


class TestDistributionFunctions:
    def test_distribution_functions_match_references(self):
        """Normal cdf within 1e-10 and t cdf within 1e-8 of 30-digit
        references at 1000 points each; range likelihoods additive to
        1e-12; predictive probabilities within 3 standard errors of a
        100k-sample simulation. Budget 60 seconds."""
        started = time.perf_counter()
        rng = np.random.default_rng(20250815)

        xs = np.concatenate([np.linspace(-8, 8, 500), rng.uniform(-10, 10, size=500)])
        worst_phi = max(
            abs(std_normal_cdf(float(x)) - float(mpmath.ncdf(mpmath.mpf(float(x)))))
            for x in xs
        )
        assert worst_phi <= 1e-10

        worst_t = 0.0
        for _ in range(1000):
            x = float(rng.uniform(-12, 12))
            dof = float(rng.uniform(0.5, 200))
            got = student_t_cdf(x, dof)
            z = dof / (dof + x * x)
            tail = 0.5 * mpmath.betainc(dof / 2, mpmath.mpf(1) / 2, 0, z, regularized=True)
            ref = float(tail if x < 0 else 1 - tail)
            worst_t = max(worst_t, abs(got - ref))
        assert worst_t <= 1e-8

        worst_add = 0.0
        for _ in range(200):
            state = NIGState(
                mu=float(rng.uniform(0, 500)),
                kappa=float(rng.uniform(0.2, 8)),
                alpha=float(rng.uniform(0.6, 8)),
                beta=float(rng.uniform(0.2, 15)),
            )
            a, b, c = sorted(rng.uniform(-100, 600, size=3))
            for fn in (nig_map_range_likelihood, nig_predictive_range_likelihood):
                whole = fn(state, RangeFilter(a, c))
                split = fn(state, RangeFilter(a, b)) + fn(state, RangeFilter(b, c))
                worst_add = max(worst_add, abs(whole - split))
        assert worst_add <= 1e-12

        mc_rng = np.random.default_rng(911)
        n_samples = 100_000
        worst_sigmas = 0.0
        for state, lo, hi in (
            (NIGState(mu=100.0, kappa=2.0, alpha=3.0, beta=40.0), 90.0, 110.0),
            (NIGState(mu=10.0, kappa=0.5, alpha=1.5, beta=2.0), 0.0, 15.0),
            (NIGState(mu=250.0, kappa=5.0, alpha=2.0, beta=300.0), 200.0, 260.0),
        ):
            sigma2 = 1.0 / mc_rng.gamma(shape=state.alpha, scale=1.0 / state.beta, size=n_samples)
            draws = mc_rng.normal(state.mu, np.sqrt(sigma2 * (1.0 + 1.0 / state.kappa)))
            estimate = float(np.mean((draws >= lo) & (draws <= hi)))
            se = math.sqrt(max(estimate * (1 - estimate), 1e-12) / n_samples)
            got = nig_predictive_range_likelihood(state, RangeFilter(lo, hi))
            worst_sigmas = max(worst_sigmas, abs(got - estimate) / se)
        assert worst_sigmas <= 3.0

        elapsed = time.perf_counter() - started
        assert elapsed < 60.0
        print(
            f"PASS distribution functions: normal err {worst_phi:.1e}, t err {worst_t:.1e}, "
            f"additivity {worst_add:.1e}, predictive within {worst_sigmas:.2f} SE, {elapsed:.1f}s"
        )


class TestSignedRank:
    def test_exact_matches_enumeration_and_approximation_tracks(self):
        """Exact p equals full enumeration for every n <= 12 case tried;
        the normal approximation stays within 0.02 of exact for
        n in 20..25. Budget 60 seconds."""
        started = time.perf_counter()
        rng = np.random.default_rng(20250815)

        cases = 0
        for n in range(2, 13):
            for _ in range(40):
                diffs = [float(d) for d in rng.integers(-5, 6, size=n)]
                if not any(d != 0 for d in diffs):
                    continue
                pairs = [(0.0, d) for d in diffs]
                result = wilcoxon_signed_rank(pairs, method="exact")
                nonzero = [d for d in diffs if d != 0.0]
                ranks = average_ranks([abs(d) for d in nonzero])
                w_obs = math.fsum(r for d, r in zip(nonzero, ranks) if d < 0)
                favourable = 0
                for signs in itertools.product((0, 1), repeat=len(nonzero)):
                    w = math.fsum(r for s, r in zip(signs, ranks) if s)
                    if w <= w_obs + 1e-9:
                        favourable += 1
                reference = favourable / 2.0 ** len(nonzero)
                assert result.p_value == pytest.approx(reference, rel=1e-12)
                cases += 1

        worst_gap = 0.0
        for n in range(20, 26):
            for _ in range(20):
                diffs = [float(d) for d in rng.integers(-6, 14, size=n) if d != 0]
                if len(diffs) < 10:
                    continue
                pairs = [(0.0, d) for d in diffs]
                exact = wilcoxon_signed_rank(pairs, method="exact").p_value
                approx = wilcoxon_signed_rank(pairs, method="approx").p_value
                worst_gap = max(worst_gap, abs(exact - approx))
        assert worst_gap <= 0.02

        elapsed = time.perf_counter() - started
        assert elapsed < 60.0
        print(
            f"PASS signed-rank test: {cases} exact cases equal enumeration, "
            f"approximation gap {worst_gap:.4f}, {elapsed:.1f}s"
        )


class TestCalibratedBenchmark:
    def test_full_benchmark_via_cli(self, tmp_path):
        """The shipped calibrated scenario, run end to end through the
        command line: checks pass, the miss rate lands at 0.43 +- 0.03,
        at least 18 of 20 queries reach p < 1e-4, and the soft scheme
        improves the mean rank on every query. Budget 5 minutes."""
        started = time.perf_counter()
        out_dir = tmp_path / "report"
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "softfacet.cli",
                "evaluate",
                "--scenario", str(SCENARIO_DIR / "calibrated43.json"),
                "--seed", "20250815",
                "--out-dir", str(out_dir),
                "--check",
            ],
            capture_output=True,
            text=True,
            timeout=300,
        )
        assert proc.returncode == 0, proc.stdout + proc.stderr
        assert "FAIL" not in proc.stdout

        rows = [
            json.loads(line)
            for line in (out_dir / "results.jsonl").read_text().splitlines()
        ]
        assert len(rows) == 20

        significant = sum(1 for row in rows if row["p_value"] < 1e-4)
        assert significant >= 18
        improved = sum(1 for row in rows if row["mean_soft"] < row["mean_hard"])
        assert improved == 20

        miss_line = next(
            line for line in proc.stdout.splitlines() if "miss rate" in line and "PASS" in line
        )
        miss = float(miss_line.split("miss rate")[1].split()[0])
        assert abs(miss - 0.43) <= 0.03

        for name in ("results.jsonl", "records.jsonl", "summary.txt"):
            assert (out_dir / name).stat().st_size > 0
        figures = sorted(p.name for p in (out_dir / "figures").glob("*.png"))
        assert figures == ["mean_ranks.png", "rank_distribution.png", "significance.png"]

        elapsed = time.perf_counter() - started
        assert elapsed < 300.0
        print(
            f"PASS calibrated benchmark: miss rate {miss:.4f}, {significant}/20 queries "
            f"significant at 1e-4, mean rank improved on {improved}/20, {elapsed:.1f}s"
        )


class TestAdversarialScenario:
    def test_concentrated_relevance_never_regresses(self):
        """The adversarial scenario with near-deterministic filters and
        top-heavy relevance: no query's mean soft rank may exceed the
        hard mean by more than one position."""
        started = time.perf_counter()
        config = ScenarioConfig.load(str(SCENARIO_DIR / "adversarial_top.json"))
        report = run_benchmark(config, seed=20250815)
        worst = max(r.mean_soft - r.mean_hard for r in report.results)
        assert worst <= 1.0
        ok, messages = check_report(report, config.checks)
        assert ok, messages
        elapsed = time.perf_counter() - started
        assert elapsed < 120.0
        print(
            f"PASS adversarial scenario: worst mean-rank regression {worst:+.3f} "
            f"over {len(report.results)} queries, {elapsed:.1f}s"
        )
