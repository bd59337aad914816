"""Acceptance criteria 1-8. Each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are repeated
in an "acceptance criteria" section at the end of the pytest report. The
whole file takes roughly 15-20 minutes on one core.
"""

import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import SQUARE_W, SQUARE_X, same_columns
from oracles import mip_exhaustive, random_instance
from polyfacet.datagen import SynthConfig, generate, rank_deficient_fixture
from polyfacet.fpi import GfpiParams, bfpi, gfpi
from polyfacet.metrics import err
from polyfacet.mip import solve_mip
from polyfacet.separable import snpa, spa

TESTS = Path(__file__).parent
pytestmark = pytest.mark.acceptance


def _gfpi_err(gt, params):
    fp = gfpi(gt.x, params)
    if fp.w.shape != gt.w_true.shape:
        return np.inf
    return err(gt.w_true, fp.w)


def test_criterion_1_noiseless_exact_recovery(acceptance):
    t0 = time.perf_counter()
    errs, failures = [], []
    for r in (3, 4, 5):
        for p in np.linspace(1 / (r - 1) + 0.01, 1.0, 5):
            for seed in range(5):
                gt = generate(SynthConfig(r=r, m=r, n1=30, n2=10, purity=p, seed=seed))
                e = _gfpi_err(gt, GfpiParams.from_snr(float("inf"), r, time_limit=1.0))
                errs.append(e)
                if not e <= 1e-6:
                    failures.append((r, round(p, 3), seed, e))
    ok = acceptance(1, not failures,
                    f"{len(errs)} runs, max ERR {max(errs):.2e} (<= 1e-6), "
                    f"{time.perf_counter() - t0:.0f} s, failures {failures}")
    assert ok


def test_criterion_2_bfpi_square(acceptance):
    t0 = time.perf_counter()
    fp = bfpi(SQUARE_X, 3)
    elapsed = time.perf_counter() - t0
    e = err(SQUARE_W, fp.w) if fp.w.shape == SQUARE_W.shape else np.inf
    ok = acceptance(2, e <= 1e-10 and same_columns(fp.w, SQUARE_W, 1e-10) and elapsed < 1.0,
                    f"ERR {e:.1e} (<= 1e-10), {elapsed:.3f} s (< 1 s)")
    assert ok


def test_criterion_3_mip_oracle(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst, count, mismatches = 0.0, 0, 0
    for _ in range(200):
        inst = random_instance(rng, n_max=12)
        sol = solve_mip(inst)
        gap = abs(sol.objective - mip_exhaustive(inst))
        worst = max(worst, gap)
        mismatches += sol.status != "optimal" or gap > 1e-6
        count += 1
    elapsed = time.perf_counter() - t0
    ok = acceptance(3, count >= 200 and mismatches == 0 and elapsed < 300,
                    f"{count} instances (n <= 12, d-1 <= 2), {mismatches} mismatches, "
                    f"max gap {worst:.1e} (<= 1e-6), {elapsed:.0f} s")
    assert ok


def test_criterion_4_rank_deficient(acceptance):
    t0 = time.perf_counter()
    g, s = {}, {}
    params = GfpiParams(t_facets=4, dim=3, lam=10, eta=0.5, gamma=0.05, big_m=10, time_limit=1.0)
    for p in (0.6, 0.7, 0.8):
        for seed in range(5):
            gt = rank_deficient_fixture(purity=p, seed=seed)
            g[p, seed] = _gfpi_err(gt, params)
            s[p, seed] = err(gt.w_true, snpa(gt.x, 4).w)
    elapsed = time.perf_counter() - t0
    bad = {k: round(v, 4) for k, v in g.items() if not v <= 0.05}
    ok = acceptance(4, not bad and min(s.values()) >= 0.1 and elapsed <= 300,
                    f"GFPI max ERR {max(g.values()):.4f} (<= 0.05 each), "
                    f"SNPA min ERR {min(s.values()):.3f} (>= 0.1), {elapsed:.0f} s, "
                    f"runs over 0.05: {bad}")
    assert ok


def test_criterion_5_outliers(acceptance):
    t0 = time.perf_counter()
    base = dict(t_facets=3, dim=3, lam=0.01, gamma=0.01, big_m=100, time_limit=1.0)
    robust, plain = [], []
    for seed in range(5):
        gt = generate(SynthConfig(r=3, m=3, n1=30, n2=10, purity=1.0, outliers=10, seed=seed))
        robust.append(_gfpi_err(gt, GfpiParams(**base, inlier_passes=2)))
        plain.append(_gfpi_err(gt, GfpiParams(**base)))
    elapsed = time.perf_counter() - t0
    hits = sum(e <= 0.05 for e in robust)
    ok = acceptance(5, hits >= 4 and elapsed <= 180,
                    f"{hits}/5 seeds ERR <= 0.05 with inlier passes "
                    f"(plain preprocessing: {sum(e <= 0.05 for e in plain)}/5), "
                    f"ERR {np.round(robust, 4).tolist()}, {elapsed:.0f} s (both variants)")
    assert ok


def test_criterion_6_noisy_trend(acceptance):
    t0 = time.perf_counter()
    g, s = [], []
    for seed in range(10):
        gt = generate(SynthConfig(r=3, m=3, purity=0.9, snr=40, seed=seed))
        g.append(_gfpi_err(gt, GfpiParams.from_snr(40, 3, time_limit=1.0)))
        gt = generate(SynthConfig(r=3, m=3, purity=0.6, snr=40, seed=seed))
        s.append(err(gt.w_true, snpa(gt.x, 3).w))
    elapsed = time.perf_counter() - t0
    ok = acceptance(6, np.mean(g) < np.mean(s) and elapsed <= 1200,
                    f"mean GFPI ERR at p=0.9 {np.mean(g):.4f} < mean SNPA ERR at p=0.6 "
                    f"{np.mean(s):.4f}, {elapsed:.0f} s")
    assert ok


ETAS = (0.1, 0.3, 0.5, 0.7, 0.9)
LAMS = (0.5, 1.5, 2.5, 3.5, 4.5)


def test_criterion_7_parameter_selection(acceptance):
    t0 = time.perf_counter()
    good = []
    for seed in range(10):
        gt = generate(SynthConfig(r=3, m=3, purity=0.8, snr=40, seed=seed))
        errs, scores = [], []
        for eta in ETAS:
            for lam in LAMS:
                params = GfpiParams(t_facets=3, gamma=0.1, eta=eta, lam=lam, time_limit=0.5)
                try:
                    fp = gfpi(gt.x, params)
                    errs.append(err(gt.w_true, fp.w))
                    scores.append(fp.meta["score"])
                except Exception:  # a failed cell has no score and cannot be selected
                    errs.append(np.inf)
                    scores.append(-1)
        errs, scores = np.array(errs), np.array(scores)
        q1 = np.quantile(errs[np.isfinite(errs)], 0.25)
        # every cell tied for the top score must be in the lowest quartile
        best = np.flatnonzero(scores == scores.max())
        good.append(bool(np.all(errs[best] <= q1)))
    elapsed = time.perf_counter() - t0
    ok = acceptance(7, sum(good) >= 8,
                    f"{sum(good)}/10 seeds (>= 8) pick a lowest-quartile cell, {elapsed:.0f} s")
    assert ok


PROPERTY_TESTS = [
    "test_polytope.py::test_duality_round_trip",
    "test_polytope.py::test_is_bounded_against_ray_oracle",
    "test_fpi.py::test_invariants_random",
    "test_metrics.py::test_estimate_h_feasible_and_monotone",
    "test_linalg.py",
    "test_datagen.py::test_determinism",
    "test_datagen.py::test_dirichlet_on_simplex",
    "test_mip.py::test_determinism",
]


def _twice(fn):
    a, b = fn(), fn()
    return np.array_equal(a, b)


def test_criterion_8_property_suites(acceptance):
    res = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
         *[str(TESTS / t) for t in PROPERTY_TESTS]],
        capture_output=True, text=True, cwd=TESTS.parent)
    summary = res.stdout.strip().splitlines()[-1] if res.stdout.strip() else res.stderr[-200:]
    gt = generate(SynthConfig(r=3, m=4, n1=10, n2=5, purity=0.7, snr=50, seed=8))
    params = GfpiParams.from_snr(50, 3, node_limit=200, time_limit=None)
    exact = generate(SynthConfig(r=3, m=3, n1=10, n2=5, purity=0.7, seed=8))
    deterministic = all([
        _twice(lambda: generate(SynthConfig(r=3, m=4, snr=40, outliers=2, seed=8)).x),
        _twice(lambda: gfpi(gt.x, params).w),
        _twice(lambda: bfpi(exact.x, 10).w),
        _twice(lambda: snpa(gt.x, 3).w),
        _twice(lambda: spa(gt.x, 3).w),
        _twice(lambda: rank_deficient_fixture(seed=4).x),
    ])
    ok = acceptance(8, res.returncode == 0 and deterministic,
                    f"property suites: {summary}; repeated runs identical: {deterministic}")
    assert ok, res.stdout[-3000:]
