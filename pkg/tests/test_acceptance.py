"""End-to-end acceptance criteria, each at its stated tolerance.

Every test prints one ``CRITERION k: PASS|FAIL`` line; the lines are
repeated in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from oracles import dantzig_enumeration, lasso_enumeration, soft_threshold_solution
from sparselab.config import parse_config
from sparselab.dantzig import dantzig_fit
from sparselab.datagen import NoiseModel
from sparselab.design import (
    C0_DANTZIG, C0_LASSO, DesignMatrix, certify, gen_low_coherence, gen_normalized_gaussian,
    gen_rademacher, kappa_probe,
)
from sparselab.errors import ConvergenceError
from sparselab.lasso import dantzig_feasibility, lasso_fit
from sparselab.montecarlo import delta_trend_monotone, lemma3_diagnostic, run_experiment

pytestmark = pytest.mark.acceptance

ESTIMATORS = ("lasso", "dantzig")
# frozen from a pilot run at (n=256, M=64, gaussian sigma=1, 10^4 reps): ratio 1.64
LEMMA3_CEILING = 3.0
# pilot-calibrated property threshold for the general-noise suite
THM3_MIN_FREQ = 0.9


@pytest.fixture(scope="module")
def outdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def _run(suite, outdir, tag, **extra):
    cfg = parse_config(overrides={
        "suite": suite, "n": 4096, "M": 512, "A": 4.0, "sigma": 1.0, "alpha": 1.2, "s": 1,
        "trials": 200, "base_seed": 0, "generator": "rademacher",
        "out_csv": str(outdir / f"{tag}.csv"), "out_summary": str(outdir / f"{tag}.jsonl"), **extra,
    })
    return cfg, run_experiment(cfg)


@pytest.fixture(scope="module")
def thm1(outdir):
    return _run("thm1", outdir, "thm1")


@pytest.fixture(scope="module")
def thm2(outdir):
    return _run("thm2", outdir, "thm2", rho_multiple=2.5, c1_multiple=2.2)


def test_c1_orthogonal_design_oracle(criterion):
    t0 = time.perf_counter()
    worst_l = worst_d = 0.0
    for i in range(50):
        rng = np.random.default_rng(1000 + i)
        Q, _ = np.linalg.qr(rng.standard_normal((32, 32)))
        D = DesignMatrix.from_array(math.sqrt(32) * Q)
        theta = 3.0 * rng.standard_normal(32) * (rng.random(32) < 0.3)
        y = D.X @ theta + 0.5 * rng.standard_normal(32)
        bmax = float(np.max(np.abs(D.X.T @ y))) / 32
        for frac in (0.05, 0.2, 0.4, 0.7, 1.1):
            r = frac * bmax
            ref = soft_threshold_solution(np.asarray(D.X), y, r)
            worst_l = max(worst_l, float(np.max(np.abs(lasso_fit(D, y, r).theta - ref))))
            worst_d = max(worst_d, float(np.max(np.abs(dantzig_fit(D, y, r).theta - ref))))
    dt = time.perf_counter() - t0
    ok = worst_l <= 1e-8 and worst_d <= 1e-6 and dt < 5.0
    criterion(1, ok, f"lasso err {worst_l:.2e} (<=1e-8), dantzig err {worst_d:.2e} (<=1e-6), {dt:.2f}s (<5s)")


def test_c2_small_instance_enumeration(criterion):
    solve_time = 0.0
    worst_l = worst_d = 0.0
    t0 = time.perf_counter()
    for i in range(100):
        rng = np.random.default_rng(2000 + i)
        M = 2 + i % 5
        D = DesignMatrix.from_array(rng.standard_normal((8, M)), normalize=True)
        y = D.X @ rng.standard_normal(M) + 0.3 * rng.standard_normal(8)
        r = rng.uniform(0.05, 0.6) * float(np.max(np.abs(D.X.T @ y))) / 8
        ts = time.perf_counter()
        las = lasso_fit(D, y, r)
        dan = dantzig_fit(D, y, r)
        solve_time += time.perf_counter() - ts
        best_l, _ = lasso_enumeration(np.asarray(D.X), y, r)
        best_d, _ = dantzig_enumeration(np.asarray(D.X), y, r)
        worst_l = max(worst_l, abs(las.objective - best_l))
        worst_d = max(worst_d, abs(dan.l1_norm - best_d))
    dt = time.perf_counter() - t0
    ok = worst_l <= 1e-6 and worst_d <= 1e-6 and dt < 30.0
    criterion(2, ok, f"objective gaps lasso {worst_l:.2e}, dantzig {worst_d:.2e} (<=1e-6); "
                     f"solvers {solve_time:.2f}s, with oracles {dt:.1f}s (<30s)")


def test_c3_lasso_is_dantzig_feasible_and_l1_dominance(criterion):
    configs = [(n, M, gen) for n in (20, 50, 120) for M in (5, 20, 60) for gen in ("rademacher", "gaussian")]
    solves = feas_viol = dom_viol = skipped = 0
    i = 0
    while solves < 200:
        n, M, gen = configs[i % len(configs)]
        rng = np.random.default_rng(3000 + i)
        D = (gen_rademacher if gen == "rademacher" else gen_normalized_gaussian)(n, M, 3000 + i)
        theta = np.zeros(M)
        theta[rng.choice(M, size=min(3, M), replace=False)] = rng.uniform(1, 2, size=min(3, M))
        y = D.X @ theta + rng.uniform(0.1, 1.0) * rng.standard_normal(n)
        r = rng.uniform(0.02, 0.8) * float(np.max(np.abs(D.X.T @ y))) / n
        i += 1
        try:
            las = lasso_fit(D, y, r)
        except ConvergenceError:
            skipped += 1
            continue
        dan = dantzig_fit(D, y, r)
        solves += 1
        feas_viol += not dantzig_feasibility(D, y, las.theta, r)[0]
        dom_viol += not dan.l1_norm <= float(np.sum(np.abs(las.theta))) + 1e-7
    ok = feas_viol == 0 and dom_viol == 0
    criterion(3, ok, f"{solves} paired solves: {feas_viol} feasibility and {dom_viol} dominance "
                     f"violations ({skipped} non-converged lasso runs skipped)")


def test_c4_kappa_probe_one_sided(criterion):
    t0 = time.perf_counter()
    bound = math.sqrt(1 - 1 / 2.0)
    worst = math.inf
    for k in range(5):
        D = gen_low_coherence(256, 16, 1 / 14, k)
        for c0 in (C0_DANTZIG, C0_LASSO):
            certify(D, 1, 2.0, c0)
            worst = min(worst, kappa_probe(D, 1, c0, 2.0, 10_000, k).min_ratio_found)
    dt = time.perf_counter() - t0
    ok = worst >= bound - 1e-9 and dt < 20.0
    criterion(4, ok, f"min ratio {worst:.4f} vs bound {bound:.4f}, {dt:.1f}s (<20s)")


def test_c5_gaussian_supnorm_bound(thm1, criterion):
    cfg, s = thm1
    lows = {e: s.estimator(e)["lower95_one_sided_within_bound"] for e in ESTIMATORS}
    # strict mode already raises on a violation; recheck from the rows independently
    viol = sum(1 for r in s.rows if r.event_A and not (r.within_bound and r.cone_ok and r.l1_bound_ok))
    failed = sum(s.estimator(e)["trials_failed"] for e in ESTIMATORS)
    ok = all(v >= 0.97 for v in lows.values()) and viol == 0 and failed == 0
    freqs = {e: s.estimator(e)["freq_within_bound"] for e in ESTIMATORS}
    criterion(5, ok, f"freq_within_bound {freqs}, one-sided Wilson lower {lows} (>=0.97); "
                     f"{viol} implication violations; {s.wall_clock_s:.0f}s")


def test_c6_sign_concentration(thm2, criterion):
    cfg, s = thm2
    lows = {e: s.estimator(e)["lower95_one_sided_sign_ok"] for e in ESTIMATORS}
    viol = sum(1 for r in s.rows if r.within_bound and r.assumption3_ok and not r.sign_ok)
    gates = all(r.assumption3_ok for r in s.rows)
    ok = all(v >= 0.97 for v in lows.values()) and viol == 0 and gates
    freqs = {e: s.estimator(e)["freq_sign_ok"] for e in ESTIMATORS}
    criterion(6, ok, f"freq_sign_ok {freqs}, one-sided Wilson lower {lows} (>=0.97); "
                     f"{viol} sign-implication violations")


def test_c7_general_noise(outdir, criterion):
    cfg, s = _run("thm3", outdir, "thm3", delta=1.0, delta_grid="0.5,1,2", noise="student_t", df=3.0)
    assert cfg.r == pytest.approx(math.sqrt(math.log(512) ** 2 / 4096))
    freqs = {e: s.estimator(e)["freq_within_bound"] for e in ESTIMATORS}
    grid = s.record["delta_grid"]
    trend = {e: [g[f"freq_within_bound_{e}"] for g in grid] for e in ESTIMATORS}
    mono = all(delta_trend_monotone(grid, e) for e in ESTIMATORS)
    ok = all(v >= THM3_MIN_FREQ for v in freqs.values()) and mono
    criterion(7, ok, f"freq_within_bound {freqs} (>={THM3_MIN_FREQ}); across delta 0.5/1/2: {trend}; "
                     f"{s.wall_clock_s:.0f}s")


def test_c8_event_frequency(thm1, criterion):
    cfg, s = thm1
    floor = 1 - cfg.M ** (1 - cfg.A**2 / 8)
    ok = s.freq_event_A >= floor - 0.02
    criterion(8, ok, f"freq_event_A {s.freq_event_A:.3f} vs floor {floor:.4f} - 0.02")


def test_c9_lemma3_ratio(criterion):
    t0 = time.perf_counter()
    res = lemma3_diagnostic(gen_rademacher(256, 64, 0), NoiseModel("gaussian", 1.0), 10_000, 0)
    dt = time.perf_counter() - t0
    ok = res.ratio <= LEMMA3_CEILING and dt < 10.0
    criterion(9, ok, f"ratio {res.ratio:.3f} (ceiling {LEMMA3_CEILING}), {dt:.2f}s (<10s)")


def test_c10_byte_identical_reruns(thm1, outdir, criterion):
    cfg, _ = thm1
    first = ((outdir / "thm1.csv").read_bytes(), (outdir / "thm1.jsonl").read_bytes())
    run_experiment(cfg)
    second = ((outdir / "thm1.csv").read_bytes(), (outdir / "thm1.jsonl").read_bytes())
    ok = first == second
    criterion(10, ok, f"csv {len(first[0])} bytes, summary {len(first[1])} bytes, identical={ok}")
