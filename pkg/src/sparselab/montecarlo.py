"""Seeded replicate experiments for the sup-norm and sign-recovery bounds.

Each trial draws a sparse target and noise, solves every requested
estimator over a small probe family (several coordinate / variable orders,
plus a non-zero starting point for the Lasso), and records the worst error
over the family. The family stands in for the whole solution set, which is
not enumerable; this can only under-estimate the supremum.

Per trial we also evaluate the good event ``|X^T W / n|_inf <= r / 2``
(from the known noise). On that event the sup-norm bound, the cone
condition and the l1 bound are deterministic consequences, so any failure
there is raised as ImplicationViolation rather than counted.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from statistics import NormalDist

import numpy as np

from . import __version__
from .config import ESTIMATOR_C0
from .dantzig import dantzig_fit
from .datagen import gen_target, synthesize
from .design import DesignMatrix, certify, coherence, find_certified_design
from .errors import (
    CertificationError, ConvergenceError, ExperimentError, GateError, ImplicationViolation,
    InvalidParameterError, IterationLimitError, SingularBasisError,
)
from .lasso import dantzig_feasibility, lasso_fit
from .linalg import read_matrix
from .rates import apply_threshold, l1_error_bound, sign_vector
from .rng import Role, stream
from .simplex import OPTIMAL

EXIT_COHERENCE_GATE = 2
EXIT_SIGNAL_GATE = 3
EXIT_ROW_ENERGY_GATE = 4
EXIT_SOLVER = 5

MAX_FAILED_FRACTION = 0.05
Z95 = NormalDist().inv_cdf(0.975)
Z95_ONE_SIDED = NormalDist().inv_cdf(0.95)
# slack for comparing solver output against exact inequalities
DIAG_RTOL = 1e-9


@dataclass
class TrialRecord:
    trial: int
    seed: int
    estimator: str
    status: str  # "ok" or "failed"
    event_A: bool
    z_inf: float
    r: float
    c2: float
    bound_c2r: float
    supnorm_err: float = math.nan
    l1_err: float = math.nan
    within_bound: bool = False
    cone_ok: bool = False
    l1_bound_ok: bool = False
    sign_ok: bool = False
    assumption3_ok: bool = False
    min_constraint_slack: float = math.nan
    probe_spread: float = math.nan
    n_probes: int = 0
    failure: str = ""


CSV_COLUMNS = [f.name for f in fields(TrialRecord)] + ["version", "config_digest"]


@dataclass
class Setup:
    """Everything shared by the trials of one experiment."""

    config: object
    design: DesignMatrix = field(repr=False)
    design_seed_used: int
    r: float
    rho: float


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


# keys that change where or how fast results are produced, never what they are
RUNTIME_KEYS = ("workers", "out_csv", "out_summary")


def persisted_echo(cfg):
    echo = cfg.echo()
    for k in RUNTIME_KEYS:
        echo.pop(k, None)
    return echo


def config_digest(cfg):
    blob = json.dumps(persisted_echo(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def load_design(cfg):
    """Build (or read) the design and run the coherence gate.

    Random generators are re-seeded up to ``reseed_tries`` times until the
    design admits sparsity ``s`` for every requested estimator.
    """
    c0s = tuple(ESTIMATOR_C0[e] for e in cfg.estimators)
    s_gate = max(cfg.s, 1)
    try:
        if cfg.generator == "file":
            D = DesignMatrix.from_array(read_matrix(cfg.design_file))
            for c0 in c0s:
                certify(D, s_gate, cfg.alpha, c0)
            return D, cfg.design_seed
        return find_certified_design(cfg.generator, cfg.n, cfg.M, cfg.design_seed, cfg.alpha,
                                     s_gate, c0s, tries=cfg.reseed_tries)
    except CertificationError as exc:
        raise GateError(f"coherence gate failed: {exc}", EXIT_COHERENCE_GATE) from exc


def prepare(cfg, design=None):
    """Validate gates and assemble the shared experiment state.

    Raises GateError with the stable exit code of the failed hypothesis.
    """
    if design is None:
        D, seed_used = load_design(cfg)
    else:
        D, seed_used = design, cfg.design_seed
        for e in cfg.estimators:
            try:
                certify(D, max(cfg.s, 1), cfg.alpha, ESTIMATOR_C0[e])
            except CertificationError as exc:
                raise GateError(f"coherence gate failed: {exc}", EXIT_COHERENCE_GATE) from exc
    if (D.n, D.M) != (cfg.n, cfg.M):
        raise InvalidParameterError(f"design is {D.n}x{D.M}, config says {cfg.n}x{cfg.M}")
    r = cfg.r
    c2_max = max(cfg.c2(e) for e in cfg.estimators)
    rho = cfg.rho if cfg.rho > 0 else cfg.rho_multiple * c2_max * r
    if cfg.suite == "thm2" and cfg.s > 0:
        for e in cfg.estimators:
            c1 = cfg.c1_multiple * cfg.c2(e)
            if not rho > c1 * r:
                raise GateError(
                    f"minimum-signal gate failed for {e}: rho = {rho:.6g} must exceed "
                    f"c1 r = {c1 * r:.6g}", EXIT_SIGNAL_GATE)
    if cfg.suite == "thm3" and D.c_prime > cfg.c_prime_cap:
        raise GateError(
            f"row-energy gate failed: (1/n) sum_i max_j X_ij^2 = {D.c_prime:.6g} exceeds "
            f"c_prime_cap = {cfg.c_prime_cap}", EXIT_ROW_ENERGY_GATE)
    return Setup(config=cfg, design=D, design_seed_used=seed_used, r=r, rho=rho)


def probe_orders(M, k, seed):
    """Identity, reversed, then seeded random permutations."""
    orders = [tuple(range(M)), tuple(range(M - 1, -1, -1))]
    rng = stream(seed, Role.ORDER)
    while len(orders) < k:
        orders.append(tuple(int(j) for j in rng.permutation(M)))
    return orders[:k]


def _solve_family(estimator, setup, y, seed):
    cfg = setup.config
    D, r = setup.design, setup.r
    orders = probe_orders(D.M, cfg.probes, seed)
    sols = []
    for i, order in enumerate(orders):
        if estimator == "lasso":
            theta0 = None
            if i >= 2:
                scale = float(np.max(np.abs(D.XT @ y))) / D.n
                theta0 = stream(seed + i, Role.ORDER).uniform(-scale, scale, size=D.M)
            sol = lasso_fit(D, y, r, tol=cfg.lasso_tol or None, max_iter=cfg.lasso_max_iter,
                            coordinate_order=order, theta0=theta0)
            sols.append(sol.theta)
        else:
            sol = dantzig_fit(D, y, r, variable_order=order, max_pivots=cfg.max_pivots)
            if sol.lp_status != OPTIMAL:
                raise ConvergenceError(f"dantzig LP status {sol.lp_status}", residual=math.nan)
            sols.append(sol.theta)
    return sols


def _tol(x):
    return DIAG_RTOL * (1.0 + abs(x))


def run_trial(setup, trial, trial_seed=None):
    """One replicate; returns a TrialRecord per estimator."""
    cfg = setup.config
    D, r = setup.design, setup.r
    seed = cfg.base_seed + trial if trial_seed is None else trial_seed
    pattern = [1.0 if ch == "+" else -1.0 for ch in cfg.signs] if cfg.signs else None
    target = gen_target(D.M, cfg.s, setup.rho, pattern, seed)
    inst = synthesize(D, target, cfg.noise_model, seed, noiseless=cfg.noiseless)
    z = D.XT @ inst.W / D.n
    z_inf = float(np.max(np.abs(z)))
    event_A = z_inf <= r / 2.0
    theta_star = target.theta
    supp = np.zeros(D.M, dtype=bool)
    supp[list(target.support)] = True
    star_signs = target.signs

    records = []
    for est in cfg.estimators:
        c0 = ESTIMATOR_C0[est]
        c2 = cfg.c2(est)
        bound = c2 * r
        c1 = cfg.c1_multiple * c2
        a3 = target.s == 0 or target.rho > c1 * r
        rec = TrialRecord(trial=trial, seed=seed, estimator=est, status="ok", event_A=event_A,
                          z_inf=z_inf, r=r, c2=c2, bound_c2r=bound, assumption3_ok=a3)
        try:
            sols = _solve_family(est, setup, inst.Y, seed)
        except (ConvergenceError, IterationLimitError, SingularBasisError) as exc:
            rec.status = "failed"
            rec.failure = type(exc).__name__
            records.append(rec)
            continue

        l1_cap = l1_error_bound(r, c0, cfg.alpha, target.s)
        sup_errs, l1_errs, slacks = [], [], []
        cone, l1ok, signs_ok = True, True, True
        for th in sols:
            delta = th - theta_star
            sup_errs.append(float(np.max(np.abs(delta))))
            l1 = float(np.sum(np.abs(delta)))
            l1_errs.append(l1)
            on = float(np.sum(np.abs(delta[supp])))
            off = float(np.sum(np.abs(delta[~supp])))
            cone &= off <= c0 * on + _tol(c0 * on)
            l1ok &= l1 <= l1_cap + _tol(l1_cap)
            signs_ok &= bool(np.array_equal(sign_vector(apply_threshold(th, bound)), star_signs))
            slacks.append(dantzig_feasibility(D, inst.Y, th, r)[1])
        rec.supnorm_err = max(sup_errs)
        rec.l1_err = max(l1_errs)
        rec.within_bound = rec.supnorm_err <= bound
        rec.cone_ok = cone
        rec.l1_bound_ok = l1ok
        rec.sign_ok = signs_ok
        rec.min_constraint_slack = min(slacks)
        rec.probe_spread = max(float(np.max(np.abs(a - b))) for a in sols for b in sols)
        rec.n_probes = len(sols)

        if cfg.strict:
            if event_A and not (rec.within_bound and rec.cone_ok and rec.l1_bound_ok):
                raise ImplicationViolation(
                    f"trial {trial} ({est}): good event holds but within_bound={rec.within_bound}, "
                    f"cone_ok={rec.cone_ok}, l1_bound_ok={rec.l1_bound_ok}")
            if rec.within_bound and a3 and not rec.sign_ok:
                raise ImplicationViolation(
                    f"trial {trial} ({est}): sup-norm bound and signal gate hold "
                    "but thresholded signs differ")
        records.append(rec)
    return records


def wilson(successes, n, z=Z95):
    """Wilson score interval; returns (lower, upper, half_width)."""
    if n == 0:
        return 0.0, 1.0, 0.5
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return max(0.0, centre - half), min(1.0, centre + half), half


@dataclass
class ExperimentSummary:
    trials: int
    record: dict
    rows: list = field(repr=False)
    wall_clock_s: float = 0.0  # not persisted; files must be reproducible byte for byte

    def estimator(self, name):
        return self.record["estimators"][name]

    @property
    def freq_event_A(self):
        return self.record["freq_event_A"]


# per-worker state for the process pool
_WORKER_SETUP = None


def _worker_init(cfg, design_X):
    global _WORKER_SETUP
    _WORKER_SETUP = prepare(cfg, DesignMatrix.from_array(design_X))


def _worker_trial(trial):
    return run_trial(_WORKER_SETUP, trial)


def _run_trials(setup):
    cfg = setup.config
    idx = range(cfg.trials)
    if cfg.workers <= 1:
        batches = [run_trial(setup, i) for i in idx]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers, initializer=_worker_init,
                                 initargs=(cfg, np.array(setup.design.X))) as pool:
            batches = list(pool.map(_worker_trial, idx, chunksize=max(1, cfg.trials // (4 * cfg.workers))))
    rows = [rec for batch in batches for rec in batch]
    rows.sort(key=lambda rec: (rec.trial, cfg.estimators.index(rec.estimator)))
    return rows


def _aggregate(setup, rows):
    cfg = setup.config
    out = {}
    failed_total = 0
    for est in cfg.estimators:
        mine = [r for r in rows if r.estimator == est]
        ok = [r for r in mine if r.status == "ok"]
        failed = len(mine) - len(ok)
        failed_total += failed
        n_ok = len(ok)
        stats = {"trials_ok": n_ok, "trials_failed": failed, "c2": cfg.c2(est),
                 "bound_c2r": cfg.c2(est) * setup.r}
        for key in ("within_bound", "sign_ok", "cone_ok", "l1_bound_ok"):
            hits = sum(getattr(r, key) for r in ok)
            lo, hi, half = wilson(hits, n_ok)
            lo1, _, _ = wilson(hits, n_ok, Z95_ONE_SIDED)
            stats[f"freq_{key}"] = hits / n_ok if n_ok else math.nan
            stats[f"ci_{key}"] = [lo, hi]
            stats[f"ci_half_{key}"] = half
            stats[f"lower95_one_sided_{key}"] = lo1
        stats["max_supnorm_err"] = max((r.supnorm_err for r in ok), default=math.nan)
        stats["max_probe_spread"] = max((r.probe_spread for r in ok), default=math.nan)
        out[est] = stats
    return out, failed_total


def _summary_record(setup, rows, extra=None):
    cfg = setup.config
    D = setup.design
    n_trials = cfg.trials
    events = sum(r.event_A for r in rows if r.estimator == cfg.estimators[0])
    lo, hi, half = wilson(events, n_trials)
    estimators, failed_total = _aggregate(setup, rows)
    if failed_total > MAX_FAILED_FRACTION * n_trials * len(cfg.estimators):
        raise ExperimentError(
            f"{failed_total} failed solver runs out of {n_trials * len(cfg.estimators)} "
            f"(limit {MAX_FAILED_FRACTION:.0%})")
    floor = None
    if cfg.regime == "gaussian":
        floor = 1.0 - cfg.M ** (1.0 - cfg.A ** 2 / 8.0)
        for stats in estimators.values():
            # one-sided: the observed frequency must not sit significantly below the floor
            stats["consistent_with_floor"] = stats["ci_within_bound"][1] >= floor
    rep = coherence(D, cfg.alpha)
    rec = {
        "version": __version__,
        "suite": cfg.suite,
        "config": persisted_echo(cfg),
        "trials": n_trials,
        "r": setup.r,
        "rho": setup.rho,
        "design": {"seed_used": setup.design_seed_used, **rep.to_dict()},
        "freq_event_A": events / n_trials,
        "ci_event_A": [lo, hi],
        "ci_half_event_A": half,
        "probability_floor": floor,
        "estimators": estimators,
        "failed_runs": failed_total,
        "implication_violations": 0,
    }
    if extra:
        rec.update(extra)
    return rec


def write_csv(path, rows, cfg):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(rows_to_csv(rows, cfg))


def rows_to_csv(rows, cfg):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    digest = config_digest(cfg)
    for rec in rows:
        d = asdict(rec)
        w.writerow([_fmt(d[c]) for c in CSV_COLUMNS[:-2]] + [__version__, digest])
    return buf.getvalue()


def summary_line(record):
    return json.dumps(record, sort_keys=True, allow_nan=True) + "\n"


def run_experiment(cfg, design=None):
    """Run ``cfg.trials`` replicates with seeds ``base_seed + i``.

    Writes the per-trial CSV and the JSON-lines summary when the config names
    output paths. For the ``thm3`` suite the same seeds are replayed over
    ``delta_grid`` and the per-delta frequencies are added to the summary.
    """
    t0 = time.perf_counter()
    setup = prepare(cfg, design)
    rows = _run_trials(setup)
    extra = None
    if cfg.suite == "thm3":
        extra = {"delta_grid": delta_sweep(cfg, setup.design, rows)}
    record = _summary_record(setup, rows, extra)
    if cfg.out_csv:
        write_csv(cfg.out_csv, rows, cfg)
    if cfg.out_summary:
        with open(cfg.out_summary, "w", encoding="utf-8") as fh:
            fh.write(summary_line(record))
    return ExperimentSummary(trials=cfg.trials, record=record, rows=rows,
                             wall_clock_s=time.perf_counter() - t0)


def delta_sweep(cfg, design, base_rows=None):
    """freq_within_bound per estimator for each delta, replaying the same seeds."""
    grid = []
    for delta in cfg.delta_grid:
        if base_rows is not None and delta == cfg.delta:
            rows = base_rows
            r = cfg.r
        else:
            sub = cfg.replace(delta=float(delta), out_csv="", out_summary="")
            setup = prepare(sub, design)
            rows = _run_trials(setup)
            r = setup.r
        entry = {"delta": float(delta), "r": r}
        for est in cfg.estimators:
            ok = [x for x in rows if x.estimator == est and x.status == "ok"]
            entry[f"freq_within_bound_{est}"] = (
                sum(x.within_bound for x in ok) / len(ok) if ok else math.nan)
        first = [x for x in rows if x.estimator == cfg.estimators[0]]
        entry["freq_event_A"] = sum(x.event_A for x in first) / len(first)
        grid.append(entry)
    grid.sort(key=lambda e: e["delta"])
    return grid


def delta_trend_monotone(grid, estimator):
    vals = [g[f"freq_within_bound_{estimator}"] for g in grid]
    return all(b >= a for a, b in zip(vals, vals[1:]))


def theorem3_suite(cfg, design=None):
    if cfg.suite != "thm3" or cfg.regime != "general_noise":
        raise InvalidParameterError("theorem3_suite needs suite='thm3' and regime='general_noise'")
    return run_experiment(cfg, design)


@dataclass(frozen=True)
class Lemma3Result:
    empirical_moment: float
    structural_bound_without_constant: float
    ratio: float
    reps: int


def lemma3_diagnostic(D, noise, reps, seed):
    """Monte Carlo E[max_j Z_j^2] against ln M * sigma^2 * sum_i max_j X_ij^2 / n^2.

    The ratio estimates the unnamed absolute constant in the moment bound.
    """
    if D.M < 3:
        raise InvalidParameterError(f"moment bound needs M >= 3, got M={D.M}")
    if reps < 100:
        raise InvalidParameterError(f"reps must be >= 100 for a usable estimate, got {reps}")
    from .datagen import draw_noise

    n = D.n
    total = 0.0
    batch = 1000
    done = 0
    k = 0
    while done < reps:
        b = min(batch, reps - done)
        # one noise stream per batch keeps memory flat and results seed-determined
        W = np.stack([draw_noise(noise, n, seed * 1_000_003 + k * batch + i) for i in range(b)])
        Z = W @ D.X / n
        total += float(np.sum(np.max(Z * Z, axis=1)))
        done += b
        k += 1
    emp = total / reps
    structural = math.log(D.M) * noise.sigma ** 2 * float(np.sum(np.max(D.X ** 2, axis=1))) / n ** 2
    return Lemma3Result(emp, structural, emp / structural, reps)
