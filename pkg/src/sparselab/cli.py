"""Command-line front end.

Exit codes (stable):
    0  success
    1  usage or input error
    2  coherence gate failed (design does not admit the requested sparsity)
    3  minimum-signal gate failed (rho <= c1 r)
    4  row-energy gate failed ((1/n) sum_i max_j X_ij^2 above the cap)
    5  solver failure (including more than 5% failed trials in an experiment)
    6  a deterministic implication was violated (indicates a bug)
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .config import dump_config, parse_config
from .datagen import NOISE_FAMILIES, NoiseModel, gen_target, load_instance, save_instance, synthesize
from .dantzig import dantzig_fit
from .design import (
    C0_DANTZIG, C0_LASSO, GENERATORS, DesignMatrix, coherence, gen_low_coherence, kappa_probe,
)
from .errors import (
    CertificationError, ConvergenceError, ExperimentError, GateError, ImplicationViolation,
    IterationLimitError, SingularBasisError, SparselabError,
)
from .lasso import dantzig_feasibility, default_tol, kkt_check, lasso_fit
from .linalg import read_matrix, write_matrix
from .montecarlo import (
    EXIT_COHERENCE_GATE, EXIT_SOLVER, lemma3_diagnostic, run_experiment,
)
from .simplex import OPTIMAL

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IMPLICATION = 6


class _Parser(argparse.ArgumentParser):
    # argparse would exit 2, which is reserved for the coherence gate
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(obj, out=None):
    text = json.dumps(obj, sort_keys=True, indent=1) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_design(path):
    return DesignMatrix.from_array(read_matrix(path))


def cmd_gen_design(a):
    if a.gen == "low_coherence":
        if a.mu_max is None:
            raise SparselabError("--mu-max is required for --gen low_coherence")
        D = gen_low_coherence(a.n, a.M, a.mu_max, a.seed)
    else:
        D = GENERATORS[a.gen](a.n, a.M, a.seed)
    write_matrix(a.out, D.X)
    return EXIT_OK


def cmd_certify(a):
    D = _load_design(a.inp)
    report = coherence(D, a.alpha).to_dict()
    report["version"] = __version__
    if a.s is not None:
        c0s = {"lasso": C0_LASSO, "dantzig": C0_DANTZIG}
        report["requested_s"] = a.s
        report["admits"] = {k: coherence(D, a.alpha).admits(a.s, c0) for k, c0 in c0s.items()}
    _emit(report)
    if a.s is not None and not all(report["admits"].values()):
        print(f"coherence gate failed: s = {a.s} exceeds the admissible sparsity", file=sys.stderr)
        return EXIT_COHERENCE_GATE
    return EXIT_OK


def cmd_synth(a):
    D = _load_design(a.design)
    pattern = [1.0 if ch == "+" else -1.0 for ch in a.signs] if a.signs else None
    target = gen_target(D.M, a.s, a.rho, pattern, a.seed)
    noise = NoiseModel(a.noise, a.sigma, a.df if a.noise == "student_t" else None)
    save_instance(a.out, synthesize(D, target, noise, a.seed, noiseless=a.noiseless))
    return EXIT_OK


def cmd_solve(a):
    inst = load_instance(a.inp)
    D, y = inst.design, inst.Y
    order = [int(j) for j in a.order.split(",")] if a.order else None
    try:
        if a.estimator == "lasso":
            sol = lasso_fit(D, y, a.r, tol=a.tol, coordinate_order=order)
            out = sol.to_dict()
            out["kkt_ok"] = kkt_check(D, y, sol.theta, a.r, a.tol or default_tol(D, y))[0]
            out["constraint_slack"] = dantzig_feasibility(D, y, sol.theta, a.r)[1]
        else:
            sol = dantzig_fit(D, y, a.r, variable_order=order)
            out = sol.to_dict()
    except (ConvergenceError, IterationLimitError, SingularBasisError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out["version"] = __version__
    _emit(out, a.out)
    if a.estimator == "dantzig" and sol.lp_status != OPTIMAL:
        print(f"solver failure: LP status {sol.lp_status}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _overrides(a):
    ov = {
        "suite": a.suite, "trials": a.trials, "base_seed": a.base_seed,
        "out_csv": a.out_csv, "out_summary": a.out_summary, "workers": a.workers,
    }
    for item in a.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise SparselabError(f"--set expects KEY=VALUE, got {item!r}")
        ov[key.strip()] = value.strip()
    return ov


def cmd_experiment(a):
    cfg = parse_config(a.config, _overrides(a))
    if a.print_config:
        sys.stdout.write(dump_config(cfg))
        return EXIT_OK
    summary = run_experiment(cfg)
    if not cfg.out_summary:
        sys.stdout.write(json.dumps(summary.record, sort_keys=True) + "\n")
    print(f"{summary.trials} trials in {summary.wall_clock_s:.1f} s", file=sys.stderr)
    return EXIT_OK


def cmd_kappa_probe(a):
    D = _load_design(a.inp)
    res = kappa_probe(D, a.s, a.c0, a.alpha, a.samples, a.seed)
    _emit({
        "version": __version__, "s": a.s, "c0": a.c0, "alpha": a.alpha,
        "samples": res.samples, "min_ratio_found": res.min_ratio_found,
        "sampled_min": res.sampled_min, "analytic_bound": res.analytic_bound,
        "J": list(res.J), "bound_respected": res.min_ratio_found >= res.analytic_bound - 1e-9,
    })
    return EXIT_OK


def cmd_lemma3(a):
    D = _load_design(a.inp)
    noise = NoiseModel(a.noise, a.sigma, a.df if a.noise == "student_t" else None)
    res = lemma3_diagnostic(D, noise, a.reps, a.seed)
    _emit({
        "version": __version__, "reps": res.reps, "noise": noise.to_dict(),
        "empirical_moment": res.empirical_moment,
        "structural_bound_without_constant": res.structural_bound_without_constant,
        "ratio": res.ratio,
    })
    return EXIT_OK


def build_parser():
    p = _Parser(prog="sparselab", description="Sup-norm experiments for the Lasso and Dantzig selector.")
    p.add_argument("--version", action="version", version=f"sparselab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-design", help="write a column-normalized random design")
    g.add_argument("--gen", choices=sorted(GENERATORS) + ["low_coherence"], default="rademacher")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--M", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mu-max", type=float, default=None, help="coherence cap for low_coherence")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_design)

    c = sub.add_parser("certify", help="coherence report for a design file")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--alpha", type=float, default=1.2)
    c.add_argument("--s", type=int, default=None, help="exit 2 unless both estimators admit s")
    c.set_defaults(func=cmd_certify)

    y = sub.add_parser("synth", help="write an instance bundle for a design")
    y.add_argument("--design", required=True)
    y.add_argument("--s", type=int, default=1)
    y.add_argument("--rho", type=float, default=1.0)
    y.add_argument("--signs", default="")
    y.add_argument("--noise", choices=NOISE_FAMILIES, default="gaussian")
    y.add_argument("--sigma", type=float, default=1.0)
    y.add_argument("--df", type=float, default=3.0)
    y.add_argument("--noiseless", action="store_true")
    y.add_argument("--seed", type=int, default=0)
    y.add_argument("--out", required=True)
    y.set_defaults(func=cmd_synth)

    s = sub.add_parser("solve", help="solve one instance bundle")
    s.add_argument("--estimator", choices=("lasso", "dantzig"), required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--order", default="", help="comma-separated coordinate order")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("experiment", help="run a Monte Carlo suite")
    e.add_argument("--config", default=None)
    e.add_argument("--suite", choices=("thm1", "thm2", "thm3"), default=None)
    e.add_argument("--trials", type=int, default=None)
    e.add_argument("--base-seed", type=int, default=None)
    e.add_argument("--out-csv", default=None)
    e.add_argument("--out-summary", default=None)
    e.add_argument("--workers", type=int, default=None)
    e.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    e.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    e.set_defaults(func=cmd_experiment)

    k = sub.add_parser("kappa-probe", help="sample the restricted-eigenvalue ratio")
    k.add_argument("--in", dest="inp", required=True)
    k.add_argument("--s", type=int, required=True)
    k.add_argument("--c0", type=int, choices=(C0_DANTZIG, C0_LASSO), required=True)
    k.add_argument("--alpha", type=float, required=True)
    k.add_argument("--samples", type=int, default=10_000)
    k.add_argument("--seed", type=int, default=0)
    k.set_defaults(func=cmd_kappa_probe)

    m = sub.add_parser("lemma3", help="estimate the constant in the max-moment bound")
    m.add_argument("--in", dest="inp", required=True)
    m.add_argument("--noise", choices=NOISE_FAMILIES, default="gaussian")
    m.add_argument("--sigma", type=float, default=1.0)
    m.add_argument("--df", type=float, default=3.0)
    m.add_argument("--reps", type=int, default=10_000)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_lemma3)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GateError as exc:
        print(str(exc), file=sys.stderr)
        return exc.exit_code
    except CertificationError as exc:
        print(f"coherence gate failed: {exc}", file=sys.stderr)
        return EXIT_COHERENCE_GATE
    except (ConvergenceError, IterationLimitError, SingularBasisError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ImplicationViolation as exc:
        print(f"implication violated: {exc}", file=sys.stderr)
        return EXIT_IMPLICATION
    except ExperimentError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (SparselabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
