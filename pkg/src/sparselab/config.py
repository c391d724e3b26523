"""Experiment configuration: a flat TOML document with a strict schema.

Every key has a default; unknown keys are rejected with a did-you-mean hint.
Command-line flags override file values. Suites fill in their own defaults
(e.g. ``thm3`` switches to the general-noise regime with Student-t noise)
for keys the user did not set.
"""
from __future__ import annotations

import dataclasses
import difflib
import math
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .datagen import NOISE_FAMILIES, NoiseModel
from .design import C0_DANTZIG, C0_LASSO, GENERATORS
from .errors import InvalidParameterError
from .rates import A_MIN, RateSpec, compute_c2, compute_r

ESTIMATOR_C0 = {"lasso": C0_LASSO, "dantzig": C0_DANTZIG}
SUITES = ("thm1", "thm2", "thm3")

SUITE_DEFAULTS = {
    "thm1": {"regime": "gaussian", "noise": "gaussian"},
    "thm2": {"regime": "gaussian", "noise": "gaussian"},
    "thm3": {"regime": "general_noise", "noise": "student_t"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    suite: str = "thm1"
    # design
    generator: str = "rademacher"
    n: int = 4096
    M: int = 512
    design_seed: int = 1
    design_file: str = ""
    reseed_tries: int = 10
    # target
    s: int = 1
    rho: float = 0.0  # absolute minimum magnitude; 0 means use rho_multiple
    rho_multiple: float = 2.5  # rho = rho_multiple * c2 * r (largest c2 among estimators)
    signs: str = ""  # e.g. "+-+"; empty means random
    # noise
    noise: str = "gaussian"
    df: float = 3.0
    sigma: float = 1.0
    noiseless: bool = False
    # rates and constants
    regime: str = "gaussian"
    A: float = 4.0
    delta: float = 1.0
    delta_grid: tuple = (0.5, 1.0, 2.0)
    alpha: float = 1.2
    c1_multiple: float = 2.2
    c_prime_cap: float = 1.0
    # runner
    estimators: tuple = ("lasso", "dantzig")
    trials: int = 200
    base_seed: int = 0
    workers: int = 1
    probes: int = 3
    strict: bool = True
    out_csv: str = ""
    out_summary: str = ""
    # solver
    lasso_tol: float = 0.0  # 0 means scale-aware default
    lasso_max_iter: int = 100_000
    max_pivots: int = 50_000

    def __post_init__(self):
        validate(self)

    @property
    def rate_spec(self):
        return RateSpec(regime=self.regime, sigma=self.sigma, n=self.n, M=self.M,
                        A=self.A if self.regime == "gaussian" else None,
                        delta=self.delta if self.regime == "general_noise" else None)

    @property
    def r(self):
        return compute_r(self.rate_spec)

    @property
    def noise_model(self):
        return NoiseModel(self.noise, self.sigma, self.df if self.noise == "student_t" else None)

    def c0(self, estimator):
        return ESTIMATOR_C0[estimator]

    def c2(self, estimator):
        return compute_c2(self.alpha, ESTIMATOR_C0[estimator])

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["delta_grid"] = list(self.delta_grid)
        d["estimators"] = list(self.estimators)
        return d

    def echo(self):
        """Config plus every derived constant."""
        r = self.r
        d = self.to_dict()
        d["derived"] = {
            "r": r,
            "c2": {e: self.c2(e) for e in self.estimators},
            "threshold": {e: self.c2(e) * r for e in self.estimators},
            "c1": {e: self.c1_multiple * self.c2(e) for e in self.estimators},
        }
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _fail(key, requirement):
    raise InvalidParameterError(f"invalid config '{key}': {requirement}")


def validate(cfg):
    if cfg.suite not in SUITES:
        _fail("suite", f"must be one of {SUITES}")
    if cfg.generator not in (*GENERATORS, "file"):
        _fail("generator", f"must be one of {(*GENERATORS, 'file')}")
    if cfg.generator == "file" and not cfg.design_file:
        _fail("design_file", "required when generator = 'file'")
    if cfg.n < 1 or cfg.M < 3:
        _fail("M", "need n >= 1 and M >= 3 (ln M must exceed 1)")
    if not 0 <= cfg.s <= cfg.M:
        _fail("s", "sparsity must satisfy 0 <= s <= M")
    if cfg.rho < 0 or cfg.rho_multiple <= 0:
        _fail("rho", "rho must be >= 0 and rho_multiple > 0")
    if cfg.signs and (len(cfg.signs) != cfg.s or set(cfg.signs) - set("+-")):
        _fail("signs", "sign pattern must be s characters from '+-'")
    if cfg.noise not in NOISE_FAMILIES:
        _fail("noise", f"must be one of {NOISE_FAMILIES}")
    if not cfg.sigma > 0:
        _fail("sigma", "noise level sigma must be > 0")
    if cfg.noise == "student_t" and not cfg.df >= 3:
        _fail("df", "Student-t noise needs df >= 3 for a finite, rescalable variance")
    if cfg.regime not in ("gaussian", "general_noise"):
        _fail("regime", "must be 'gaussian' or 'general_noise'")
    if cfg.regime == "gaussian" and not cfg.A > A_MIN:
        _fail("A", f"the gaussian sup-norm bound requires A > 2*sqrt(2) = {A_MIN:.6f}, got {cfg.A}")
    if cfg.regime == "general_noise":
        if not cfg.delta > 0:
            _fail("delta", "the general-noise rate requires delta > 0")
        if any(not d > 0 for d in cfg.delta_grid):
            _fail("delta_grid", "every delta must be > 0")
    if not cfg.alpha > 1:
        _fail("alpha", "the coherence condition requires alpha > 1")
    if not cfg.c1_multiple > 2:
        _fail("c1_multiple", "sign recovery requires c1 > 2 c2, i.e. c1_multiple > 2")
    if not cfg.c_prime_cap > 0:
        _fail("c_prime_cap", "must be > 0")
    if not cfg.estimators or set(cfg.estimators) - set(ESTIMATOR_C0):
        _fail("estimators", f"choose from {tuple(ESTIMATOR_C0)}")
    if cfg.trials < 1:
        _fail("trials", "need at least one trial")
    if cfg.workers < 1 or cfg.probes < 1:
        _fail("workers", "workers and probes must be >= 1")
    if cfg.lasso_tol < 0 or cfg.lasso_max_iter < 1 or cfg.max_pivots < 1:
        _fail("lasso_tol", "solver limits must be positive")


def _coerce(key, value):
    f = _FIELDS[key]
    default = f.default
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(default, float):
            v = float(value)
            if not math.isfinite(v):
                raise ValueError
            return v
        if isinstance(default, tuple):
            items = value.split(",") if isinstance(value, str) else list(value)
            conv = float if key == "delta_grid" else str
            return tuple(conv(x.strip() if isinstance(x, str) else x) for x in items if x != "")
        return str(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"config '{key}': cannot interpret {value!r}") from None


def check_keys(keys):
    for key in keys:
        if key not in _FIELDS:
            hint = difflib.get_close_matches(key, list(_FIELDS), n=1)
            msg = f"unknown config key '{key}'"
            if hint:
                msg += f"; did you mean '{hint[0]}'?"
            raise InvalidParameterError(msg)


def parse_config(path=None, overrides=None):
    """Load a TOML config file (optional) and apply flag overrides."""
    raw = {}
    if path:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        nested = [k for k, v in raw.items() if isinstance(v, dict)]
        if nested:
            raise InvalidParameterError(f"config must be flat; found tables {nested}")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    check_keys(raw)
    values = {k: _coerce(k, v) for k, v in raw.items()}
    suite = values.get("suite", ExperimentConfig.suite)
    for k, v in SUITE_DEFAULTS.get(suite, {}).items():
        values.setdefault(k, v)
    return ExperimentConfig(**values)


def dump_config(cfg):
    """Flat TOML text for ``cfg`` (round-trips through parse_config)."""
    lines = []
    for k, v in cfg.to_dict().items():
        if isinstance(v, bool):
            lines.append(f"{k} = {'true' if v else 'false'}")
        elif isinstance(v, (int, float)):
            lines.append(f"{k} = {v!r}")
        elif isinstance(v, list):
            inner = ", ".join(repr(x) if not isinstance(x, str) else f'"{x}"' for x in v)
            lines.append(f"{k} = [{inner}]")
        else:
            lines.append(f'{k} = "{v}"')
    return "\n".join(lines) + "\n"

