"""Synthetic instances of the sparse linear model Y = X theta* + W."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .design import DesignMatrix
from .errors import DimensionError, InvalidParameterError
from .rates import sign_vector
from .rng import Role, stream

NOISE_FAMILIES = ("gaussian", "student_t", "rademacher")


@dataclass(frozen=True)
class SparseTarget:
    theta: np.ndarray
    support: tuple
    rho: float  # min |theta_j| over the support; inf when s == 0
    signs: np.ndarray = field(repr=False)

    @property
    def s(self):
        return len(self.support)

    @property
    def M(self):
        return self.theta.shape[0]

    @classmethod
    def from_vector(cls, theta):
        theta = linalg.as_vector(theta, "theta")
        support = tuple(int(j) for j in np.flatnonzero(theta))
        rho = float(np.min(np.abs(theta[list(support)]))) if support else math.inf
        return cls(theta=theta, support=support, rho=rho, signs=sign_vector(theta))


def gen_target(M, s, rho=1.0, sign_pattern=None, seed=0, support=None):
    """Draw an s-sparse target with magnitudes uniform on [rho, 2 rho].

    ``support`` and ``sign_pattern`` override the random choices; the sign
    pattern has one entry per support index.
    """
    if not 0 <= s <= M:
        raise InvalidParameterError(f"need 0 <= s <= M, got s={s}, M={M}")
    if s >= 1 and not rho > 0:
        raise InvalidParameterError(f"minimum magnitude rho must be > 0, got {rho}")
    theta = np.zeros(M)
    if s == 0:
        return SparseTarget.from_vector(theta)
    if support is None:
        support = np.sort(stream(seed, Role.SUPPORT).choice(M, size=s, replace=False))
    else:
        support = np.asarray(sorted(support), dtype=int)
        if support.size != s or len(set(support.tolist())) != s:
            raise InvalidParameterError("support must list s distinct indices")
    mags = stream(seed, Role.MAGNITUDE).uniform(rho, 2.0 * rho, size=s)
    if sign_pattern is None:
        signs = stream(seed, Role.SIGN).choice((-1.0, 1.0), size=s)
    else:
        signs = np.asarray(sign_pattern, dtype=np.float64)
        if signs.shape != (s,) or not np.all(np.abs(signs) == 1.0):
            raise InvalidParameterError("sign_pattern must hold s entries of +1/-1")
    theta[support] = signs * mags
    return SparseTarget.from_vector(theta)


@dataclass(frozen=True)
class NoiseModel:
    family: str = "gaussian"
    sigma: float = 1.0
    df: float | None = None  # student_t only

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise InvalidParameterError(
                f"noise family must be one of {NOISE_FAMILIES}, got {self.family!r}"
            )
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InvalidParameterError(f"noise sigma must be > 0, got {self.sigma}")
        if self.family == "student_t":
            if self.df is None:
                object.__setattr__(self, "df", 3.0)
            if not self.df >= 3:
                raise InvalidParameterError(
                    f"student_t needs df >= 3 for a finite, rescalable variance; got {self.df}"
                )

    def to_dict(self):
        d = {"family": self.family, "sigma": self.sigma}
        if self.family == "student_t":
            d["df"] = self.df
        return d


def draw_noise(model, n, seed):
    """n i.i.d. zero-mean draws with variance sigma^2."""
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    rng = stream(seed, Role.NOISE)
    if model.family == "gaussian":
        return model.sigma * rng.standard_normal(n)
    if model.family == "rademacher":
        return model.sigma * rng.choice((-1.0, 1.0), size=n)
    df = model.df
    z = rng.standard_normal(n)
    chi2 = rng.chisquare(df, size=n)
    t = z / np.sqrt(chi2 / df)
    return model.sigma * math.sqrt((df - 2.0) / df) * t


@dataclass(frozen=True)
class Instance:
    design: DesignMatrix = field(repr=False)
    target: SparseTarget
    W: np.ndarray = field(repr=False)
    Y: np.ndarray = field(repr=False)
    seed: int
    noise: NoiseModel | None  # None for noiseless debug instances


def synthesize(D, target, noise, seed, noiseless=False):
    if target.M != D.M:
        raise DimensionError(f"target has length {target.M}, design has {D.M} columns")
    W = np.zeros(D.n) if noiseless else draw_noise(noise, D.n, seed)
    Y = D.X @ target.theta + W
    return Instance(design=D, target=target, W=W, Y=Y, seed=int(seed),
                    noise=None if noiseless else noise)


DESIGN_FILE = "design.txt"
SIDECAR_FILE = "instance.json"


def save_instance(path, inst):
    """Write a bundle directory: the design in matrix-file format plus a JSON sidecar."""
    os.makedirs(path, exist_ok=True)
    linalg.write_matrix(os.path.join(path, DESIGN_FILE), inst.design.X)
    sidecar = {
        "theta_star": inst.target.theta.tolist(),
        "support": list(inst.target.support),
        "seed": inst.seed,
        "noise": None if inst.noise is None else inst.noise.to_dict(),
        "Y": inst.Y.tolist(),
        "W": inst.W.tolist(),
    }
    with open(os.path.join(path, SIDECAR_FILE), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_instance(path):
    D = DesignMatrix.from_array(linalg.read_matrix(os.path.join(path, DESIGN_FILE)))
    with open(os.path.join(path, SIDECAR_FILE), encoding="utf-8") as fh:
        meta = json.load(fh)
    target = SparseTarget.from_vector(meta["theta_star"])
    noise = NoiseModel(**meta["noise"]) if meta.get("noise") else None
    W = np.asarray(meta["W"], dtype=np.float64)
    Y = np.asarray(meta["Y"], dtype=np.float64)
    if Y.shape != (D.n,) or W.shape != (D.n,) or target.M != D.M:
        raise DimensionError(f"{path}: sidecar dimensions do not match the design")
    return Instance(design=D, target=target, W=W, Y=Y, seed=int(meta["seed"]), noise=noise)
