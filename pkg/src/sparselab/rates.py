"""Regularization levels, the sup-norm constant, thresholding and sign rules."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

A_MIN = 2.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class RateSpec:
    regime: str  # "gaussian" or "general_noise"
    sigma: float
    n: int
    M: int
    A: float | None = None
    delta: float | None = None

    @property
    def r(self):
        return compute_r(self)


def compute_r(spec):
    """Regularization level, natural log throughout.

    gaussian:       r = A sigma sqrt(ln M / n),        A > 2 sqrt 2
    general_noise:  r = sigma sqrt((ln M)^(1+delta) / n), delta > 0
    """
    if spec.M < 3:
        raise InvalidParameterError(f"M must be >= 3 so that ln M > 1, got M={spec.M}")
    if spec.n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {spec.n}")
    if not spec.sigma > 0:
        raise InvalidParameterError(f"sigma must be > 0, got {spec.sigma}")
    logM = math.log(spec.M)
    if spec.regime == "gaussian":
        if spec.A is None or not spec.A > A_MIN:
            raise InvalidParameterError(
                f"the gaussian rate requires A > 2*sqrt(2) = {A_MIN:.6f}; got A={spec.A}"
            )
        return spec.A * spec.sigma * math.sqrt(logM / spec.n)
    if spec.regime == "general_noise":
        if spec.delta is None or not spec.delta > 0:
            raise InvalidParameterError(f"the general-noise rate requires delta > 0; got delta={spec.delta}")
        return spec.sigma * math.sqrt(logM ** (1.0 + spec.delta) / spec.n)
    raise InvalidParameterError(f"unknown regime {spec.regime!r}")


def compute_c2(alpha, c0):
    """Sup-norm constant (3/2)(1 + (1+c0)^2 / ((1+2c0)(alpha-1)))."""
    if not alpha > 1.0:
        raise InvalidParameterError(f"alpha must exceed 1, got {alpha}")
    return 1.5 * (1.0 + (1.0 + c0) ** 2 / ((1.0 + 2.0 * c0) * (alpha - 1.0)))


def l1_error_bound(r, c0, alpha, s):
    """|Delta|_1 <= (3/2) r (1+c0)^2 alpha/(alpha-1) s on the good event."""
    return 1.5 * r * (1.0 + c0) ** 2 * (alpha / (alpha - 1.0)) * s


def gaussian_probability_floor(M, A):
    return 1.0 - M ** (1.0 - A * A / 8.0)


@dataclass(frozen=True)
class ConstantsBundle:
    c0: int
    alpha: float
    r: float
    c2: float
    c1: float
    threshold: float
    probability_floor: float | None  # gaussian regime only

    def to_dict(self):
        return {
            "c0": self.c0,
            "alpha": self.alpha,
            "r": self.r,
            "c2": self.c2,
            "c1": self.c1,
            "threshold": self.threshold,
            "probability_floor": self.probability_floor,
        }


def constants(spec, alpha, c0, c1_multiple=2.2):
    r = compute_r(spec)
    c2 = compute_c2(alpha, c0)
    floor = gaussian_probability_floor(spec.M, spec.A) if spec.regime == "gaussian" else None
    return ConstantsBundle(
        c0=c0, alpha=float(alpha), r=r, c2=c2, c1=c1_multiple * c2,
        threshold=c2 * r, probability_floor=floor,
    )


def apply_threshold(theta, threshold):
    """Keep entries with |theta_j| > threshold (strictly); zero the rest."""
    if not threshold > 0:
        raise InvalidParameterError(f"threshold must be > 0, got {threshold}")
    theta = np.asarray(theta, dtype=np.float64)
    return np.where(np.abs(theta) > threshold, theta, 0.0)


def sign_vector(theta):
    """Componentwise sign in {-1, 0, 1}; -0.0 maps to 0."""
    theta = np.asarray(theta, dtype=np.float64)
    return (theta > 0).astype(np.int8) - (theta < 0).astype(np.int8)


def assumption3_gate(target, c1, r):
    """True iff rho > c1 r; vacuously true for an empty support."""
    if not c1 > 0:
        raise InvalidParameterError(f"c1 must be > 0, got {c1}")
    if target.s == 0:
        return True
    return target.rho > c1 * r
