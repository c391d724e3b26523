"""Lasso by cyclic coordinate descent, certified by the subdifferential conditions.

The objective is (1/n)|y - X theta|_2^2 + 2 r |theta|_1. With unit Gram
diagonal each coordinate has the closed-form minimizer
``soft_threshold(theta_j + x_j^T(y - X theta)/n, r)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import ConvergenceError, DimensionError, InvalidParameterError

REFRESH_EVERY = 100
FEASIBILITY_REL_TOL = 1e-7
_MONOTONE_SLACK = 1e-12


def soft_threshold(z, t):
    if t < 0:
        raise InvalidParameterError(f"threshold must be >= 0, got {t}")
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@dataclass(frozen=True)
class LassoSolution:
    theta: np.ndarray
    r: float
    iterations: int
    kkt_residual: float
    objective: float
    coordinate_order: tuple
    objective_history: tuple = field(repr=False, default=())

    def to_dict(self):
        return {
            "estimator": "lasso",
            "theta": self.theta.tolist(),
            "r": self.r,
            "iterations": self.iterations,
            "kkt_residual": self.kkt_residual,
            "objective": self.objective,
            "l1_norm": float(np.sum(np.abs(self.theta))),
        }


def objective(X, y, theta, r):
    n = X.shape[0]
    res = y - X @ theta
    return float(res @ res) / n + 2.0 * r * float(np.sum(np.abs(theta)))


def _kkt_residual_from_g(g, theta, r):
    nz = theta != 0.0
    viol = np.where(nz, np.abs(g - np.sign(theta) * r), np.maximum(np.abs(g) - r, 0.0))
    return float(np.max(viol))


def kkt_check(D, y, theta, r, tol):
    """Stationarity violation of ``theta`` for the Lasso at level ``r``.

    Returns ``(passes, residual)`` with residual the max over coordinates of
    |g_j - sign(theta_j) r| (theta_j != 0) or (|g_j| - r)_+ (theta_j == 0),
    where g = X^T(y - X theta)/n.
    """
    X = getattr(D, "X", D)
    theta = linalg.as_vector(theta, "theta")
    g = linalg.residual_correlations(X, y, theta)
    res = _kkt_residual_from_g(g, theta, r)
    return res <= tol, res


def dantzig_feasibility(D, y, theta, r):
    """Slack r - |X^T(y - X theta)/n|_inf of the Dantzig constraint."""
    X = getattr(D, "X", D)
    g = linalg.residual_correlations(X, y, theta)
    slack = r - float(np.max(np.abs(g)))
    return slack >= -FEASIBILITY_REL_TOL * (1.0 + r), slack


def default_tol(D, y):
    return 1e-8 * (1.0 + float(np.max(np.abs(D.X.T @ y))) / D.n)


def _polish(D, y, theta, r, kkt):
    """One exact solve of Psi_AA theta_A = b_A - r sign(theta_A) on the support.

    Coordinate descent stops at the KKT tolerance; this step removes the
    remaining stationarity error when the support and signs are already right.
    It is kept only if the signs survive and the KKT residual and objective
    do not get worse.
    """
    A = np.flatnonzero(theta)
    if A.size == 0 or A.size > D.n:
        return theta, kkt
    sgn = np.sign(theta[A])
    b = D.XT[A] @ y / D.n
    try:
        sol = np.linalg.solve(D.psi[np.ix_(A, A)], b - r * sgn)
    except np.linalg.LinAlgError:
        return theta, kkt
    if np.any(np.sign(sol) != sgn):
        return theta, kkt
    cand = np.zeros_like(theta)
    cand[A] = sol
    g = D.XT @ (y - D.X @ cand) / D.n
    cand_kkt = _kkt_residual_from_g(g, cand, r)
    old_obj = objective(D.X, y, theta, r)
    if cand_kkt < kkt and objective(D.X, y, cand, r) <= old_obj + _MONOTONE_SLACK * (1.0 + abs(old_obj)):
        return cand, cand_kkt
    return theta, kkt


def lasso_fit(D, y, r, tol=None, max_iter=100_000, coordinate_order=None, theta0=None):
    """Cyclic coordinate descent until the KKT residual drops to ``tol``.

    ``D`` must have unit Gram diagonal (any DesignMatrix does). The residual
    y - X theta is updated in place after each coordinate move and rebuilt
    from scratch every ``REFRESH_EVERY`` sweeps.
    """
    y = linalg.as_vector(y, "y")
    n, M = D.n, D.M
    if y.shape[0] != n:
        raise DimensionError(f"y has length {y.shape[0]}, design has {n} rows")
    if not r > 0:
        raise InvalidParameterError(f"r must be > 0, got {r}")
    if tol is None:
        tol = default_tol(D, y)
    if not tol > 0:
        raise InvalidParameterError(f"tol must be > 0, got {tol}")
    if coordinate_order is None:
        order = tuple(range(M))
    else:
        order = tuple(int(j) for j in coordinate_order)
        if sorted(order) != list(range(M)):
            raise InvalidParameterError("coordinate_order must be a permutation of range(M)")

    X, XT = D.X, D.XT
    theta = np.zeros(M) if theta0 is None else linalg.as_vector(theta0, "theta0").copy()
    if theta.shape[0] != M:
        raise DimensionError("theta0 has the wrong length")
    res = y - X @ theta
    inv_n = 1.0 / n
    r = float(r)

    def current_objective():
        return float(res @ res) * inv_n + 2.0 * r * float(np.sum(np.abs(theta)))

    history = [current_objective()]
    kkt = _kkt_residual_from_g(XT @ res * inv_n, theta, r)
    sweeps = 0
    while kkt > tol:
        if sweeps >= max_iter:
            sol = LassoSolution(theta, r, sweeps, kkt, history[-1], order, tuple(history))
            raise ConvergenceError(
                f"lasso did not reach KKT residual {tol:.3e} in {max_iter} sweeps "
                f"(residual {kkt:.3e})",
                residual=kkt, solution=sol,
            )
        for j in order:
            xj = XT[j]
            old = theta[j]
            new = soft_threshold(old + float(xj @ res) * inv_n, r)
            if new != old:
                res -= (new - old) * xj
                theta[j] = new
        sweeps += 1
        if sweeps % REFRESH_EVERY == 0:
            res = y - X @ theta
        obj = current_objective()
        if obj > history[-1] + _MONOTONE_SLACK * (1.0 + abs(history[-1])):
            raise RuntimeError(
                f"lasso objective increased at sweep {sweeps}: {history[-1]!r} -> {obj!r}"
            )
        history.append(obj)
        kkt = _kkt_residual_from_g(XT @ res * inv_n, theta, r)

    # report certificates against a freshly computed residual
    res = y - X @ theta
    kkt = _kkt_residual_from_g(XT @ res * inv_n, theta, r)
    if kkt > tol:
        # drift between incremental and fresh residual; one more pass settles it
        return lasso_fit(D, y, r, tol, max_iter - sweeps if max_iter > sweeps else 1,
                         order, theta)
    theta, kkt = _polish(D, y, theta, r, kkt)
    return LassoSolution(
        theta=theta,
        r=r,
        iterations=sweeps,
        kkt_residual=kkt,
        objective=objective(X, y, theta, r),
        coordinate_order=order,
        objective_history=tuple(history),
    )

