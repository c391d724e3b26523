"""Dantzig selector as a linear program.

    min |theta|_1  s.t.  |X^T (y - X theta) / n|_inf <= r

Splitting theta = theta_plus - theta_minus gives 2M structural variables;
each side of the sup-norm bound becomes an equality row with its own slack.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionError, InvalidParameterError
from .lasso import dantzig_feasibility
from .simplex import OPTIMAL, StandardFormLP, simplex_solve


@dataclass(frozen=True)
class DantzigLP:
    """Standard-form LP for one Dantzig problem.

    Variable layout: ``[theta_plus (M), theta_minus (M), s_low (M), s_high (M)]``
    in the permuted coordinate order ``variable_order``; recover theta with
    ``theta[variable_order] = x[:M] - x[M:2M]``.
    """

    lp: StandardFormLP
    M: int
    variable_order: tuple

    def theta_from(self, x):
        theta = np.zeros(self.M)
        theta[list(self.variable_order)] = x[: self.M] - x[self.M: 2 * self.M]
        return theta

    def split(self, theta):
        """LP point for a given theta with both slacks filled in."""
        th = np.asarray(theta, dtype=np.float64)[list(self.variable_order)]
        plus, minus = np.maximum(th, 0.0), np.maximum(-th, 0.0)
        M = self.M
        A = self.lp.A
        s_low = A[:M, :2 * M] @ np.concatenate([plus, minus]) - self.lp.b[:M]
        s_high = self.lp.b[M:] - A[M:, :2 * M] @ np.concatenate([plus, minus])
        return np.concatenate([plus, minus, s_low, s_high])


@dataclass(frozen=True)
class DantzigSolution:
    theta: np.ndarray
    r: float
    lp_status: str
    constraint_slack: float
    l1_norm: float
    pivots: int = 0
    duality_gap: float = float("nan")
    variable_order: tuple = field(default=(), repr=False)

    def to_dict(self):
        return {
            "estimator": "dantzig",
            "theta": self.theta.tolist(),
            "r": self.r,
            "lp_status": self.lp_status,
            "constraint_slack": self.constraint_slack,
            "l1_norm": self.l1_norm,
            "pivots": self.pivots,
            "duality_gap": self.duality_gap,
        }


def dantzig_to_lp(D, y, r, variable_order=None):
    """Build the LP.

    With g(theta) = b - Psi theta and b = X^T y / n the two rows per coordinate are
        Psi theta - s_low  = b - r
        Psi theta + s_high = b + r
    """
    if not r > 0:
        raise InvalidParameterError(f"r must be > 0, got {r}")
    y = linalg.as_vector(y, "y")
    if y.shape[0] != D.n:
        raise DimensionError(f"y has length {y.shape[0]}, design has {D.n} rows")
    M = D.M
    order = tuple(range(M)) if variable_order is None else tuple(int(j) for j in variable_order)
    if sorted(order) != list(range(M)):
        raise InvalidParameterError("variable_order must be a permutation of range(M)")
    idx = np.array(order)
    P = D.psi[np.ix_(idx, idx)]
    bvec = (D.XT @ y / D.n)[idx]
    I = np.eye(M)
    Z = np.zeros((M, M))
    A = np.block([[P, -P, -I, Z], [P, -P, Z, I]])
    rhs = np.concatenate([bvec - r, bvec + r])
    c = np.concatenate([np.ones(2 * M), np.zeros(2 * M)])
    return DantzigLP(StandardFormLP(c=c, A=A, b=rhs), M, order)


def dantzig_fit(D, y, r, variable_order=None, max_pivots=50_000):
    """l1-minimal theta under the Dantzig constraint, via revised simplex.

    ``variable_order`` relabels coordinates before the LP is built; different
    orders break pivot ties differently and can land on different optima
    when the solution is not unique.
    """
    prob = dantzig_to_lp(D, y, r, variable_order)
    res = simplex_solve(prob.lp, max_pivots=max_pivots)
    theta = prob.theta_from(res.x)
    _, slack = dantzig_feasibility(D, y, theta, r)
    return DantzigSolution(
        theta=theta,
        r=float(r),
        lp_status=res.status,
        constraint_slack=slack,
        l1_norm=float(np.sum(np.abs(theta))),
        pivots=res.pivots,
        duality_gap=res.duality_gap if res.status == OPTIMAL else float("nan"),
        variable_order=prob.variable_order,
    )
