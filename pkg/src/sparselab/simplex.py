"""Two-phase revised simplex for standard-form LPs.

    minimize c^T x  subject to  A x = b,  x >= 0

The basis is held as a dense LU factorization plus a file of eta vectors
(product-form updates), refactorized every ``REFACTOR_EVERY`` pivots.
Pricing is Dantzig's most-negative rule until ``3 * m`` consecutive
degenerate pivots, after which the phase finishes under Bland's rule.

Start-up: if every row owns a signed unit column, that slack basis is tried
first. Primal feasible -> phase II directly; dual feasible -> dual simplex
(no phase I needed, and typically far fewer pivots); otherwise the classic
phase I with artificial variables.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, InvalidParameterError, IterationLimitError, SingularBasisError

REDUCED_COST_TOL = 1e-9
PIVOT_TOL = 1e-9
PHASE1_TOL = 1e-9
PRIMAL_TOL = 1e-9
REFACTOR_EVERY = 50

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"


@dataclass(frozen=True)
class StandardFormLP:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        m, N = self.A.shape
        if self.c.shape != (N,) or self.b.shape != (m,):
            raise DimensionError(f"inconsistent LP shapes: A {self.A.shape}, c {self.c.shape}, b {self.b.shape}")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))
                and np.all(np.isfinite(self.c))):
            raise InvalidParameterError("LP data must be finite")

    @property
    def n_vars(self):
        return self.A.shape[1]

    @property
    def n_rows(self):
        return self.A.shape[0]


@dataclass
class LPResult:
    status: str
    x: np.ndarray
    objective: float
    dual: np.ndarray = field(repr=False)
    basis: tuple = field(repr=False)
    pivots: int = 0
    phase1_objective: float = 0.0
    duality_gap: float = float("nan")
    method: str = "primal"




class _Basis:
    """LU of the basis columns plus eta updates.

    A basis made of signed unit columns (the usual slack start) is solved by
    permutation directly, skipping the O(m^3) factorization.
    """

    def __init__(self, A, cols):
        self.A = A
        self.cols = np.array(cols, dtype=np.intp)
        self.refactor()

    def refactor(self):
        B = self.A[:, self.cols]
        m = B.shape[0]
        self.etas = []
        self.lu = None
        self.perm = None
        if np.all(np.count_nonzero(B, axis=0) == 1):
            rows = np.argmax(B != 0, axis=0)
            if np.unique(rows).size == m:
                self.perm = (rows, B[rows, np.arange(m)])
                return
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            try:
                self.lu = sla.lu_factor(B, check_finite=False)
            except (sla.LinAlgWarning, ValueError) as exc:
                raise SingularBasisError(f"basis factorization failed: {exc}") from exc
        u = np.abs(np.diag(self.lu[0]))
        if u.size and u.min() <= 1e-13 * max(1.0, u.max()):
            raise SingularBasisError("basis matrix is numerically singular")

    def _solve(self, a, trans=False):
        if self.perm is not None:
            rows, vals = self.perm
            if not trans:
                return a[rows] / vals
            out = np.empty_like(a, dtype=np.float64)
            out[rows] = a / vals
            return out
        return sla.lu_solve(self.lu, a, trans=1 if trans else 0, check_finite=False)

    def ftran(self, a):
        x = np.array(self._solve(a), dtype=np.float64)
        for p, d in self.etas:
            xp = x[p] / d[p]
            x -= xp * d
            x[p] = xp
        return x

    def btran(self, cb):
        u = np.array(cb, dtype=np.float64)
        for p, d in reversed(self.etas):
            u[p] -= (d @ u - u[p]) / d[p]
        return self._solve(u, trans=True)

    def replace(self, p, q, d):
        self.cols[p] = q
        self.etas.append((p, d.copy()))

    def maybe_refactor(self, b):
        """Refactor when the eta file is long; returns fresh x_B or None."""
        if len(self.etas) >= REFACTOR_EVERY:
            self.refactor()
            return self.ftran(b)
        return None


def _reduced_costs(A, c, basis, allowed):
    y = basis.btran(c[basis.cols])
    red = c - y @ A
    red[basis.cols] = 0.0
    red[~allowed] = 0.0
    return red


def _primal_phase(A, b, c, basis, xb, allowed, max_pivots, pivots, pivot_tol):
    """Primal simplex from a feasible basis. Returns (status, xb, pivots)."""
    m = A.shape[0]
    bland = False
    degenerate_run = 0
    while True:
        red = _reduced_costs(A, c, basis, allowed)
        if bland:
            cand = np.flatnonzero(red < -REDUCED_COST_TOL)
            if cand.size == 0:
                return OPTIMAL, xb, pivots
            q = int(cand[0])
        else:
            q = int(np.argmin(red))
            if red[q] >= -REDUCED_COST_TOL:
                return OPTIMAL, xb, pivots
        if pivots >= max_pivots:
            return ITERATION_LIMIT, xb, pivots

        d = basis.ftran(A[:, q])
        rows = np.flatnonzero(d > pivot_tol)
        if rows.size == 0:
            return UNBOUNDED, xb, pivots
        ratios = np.maximum(xb[rows], 0.0) / d[rows]
        tmin = ratios.min()
        ties = rows[ratios <= tmin + 1e-12 * (1.0 + tmin)]
        if bland:
            p = int(ties[np.argmin(basis.cols[ties])])
        else:
            p = int(ties[np.argmax(d[ties])])
        step = max(xb[p], 0.0) / d[p]

        xb = xb - step * d
        xb[p] = step
        basis.replace(p, q, d)
        pivots += 1

        if step <= 1e-12:
            degenerate_run += 1
            bland = bland or degenerate_run >= 3 * m
        else:
            degenerate_run = 0
        fresh = basis.maybe_refactor(b)
        if fresh is not None:
            xb = fresh


def _dual_phase(A, b, c, basis, xb, allowed, max_pivots, pivots, pivot_tol, feas_tol):
    """Dual simplex from a dual-feasible basis. Returns (status, xb, pivots)."""
    m = A.shape[0]
    bland = False
    degenerate_run = 0
    while True:
        bad = np.flatnonzero(xb < -feas_tol)
        if bad.size == 0:
            return OPTIMAL, xb, pivots
        if pivots >= max_pivots:
            return ITERATION_LIMIT, xb, pivots
        if bland:
            p = int(bad[np.argmin(basis.cols[bad])])
        else:
            p = int(bad[np.argmin(xb[bad])])
        red = np.maximum(_reduced_costs(A, c, basis, allowed), 0.0)
        e = np.zeros(m)
        e[p] = 1.0
        alpha = basis.btran(e) @ A
        alpha[basis.cols] = 0.0
        alpha[~allowed] = 0.0
        cand = np.flatnonzero(alpha < -pivot_tol)
        if cand.size == 0:
            return INFEASIBLE, xb, pivots
        ratios = red[cand] / -alpha[cand]
        tmin = ratios.min()
        ties = cand[ratios <= tmin + 1e-12 * (1.0 + tmin)]
        if bland:
            q = int(ties[0])
        else:
            q = int(ties[np.argmax(-alpha[ties])])

        d = basis.ftran(A[:, q])
        step = xb[p] / d[p]
        xb = xb - step * d
        xb[p] = step
        basis.replace(p, q, d)
        pivots += 1

        if tmin <= 1e-12:
            degenerate_run += 1
            bland = bland or degenerate_run >= 3 * m
        else:
            degenerate_run = 0
        fresh = basis.maybe_refactor(b)
        if fresh is not None:
            xb = fresh


def _signed_unit_basis(A):
    """One signed unit column per row, or None if some row has none."""
    m = A.shape[0]
    cols = np.full(m, -1, dtype=np.intp)
    single = np.flatnonzero(np.count_nonzero(A, axis=0) == 1)
    if single.size < m:
        return None
    rows = np.argmax(A[:, single] != 0, axis=0)
    for j, i in zip(single, rows):
        if cols[i] < 0:
            cols[i] = j
    return None if np.any(cols < 0) else cols


def _result(status, A, b, c, N, basis, xb, pivots, phase1_obj, flip, method):
    x = np.zeros(A.shape[1])
    x[basis.cols] = xb
    xs = np.maximum(x[:N], 0.0)
    y = basis.btran(c[basis.cols])
    res = LPResult(status, xs, float(c[:N] @ xs), y * flip, tuple(int(j) for j in basis.cols),
                   pivots, phase1_obj, method=method)
    if status == OPTIMAL:
        res.duality_gap = abs(float(c @ x) - float(b @ y))
    return res


def _raise_limit(basis, xb, c, pivots, phase1_obj, method):
    x = np.zeros(c.shape[0])
    x[basis.cols] = xb
    inc = LPResult(ITERATION_LIMIT, x, float(c @ x), np.zeros(xb.shape[0]),
                   tuple(int(j) for j in basis.cols), pivots, phase1_obj, method=method)
    raise IterationLimitError(f"simplex hit the pivot cap ({pivots} pivots)", incumbent=inc)


def _from_slack_basis(A, b, c, cols, max_pivots, pivot_tol):
    """Try to solve starting from a signed-unit basis; None means fall back."""
    m, N = A.shape
    basis = _Basis(A, cols)
    xb = basis.ftran(b)
    allowed = np.ones(N, dtype=bool)
    feas_tol = PRIMAL_TOL * (1.0 + float(np.max(np.abs(b), initial=0.0)))
    ones = np.ones(m)
    if xb.min() >= -feas_tol:
        method = "primal"
        status, xb, pivots = _primal_phase(A, b, c, basis, np.maximum(xb, 0.0), allowed,
                                           max_pivots, 0, pivot_tol)
    elif _reduced_costs(A, c, basis, allowed).min() >= -REDUCED_COST_TOL:
        method = "dual"
        status, xb, pivots = _dual_phase(A, b, c, basis, xb, allowed, max_pivots, 0,
                                         pivot_tol, feas_tol)
        if status == OPTIMAL:
            # clean up any reduced-cost drift from the primal side
            xb = basis.ftran(b)
            status, xb, pivots = _primal_phase(A, b, c, basis, np.maximum(xb, 0.0), allowed,
                                               max_pivots, pivots, pivot_tol)
    else:
        return None
    if status == ITERATION_LIMIT:
        _raise_limit(basis, xb, c, pivots, float("nan"), method)
    if status == OPTIMAL:
        xb = basis.ftran(b)
    return _result(status, A, b, c, N, basis, xb, pivots, float("nan"), ones, method)


def _two_phase(A0, b0, c0, max_pivots, pivot_tol):
    m, N = A0.shape
    flip = np.where(b0 < 0, -1.0, 1.0)
    A = A0 * flip[:, None]
    b = b0 * flip

    # reuse +1 unit columns as the starting basis; artificials elsewhere
    basic = np.full(m, -1, dtype=np.intp)
    for j in np.flatnonzero(np.count_nonzero(A, axis=0) == 1):
        i = int(np.flatnonzero(A[:, j])[0])
        if A[i, j] == 1.0 and basic[i] < 0:
            basic[i] = j
    art_rows = np.flatnonzero(basic < 0)
    k = art_rows.size
    if k:
        art = np.zeros((m, k))
        art[art_rows, np.arange(k)] = 1.0
        A = np.hstack([A, art])
        basic[art_rows] = N + np.arange(k)
    total = N + k
    is_art = np.zeros(total, dtype=bool)
    is_art[N:] = True

    basis = _Basis(A, basic)
    xb = basis.ftran(b)
    pivots = 0
    phase1_obj = 0.0
    if k:
        c1 = is_art.astype(np.float64)
        status, xb, pivots = _primal_phase(A, b, c1, basis, xb, np.ones(total, bool),
                                           max_pivots, 0, pivot_tol)
        basis.refactor()
        xb = basis.ftran(b)
        phase1_obj = float(np.sum(xb[is_art[basis.cols]]))
        if status == ITERATION_LIMIT:
            _raise_limit(basis, xb, c1, pivots, phase1_obj, "primal")
        if phase1_obj > PHASE1_TOL * (1.0 + float(np.max(np.abs(b), initial=0.0))):
            c_ext = np.concatenate([c0, np.zeros(k)])
            return _result(INFEASIBLE, A, b, c_ext, N, basis, xb, pivots, phase1_obj, flip,
                           "primal")
        _drive_out_artificials(A, basis, is_art)
        xb = basis.ftran(b)

    c2 = np.concatenate([c0, np.zeros(k)])
    status, xb, pivots = _primal_phase(A, b, c2, basis, xb, ~is_art, max_pivots, pivots,
                                       pivot_tol)
    if status == ITERATION_LIMIT:
        _raise_limit(basis, xb, c2, pivots, phase1_obj, "primal")
    basis.refactor()
    xb = basis.ftran(b)
    return _result(status, A, b, c2, N, basis, xb, pivots, phase1_obj, flip, "primal")


def _drive_out_artificials(A, basis, is_art):
    """Pivot zero-level artificials out of the basis where a structural column allows.

    An artificial that cannot leave sits on a redundant row: its tableau row is
    zero over all structural columns, so it stays at zero in phase II.
    """
    m = A.shape[0]
    for p in range(m):
        if not is_art[basis.cols[p]]:
            continue
        e = np.zeros(m)
        e[p] = 1.0
        row = basis.btran(e) @ A
        row[is_art] = 0.0
        row[basis.cols] = 0.0
        q = int(np.argmax(np.abs(row)))
        if abs(row[q]) <= PIVOT_TOL:
            continue
        basis.replace(p, q, basis.ftran(A[:, q]))
    basis.refactor()


def simplex_solve(lp, max_pivots=50_000):
    """Solve ``lp`` by revised simplex.

    Returns an LPResult with status optimal, infeasible or unbounded. Hitting
    ``max_pivots`` raises IterationLimitError carrying the incumbent.
    """
    A, b, c = lp.A, lp.b, lp.c
    for pivot_tol in (PIVOT_TOL, 1e3 * PIVOT_TOL):
        try:
            cols = _signed_unit_basis(A)
            if cols is not None:
                res = _from_slack_basis(A, b, c, cols, max_pivots, pivot_tol)
                if res is not None:
                    return res
            return _two_phase(A, b, c, max_pivots, pivot_tol)
        except SingularBasisError:
            # a tiny pivot wrecked the basis; retry once with a stricter threshold
            if pivot_tol != PIVOT_TOL:
                raise
    raise AssertionError("unreachable")
