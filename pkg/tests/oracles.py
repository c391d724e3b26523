"""Independent reference computations used by the tests.

None of these call into the package's solvers; they exist so each solver
result is checked against a second route.
"""
import itertools

import numpy as np
from scipy.optimize import linprog


def naive_residual_correlations(X, y, theta):
    """(1/n) X^T (y - X theta) with explicit loops."""
    n, M = len(X), len(X[0])
    res = []
    for i in range(n):
        acc = 0.0
        for j in range(M):
            acc += X[i][j] * theta[j]
        res.append(y[i] - acc)
    out = []
    for j in range(M):
        acc = 0.0
        for i in range(n):
            acc += X[i][j] * res[i]
        out.append(acc / n)
    return np.array(out)


def soft_threshold_solution(X, y, r):
    """Lasso and Dantzig solution when X^T X / n = I."""
    b = X.T @ y / X.shape[0]
    return np.sign(b) * np.maximum(np.abs(b) - r, 0.0)


def lasso_objective(X, y, theta, r):
    n = X.shape[0]
    res = y - X @ theta
    return float(res @ res) / n + 2.0 * r * float(np.sum(np.abs(theta)))


def lasso_enumeration(X, y, r):
    """Minimum Lasso objective by enumerating all 3^M sign patterns.

    For a pattern with active set A and signs s_A the objective is a smooth
    quadratic whose stationary point solves Psi_AA theta_A = b_A - r s_A.
    Every sign-consistent stationary point is a feasible candidate and the
    true minimizer is one of them, so the minimum over candidates is exact.
    """
    n, M = X.shape
    psi = X.T @ X / n
    b = X.T @ y / n
    best_val, best_theta = lasso_objective(X, y, np.zeros(M), r), np.zeros(M)
    for pattern in itertools.product((-1, 0, 1), repeat=M):
        s = np.array(pattern, dtype=float)
        A = np.flatnonzero(s)
        if A.size == 0:
            continue
        sol, *_ = np.linalg.lstsq(psi[np.ix_(A, A)], b[A] - r * s[A], rcond=None)
        if np.any(sol * s[A] < 0):
            continue
        theta = np.zeros(M)
        theta[A] = sol
        val = lasso_objective(X, y, theta, r)
        if val < best_val:
            best_val, best_theta = val, theta
    return best_val, best_theta


def dantzig_enumeration(X, y, r):
    """Minimum l1 norm under |X^T(y - X theta)/n|_inf <= r, orthant by orthant.

    In the closed orthant {s_j theta_j >= 0} the l1 norm is the linear
    function s^T theta, so each orthant is an ordinary LP (solved by HiGHS).
    Closed orthants cover every zero pattern, so 2^M LPs suffice.
    """
    n, M = X.shape
    psi = X.T @ X / n
    b = X.T @ y / n
    A_ub = np.vstack([psi, -psi])
    b_ub = np.concatenate([b + r, r - b])
    best = np.inf
    best_theta = None
    for pattern in itertools.product((-1.0, 1.0), repeat=M):
        s = np.array(pattern)
        bounds = [(0, None) if sj > 0 else (None, 0) for sj in s]
        res = linprog(s, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if res.status == 0 and res.fun < best:
            best, best_theta = res.fun, res.x
    return best, best_theta


def planted_lp(rng, m, nvars):
    """Random standard-form LP with a known optimum.

    Pick a basis B, a positive basic solution, and a dual vector y with
    strictly positive reduced costs off B; complementary slackness then
    certifies x as optimal with value c^T x = b^T y.
    """
    A = rng.standard_normal((m, nvars))
    B = rng.choice(nvars, size=m, replace=False)
    x = np.zeros(nvars)
    x[B] = rng.uniform(0.5, 2.0, size=m)
    b = A @ x
    y = rng.standard_normal(m)
    c = A.T @ y + rng.uniform(0.1, 1.0, size=nvars)
    c[B] = A[:, B].T @ y
    return c, A, b, x, float(c @ x)


def max_sq_correlation_moment(X, sigma, reps, rng):
    """Monte Carlo E[max_j Z_j^2] with Z = X^T W / n and W ~ N(0, sigma^2 I)."""
    n = X.shape[0]
    W = rng.standard_normal((reps, n)) * sigma
    Z = W @ X / n
    return float(np.mean(np.max(Z * Z, axis=1)))
