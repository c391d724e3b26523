"""Design matrices: generation, coherence certification, and kappa probing."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import linalg
from .errors import CertificationError, InvalidParameterError
from .rng import Role, stream

# cone constants per estimator
C0_DANTZIG = 1
C0_LASSO = 3

UNIT_DIAGONAL_TOL = 1e-12


@dataclass(frozen=True)
class DesignMatrix:
    """An n x M design with unit Gram diagonal and cached statistics."""

    X: np.ndarray
    psi: np.ndarray = field(repr=False)
    mu: float
    c_prime: float

    @classmethod
    def from_array(cls, X, normalize=False):
        X = linalg.as_matrix(X)
        if normalize:
            X = normalize_columns(X)
        psi = linalg.gram(X)
        diag_err = float(np.max(np.abs(np.diag(psi) - 1.0)))
        if diag_err > UNIT_DIAGONAL_TOL:
            raise InvalidParameterError(
                f"Gram diagonal deviates from 1 by {diag_err:.3e}; "
                "columns need squared norm n (pass normalize=True to rescale)"
            )
        X.setflags(write=False)
        psi.setflags(write=False)
        return cls(X=X, psi=psi, mu=_max_offdiag(psi), c_prime=assumption5_statistic(X))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def M(self):
        return self.X.shape[1]

    @cached_property
    def XT(self):
        """Row-major copy of X^T; column j of X is the contiguous row XT[j]."""
        a = np.ascontiguousarray(self.X.T)
        a.setflags(write=False)
        return a


def _max_offdiag(psi):
    M = psi.shape[0]
    if M == 1:
        return 0.0
    off = np.abs(psi - np.diag(np.diag(psi)))
    return float(min(np.max(off), 1.0))


def assumption5_statistic(X):
    """(1/n) sum_i max_j X_ij^2."""
    X = np.asarray(X)
    return float(np.mean(np.max(X * X, axis=1)))


def normalize_columns(X):
    X = np.array(X, dtype=np.float64)
    n = X.shape[0]
    norms = np.sqrt(np.sum(X * X, axis=0))
    if np.any(norms == 0.0):
        raise InvalidParameterError("cannot normalize an all-zero column")
    X = X * (math.sqrt(n) / norms)
    # one correction pass brings the squared norms to n within a few ulps
    X *= np.sqrt(n / np.sum(X * X, axis=0))
    return X


def gen_rademacher(n, M, seed):
    if n < 1 or M < 1:
        raise InvalidParameterError("n and M must be >= 1")
    rng = stream(seed, Role.DESIGN)
    X = rng.integers(0, 2, size=(n, M), dtype=np.int8).astype(np.float64) * 2.0 - 1.0
    return DesignMatrix.from_array(X)


def gen_normalized_gaussian(n, M, seed):
    if n < 2 or M < 1:
        raise InvalidParameterError("gaussian design needs n >= 2 and M >= 1")
    rng = stream(seed, Role.DESIGN)
    X = rng.standard_normal((n, M))
    for j in range(M):
        while not np.any(X[:, j]):
            X[:, j] = rng.standard_normal(n)
    return DesignMatrix.from_array(normalize_columns(X))


def gen_low_coherence(n, M, mu_max, seed, max_draws_per_column=100_000):
    """Rademacher design grown column by column, rejecting any candidate
    whose correlation with an accepted column exceeds ``mu_max``.

    Useful when plain re-seeding would essentially never hit the bound.
    """
    if not 0.0 < mu_max <= 1.0:
        raise InvalidParameterError("mu_max must be in (0, 1]")
    rng = stream(seed, Role.DESIGN)
    X = np.empty((n, M))
    for j in range(M):
        for _ in range(max_draws_per_column):
            col = rng.integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0
            if j == 0 or np.max(np.abs(X[:, :j].T @ col)) / n <= mu_max:
                X[:, j] = col
                break
        else:
            raise CertificationError(
                f"no column {j} with coherence <= {mu_max} after {max_draws_per_column} draws"
            )
    return DesignMatrix.from_array(X)


GENERATORS = {
    "rademacher": gen_rademacher,
    "gaussian": gen_normalized_gaussian,
}


@dataclass(frozen=True)
class CoherenceReport:
    mu: float
    alpha: float
    s_adm_lasso: int | None  # None: orthogonal design, no sparsity limit
    s_adm_dantzig: int | None
    c_prime: float

    def s_adm(self, c0):
        return self.s_adm_lasso if c0 == C0_LASSO else self.s_adm_dantzig

    def admits(self, s, c0):
        cap = self.s_adm(c0)
        return cap is None or s <= cap

    def to_dict(self):
        def enc(v):
            return "unconstrained" if v is None else v

        return {
            "mu": self.mu,
            "alpha": self.alpha,
            "s_adm_lasso": enc(self.s_adm_lasso),
            "s_adm_dantzig": enc(self.s_adm_dantzig),
            "c_prime": self.c_prime,
        }


def coherence_bound(alpha, c0, s):
    """Largest coherence allowed for sparsity ``s``: 1 / (alpha (1 + 2 c0) s)."""
    return 1.0 / (alpha * (1.0 + 2.0 * c0) * s)


def admissible_sparsity(mu, alpha, c0):
    if mu == 0.0:
        return None
    k = alpha * (1.0 + 2.0 * c0) * mu
    s = int(math.floor(1.0 / k))
    # keep floor() consistent with the direct test mu <= coherence_bound(s)
    while s > 0 and mu > coherence_bound(alpha, c0, s):
        s -= 1
    while mu <= coherence_bound(alpha, c0, s + 1):
        s += 1
    return s


def coherence(D, alpha):
    if not alpha > 1.0:
        raise InvalidParameterError(f"alpha must exceed 1 (coherence assumption), got {alpha}")
    return CoherenceReport(
        mu=D.mu,
        alpha=float(alpha),
        s_adm_lasso=admissible_sparsity(D.mu, alpha, C0_LASSO),
        s_adm_dantzig=admissible_sparsity(D.mu, alpha, C0_DANTZIG),
        c_prime=D.c_prime,
    )


def certify(D, s, alpha, c0):
    """Raise CertificationError unless the design admits sparsity ``s`` for ``c0``."""
    if not alpha > 1.0:
        raise InvalidParameterError(f"alpha must exceed 1, got {alpha}")
    s_adm = admissible_sparsity(D.mu, alpha, c0)
    if s_adm is not None and s > s_adm:
        raise CertificationError(
            f"design coherence {D.mu:.4g} exceeds 1/(alpha(1+2c0)s) = "
            f"{coherence_bound(alpha, c0, s):.4g} for s={s}, alpha={alpha}, c0={c0}; "
            f"admissible s is {s_adm}",
            s_admissible=s_adm,
        )


def find_certified_design(generator, n, M, seed, alpha, s, c0s=(C0_LASSO, C0_DANTZIG), tries=10):
    """Draw designs with seeds ``seed, seed+1, ...`` until one admits ``s``.

    Returns ``(design, seed_used)``.
    """
    gen = GENERATORS[generator] if isinstance(generator, str) else generator
    last = None
    for k in range(tries):
        D = gen(n, M, seed + k)
        try:
            for c0 in c0s:
                certify(D, s, alpha, c0)
        except CertificationError as exc:
            last = exc
            continue
        return D, seed + k
    raise CertificationError(f"no certified design in {tries} seeds: {last}", last.s_admissible)


@dataclass(frozen=True)
class KappaProbeResult:
    J: tuple
    c0: float
    min_ratio_found: float
    samples: int
    analytic_bound: float
    sampled_min: float
    best_lambda: np.ndarray = field(repr=False)


def _subset_size_weights(M, s):
    sizes = np.arange(1, s + 1)
    w = np.array([math.comb(M, int(k)) for k in sizes], dtype=np.float64)
    return sizes, w / w.sum()


def _cone_ratio_sq(psi, lam, J):
    lj = lam[list(J)]
    return float(lam @ psi @ lam) / float(lj @ lj)


def _in_cone(lam, mask, c0):
    return np.sum(np.abs(lam[~mask])) <= c0 * np.sum(np.abs(lam[mask])) * (1.0 + 1e-12)


def _refine(psi, lam, J, c0, max_passes=500):
    """Pattern search on single coordinates, staying inside the cone."""
    M = lam.shape[0]
    mask = np.zeros(M, dtype=bool)
    mask[list(J)] = True
    lam = lam / np.linalg.norm(lam[mask])
    best = _cone_ratio_sq(psi, lam, J)
    step = 0.1
    for _ in range(max_passes):
        improved = False
        for k in range(M):
            for d in (step, -step):
                cand = lam.copy()
                cand[k] += d
                if not np.any(cand[mask]) or not _in_cone(cand, mask, c0):
                    continue
                val = _cone_ratio_sq(psi, cand, J)
                if val < best:
                    lam, best, improved = cand, val, True
                    break
        lam = lam / np.linalg.norm(lam[mask])
        best = _cone_ratio_sq(psi, lam, J)
        if not improved:
            step *= 0.5
            if step < 1e-9:
                break
    return lam, best


def kappa_probe(D, s, c0, alpha, n_samples, seed, fill_complement=True, refine=True):
    """Randomized one-sided check of the restricted-eigenvalue bound.

    Samples (J, lambda) from the cone |lambda_{J^c}|_1 <= c0 |lambda_J|_1,
    records the smallest |X lambda|_2 / (sqrt(n) |lambda_J|_2), then polishes the
    best sample by coordinate pattern search. The true minimum is at least
    sqrt(1 - 1/alpha) whenever the design is certified, so a smaller value
    here means a bug.
    """
    M = D.M
    if not 1 <= s <= M:
        raise InvalidParameterError(f"need 1 <= s <= M, got s={s}, M={M}")
    if n_samples < 1:
        raise InvalidParameterError("n_samples must be >= 1")
    certify(D, s, alpha, c0)
    rng = stream(seed, Role.PROBE)
    psi = D.psi
    sizes, weights = _subset_size_weights(M, s)

    best_val = math.inf
    best = None
    batch = 2048
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        lam = np.zeros((b, M))
        jsets = []
        ks = rng.choice(sizes, size=b, p=weights)
        for i in range(b):
            J = np.sort(rng.choice(M, size=int(ks[i]), replace=False))
            jsets.append(J)
            v = rng.standard_normal(J.size)
            v /= np.linalg.norm(v)
            lam[i, J] = v
            rest = np.setdiff1d(np.arange(M), J, assume_unique=True)
            if fill_complement and rest.size:
                budget = rng.uniform() * c0 * np.sum(np.abs(v))
                mags = rng.dirichlet(np.ones(rest.size)) * budget
                lam[i, rest] = mags * rng.choice((-1.0, 1.0), size=rest.size)
        quad = np.einsum("ij,jk,ik->i", lam, psi, lam)
        ratio_sq = np.maximum(quad, 0.0)  # |lambda_J|_2 = 1 by construction
        i = int(np.argmin(ratio_sq))
        if ratio_sq[i] < best_val:
            best_val = float(ratio_sq[i])
            best = (tuple(int(j) for j in jsets[i]), lam[i].copy())
        done += b

    sampled_min = math.sqrt(best_val)
    J, lam = best
    if refine and fill_complement:
        lam, val = _refine(psi, lam, J, c0)
        best_val = min(best_val, max(val, 0.0))
    return KappaProbeResult(
        J=J,
        c0=float(c0),
        min_ratio_found=math.sqrt(best_val),
        samples=n_samples,
        analytic_bound=math.sqrt(1.0 - 1.0 / alpha),
        sampled_min=sampled_min,
        best_lambda=lam,
    )

