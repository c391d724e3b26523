"""Dense vector/matrix helpers: norms, Gram matrices, residual correlations.

All arrays are float64 numpy arrays. Inputs are validated for shape and
finiteness at the boundary; everything downstream assumes clean data.
"""
from __future__ import annotations

import math
import os

import numpy as np

from .errors import DimensionError, InvalidParameterError


def as_vector(v, name="v"):
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise DimensionError(f"{name} must be a nonempty 1-d vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidParameterError(f"{name} has non-finite entries")
    return a


def as_matrix(X, name="X"):
    a = np.asarray(X, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"{name} must be a nonempty 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidParameterError(f"{name} has non-finite entries")
    return a


def norm_lp(v, p=2.0):
    """l_p norm of ``v``; ``p`` may be ``math.inf``."""
    a = as_vector(v)
    if p == math.inf or p == "inf":
        return float(np.max(np.abs(a)))
    p = float(p)
    if not p >= 1.0:
        raise InvalidParameterError(f"l_p norm needs p >= 1, got {p}")
    if p == 1.0:
        return float(np.sum(np.abs(a)))
    # scale by the max so |v|^p neither overflows nor underflows
    m = np.max(np.abs(a))
    if m == 0.0:
        return 0.0
    if p == 2.0:
        return float(m * np.linalg.norm(a / m))
    return float(m * np.sum((np.abs(a) / m) ** p) ** (1.0 / p))


def gram(X):
    """Return Psi = X^T X / n, symmetric to the last bit."""
    X = as_matrix(X)
    n = X.shape[0]
    G = (X.T @ X) / n
    upper = np.triu(G)
    return upper + np.triu(G, 1).T


def residual_correlations(X, y, theta):
    """(1/n) X^T (y - X theta)."""
    X = as_matrix(X)
    y = as_vector(y, "y")
    theta = as_vector(theta, "theta")
    n, M = X.shape
    if y.shape[0] != n:
        raise DimensionError(f"y has length {y.shape[0]}, design has {n} rows")
    if theta.shape[0] != M:
        raise DimensionError(f"theta has length {theta.shape[0]}, design has {M} columns")
    return X.T @ (y - X @ theta) / n


def write_matrix(path, X):
    """Write ``X`` in the plain-text matrix format ("n M" header, one row per line)."""
    X = as_matrix(X)
    n, M = X.shape
    lines = [f"{n} {M}"]
    lines.extend(" ".join(repr(float(x)) for x in row) for row in X)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DimensionError(f"{path}: header must be 'n M'")
        n, M = int(header[0]), int(header[1])
        rows = [line.split() for line in fh if line.strip()]
    if len(rows) != n or any(len(r) != M for r in rows):
        raise DimensionError(f"{path}: expected {n} rows of {M} values")
    return as_matrix(np.array(rows, dtype=np.float64))
