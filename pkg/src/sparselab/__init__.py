"""Lasso and Dantzig estimators with sup-norm and sign-recovery checks."""

__version__ = "0.1.0"
