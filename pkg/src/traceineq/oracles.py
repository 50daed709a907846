"""Scalar closed forms for commuting inputs.

When ``A`` and ``B`` share an eigenbasis every quantity reduces to sums
over paired eigenvalues ``(a_n, b_n)``. These routines never touch a
matrix and serve as the independent side of the commuting cross-checks.
"""

import numpy as np


def _xlogx_diff_sq(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where((a > 0) & (b > 0), np.log(a) - np.log(b), 0.0)
    return a * b * d**2


def trace_margin(a, b, s):
    """sum_n (a_n + b_n)^(s-1) a_n b_n (log a_n - log b_n)^2"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.sum((a + b) ** (s - 1.0) * _xlogx_diff_sq(a, b)))


def operator_margin_s0(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.min(_xlogx_diff_sq(a, b) / (a + b)))


def question_margin(a, b):
    """Q1 and Q2 both reduce to min_n a_n b_n (log a_n - log b_n)^2."""
    return float(np.min(_xlogx_diff_sq(a, b)))


def cross_m1(a, b):
    return -float(np.sum(_xlogx_diff_sq(a, b)))


def cross_m2(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return -float(np.sum(_xlogx_diff_sq(a, b) / (a + b)))


def relative_D_diag(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a * (np.log(a) - np.log(b))


def relative_entropy_diag(a, b):
    """Diagonal of A^(1/2) log(A^(-1/2) B A^(-1/2)) A^(1/2) = a log(b / a)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a * np.log(b / a)


def auxiliary_E(eigenvalues, pi, s):
    """-log sum_n (sum_i pi_i lambda_{i,n}^(1/(1+s)))^(1+s)"""
    lam = np.maximum(np.asarray(eigenvalues, dtype=float), 0.0)
    mix = np.asarray(pi, dtype=float) @ lam ** (1.0 / (1.0 + s))
    return -float(np.log(np.sum(mix ** (1.0 + s))))
