"""Pure-Python/numpy implementations of the hot kernels.

Mirrors the compiled ``_core`` module function for function; the selection
between the two happens in :mod:`rgbethe._backend`.
"""
from __future__ import annotations

import numpy as np


def permanent(a) -> complex:
    """Permanent of a square complex matrix (Ryser formula, Gray-code order)."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("permanent needs a square matrix")
    if n == 0:
        return 1.0 + 0j
    rowsum = np.zeros(n, dtype=complex)
    total = 0j
    gray_prev = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        diff = gray ^ gray_prev
        j = diff.bit_length() - 1
        if gray & diff:
            rowsum += a[:, j]
        else:
            rowsum -= a[:, j]
        gray_prev = gray
        term = np.prod(rowsum)
        if bin(gray).count("1") & 1:
            total -= term
        else:
            total += term
    return total * (-1) ** n


def rg_residual_jacobian(x, lev, w, c0, c1, c2, sigma, p, q, r):
    """Residual and Jacobian of the generic rapidity equations.

    ``F_a = c0 + c1 x_a + c2 / x_a + sum_i w_i W(lev_i, x_a)
    + sigma sum_{b != a} W(x_b, x_a)`` with ``W(u, v) = (p + q u v + r (u + v)) / (u - v)``.
    """
    x = np.asarray(x, dtype=complex)
    lev = np.asarray(lev, dtype=float)
    w = np.asarray(w, dtype=float)
    n = x.size
    if n == 0:
        return np.zeros(0, complex), np.zeros((0, 0), complex)
    dl = lev[:, None] - x[None, :]
    f = c0 + c1 * x + (c2 / x if c2 != 0 else 0)
    f = f + (w[:, None] * (p + q * lev[:, None] * x[None, :] + r * (lev[:, None] + x[None, :])) / dl).sum(axis=0)
    diag = c1 - (c2 / x ** 2 if c2 != 0 else 0)
    diag = diag + (w[:, None] * (q * lev[:, None] ** 2 + 2 * r * lev[:, None] + p) / dl ** 2).sum(axis=0)
    dx = x[:, None] - x[None, :]  # dx[b, a] = x_b - x_a
    np.fill_diagonal(dx, 1.0)
    num = p + q * x[:, None] * x[None, :] + r * (x[:, None] + x[None, :])
    pair = num / dx
    np.fill_diagonal(pair, 0.0)
    f = f + sigma * pair.sum(axis=0)
    dvb = (q * x[:, None] ** 2 + 2 * r * x[:, None] + p) / dx ** 2  # dW(x_b, x_a)/dx_a
    np.fill_diagonal(dvb, 0.0)
    diag = diag + sigma * dvb.sum(axis=0)
    dub = -(q * x[None, :] ** 2 + 2 * r * x[None, :] + p) / dx ** 2  # dW(x_b, x_a)/dx_b
    np.fill_diagonal(dub, 0.0)
    jac = sigma * dub.T
    jac[np.diag_indices(n)] = diag
    return f, jac
