# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same API as ``_pyfallback``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def permanent(a):
    cdef double complex[:, ::1] m = np.ascontiguousarray(a, dtype=complex)
    cdef Py_ssize_t n = m.shape[0]
    if m.shape[1] != n:
        raise ValueError("permanent needs a square matrix")
    if n == 0:
        return 1.0 + 0j
    cdef double complex[::1] rowsum = np.zeros(n, dtype=complex)
    cdef double complex total = 0, term
    cdef unsigned long long k, gray, gray_prev = 0, diff, limit = (<unsigned long long> 1) << n
    cdef Py_ssize_t i, j
    cdef int parity
    for k in range(1, limit):
        gray = k ^ (k >> 1)
        diff = gray ^ gray_prev
        j = 0
        while (diff >> j) != 1:
            j += 1
        if gray & diff:
            for i in range(n):
                rowsum[i] = rowsum[i] + m[i, j]
        else:
            for i in range(n):
                rowsum[i] = rowsum[i] - m[i, j]
        gray_prev = gray
        term = 1
        for i in range(n):
            term = term * rowsum[i]
        parity = 0
        diff = gray
        while diff:
            parity ^= 1
            diff &= diff - 1
        if parity:
            total = total - term
        else:
            total = total + term
    if n & 1:
        total = -total
    return complex(total)


def rg_residual_jacobian(x, lev, w, double complex c0, double complex c1, double complex c2,
                         double sigma, double p, double q, double r):
    cdef double complex[::1] xv = np.ascontiguousarray(x, dtype=complex)
    cdef double[::1] lv = np.ascontiguousarray(lev, dtype=float)
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=float)
    cdef Py_ssize_t n = xv.shape[0], nl = lv.shape[0], a, b, i
    f_arr = np.empty(n, dtype=complex)
    j_arr = np.zeros((n, n), dtype=complex)
    cdef double complex[::1] f = f_arr
    cdef double complex[:, ::1] jac = j_arr
    cdef double complex xa, u, den, fa, da
    for a in range(n):
        xa = xv[a]
        fa = c0 + c1 * xa
        da = c1
        if c2 != 0:
            fa = fa + c2 / xa
            da = da - c2 / (xa * xa)
        for i in range(nl):
            den = lv[i] - xa
            fa = fa + wv[i] * (p + q * lv[i] * xa + r * (lv[i] + xa)) / den
            da = da + wv[i] * (q * lv[i] * lv[i] + 2 * r * lv[i] + p) / (den * den)
        for b in range(n):
            if b == a:
                continue
            u = xv[b]
            den = u - xa
            fa = fa + sigma * (p + q * u * xa + r * (u + xa)) / den
            da = da + sigma * (q * u * u + 2 * r * u + p) / (den * den)
            jac[a, b] = -sigma * (q * xa * xa + 2 * r * xa + p) / (den * den)
        f[a] = fa
        jac[a, a] = da
    return f_arr, j_arr
