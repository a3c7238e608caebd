# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: wage-curve marching and the mixture quadrature.

Signature-compatible with searchgap._kernels_py; selected at import in
searchgap._backend when the extension built.
"""

from libc.math cimport erfc, exp, fabs

import numpy as np

from ._kernels_py import MarchError

BACKEND_NAME = "compiled"

cdef double SQRT1_2 = 0.70710678118654752440
cdef double INV_SQRT_2PI = 0.39894228040143267794


cdef inline double _ncdf(double z) noexcept nogil:
    return 0.5 * erfc(-z * SQRT1_2)


cdef inline double _rho(double kv, double p_i, double half_dp, double c,
                        double sq_i, double mu, double sigma) noexcept nogil:
    return kv - p_i + half_dp + c * sq_i / _ncdf((kv - mu) / sigma)


cdef double _brentq(double xa, double xb, double p_i, double half_dp, double c,
                    double sq_i, double mu, double sigma,
                    double xtol, double rtol, int maxiter) noexcept nogil:
    # Brent's method, mirroring scipy.optimize.brentq
    cdef double xpre = xa, xcur = xb
    cdef double xblk = 0.0, fblk = 0.0, spre = 0.0, scur = 0.0
    cdef double sbis, stry, dpre, dblk, delta
    cdef double fpre = _rho(xpre, p_i, half_dp, c, sq_i, mu, sigma)
    cdef double fcur = _rho(xcur, p_i, half_dp, c, sq_i, mu, sigma)
    cdef int i
    if fpre == 0.0:
        return xpre
    if fcur == 0.0:
        return xcur
    for i in range(maxiter):
        if fpre * fcur < 0.0:
            xblk = xpre
            fblk = fpre
            spre = scur = xcur - xpre
        if fabs(fblk) < fabs(fcur):
            xpre = xcur
            xcur = xblk
            xblk = xpre
            fpre = fcur
            fcur = fblk
            fblk = fpre
        delta = (xtol + rtol * fabs(xcur)) / 2.0
        sbis = (xblk - xcur) / 2.0
        if fcur == 0.0 or fabs(sbis) < delta:
            return xcur
        if fabs(spre) > delta and fabs(fcur) < fabs(fpre):
            if xpre == xblk:
                stry = -fcur * (xcur - xpre) / (fcur - fpre)
            else:
                dpre = (fpre - fcur) / (xpre - xcur)
                dblk = (fblk - fcur) / (xblk - xcur)
                stry = -fcur * (fblk - fpre) / (fblk * dpre - fpre * dblk)
            if 2.0 * fabs(stry) < min(fabs(spre), 3.0 * fabs(sbis) - delta):
                spre = scur
                scur = stry
            else:
                spre = sbis
                scur = sbis
        else:
            spre = sbis
            scur = sbis
        xpre = xcur
        fpre = fcur
        if fabs(scur) > delta:
            xcur += scur
        else:
            xcur += delta if sbis > 0.0 else -delta
        fcur = _rho(xcur, p_i, half_dp, c, sq_i, mu, sigma)
    return xcur


def march_wage_curve(double[::1] p, double[::1] sq, double k, double mu,
                     double sigma, double w_low):
    """See searchgap._kernels_py.march_wage_curve."""
    cdef Py_ssize_t n = p.shape[0]
    out = np.empty(n)
    cdef double[::1] big_k = out
    cdef double h_low = _ncdf((w_low - mu) / sigma)
    cdef double integral = (p[0] - w_low) / ((1.0 + k) * (1.0 + k)) * h_low
    cdef double iota_prev = h_low / sq[0]
    cdef double dp, c, r_lo, iota, xtol, rtol
    cdef Py_ssize_t i
    cdef Py_ssize_t bad = 0
    cdef double bad_resid = 0.0
    xtol = 1e-12
    rtol = 4.0 * 2.220446049250313e-16
    big_k[0] = w_low
    with nogil:
        for i in range(1, n):
            dp = p[i] - p[i - 1]
            c = integral + 0.5 * dp * iota_prev
            r_lo = _rho(big_k[i - 1], p[i], 0.5 * dp, c, sq[i], mu, sigma)
            if r_lo > 0.0:
                bad = i
                bad_resid = r_lo
                break
            big_k[i] = _brentq(big_k[i - 1], p[i], p[i], 0.5 * dp, c, sq[i],
                               mu, sigma, xtol, rtol, 100)
            iota = _ncdf((big_k[i] - mu) / sigma) / sq[i]
            integral += 0.5 * dp * (iota_prev + iota)
            iota_prev = iota
    if bad:
        raise MarchError(int(bad), float(bad_resid))
    return out


def lu_mixture_integrals(double[::1] t, double[:, ::1] node_b,
                         long[:, ::1] node_idx, double[:, ::1] node_frac,
                         double[::1] half_width, double[::1] gl_weights,
                         double[::1] fbar_grid, double lam, double k,
                         double mu, double sigma):
    """See searchgap._kernels_py.lu_mixture_integrals."""
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t m = node_b.shape[1]
    out = np.empty(n)
    cdef double[::1] res = out
    cdef Py_ssize_t i, j
    cdef long idx
    cdef double fbar, z, h, acc, inv_sigma = 1.0 / sigma
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(m):
                idx = node_idx[i, j]
                fbar = (1.0 - node_frac[i, j]) * fbar_grid[idx] \
                    + node_frac[i, j] * fbar_grid[idx + 1]
                z = (node_b[i, j] - mu) * inv_sigma
                h = exp(-0.5 * z * z) * INV_SQRT_2PI * inv_sigma
                acc += gl_weights[j] * exp(-lam * fbar * t[i]) * h / (1.0 + k * fbar)
            res[i] = half_width[i] * acc
    return out
