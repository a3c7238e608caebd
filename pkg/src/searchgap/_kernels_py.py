"""Pure-NumPy implementations of the hot kernels.

Signature-compatible with the compiled module ``searchgap._kernels``; the
active implementation is chosen in ``searchgap._backend``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

BACKEND_NAME = "python"

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class MarchError(RuntimeError):
    """Local search failed at one step of the wage-curve marching scheme."""

    def __init__(self, step: int, residual: float):
        self.step = step
        self.residual = residual
        super().__init__(
            f"wage-offer curve not increasing at grid step {step} "
            f"(bracket residual {residual:.3e}); reduce the step size"
        )


def march_wage_curve(p, sq, k, mu, sigma, w_low):
    """Solve the wage-offer curve step by step along the productivity grid.

    Parameters
    ----------
    p : ndarray
        Increasing productivity grid, p[0] at the lower support point.
    sq : ndarray
        (1 + k * sf(p))**2 where sf is the productivity survival function.
    k : float
        Offer-to-separation ratio.
    mu, sigma : float
        Reservation-wage distribution (normal).
    w_low : float
        Wage offered at p[0].

    Returns
    -------
    ndarray
        Wage offers w = K(p) on the grid, strictly increasing.
    """
    n = p.shape[0]
    K = np.empty(n)
    K[0] = w_low
    h_low = float(ndtr((w_low - mu) / sigma))
    integral = (p[0] - w_low) / (1.0 + k) ** 2 * h_low
    iota_prev = h_low / sq[0]
    for i in range(1, n):
        dp = p[i] - p[i - 1]
        c = integral + 0.5 * dp * iota_prev
        p_i, sq_i = p[i], sq[i]

        def rho(kv):
            return kv - p_i + 0.5 * dp + c * sq_i / ndtr((kv - mu) / sigma)

        lo = K[i - 1]
        r_lo = rho(lo)
        if r_lo > 0.0:
            raise MarchError(i, r_lo)
        K[i] = brentq(rho, lo, p_i, xtol=1e-12, rtol=4 * np.finfo(float).eps)
        iota = float(ndtr((K[i] - mu) / sigma)) / sq_i
        integral += 0.5 * dp * (iota_prev + iota)
        iota_prev = iota
    return K


def lu_mixture_integrals(t, node_b, node_idx, node_frac, half_width, gl_weights,
                         fbar_grid, lam, k, mu, sigma):
    """Gauss-Legendre value of the reservation-wage integral per spell.

    For spell i the integrand over b is
    exp(-lam * Fbar(b) * t_i) * h(b) / (1 + k * Fbar(b)),
    evaluated at fixed nodes node_b[i, :] whose positions on the wage grid
    are precomputed as (node_idx, node_frac); fbar_grid is the offer
    survival function on that grid and changes with the parameter vector.

    Returns the integral values, one per spell.
    """
    fbar = (1.0 - node_frac) * fbar_grid[node_idx] + node_frac * fbar_grid[node_idx + 1]
    z = (node_b - mu) / sigma
    h = np.exp(-0.5 * z * z) / (sigma * _SQRT_2PI)
    vals = np.exp(-lam * fbar * t[:, None]) * h / (1.0 + k * fbar)
    return half_width * (vals @ gl_weights)
