"""Segment-level equilibrium of the wage-posting model with on-the-job search.

Forward direction: a productivity law is mapped into the wage-offer curve
w = K(p) by marching along a productivity grid, after which the
unemployment rate, the realised-wage distribution, and the composition of
the unemployed pool follow by quadrature.

Inverse direction: an observed wage density together with the frictional
and reservation-wage parameters identifies the offer CDF, the unemployment
rate, and firm-level productivities, without ever observing productivity.

All functions are pure; grids are plain ndarrays owned by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq

from ._backend import kernels
from .params import (
    NEGLIGIBLE_MASS,
    FrictionParams,
    InvalidSegmentError,
    ReservationWageDist,
    SegmentParams,
)

DEFAULT_GRID_SIZE = 2000


class EquilibriumError(RuntimeError):
    """A solved quantity violates an equilibrium restriction."""


def lowest_wage(p_min: float, reservation: ReservationWageDist) -> float:
    """Wage posted by the least productive firm.

    The firm with productivity p_min maximises (p_min - w) * H(w): a
    higher wage recruits more workers, a lower one raises the margin. The
    first-order condition (p_min - w) h(w) = H(w) has a unique root
    because (p_min - w) h(w) / H(w) is strictly decreasing for normal H.
    """
    if p_min <= 0:
        raise InvalidSegmentError(f"p_min must be positive, got {p_min}")
    if reservation.is_degenerate:
        if reservation.mu >= p_min:
            raise EquilibriumError(
                "no worker accepts a wage the least productive firm can pay "
                f"(all reservation wages at {reservation.mu} >= p_min {p_min})"
            )
        return reservation.mu
    if reservation.cdf(p_min) < NEGLIGIBLE_MASS:
        raise EquilibriumError(
            "no worker accepts a wage the least productive firm can pay "
            f"(H({p_min}) ~ 0 for mu={reservation.mu}, sigma={reservation.sigma})"
        )

    def foc(w):
        return (p_min - w) * reservation.pdf(w) - reservation.cdf(w)

    hi = p_min - 1e-9 * max(1.0, abs(p_min))
    lo = p_min - reservation.sigma
    while foc(lo) < 0.0:
        lo -= reservation.sigma
        if lo < reservation.mu - 42.0 * reservation.sigma:
            # H underflows below ~ -38 sigma; the maximiser would sit in
            # a region where the surplus is numerically zero.
            raise EquilibriumError("lowest-wage search left the support of H")
    return brentq(foc, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class WageOfferCurve:
    """Wage offers on a productivity grid, with the implied offer CDF."""

    p: np.ndarray
    w: np.ndarray
    offer_cdf: np.ndarray
    offer_sf: np.ndarray

    @property
    def w_low(self) -> float:
        return float(self.w[0])

    @property
    def w_high(self) -> float:
        return float(self.w[-1])

    def offer_sf_at(self, wage):
        """Survival function of wage offers, 1 below and 0 above the support."""
        wage = np.asarray(wage, dtype=float)
        out = np.interp(wage, self.w, self.offer_sf, left=1.0, right=0.0)
        return out[()]

    def offer_cdf_at(self, wage):
        wage = np.asarray(wage, dtype=float)
        return np.interp(wage, self.w, self.offer_cdf, left=0.0, right=1.0)[()]

    def wage_at(self, prod):
        """Interpolated K(p) on the solved range."""
        prod = np.asarray(prod, dtype=float)
        return np.interp(prod, self.p, self.w)[()]


def solve_wage_offer_curve(
    params: SegmentParams, grid_size: int = DEFAULT_GRID_SIZE
) -> WageOfferCurve:
    """March the wage-offer curve from p_min to the q_max quantile.

    The curve satisfies, at every productivity level p,

        K(p) = p - [ (p_min - w_low) H(w_low) / (1+k)^2
                     + int_{p_min}^{p} H(K(x)) / (1 + k sf(x))^2 dx ]
                   * (1 + k sf(p))^2 / H(K(p)),

    closed at p_min by the least-productive firm's optimal wage. Each grid
    step solves the local root problem by bracketed scalar search, with the
    running integral accumulated by the trapezoid rule.
    """
    if params.productivity is None:
        raise InvalidSegmentError("forward solve requires a productivity law")
    prod = params.productivity
    k = params.frictions.k
    res = params.reservation

    p = np.geomspace(prod.p_min, prod.p_cut, grid_size)
    sf = prod.sf(p)
    sf[0] = 1.0  # exact at the lower support point
    sq = (1.0 + k * sf) ** 2
    w_low = lowest_wage(prod.p_min, res)

    if res.is_degenerate:
        # H = 1 on the whole wage range (mu < w_low <= K), so the curve is
        # explicit: no root-finding needed.
        integrand = 1.0 / sq
        integral = cumulative_trapezoid(integrand, p, initial=0.0)
        w = p - ((p[0] - w_low) / (1.0 + k) ** 2 + integral) * sq
    else:
        w = kernels.march_wage_curve(p, sq, k, res.mu, res.sigma, w_low)

    if np.any(np.diff(w) <= 0.0):
        step = int(np.argmax(np.diff(w) <= 0.0)) + 1
        raise EquilibriumError(f"wage-offer curve not strictly increasing at step {step}")
    if np.any(w > p):
        raise EquilibriumError("wage offers exceed productivity somewhere on the grid")
    return WageOfferCurve(p=p, w=w, offer_cdf=1.0 - sf, offer_sf=sf)


def wage_curve_residual(params: SegmentParams, curve: WageOfferCurve) -> np.ndarray:
    """Pointwise defect of the solved curve in its defining equation.

    Recomputes the right-hand side from the solved K with the same
    trapezoid accumulation and returns |K - rhs| on the grid.
    """
    res = params.reservation
    k = params.frictions.k
    sq = (1.0 + k * curve.offer_sf) ** 2
    hk = np.maximum(res.cdf(curve.w), np.finfo(float).tiny)
    iota = hk / sq
    integral = (curve.p[0] - curve.w[0]) / (1.0 + k) ** 2 * hk[0]
    integral = integral + cumulative_trapezoid(iota, curve.p, initial=0.0)
    rhs = curve.p - integral * sq / hk
    return np.abs(curve.w - rhs)


def _pool_weighted_cum(curve: WageOfferCurve, res: ReservationWageDist, k: float):
    """Cumulative integral of dH / (1 + k sf) along the wage grid.

    Trapezoid in H-measure: mass increments are exact CDF differences, so
    a sparse wage grid in a region of concentrated reservation mass costs
    only the (slowly varying) weight interpolation, not the mass itself.
    """
    weights = 1.0 / (1.0 + k * curve.offer_sf)
    mass = np.diff(res.cdf(curve.w))
    steps = 0.5 * (weights[1:] + weights[:-1]) * mass
    return np.concatenate([[0.0], np.cumsum(steps)])


def equilibrium_unemployment(params: SegmentParams, curve: WageOfferCurve) -> float:
    """Steady-state unemployment rate.

    Sums the mass of workers who accept everything, weighted 1/(1+k); the
    reservation-wage mass inside the offer support, each level weighted by
    its exit speed; and the mass whose reservation wage exceeds every
    posted wage (never employed).
    """
    res = params.reservation
    k = params.frictions.k
    w_low, w_high = curve.w_low, curve.w_high
    if res.is_degenerate:
        mu = res.mu
        if mu <= w_low:
            u = 1.0 / (1.0 + k)
        elif mu <= w_high:
            u = 1.0 / (1.0 + k * float(curve.offer_sf_at(mu)))
        else:
            u = 1.0
    else:
        integral = float(_pool_weighted_cum(curve, res, k)[-1])
        u = (
            float(res.cdf(w_low)) / (1.0 + k)
            + integral
            + 1.0
            - float(res.cdf(w_high))
        )
    if not 0.0 < u < 1.0:
        raise EquilibriumError(f"unemployment rate {u} outside (0, 1)")
    return u


@dataclass(frozen=True)
class AcceptedWageDist:
    """Realised (cross-sectional) wage distribution among the employed."""

    w: np.ndarray
    cdf: np.ndarray
    pdf: np.ndarray
    offer_pdf: np.ndarray

    def cdf_at(self, wage):
        wage = np.asarray(wage, dtype=float)
        return np.interp(wage, self.w, self.cdf, left=0.0, right=1.0)[()]


def actual_wage_cdf(
    params: SegmentParams, curve: WageOfferCurve, u: float
) -> AcceptedWageDist:
    """Cross-sectional wage distribution implied by the offer curve.

    G balances the inflow of unemployed accepting offers below w against
    the outflow of separations and poaching. The offer density has the
    closed form f = (1 + k sf) [1 - (p - w) h/H] / [2 k (p - w)], obtained
    by differentiating the curve equation; the realised density follows
    from the differentiated steady-state relation
    g = k H f / [(1-u)(1 + k sf)^2]. At the lower support the bracket
    vanishes by the lowest-wage optimality condition, so f(w_low) = 0.
    """
    res = params.reservation
    k = params.frictions.k
    fbar = curve.offer_sf
    hw = res.cdf(curve.w)
    pooled = 1.0 + k * fbar
    inner = _pool_weighted_cum(curve, res, k)
    if res.is_degenerate and res.mu > curve.w_low:
        inner = np.where(curve.w >= res.mu,
                         1.0 / (1.0 + k * float(curve.offer_sf_at(res.mu))), 0.0)
    stock_below = hw[0] / (1.0 + k) + inner
    G = (hw - pooled * stock_below) / (pooled * (1.0 - u))

    margin = curve.p - curve.w
    bracket = 1.0 - margin * res.pdf(curve.w) / hw
    offer_pdf = np.maximum(pooled * bracket / (2.0 * k * margin), 0.0)
    g = k * hw * offer_pdf / ((1.0 - u) * pooled**2)
    if np.any(g < 0.0):
        raise EquilibriumError("negative realised-wage density: inconsistent inputs")
    if np.any(np.diff(G) < -1e-9):
        raise EquilibriumError("realised-wage CDF is not monotone")
    return AcceptedWageDist(w=curve.w, cdf=G, pdf=g, offer_pdf=offer_pdf)


@dataclass(frozen=True)
class UnemployedPool:
    """Reservation-wage composition of the unemployed, u * H_u on a grid.

    ``mass_below`` carries the workers with b <= w_low (they accept every
    offer and exit at the full arrival rate); ``cum`` accumulates the
    exit-speed-weighted mass across the offer support; ``never_mass`` is
    the permanently unemployed tail b > w_high.
    """

    w: np.ndarray
    offer_sf: np.ndarray
    mass_below: float
    cum: np.ndarray
    never_mass: float
    k: float
    reservation: ReservationWageDist

    @property
    def employable_mass(self) -> float:
        return self.mass_below + float(self.cum[-1])

    @property
    def total_mass(self) -> float:
        return self.employable_mass + self.never_mass

    def scaled_cdf_at(self, b):
        """u * H_u(b), the unnormalised pool CDF."""
        b = np.asarray(b, dtype=float)
        below = self.reservation.cdf(np.minimum(b, self.w[0])) / (1.0 + self.k)
        inside = np.interp(b, self.w, self.cum, left=0.0, right=float(self.cum[-1]))
        above = np.where(
            b > self.w[-1],
            self.reservation.cdf(b) - self.reservation.cdf(self.w[-1]),
            0.0,
        )
        return (below + inside + above)[()]

    def sample_b(self, uniforms):
        """Draw reservation wages of unemployed restricted to b <= w_high."""
        q = np.asarray(uniforms, dtype=float) * self.employable_mass
        below = q <= self.mass_below
        out = np.empty_like(q)
        out[below] = self.reservation.ppf(np.minimum(q[below] * (1.0 + self.k), 1.0))
        out[~below] = np.interp(q[~below] - self.mass_below, self.cum, self.w)
        return out


def unemployed_mixture(params: SegmentParams, curve: WageOfferCurve) -> UnemployedPool:
    """Composition of the unemployed pool over reservation wages."""
    res = params.reservation
    k = params.frictions.k
    if res.is_degenerate:
        mu = res.mu
        mass_below = 1.0 / (1.0 + k) if mu <= curve.w_low else 0.0
        if curve.w_low < mu <= curve.w_high:
            cum = np.where(curve.w >= mu, 1.0 / (1.0 + k * float(curve.offer_sf_at(mu))), 0.0)
        else:
            cum = np.zeros_like(curve.w)
        never = 1.0 if mu > curve.w_high else 0.0
        return UnemployedPool(
            w=curve.w, offer_sf=curve.offer_sf, mass_below=mass_below,
            cum=cum, never_mass=never, k=k, reservation=res,
        )
    cum = _pool_weighted_cum(curve, res, k)
    if np.any(np.diff(cum) < 0.0):
        raise EquilibriumError("negative unemployed-pool weight")
    return UnemployedPool(
        w=curve.w,
        offer_sf=curve.offer_sf,
        mass_below=float(res.cdf(curve.w_low)) / (1.0 + k),
        cum=cum,
        never_mass=1.0 - float(res.cdf(curve.w_high)),
        k=k,
        reservation=res,
    )


@dataclass(frozen=True)
class EquilibriumSolution:
    """Everything the simulator and the decompositions need for one segment."""

    params: SegmentParams
    curve: WageOfferCurve
    u: float
    accepted: AcceptedWageDist
    pool: UnemployedPool

    @property
    def p(self) -> np.ndarray:
        return self.curve.p

    @property
    def w(self) -> np.ndarray:
        return self.curve.w

    @property
    def w_low(self) -> float:
        return self.curve.w_low

    @property
    def w_high(self) -> float:
        return self.curve.w_high


def solve_equilibrium(
    params: SegmentParams, grid_size: int = DEFAULT_GRID_SIZE
) -> EquilibriumSolution:
    """Forward-solve a segment: offer curve, unemployment, wages, pool."""
    curve = solve_wage_offer_curve(params, grid_size)
    u = equilibrium_unemployment(params, curve)
    accepted = actual_wage_cdf(params, curve, u)
    pool = unemployed_mixture(params, curve)
    return EquilibriumSolution(params=params, curve=curve, u=u, accepted=accepted, pool=pool)


@dataclass(frozen=True)
class InverseEquilibrium:
    """Offer distribution and unemployment recovered from a wage density."""

    w: np.ndarray
    offer_sf: np.ndarray
    offer_pdf: np.ndarray
    u: float

    def offer_sf_at(self, wage):
        wage = np.asarray(wage, dtype=float)
        return np.interp(wage, self.w, self.offer_sf, left=1.0, right=0.0)[()]


def offer_cdf_from_wage_density(
    wage_grid: np.ndarray,
    density: np.ndarray,
    frictions: FrictionParams,
    reservation: ReservationWageDist,
) -> InverseEquilibrium:
    """Recover the offer distribution from the realised-wage density.

    The steady-state flow equations give the employment share directly
    from the integral of g/H over the wage support, and the offer survival
    function from the same integral cut at each wage. The density is
    renormalised to unit mass on its grid first (the relations assume a
    proper density on the observed support).
    """
    k = frictions.k
    density = np.asarray(density, dtype=float)
    density = density / np.trapezoid(density, wage_grid)
    hw = np.asarray(reservation.cdf(wage_grid), dtype=float)
    if np.any(hw <= 0.0) or np.any(hw < NEGLIGIBLE_MASS * 1e-2):
        idx = int(np.argmin(hw))
        raise EquilibriumError(
            "H underflows on the wage support "
            f"(H({wage_grid[idx]:.4g}) = {hw[idx]:.3e}); the reservation-wage "
            "distribution is inconsistent with the observed wages"
        )
    ratio = density / hw
    cut = cumulative_trapezoid(ratio, wage_grid, initial=0.0)
    employed_share = k / ((1.0 + k) * cut[-1])
    inv_pooled = employed_share * cut + 1.0 / (1.0 + k)
    fbar = np.clip((1.0 / inv_pooled - 1.0) / k, 0.0, 1.0)
    u = 1.0 - employed_share
    # d/dw [1/(1+k Fbar)] = k f / (1+k Fbar)^2, so f = (1-u) g (1+k Fbar)^2 / (k H)
    offer_pdf = employed_share * density * (1.0 + k * fbar) ** 2 / (k * hw)
    if not 0.0 < u < 1.0:
        raise EquilibriumError(f"recovered unemployment rate {u} outside (0, 1)")
    return InverseEquilibrium(w=wage_grid, offer_sf=fbar, offer_pdf=offer_pdf, u=u)


def productivity_from_wage(w, g, reservation: ReservationWageDist, offer_sf, u, k):
    """Productivity of the firm posting wage w.

    Inverts the wage-offer curve using only observables: the firm's margin
    over the posted wage equals H(w) / [2 (1-u) g(w) (1 + k sf(w)) + h(w)].
    """
    w = np.asarray(w, dtype=float)
    g = np.asarray(g, dtype=float)
    h = np.asarray(reservation.pdf(w), dtype=float)
    denom = 2.0 * (1.0 - u) * g * (1.0 + k * np.asarray(offer_sf, dtype=float)) + h
    if np.any(denom <= 0.0):
        bad = np.asarray(w)[np.asarray(denom <= 0.0)]
        raise EquilibriumError(
            f"wage and reservation densities both vanish at w={bad.flat[0]:.6g}: "
            "cannot invert the wage-offer relation there"
        )
    return (w + reservation.cdf(w) / denom)[()]


def recover_productivity(
    wage_grid: np.ndarray,
    density: np.ndarray,
    frictions: FrictionParams,
    reservation: ReservationWageDist,
):
    """Full inverse pass: wage density to (productivity grid, inverse solution)."""
    inverse = offer_cdf_from_wage_density(wage_grid, density, frictions, reservation)
    prod = productivity_from_wage(
        wage_grid, density, reservation, inverse.offer_sf, inverse.u, frictions.k
    )
    return prod, inverse
