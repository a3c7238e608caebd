"""Flow-sample likelihood of the structural parameters.

The sample-level nuisance is the kernel estimate of the realised-wage
density; everything else (offer survival function, unemployment rate,
offer density at observed wages) is recomputed from it at each candidate
parameter vector through the steady-state relations.

Unemployment spells mix over the unobserved reservation wage: a lump of
workers who accept everything (b below the lowest observed wage) plus a
Gauss-Legendre integral over the interior, each level weighted by its
representation in the unemployed pool. Employment spells face competing
exponential risks of separation and poaching.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import ndtr

from ._backend import kernels
from .kde import WageDensityEstimate, kernel_wage_density
from .params import SegmentParams
from .simulate import DEST_U, ORIGIN_E, ORIGIN_U, Spell

GL_NODES = 64
#: undersmoothing factor for the plug-in wage density (see kde module)
NUISANCE_BANDWIDTH_SCALE = 0.5
_LOG_FLOOR = 1e-300
_SQRT_2PI = np.sqrt(2.0 * np.pi)


class LikelihoodError(ValueError):
    """The sample or a parameter vector cannot be evaluated."""


def truncate_spells(spells: list[Spell], truncation_q: float) -> list[Spell]:
    """Drop spells whose wage falls below the truncation quantile.

    The cutoff is taken on employed-spell wages (the realised wage
    distribution is what register data truncate badly); spells without a
    wage are kept.
    """
    if truncation_q <= 0.0:
        return list(spells)
    e_wages = [s.wage for s in spells if s.origin == ORIGIN_E]
    if not e_wages:
        return list(spells)
    cut = float(np.quantile(np.asarray(e_wages, dtype=float), truncation_q))
    return [s for s in spells if s.wage is None or s.wage >= cut]


@dataclass(frozen=True)
class _ThetaContext:
    """Distribution-level quantities implied by one parameter vector."""

    u: float
    h_grid: np.ndarray
    fbar_grid: np.ndarray
    h_low: float

    @classmethod
    def build(cls, density: WageDensityEstimate, k: float, mu: float, sigma: float):
        grid = density.grid
        h_grid = ndtr((grid - mu) / sigma)
        if h_grid[0] <= 0.0:
            return None  # reservation wages numerically above the support
        cut = cumulative_trapezoid(density.density / h_grid, grid, initial=0.0)
        employed_share = k / ((1.0 + k) * cut[-1])
        inv_pooled = employed_share * cut + 1.0 / (1.0 + k)
        fbar_grid = np.clip((1.0 / inv_pooled - 1.0) / k, 0.0, 1.0)
        return cls(
            u=1.0 - employed_share,
            h_grid=h_grid,
            fbar_grid=fbar_grid,
            h_low=float(h_grid[0]),
        )


class SpellLikelihood:
    """Likelihood evaluator for one spell sample.

    Precomputes every parameter-independent array once (quadrature nodes,
    interpolation positions on the density grid, observed-wage density
    values) so repeated evaluation inside the optimiser touches only
    arithmetic kernels.
    """

    def __init__(self, spells: list[Spell], density: WageDensityEstimate):
        self.density = density
        grid = density.grid
        self.w_low, self.w_high = density.support
        step = grid[1] - grid[0]

        u_spells = [s for s in spells if s.origin == ORIGIN_U]
        e_spells = [s for s in spells if s.origin == ORIGIN_E]
        self.n_unemployed = len(u_spells)
        self.n_employed = len(e_spells)

        self.t_u = np.array([s.duration for s in u_spells])
        self.cens_u = np.array([s.censored for s in u_spells], dtype=bool)
        self.w_u = np.array(
            [self.w_low if s.wage is None else s.wage for s in u_spells]
        )
        upper = np.where(self.cens_u, self.w_high, self.w_u)
        nodes, weights = np.polynomial.legendre.leggauss(GL_NODES)
        self.gl_weights = weights
        self.half_u = (upper - self.w_low) / 2.0
        self.node_b = (upper[:, None] + self.w_low) / 2.0 + self.half_u[:, None] * nodes[None, :]
        pos = np.clip((self.node_b - grid[0]) / step, 0.0, grid.size - 1.0)
        self.node_idx = np.minimum(pos.astype(np.int64), grid.size - 2)
        self.node_frac = pos - self.node_idx
        pos_wu = np.clip((self.w_u - grid[0]) / step, 0.0, grid.size - 1.0)
        self.wu_idx = np.minimum(pos_wu.astype(np.int64), grid.size - 2)
        self.wu_frac = pos_wu - self.wu_idx
        self.g_at_wu = np.asarray(density.density_at(self.w_u), dtype=float)

        self.t_e = np.array([s.duration for s in e_spells])
        self.cens_e = np.array([s.censored for s in e_spells], dtype=bool)
        self.v_e = np.array([s.destination == DEST_U for s in e_spells], dtype=float)
        self.w_e = np.array([s.wage for s in e_spells])
        pos_we = np.clip((self.w_e - grid[0]) / step, 0.0, grid.size - 1.0)
        self.we_idx = np.minimum(pos_we.astype(np.int64), grid.size - 2)
        self.we_frac = pos_we - self.we_idx
        self.log_g_at_we = np.log(
            np.maximum(np.asarray(density.density_at(self.w_e), dtype=float), _LOG_FLOOR)
        )

    @classmethod
    def from_spells(
        cls,
        spells: list[Spell],
        truncation_q: float = 0.05,
        grid_size: int | None = None,
    ) -> "SpellLikelihood":
        """Truncate, estimate the wage density, and set up the evaluator.

        The density uses the employed-spell wages (the realised wage
        distribution) on the log scale when wages are positive; the grid
        spans every observed wage so exit wages of unemployment spells
        stay inside the support.
        """
        kept = truncate_spells(spells, truncation_q)
        e_wages = [s.wage for s in kept if s.origin == ORIGIN_E]
        all_wages = [s.wage for s in kept if s.wage is not None]
        if not e_wages or not all_wages:
            raise LikelihoodError("sample has no wage observations")
        support = (min(all_wages), max(all_wages))
        kwargs = {} if grid_size is None else {"grid_size": grid_size}
        density = kernel_wage_density(
            e_wages, truncation_q=0.0, support=support,
            log_scale=support[0] > 0.0, bandwidth_scale=NUISANCE_BANDWIDTH_SCALE,
            **kwargs,
        )
        return cls(kept, density)

    def _gather(self, values: np.ndarray, idx: np.ndarray, frac: np.ndarray) -> np.ndarray:
        return (1.0 - frac) * values[idx] + frac * values[idx + 1]

    def loglik_terms(self, lam, delta, mu, sigma):
        """Per-spell log contributions, (unemployed, employed)."""
        if min(lam, delta, sigma) <= 0.0:
            raise LikelihoodError("lam, delta, sigma must be positive")
        k = lam / delta
        ctx = _ThetaContext.build(self.density, k, mu, sigma)
        if ctx is None:
            raise LikelihoodError(
                "H underflows on the wage support: reservation-wage "
                "distribution inconsistent with the observed wages"
            )
        lu = self._unemployed_terms(ctx, lam, k, mu, sigma)
        le = self._employed_terms(ctx, lam, delta, k)
        return lu, le

    def loglik(self, lam, delta, mu, sigma) -> float:
        lu, le = self.loglik_terms(lam, delta, mu, sigma)
        return float(lu.sum() + le.sum())

    def implied_unemployment(self, lam, delta, mu, sigma) -> float:
        ctx = _ThetaContext.build(self.density, lam / delta, mu, sigma)
        if ctx is None:
            raise LikelihoodError("H underflows on the wage support")
        return ctx.u

    def _unemployed_terms(self, ctx, lam, k, mu, sigma):
        if self.n_unemployed == 0:
            return np.zeros(0)
        integrals = kernels.lu_mixture_integrals(
            self.t_u, self.node_b, self.node_idx, self.node_frac, self.half_u,
            self.gl_weights, ctx.fbar_grid, lam, k, mu, sigma,
        )
        if not np.all(np.isfinite(integrals)):
            bad = int(np.argmax(~np.isfinite(integrals)))
            raise LikelihoodError(
                f"nonfinite mixture integrand for unemployment spell {bad} "
                f"(t={self.t_u[bad]:.6g})"
            )
        lump = ctx.h_low / (1.0 + k) * np.exp(-lam * self.t_u)
        uncens = ~self.cens_u
        lu = np.empty(self.n_unemployed)
        lu[self.cens_u] = lump[self.cens_u] + integrals[self.cens_u]
        if np.any(uncens):
            fbar_wu = self._gather(ctx.fbar_grid, self.wu_idx, self.wu_frac)[uncens]
            h_wu = ndtr((self.w_u[uncens] - mu) / sigma)
            f_wu = (
                (1.0 - ctx.u)
                * self.g_at_wu[uncens]
                * (1.0 + k * fbar_wu) ** 2
                / (k * h_wu)
            )
            lu[uncens] = lam * f_wu * (lump[uncens] + integrals[uncens])
        return np.log(np.maximum(lu, _LOG_FLOOR))

    def _employed_terms(self, ctx, lam, delta, k):
        if self.n_employed == 0:
            return np.zeros(0)
        fbar_we = self._gather(ctx.fbar_grid, self.we_idx, self.we_frac)
        log_hazard = self.v_e * np.log(delta) + (1.0 - self.v_e) * np.log(
            np.maximum(lam * fbar_we, _LOG_FLOOR)
        )
        return (
            np.log(1.0 - ctx.u)
            + self.log_g_at_we
            - (delta + lam * fbar_we) * self.t_e
            + np.where(self.cens_e, 0.0, log_hazard)
        )


def loglik_unemployed(spell: Spell, params: SegmentParams,
                      density: WageDensityEstimate) -> float:
    """Log contribution of one unemployment spell."""
    if spell.origin != ORIGIN_U:
        raise LikelihoodError(f"expected an unemployment spell, got origin {spell.origin!r}")
    ev = SpellLikelihood([spell], density)
    lu, _ = ev.loglik_terms(
        params.frictions.lam, params.frictions.delta,
        params.reservation.mu, params.reservation.sigma,
    )
    return float(lu[0])


def loglik_employed(spell: Spell, params: SegmentParams,
                    density: WageDensityEstimate) -> float:
    """Log contribution of one employment spell."""
    if spell.origin != ORIGIN_E:
        raise LikelihoodError(f"expected an employment spell, got origin {spell.origin!r}")
    ev = SpellLikelihood([spell], density)
    _, le = ev.loglik_terms(
        params.frictions.lam, params.frictions.delta,
        params.reservation.mu, params.reservation.sigma,
    )
    return float(le[0])
