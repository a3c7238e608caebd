"""Parameter containers for one labour-market segment.

Wages, reservation wages, and productivities share a single unit (daily
wage in the original application); arrival and separation rates are per
day. All containers are frozen dataclasses and validate on construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr, ndtri

#: Reservation-wage scales below this are treated as a point mass at mu
#: (the CDF becomes a unit step).
DEGENERATE_SIGMA = 1e-6

#: Probability floor below which a normal CDF value is considered zero for
#: feasibility checks (argument beyond ~ -6.4 sigma).
NEGLIGIBLE_MASS = 1e-10


class InvalidSegmentError(ValueError):
    """Segment parameters violate a model invariant."""


@dataclass(frozen=True)
class FrictionParams:
    """Job-offer arrival rate and job-separation rate (per day)."""

    lam: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise InvalidSegmentError(f"lam must be finite and > 0, got {self.lam}")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise InvalidSegmentError(f"delta must be finite and > 0, got {self.delta}")
        if not math.isfinite(self.lam / self.delta):
            raise InvalidSegmentError("k = lam/delta is not finite")

    @property
    def k(self) -> float:
        """Offer-to-separation ratio lam/delta."""
        return self.lam / self.delta


@dataclass(frozen=True)
class ReservationWageDist:
    """Normal distribution of reservation wages across workers.

    A scale below ``DEGENERATE_SIGMA`` collapses the distribution to a
    point mass at ``mu``: the CDF becomes a unit step and the density is
    zero away from the atom (callers integrating against dH must handle
    the atom explicitly).
    """

    mu: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise InvalidSegmentError(f"mu must be finite, got {self.mu}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise InvalidSegmentError(f"sigma must be finite and >= 0, got {self.sigma}")

    @property
    def is_degenerate(self) -> bool:
        return self.sigma < DEGENERATE_SIGMA

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_degenerate:
            return np.where(x >= self.mu, 1.0, 0.0)[()]
        return ndtr((x - self.mu) / self.sigma)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_degenerate:
            return np.zeros_like(x)[()]
        z = (x - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        if self.is_degenerate:
            return np.full_like(q, self.mu)[()]
        return self.mu + self.sigma * ndtri(q)


@dataclass(frozen=True)
class ParetoProductivity:
    """Pareto law of firm productivity, truncated for quadrature at q_max.

    CDF: 1 - (p_min / p) ** alpha for p >= p_min. alpha > 1 is required
    so the mean exists; integrals over the unbounded support are cut at
    the q_max quantile (mass beyond is q_max-complement, 1e-4 by default).
    """

    p_min: float
    alpha: float
    q_max: float = 1.0 - 1e-4

    def __post_init__(self):
        if not (math.isfinite(self.p_min) and self.p_min > 0):
            raise InvalidSegmentError(f"p_min must be finite and > 0, got {self.p_min}")
        if not (math.isfinite(self.alpha) and self.alpha > 1):
            raise InvalidSegmentError(f"alpha must be > 1 for a finite mean, got {self.alpha}")
        if not 0 < self.q_max < 1:
            raise InvalidSegmentError(f"q_max must lie in (0, 1), got {self.q_max}")

    def cdf(self, p):
        p = np.asarray(p, dtype=float)
        out = 1.0 - (self.p_min / np.maximum(p, self.p_min)) ** self.alpha
        return np.where(p < self.p_min, 0.0, out)[()]

    def sf(self, p):
        return 1.0 - self.cdf(p)

    def pdf(self, p):
        p = np.asarray(p, dtype=float)
        out = self.alpha * self.p_min**self.alpha * p ** (-self.alpha - 1.0)
        return np.where(p < self.p_min, 0.0, out)[()]

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        return (self.p_min * (1.0 - q) ** (-1.0 / self.alpha))[()]

    @property
    def p_cut(self) -> float:
        """Upper integration limit: the q_max quantile."""
        return float(self.ppf(self.q_max))


@dataclass(frozen=True)
class SegmentParams:
    """Full parameter vector of one segment.

    ``productivity`` is required for the forward solve and optional when
    working from an observed wage density; ``wage_support`` is determined
    by the solver in forward mode and by the sample in inverse mode.
    """

    frictions: FrictionParams
    reservation: ReservationWageDist
    productivity: ParetoProductivity | None = None
    wage_support: tuple[float, float] | None = None

    def __post_init__(self):
        if self.wage_support is not None:
            lo, hi = self.wage_support
            if not lo < hi:
                raise InvalidSegmentError(f"wage support must satisfy w_min < w_max, got {self.wage_support}")

    @classmethod
    def from_values(
        cls,
        lam: float,
        delta: float,
        mu: float,
        sigma: float,
        p_min: float | None = None,
        alpha: float | None = None,
        q_max: float = 1.0 - 1e-4,
        wage_support: tuple[float, float] | None = None,
    ) -> "SegmentParams":
        productivity = None
        if p_min is not None or alpha is not None:
            if p_min is None or alpha is None:
                raise InvalidSegmentError("p_min and alpha must be given together")
            productivity = ParetoProductivity(p_min, alpha, q_max)
        return cls(
            frictions=FrictionParams(lam, delta),
            reservation=ReservationWageDist(mu, sigma),
            productivity=productivity,
            wage_support=wage_support,
        )

    def replace_values(self, **kwargs) -> "SegmentParams":
        """Return a copy with flat parameter names replaced.

        Accepts any of lam, delta, mu, sigma, p_min, alpha, q_max.
        """
        frictions = self.frictions
        reservation = self.reservation
        productivity = self.productivity
        if "lam" in kwargs or "delta" in kwargs:
            frictions = FrictionParams(
                kwargs.pop("lam", frictions.lam), kwargs.pop("delta", frictions.delta)
            )
        if "mu" in kwargs or "sigma" in kwargs:
            reservation = ReservationWageDist(
                kwargs.pop("mu", reservation.mu), kwargs.pop("sigma", reservation.sigma)
            )
        if any(name in kwargs for name in ("p_min", "alpha", "q_max")):
            if productivity is None:
                raise InvalidSegmentError("segment has no productivity law to replace")
            productivity = ParetoProductivity(
                kwargs.pop("p_min", productivity.p_min),
                kwargs.pop("alpha", productivity.alpha),
                kwargs.pop("q_max", productivity.q_max),
            )
        if kwargs:
            raise InvalidSegmentError(f"unknown parameter names: {sorted(kwargs)}")
        return replace(
            self, frictions=frictions, reservation=reservation, productivity=productivity
        )

    def value_of(self, name: str) -> float:
        """Flat read access used by the counterfactual machinery."""
        if name in ("lam", "delta"):
            return getattr(self.frictions, name)
        if name in ("mu", "sigma"):
            return getattr(self.reservation, name)
        if name in ("p_min", "alpha"):
            if self.productivity is None:
                raise InvalidSegmentError("segment has no productivity law")
            return getattr(self.productivity, name)
        raise InvalidSegmentError(f"unknown parameter name: {name}")
