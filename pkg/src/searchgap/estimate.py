"""Maximum-likelihood estimation of (lam, delta, mu, sigma) from spell data.

Optimisation runs over transformed coordinates (log lam, log delta, mu,
log sigma) with a derivative-free simplex from several perturbed
method-of-moments starts. Percentile confidence intervals come from a
nonparametric bootstrap over spells, with the wage-density nuisance
re-estimated inside every replicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .likelihood import LikelihoodError, SpellLikelihood
from .simulate import DEST_E, DEST_U, ORIGIN_E, ORIGIN_U, Spell

PARAM_NAMES = ("lam", "delta", "mu", "sigma")

SIMPLEX_XATOL = 1e-6
SIMPLEX_MAXITER = 2000


class IdentificationError(ValueError):
    """The sample cannot identify the structural parameters."""


def check_identifiable(spells: list[Spell]) -> None:
    """Require at least one uncensored transition of every exit type."""
    missing = []
    if not any(s.origin == ORIGIN_U and not s.censored for s in spells):
        missing.append("unemployment-to-job (U->E)")
    if not any(s.origin == ORIGIN_E and not s.censored and s.destination == DEST_U
               for s in spells):
        missing.append("job-to-unemployment (E->U)")
    if not any(s.origin == ORIGIN_E and not s.censored and s.destination == DEST_E
               for s in spells):
        missing.append("job-to-job (E->E)")
    if missing:
        raise IdentificationError(
            "sample cannot identify the model: no uncensored "
            + "; no uncensored ".join(missing)
            + " transitions"
        )


def moment_seeds(spells: list[Spell]) -> tuple[float, float, float, float]:
    """Method-of-moments starting values.

    delta from job-to-unemployment events over total employment exposure,
    lam from job-finding events over unemployment exposure (treating all
    offers as acceptable), mu near the bottom of the observed wages,
    sigma from their spread.
    """
    e_durs = [s.duration for s in spells if s.origin == ORIGIN_E]
    u_durs = [s.duration for s in spells if s.origin == ORIGIN_U]
    n_eu = sum(1 for s in spells
               if s.origin == ORIGIN_E and not s.censored and s.destination == DEST_U)
    n_ue = sum(1 for s in spells if s.origin == ORIGIN_U and not s.censored)
    wages = np.array([s.wage for s in spells if s.wage is not None])
    delta0 = n_eu / max(sum(e_durs), 1e-12)
    lam0 = n_ue / max(sum(u_durs), 1e-12)
    mu0 = float(np.quantile(wages, 0.10))
    sigma0 = max(float(np.std(wages)) / 2.0, 1e-3)
    return lam0, delta0, mu0, sigma0


@dataclass(frozen=True)
class BootstrapResult:
    """Percentile intervals and per-replicate estimates."""

    intervals: dict[str, tuple[float, float]]
    draws: np.ndarray
    n_replicates: int
    n_failed: int

    @property
    def flagged(self) -> bool:
        """True when more than 10% of replicates failed to converge."""
        return self.n_failed > 0.1 * self.n_replicates


@dataclass
class FitResult:
    """Point estimates with convergence diagnostics."""

    lam: float
    delta: float
    mu: float
    sigma: float
    loglik: float
    converged: bool
    n_iterations: int
    n_evaluations: int
    best_start: int
    implied_u: float
    flat_params: tuple[str, ...] = ()
    message: str = ""
    bootstrap: BootstrapResult | None = None
    start_values: tuple[float, float, float, float] = field(default=(0.0, 0.0, 0.0, 0.0))

    def values(self) -> tuple[float, float, float, float]:
        return self.lam, self.delta, self.mu, self.sigma

    def as_dict(self) -> dict[str, float]:
        return dict(zip(PARAM_NAMES, self.values()))


def _pack(lam, delta, mu, sigma):
    return np.array([np.log(lam), np.log(delta), mu, np.log(sigma)])


def _unpack(x):
    return float(np.exp(x[0])), float(np.exp(x[1])), float(x[2]), float(np.exp(x[3]))


def _objective(evaluator: SpellLikelihood):
    def fun(x):
        if not np.all(np.isfinite(x)) or max(abs(x[0]), abs(x[1]), abs(x[3])) > 50.0:
            return 1e300
        try:
            value = evaluator.loglik(*_unpack(x))
        except (LikelihoodError, FloatingPointError):
            return 1e300
        return -value if np.isfinite(value) else 1e300

    return fun


def _minimize_from(evaluator, x0):
    return minimize(
        _objective(evaluator),
        x0,
        method="Nelder-Mead",
        options={
            "xatol": SIMPLEX_XATOL,
            "fatol": SIMPLEX_XATOL,
            "maxiter": SIMPLEX_MAXITER,
            "maxfev": 4 * SIMPLEX_MAXITER,
        },
    )


def _flat_directions(evaluator, x_opt, f_opt, tol=1e-2):
    """Names of parameters whose 1% perturbation barely moves the objective."""
    fun = _objective(evaluator)
    flat = []
    for j, name in enumerate(PARAM_NAMES):
        step = 0.01 * max(1.0, abs(x_opt[j]))
        moved = max(
            abs(fun(x_opt + step * np.eye(4)[j]) - f_opt),
            abs(fun(x_opt - step * np.eye(4)[j]) - f_opt),
        )
        if moved < tol:
            flat.append(name)
    return tuple(flat)


def mle_fit(
    spells: list[Spell],
    truncation_q: float = 0.05,
    n_starts: int = 3,
    seed: int = 0,
    grid_size: int | None = None,
    probe_flatness: bool = True,
) -> FitResult:
    """Fit the four structural parameters by multi-start simplex search."""
    check_identifiable(spells)
    evaluator = SpellLikelihood.from_spells(spells, truncation_q=truncation_q,
                                            grid_size=grid_size)
    seeds = moment_seeds(spells)
    x_base = _pack(*seeds)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed)))

    best = None
    best_idx = -1
    for j in range(n_starts):
        if j == 0:
            x0 = x_base.copy()
        else:
            shift = rng.uniform(-0.3, 0.3, size=4)
            x0 = x_base + np.array([shift[0], shift[1], shift[2] * abs(x_base[2]), shift[3]])
        res = _minimize_from(evaluator, x0)
        if best is None or res.fun < best.fun:
            best, best_idx = res, j
    if best is None or not np.isfinite(best.fun) or best.fun >= 1e300:
        raise LikelihoodError("all optimisation starts failed")

    lam, delta, mu, sigma = _unpack(best.x)
    flat = _flat_directions(evaluator, best.x, best.fun) if probe_flatness else ()
    return FitResult(
        lam=lam,
        delta=delta,
        mu=mu,
        sigma=sigma,
        loglik=-float(best.fun),
        converged=bool(best.success),
        n_iterations=int(best.nit),
        n_evaluations=int(best.nfev),
        best_start=best_idx,
        implied_u=evaluator.implied_unemployment(lam, delta, mu, sigma),
        flat_params=flat,
        message=str(best.message),
        start_values=seeds,
    )


def _refit_for_bootstrap(resample, fit, truncation_q, grid_size):
    evaluator = SpellLikelihood.from_spells(resample, truncation_q=truncation_q,
                                            grid_size=grid_size)
    res = _minimize_from(evaluator, _pack(*fit.values()))
    if not res.success or res.fun >= 1e300:
        return None
    return _unpack(res.x)


def bootstrap_ci(
    spells: list[Spell],
    fit: FitResult,
    n_boot: int = 200,
    seed: int = 0,
    truncation_q: float = 0.05,
    grid_size: int | None = None,
    refit=None,
) -> BootstrapResult:
    """Percentile intervals from nonparametric resamples of the spells.

    Each replicate resamples individuals with replacement, re-estimates
    the wage-density nuisance, and restarts the simplex from the point
    estimate. ``refit`` may replace the refitting step (it receives the
    resampled spell list and returns the four parameter values or None on
    failure).
    """
    if refit is None:
        def refit(resample):
            return _refit_for_bootstrap(resample, fit, truncation_q, grid_size)

    n = len(spells)
    draws = []
    n_failed = 0
    for b in range(n_boot):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(b,)))
        )
        idx = rng.integers(0, n, size=n)
        resample = [spells[i] for i in idx]
        try:
            values = refit(resample)
        except (LikelihoodError, IdentificationError, ValueError):
            values = None
        if values is None:
            n_failed += 1
        else:
            draws.append(values)
    if not draws:
        raise LikelihoodError("every bootstrap replicate failed to converge")
    draws = np.asarray(draws)
    lo, hi = np.percentile(draws, [2.5, 97.5], axis=0)
    intervals = {name: (float(lo[j]), float(hi[j])) for j, name in enumerate(PARAM_NAMES)}
    return BootstrapResult(
        intervals=intervals, draws=draws, n_replicates=n_boot, n_failed=n_failed
    )
