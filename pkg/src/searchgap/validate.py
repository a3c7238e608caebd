"""Monte Carlo validation: simulate, re-estimate, summarise, check.

Runs the replicate loop for a segment pair, prints a summary shaped like
the published validation table (true value, mean, median, 2.5 and 97.5
replicate percentiles per parameter), and evaluates the decomposition of
the pair against its solved values.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .decompose import DecompositionRow, SegmentPair, counterfactual_grid
from .equilibrium import solve_equilibrium
from .estimate import mle_fit
from .likelihood import LikelihoodError
from .params import SegmentParams
from .simulate import SimConfig, generate_flow_sample, replicate_rng, split_sample_size

SUMMARY_ROWS = ("true", "mean", "median", "p2.5", "p97.5")
PARAM_LABELS = ("mu", "sigma", "lam", "delta", "u")


@dataclass
class SegmentValidation:
    """Replicate estimates and summary statistics for one segment."""

    name: str
    true_values: dict[str, float]
    estimates: np.ndarray  # columns mu, sigma, lam, delta, u
    n_failed: int

    def summary(self) -> dict[str, dict[str, float]]:
        out = {}
        lo, hi = np.percentile(self.estimates, [2.5, 97.5], axis=0)
        mean = self.estimates.mean(axis=0)
        med = np.median(self.estimates, axis=0)
        for j, name in enumerate(PARAM_LABELS):
            out[name] = {
                "true": self.true_values[name],
                "mean": float(mean[j]),
                "median": float(med[j]),
                "p2.5": float(lo[j]),
                "p97.5": float(hi[j]),
            }
        return out

    def containment(self) -> dict[str, bool]:
        """Whether each true structural parameter sits inside its band."""
        s = self.summary()
        return {
            name: s[name]["p2.5"] <= s[name]["true"] <= s[name]["p97.5"]
            for name in ("mu", "sigma", "lam", "delta")
        }


@dataclass
class ValidationReport:
    segments: list[SegmentValidation]
    decomposition: list[DecompositionRow]
    n_replicates: int
    n_obs: int
    seed: int
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def validate_segment(
    name: str,
    params: SegmentParams,
    n_replicates: int,
    n_obs: int,
    seed: int,
    truncation_q: float = 0.0,
    n_starts: int = 3,
) -> SegmentValidation:
    """Simulate and refit one segment n_replicates times."""
    eq = solve_equilibrium(params)
    rows = []
    n_failed = 0
    for r in range(n_replicates):
        rng = replicate_rng(seed, r)
        n_u, n_e = split_sample_size(eq, n_obs, rng)
        cfg = SimConfig(n_unemployed=n_u, n_employed=n_e, seed=seed,
                        segment=params, segment_id=name)
        spells = generate_flow_sample(cfg, eq, replicate=r)
        try:
            fit = mle_fit(spells, truncation_q=truncation_q, n_starts=n_starts,
                          seed=seed + r, probe_flatness=False)
        except LikelihoodError:
            n_failed += 1
            continue
        rows.append([fit.mu, fit.sigma, fit.lam, fit.delta, fit.implied_u])
    if not rows:
        raise LikelihoodError(f"no replicate produced an estimate for segment {name}")
    return SegmentValidation(
        name=name,
        true_values={
            "mu": params.reservation.mu,
            "sigma": params.reservation.sigma,
            "lam": params.frictions.lam,
            "delta": params.frictions.delta,
            "u": eq.u,
        },
        estimates=np.asarray(rows),
        n_failed=n_failed,
    )


def run_validation(
    reference: SegmentParams,
    comparison: SegmentParams,
    n_replicates: int,
    n_obs: int = 2000,
    seed: int = 0,
    truncation_q: float = 0.0,
    min_containment: int = 7,
    u_tolerance: float = 0.01,
) -> ValidationReport:
    """Full validation: replicate loop for both segments plus decomposition.

    With zero replicates only the decomposition section is produced. The
    checks record, per segment pair, whether at least ``min_containment``
    of the 8 structural parameters land inside their replicate percentile
    bands and whether the mean implied unemployment rate is within
    ``u_tolerance`` of the equilibrium value.
    """
    pair = SegmentPair(reference=reference, comparison=comparison)
    decomposition = counterfactual_grid(pair)
    segments = []
    checks: dict[str, bool] = {}
    if n_replicates > 0:
        for name, params in (("reference", reference), ("comparison", comparison)):
            seg = validate_segment(name, params, n_replicates, n_obs,
                                   seed=seed, truncation_q=truncation_q)
            segments.append(seg)
        contained = sum(sum(seg.containment().values()) for seg in segments)
        checks[f"containment_{min_containment}_of_8"] = contained >= min_containment
        for seg in segments:
            s = seg.summary()
            checks[f"implied_u_mean_{seg.name}"] = (
                abs(s["u"]["mean"] - s["u"]["true"]) <= u_tolerance
            )
    return ValidationReport(
        segments=segments,
        decomposition=decomposition,
        n_replicates=n_replicates,
        n_obs=n_obs,
        seed=seed,
        checks=checks,
    )


def format_report(report: ValidationReport) -> str:
    """Human-readable validation summary."""
    buf = io.StringIO()
    print(f"validation: {report.n_replicates} replicates x {report.n_obs} spells, "
          f"seed {report.seed}", file=buf)
    for seg in report.segments:
        print(f"\nsegment {seg.name} ({seg.estimates.shape[0]} fits, "
              f"{seg.n_failed} failures)", file=buf)
        s = seg.summary()
        header = "          " + "".join(f"{p:>12s}" for p in PARAM_LABELS)
        print(header, file=buf)
        for row in SUMMARY_ROWS:
            vals = "".join(f"{s[p][row]:12.4f}" for p in PARAM_LABELS)
            print(f"{row:>10s}{vals}", file=buf)
        contain = seg.containment()
        print("contained " + "".join(
            f"{str(contain.get(p, '-')):>12s}" for p in PARAM_LABELS), file=buf)
    print("\ndecomposition (reference vs comparison):", file=buf)
    for row in report.decomposition:
        diff = "      -" if row.wage_differential is None else f"{row.wage_differential:7.3f}"
        eq = "+".join(row.equalized) or "(none)"
        print(f"  ({row.experiment_id:2d}) equalised {eq:<28s} "
              f"differential {diff}  effect {row.migrant_effect:7.3f}", file=buf)
    if report.checks:
        print("\nchecks:", file=buf)
        for name, ok in report.checks.items():
            print(f"  {name}: {'PASS' if ok else 'FAIL'}", file=buf)
    return buf.getvalue()
