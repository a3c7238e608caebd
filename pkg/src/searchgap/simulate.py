"""Flow-sample and panel simulation from a solved equilibrium.

A flow sample mirrors register data: each observation is one spell with
its origin state, duration, wage, destination, and a right-censoring
flag. Unemployed spells condition on pool membership (reservation wages
are drawn from the unemployed mixture, not from the population
distribution) and exit at rate lam * sf(b); employed spells carry a wage
drawn from the realised cross-section and face competing exits to
unemployment and to better-paying jobs.

Randomness: one counter-based stream per (seed, replicate); every spell
consumes a fixed-width row of uniforms, so output is order-deterministic
and replicates can be generated in parallel.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .equilibrium import EquilibriumSolution, solve_equilibrium
from .params import SegmentParams

ORIGIN_E = "E"
ORIGIN_U = "U"
DEST_E = "E"
DEST_U = "U"
DEST_CENSORED = "CENSORED"

SPELL_FIELDS = ("segment_id", "origin", "duration_days", "wage", "destination", "censored")

#: uniforms consumed per spell (fixed so streams are index-addressable)
_DRAWS_PER_SPELL = 3


class SpellSchemaError(ValueError):
    """A spell record violates the CSV schema."""


@dataclass(frozen=True)
class Spell:
    """One labour-market spell of the flow sample."""

    segment_id: str
    origin: str
    duration: float
    wage: float | None
    destination: str
    censored: bool

    def __post_init__(self):
        if self.origin not in (ORIGIN_E, ORIGIN_U):
            raise SpellSchemaError(f"origin must be E or U, got {self.origin!r}")
        if self.destination not in (DEST_E, DEST_U, DEST_CENSORED):
            raise SpellSchemaError(f"bad destination {self.destination!r}")
        if (self.destination == DEST_CENSORED) != self.censored:
            raise SpellSchemaError("destination CENSORED iff censored flag set")
        if not self.duration > 0:
            raise SpellSchemaError(f"duration must be positive, got {self.duration}")
        if self.wage is None and not (self.origin == ORIGIN_U and self.censored):
            raise SpellSchemaError("wage may be empty only for censored unemployment spells")


@dataclass(frozen=True)
class SimConfig:
    """Counts, censoring horizon, and seed for one flow sample."""

    n_unemployed: int
    n_employed: int
    seed: int
    segment: SegmentParams
    censor_horizon: float | None = None
    segment_id: str = "0"

    def __post_init__(self):
        if self.n_unemployed < 0 or self.n_employed < 0:
            raise ValueError("spell counts must be nonnegative")
        if self.censor_horizon is not None and not self.censor_horizon > 0:
            raise ValueError("censor horizon must be positive (or None)")


def replicate_rng(seed: int, replicate: int = 0) -> np.random.Generator:
    """Counter-based stream for one replicate, derived from the root seed."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replicate,))
    return np.random.Generator(np.random.Philox(ss))


def replicate_seed_id(seed: int, replicate: int = 0) -> int:
    """Stable integer identifying the derived stream (for manifests)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replicate,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _unemployed_from_uniforms(eq: EquilibriumSolution, u3: np.ndarray,
                              censor_horizon, segment_id: str) -> list[Spell]:
    """Vectorised unemployed draws; u3 has one row of 3 uniforms per spell."""
    pool, curve = eq.pool, eq.curve
    lam = eq.params.frictions.lam
    b = pool.sample_b(u3[:, 0])
    sf_b = np.asarray(curve.offer_sf_at(b), dtype=float)
    durations = -np.log1p(-u3[:, 1]) / (lam * sf_b)
    # accepted wage from the offer density truncated at b
    target = 1.0 - sf_b * (1.0 - u3[:, 2])
    wages = np.interp(target, curve.offer_cdf, curve.w)
    spells = []
    for i in range(b.shape[0]):
        if censor_horizon is not None and durations[i] > censor_horizon:
            spells.append(Spell(segment_id, ORIGIN_U, float(censor_horizon), None,
                                DEST_CENSORED, True))
        else:
            spells.append(Spell(segment_id, ORIGIN_U, float(durations[i]),
                                float(wages[i]), DEST_E, False))
    return spells


def _employed_from_uniforms(eq: EquilibriumSolution, u3: np.ndarray,
                            censor_horizon, segment_id: str,
                            wage: float | None = None) -> list[Spell]:
    """Vectorised employed draws; u3 has one row of 3 uniforms per spell."""
    curve = eq.curve
    lam = eq.params.frictions.lam
    delta = eq.params.frictions.delta
    accepted = eq.accepted
    if wage is None:
        wages = np.interp(u3[:, 0] * accepted.cdf[-1], accepted.cdf, accepted.w)
    else:
        wages = np.full(u3.shape[0], float(wage))
    sf_w = np.asarray(curve.offer_sf_at(wages), dtype=float)
    rate = delta + lam * sf_w
    durations = -np.log1p(-u3[:, 1]) / rate
    to_unemployment = u3[:, 2] < delta / rate
    spells = []
    for i in range(wages.shape[0]):
        if censor_horizon is not None and durations[i] > censor_horizon:
            spells.append(Spell(segment_id, ORIGIN_E, float(censor_horizon),
                                float(wages[i]), DEST_CENSORED, True))
        else:
            dest = DEST_U if to_unemployment[i] else DEST_E
            spells.append(Spell(segment_id, ORIGIN_E, float(durations[i]),
                                float(wages[i]), dest, False))
    return spells


def draw_unemployed_spell(eq: EquilibriumSolution, rng: np.random.Generator,
                          censor_horizon: float | None = None,
                          segment_id: str = "0") -> Spell:
    """One unemployment spell: pool reservation wage, exit time, accepted wage."""
    return _unemployed_from_uniforms(eq, rng.random((1, _DRAWS_PER_SPELL)),
                                     censor_horizon, segment_id)[0]


def draw_employed_spell(eq: EquilibriumSolution, rng: np.random.Generator,
                        censor_horizon: float | None = None,
                        segment_id: str = "0", wage: float | None = None) -> Spell:
    """One employment spell; ``wage`` overrides the cross-section draw."""
    return _employed_from_uniforms(eq, rng.random((1, _DRAWS_PER_SPELL)),
                                   censor_horizon, segment_id, wage=wage)[0]


def generate_flow_sample(cfg: SimConfig, eq: EquilibriumSolution | None = None,
                         replicate: int = 0) -> list[Spell]:
    """Draw a full flow sample, unemployed spells first, reproducibly."""
    if eq is None:
        eq = solve_equilibrium(cfg.segment)
    rng = replicate_rng(cfg.seed, replicate)
    spells: list[Spell] = []
    if cfg.n_unemployed:
        u_block = rng.random((cfg.n_unemployed, _DRAWS_PER_SPELL))
        spells.extend(_unemployed_from_uniforms(eq, u_block, cfg.censor_horizon,
                                                cfg.segment_id))
    if cfg.n_employed:
        e_block = rng.random((cfg.n_employed, _DRAWS_PER_SPELL))
        spells.extend(_employed_from_uniforms(eq, e_block, cfg.censor_horizon,
                                              cfg.segment_id))
    return spells


def unemployed_sample_share(eq: EquilibriumSolution) -> float:
    """Probability that a flow-sample observation is an unemployment spell.

    Sampling weights follow the steady state: the employable unemployed
    mass against the employed mass (the never-employed tail is excluded
    from flow samples because it produces no transitions).
    """
    employable = eq.pool.employable_mass
    return employable / (employable + 1.0 - eq.u)


def split_sample_size(eq: EquilibriumSolution, n_total: int,
                      rng: np.random.Generator) -> tuple[int, int]:
    """Binomial split of a total sample size into (unemployed, employed)."""
    n_u = int(rng.binomial(n_total, unemployed_sample_share(eq)))
    return n_u, n_total - n_u


# ---------------------------------------------------------------------------
# Spell CSV interface
# ---------------------------------------------------------------------------

def spells_to_csv_text(spells: list[Spell]) -> str:
    """Serialise spells to the canonical CSV schema (UTF-8 text)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SPELL_FIELDS)
    for s in spells:
        writer.writerow([
            s.segment_id,
            s.origin,
            repr(float(s.duration)),
            "" if s.wage is None else repr(float(s.wage)),
            s.destination,
            int(s.censored),
        ])
    return buf.getvalue()


def write_spells_csv(path, spells: list[Spell]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(spells_to_csv_text(spells))


def read_spells_csv(path) -> list[Spell]:
    """Parse and validate a spell file; row numbers are 1-based in errors."""
    spells = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SpellSchemaError("empty spell file (missing header)") from None
        if tuple(header) != SPELL_FIELDS:
            raise SpellSchemaError(
                f"bad header {header!r}, expected {','.join(SPELL_FIELDS)}"
            )
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SPELL_FIELDS):
                raise SpellSchemaError(f"row {row_no}: expected {len(SPELL_FIELDS)} fields")
            seg, origin, dur, wage, dest, cens = row
            try:
                spells.append(Spell(
                    segment_id=seg,
                    origin=origin,
                    duration=float(dur),
                    wage=None if wage == "" else float(wage),
                    destination=dest,
                    censored=bool(int(cens)),
                ))
            except (ValueError, SpellSchemaError) as exc:
                raise SpellSchemaError(f"row {row_no}: {exc}") from None
    return spells


# ---------------------------------------------------------------------------
# Long-panel simulation (steady-state checks)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PanelCrossSection:
    """State of every agent at the panel horizon."""

    employed: np.ndarray
    wages: np.ndarray
    reservation: np.ndarray
    job_to_job_moves: int
    wage_cuts: int

    @property
    def unemployment_rate(self) -> float:
        return 1.0 - float(np.mean(self.employed))


def simulate_panel(eq: EquilibriumSolution, n_agents: int, horizon: float,
                   seed: int) -> PanelCrossSection:
    """Run every agent's jump process to the horizon and report the cross-section.

    Agents start unemployed with permanent reservation wages drawn from
    the population distribution H (agents above the top offer never leave
    unemployment). Event times are exponential with the state-specific
    exit rates; job-to-job moves redraw the wage from the offer
    distribution truncated at the current wage, so cuts cannot occur.
    """
    params = eq.params
    lam, delta = params.frictions.lam, params.frictions.delta
    curve = eq.curve
    rng = replicate_rng(seed, 0)

    b = np.asarray(params.reservation.ppf(rng.random(n_agents)), dtype=float)
    employed = np.zeros(n_agents, dtype=bool)
    wages = np.full(n_agents, np.nan)
    clock = np.zeros(n_agents)
    j2j = 0
    cuts = 0

    active = np.arange(n_agents)
    while active.size:
        emp = employed[active]
        sf_here = np.empty(active.size)
        sf_here[emp] = curve.offer_sf_at(wages[active[emp]])
        sf_here[~emp] = curve.offer_sf_at(b[active[~emp]])
        rate = np.where(emp, delta + lam * sf_here, lam * sf_here)
        waiting = np.full(active.size, np.inf)
        positive = rate > 0.0
        waiting[positive] = rng.exponential(1.0 / rate[positive])
        clock[active] += waiting
        hit = clock[active] < horizon
        movers = active[hit]
        if movers.size:
            emp_m = employed[movers]
            sf_m = sf_here[hit]
            rate_m = rate[hit]
            event_u = rng.random(movers.size)
            # unemployed movers accept a job above their reservation wage
            up = movers[~emp_m]
            if up.size:
                sf_up = sf_m[~emp_m]
                target = 1.0 - sf_up * (1.0 - rng.random(up.size))
                wages[up] = np.interp(target, curve.offer_cdf, curve.w)
                employed[up] = True
            # employed movers separate or climb the ladder
            ep = movers[emp_m]
            if ep.size:
                sep = event_u[emp_m] < delta / rate_m[emp_m]
                down = ep[sep]
                employed[down] = False
                wages[down] = np.nan
                climb = ep[~sep]
                if climb.size:
                    sf_c = np.asarray(curve.offer_sf_at(wages[climb]), dtype=float)
                    target = 1.0 - sf_c * (1.0 - rng.random(climb.size))
                    new_w = np.interp(target, curve.offer_cdf, curve.w)
                    cuts += int(np.sum(new_w < wages[climb]))
                    j2j += climb.size
                    wages[climb] = new_w
        active = active[hit]
    return PanelCrossSection(employed=employed, wages=wages, reservation=b,
                             job_to_job_moves=j2j, wage_cuts=cuts)
