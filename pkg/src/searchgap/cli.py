"""Command-line front end: simulate, estimate, decompose, validate.

Every run is reproducible from (config, seed); each command writes a
key-value manifest recording the effective configuration, package
version, and derived per-replicate seeds.

Exit codes: 0 success, 2 configuration or schema error, 3 numerical
failure, 4 validation acceptance failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from ._backend import BACKEND
from .decompose import (
    DecompositionError,
    SegmentPair,
    counterfactual_grid,
    curve_to_csv_text,
    effect_curve,
    grid_to_csv_text,
)
from .equilibrium import EquilibriumError, solve_equilibrium
from .estimate import IdentificationError, bootstrap_ci, mle_fit
from .kde import DensityEstimationError
from .likelihood import LikelihoodError
from .params import InvalidSegmentError, SegmentParams
from .simulate import (
    SimConfig,
    SpellSchemaError,
    generate_flow_sample,
    read_spells_csv,
    replicate_rng,
    replicate_seed_id,
    split_sample_size,
    write_spells_csv,
)
from .validate import format_report, run_validation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4

_SEGMENT_KEYS = {"lam", "delta", "mu", "sigma", "p_min", "alpha", "q_max"}
_TOP_KEYS = {"segments", "simulate", "estimate", "decompose", "validate", "seed", "out_dir"}
_SIM_KEYS = {"n_spells", "replicates", "censor_horizon", "segment"}
_EST_KEYS = {"truncation", "bootstrap", "starts", "segment_column"}
_DEC_KEYS = {"reference", "comparison"}
_VAL_KEYS = {"replicates", "n_obs", "truncation", "reference", "comparison",
             "min_containment", "u_tolerance"}


class ConfigError(ValueError):
    """The run configuration is malformed."""


def _require_mapping(obj, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(obj).__name__}")
    return obj


def _check_keys(mapping, allowed, where):
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def load_config(path) -> dict:
    """Parse and schema-validate the YAML run configuration."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    raw = _require_mapping(raw, "config")
    _check_keys(raw, _TOP_KEYS, "config")
    if "segments" not in raw:
        raise ConfigError("config needs a 'segments' section")
    segments = _require_mapping(raw["segments"], "segments")
    parsed_segments = {}
    for name, spec in segments.items():
        spec = _require_mapping(spec, f"segments.{name}")
        _check_keys(spec, _SEGMENT_KEYS, f"segments.{name}")
        try:
            parsed_segments[name] = SegmentParams.from_values(**spec)
        except (TypeError, InvalidSegmentError) as exc:
            raise ConfigError(f"segments.{name}: {exc}") from exc
    for section, keys in (("simulate", _SIM_KEYS), ("estimate", _EST_KEYS),
                          ("decompose", _DEC_KEYS), ("validate", _VAL_KEYS)):
        if section in raw:
            _check_keys(_require_mapping(raw[section], section), keys, section)
    return {
        "segments": parsed_segments,
        "simulate": raw.get("simulate", {}),
        "estimate": raw.get("estimate", {}),
        "decompose": raw.get("decompose", {}),
        "validate": raw.get("validate", {}),
        "seed": int(raw.get("seed", 0)),
        "out_dir": raw.get("out_dir", "."),
    }


def _segment_from(config, section, key, default_first=False):
    name = config[section].get(key)
    if name is None:
        if default_first and config["segments"]:
            name = next(iter(config["segments"]))
        else:
            raise ConfigError(f"{section}.{key} must name a segment")
    if name not in config["segments"]:
        raise ConfigError(f"{section}.{key}: no segment named {name!r}")
    return name, config["segments"][name]


def write_manifest(path: Path, entries: dict) -> None:
    lines = [f"{key} = {value}" for key, value in entries.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _base_manifest(config, args) -> dict:
    return {
        "searchgap_version": __version__,
        "backend": BACKEND,
        "seed": config["seed"],
        "config_path": args.config,
    }


def cmd_simulate(config, args) -> int:
    out = Path(config["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    name, segment = _segment_from(config, "simulate", "segment", default_first=True)
    section = config["simulate"]
    n_spells = int(section.get("n_spells", 2000))
    replicates = int(args.replicates or section.get("replicates", 1))
    horizon = section.get("censor_horizon")
    horizon = None if horizon in (None, "none") else float(horizon)
    seed = config["seed"]

    eq = solve_equilibrium(segment)
    manifest = _base_manifest(config, args)
    manifest.update({
        "command": "simulate", "segment": name, "n_spells": n_spells,
        "replicates": replicates,
        "censor_horizon": "none" if horizon is None else horizon,
        "unemployment_rate": eq.u,
    })
    for r in range(replicates):
        rng = replicate_rng(seed, r)
        n_u, n_e = split_sample_size(eq, n_spells, rng)
        cfg = SimConfig(n_unemployed=n_u, n_employed=n_e, seed=seed,
                        segment=segment, censor_horizon=horizon, segment_id=name)
        spells = generate_flow_sample(cfg, eq, replicate=r)
        path = out / f"spells_{name}_{r:04d}.csv"
        write_spells_csv(path, spells)
        manifest[f"replicate_{r:04d}_seed"] = replicate_seed_id(seed, r)
        manifest[f"replicate_{r:04d}_file"] = path.name
    write_manifest(out / f"manifest_simulate_{name}.txt", manifest)
    print(f"wrote {replicates} spell file(s) for segment {name} to {out}")
    return EXIT_OK


def _parse_filter(expr: str):
    """Compile a row predicate over the spell CSV columns."""
    code = compile(expr, "<filter>", "eval")
    for forbidden in ("__", "import", "open", "exec"):
        if forbidden in expr:
            raise ConfigError(f"filter expression must not contain {forbidden!r}")

    def predicate(spell):
        namespace = {
            "segment_id": spell.segment_id,
            "origin": spell.origin,
            "duration_days": spell.duration,
            "wage": spell.wage,
            "destination": spell.destination,
            "censored": int(spell.censored),
        }
        return bool(eval(code, {"__builtins__": {}}, namespace))

    return predicate


def cmd_estimate(config, args) -> int:
    out = Path(config["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    spells = read_spells_csv(args.spells)
    if not spells:
        raise SpellSchemaError(f"{args.spells}: no spell rows")
    if args.filter:
        keep = _parse_filter(args.filter)
        spells = [s for s in spells if keep(s)]
        if not spells:
            raise IdentificationError("filter removed every spell")
    section = config["estimate"]
    truncation = args.truncate if args.truncate is not None else float(section.get("truncation", 0.05))
    n_boot = int(args.bootstrap if args.bootstrap is not None else section.get("bootstrap", 200))
    n_starts = int(section.get("starts", 3))
    seed = config["seed"]

    by_segment: dict[str, list] = {}
    for s in spells:
        by_segment.setdefault(s.segment_id, []).append(s)

    manifest = _base_manifest(config, args)
    manifest.update({
        "command": "estimate", "spells": args.spells, "truncation": truncation,
        "bootstrap": n_boot, "starts": n_starts,
        "filter": args.filter or "none",
    })
    for name, seg_spells in sorted(by_segment.items()):
        fit = mle_fit(seg_spells, truncation_q=truncation, n_starts=n_starts, seed=seed)
        if n_boot > 0:
            boot = bootstrap_ci(seg_spells, fit, n_boot=n_boot, seed=seed,
                                truncation_q=truncation)
            fit.bootstrap = boot
        rows = ["parameter,estimate,lo2.5,hi97.5"]
        record = {
            "segment": name, "loglik": fit.loglik, "converged": fit.converged,
            "iterations": fit.n_iterations, "implied_u": fit.implied_u,
            "flat_params": ",".join(fit.flat_params) or "none",
        }
        for pname, value in fit.as_dict().items():
            lo, hi = ("", "")
            if fit.bootstrap is not None:
                lo, hi = fit.bootstrap.intervals[pname]
            rows.append(f"{pname},{value!r},{lo!r},{hi!r}")
            record[pname] = value
        if fit.bootstrap is not None and fit.bootstrap.flagged:
            record["bootstrap_flagged"] = (
                f"{fit.bootstrap.n_failed}/{fit.bootstrap.n_replicates} replicates failed"
            )
        (out / f"fit_{name}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
        write_manifest(out / f"fit_{name}.txt", record)
        print(f"segment {name}: lam={fit.lam:.4f} delta={fit.delta:.5f} "
              f"mu={fit.mu:.2f} sigma={fit.sigma:.2f} u={fit.implied_u:.4f} "
              f"loglik={fit.loglik:.1f}")
        for key, value in manifest.items():
            record.setdefault(key, value)
    write_manifest(out / "manifest_estimate.txt", manifest)
    return EXIT_OK


def cmd_decompose(config, args) -> int:
    out = Path(config["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    _, reference = _segment_from(config, "decompose", "reference")
    _, comparison = _segment_from(config, "decompose", "comparison")
    pair = SegmentPair(reference=reference, comparison=comparison)
    rows = counterfactual_grid(pair)
    (out / "decomposition.csv").write_text(grid_to_csv_text(rows), encoding="utf-8")
    p, w_ref, w_cmp = effect_curve(pair)
    (out / "wage_offer_curves.csv").write_text(
        curve_to_csv_text(p, w_ref, w_cmp), encoding="utf-8"
    )
    manifest = _base_manifest(config, args)
    manifest.update({
        "command": "decompose",
        "wage_differential": rows[0].wage_differential,
        "migrant_effect": rows[0].migrant_effect,
    })
    write_manifest(out / "manifest_decompose.txt", manifest)
    print(f"actual differential {rows[0].wage_differential:.3f}, "
          f"effect {rows[0].migrant_effect:.3f}; grid and curves written to {out}")
    return EXIT_OK


def cmd_validate(config, args) -> int:
    out = Path(config["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    section = config["validate"]
    _, reference = _segment_from(config, "validate", "reference")
    _, comparison = _segment_from(config, "validate", "comparison")
    n_replicates = int(args.replicates if args.replicates is not None
                       else section.get("replicates", 50))
    truncation = args.truncate if args.truncate is not None else float(section.get("truncation", 0.0))
    report = run_validation(
        reference,
        comparison,
        n_replicates=n_replicates,
        n_obs=int(section.get("n_obs", 2000)),
        seed=config["seed"],
        truncation_q=truncation,
        min_containment=int(section.get("min_containment", 7)),
        u_tolerance=float(section.get("u_tolerance", 0.01)),
    )
    text = format_report(report)
    print(text)
    (out / "validation_report.txt").write_text(text, encoding="utf-8")
    manifest = _base_manifest(config, args)
    manifest.update({
        "command": "validate", "replicates": n_replicates,
        "truncation": truncation,
        **{f"check_{k}": v for k, v in report.checks.items()},
    })
    write_manifest(out / "manifest_validate.txt", manifest)
    if report.checks and not report.passed:
        print("validation checks FAILED", file=sys.stderr)
        return EXIT_ACCEPTANCE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="searchgap",
        description="Equilibrium wage-posting search model toolkit",
    )
    parser.add_argument("--version", action="version", version=f"searchgap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--replicates", type=int, default=None)
        p.add_argument("--bootstrap", type=int, default=None)
        p.add_argument("--truncate", type=float, default=None)
        p.add_argument("--filter", default=None,
                       help="row predicate over spell columns, e.g. \"origin == 'E'\"")

    p_sim = sub.add_parser("simulate", help="draw flow samples from a segment")
    common(p_sim)
    p_est = sub.add_parser("estimate", help="fit structural parameters to a spell file")
    common(p_est)
    p_est.add_argument("spells", help="spell CSV file")
    p_dec = sub.add_parser("decompose", help="wage-gap decomposition for a segment pair")
    common(p_dec)
    p_val = sub.add_parser("validate", help="Monte Carlo validation loop")
    common(p_val)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config["seed"] = args.seed
        if args.out is not None:
            config["out_dir"] = args.out
        handler = {
            "simulate": cmd_simulate,
            "estimate": cmd_estimate,
            "decompose": cmd_decompose,
            "validate": cmd_validate,
        }[args.command]
        return handler(config, args)
    except (ConfigError, SpellSchemaError, InvalidSegmentError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EquilibriumError, LikelihoodError, IdentificationError,
            DensityEstimationError, DecompositionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
