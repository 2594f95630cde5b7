"""Batch experiment runner and artifact emitter.

Every run resolves an ExperimentConfig (JSON file plus flag overrides),
executes one named pipeline, and writes three kinds of artifacts into the
output directory: manifest.json (full resolved config, timestamp, artifact
list), report.json (deterministic results; same config and seed give
byte-identical bytes, so it excludes the output path, thread count, and
timestamps), and tidy per-sample CSV files for plotting.

Exit status: 0 when every certification in the run passed at its
configured tolerance, 1 on a failed certification or propagated numeric
error, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ._series import bowl_ratio, lens_combo, shell_ratio
from .costs import (
    CostProfile,
    c_segment,
    original_antenna_cost_rows,
    profile_by_name,
    tabulated_profile,
)
from .diagnostics import growth_condition, lemma_del_loep_check, radius_grid, stay_away
from .errors import ConfigError, DomainError, DominatedSupportError, SphereOTError
from .geometry import (
    SpherePoint,
    distance,
    fibonacci_rows,
    polar_cap_rows,
    rows_distance,
    sample_sphere,
)
from .mtw import MtwReport, certify_as, inequality_constants, write_report_csv
from .potentials import (
    CConvexPotential,
    c_transform,
    contact_set,
    evaluate_rows,
    grid_covering_radius,
    ridge_arc,
    ridge_point,
    ridge_samples,
    verify_subdiff_eq_csubdiff,
)
from .transport import (
    DiscreteMeasure,
    check_c_monotone,
    extract_map,
    gradient_inclusion_margin,
    save_plan,
    solve_exact,
)

__all__ = ["ExperimentConfig", "emit_plot_data", "main", "run"]

COMMANDS = (
    "mtw-scan",
    "inequalities",
    "solve",
    "diagnose",
    "contact-verify",
    "transform-check",
    "antenna",
)

# Central tolerance table. Every report echoes the resolved values; each
# entry can be overridden with --tol.<name> or the config "tolerances" map.
DEFAULT_TOLERANCES = {
    # mtw-scan: the certified tensor minimum must exceed this floor.
    "mtw_floor": 0.0,
    # inequalities: infima of the two cubic-normalized bounds must reach
    # this floor; the combined trig expression may dip below zero by at
    # most trig_min and must attain its minimum at the left endpoint.
    "inequality_floor": 0.0,
    "trig_min": 1e-10,
    # solve: plan certifications.
    "monotone_margin": -1e-9,
    "gradient_margin": 1e-6,
    # diagnose: stay-away positivity and the antipode-comparison margin.
    "stay_away": 0.0,
    "lemma_margin": -1e-6,
    # contact-verify: two-sided Hausdorff gap in units of grid spacing.
    "contact_spacings": 2.0,
    # transform-check: double-transform overshoot and support recovery.
    "transform_overshoot": 1e-9,
    "transform_support": 1e-9,
    # antenna: chord-formula identity and reduced-variable total shift.
    "antenna_identity": 1e-12,
    "antenna_total": 1e-9,
}

# Per-command defaults for the sizing flags (None means unused).
_SIZING = {
    "mtw-scan": {"samples": 2000, "grid": None},
    "inequalities": {"samples": 1_000_000, "grid": 400},
    "solve": {"samples": None, "grid": 64},
    "diagnose": {"samples": None, "grid": 64},
    "contact-verify": {"samples": 8, "grid": 2000},
    "transform-check": {"samples": 6, "grid": 1500},
    "antenna": {"samples": 200, "grid": 48},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved run configuration; every field is echoed in the manifest."""

    command: str
    profile: str = "quadratic"
    dim: int = 3
    grid: int | None = None
    samples: int | None = None
    sigma: float = 0.1
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    outdir: str = "out"
    threads: int | None = None

    def resolved_tolerances(self) -> dict:
        table = dict(DEFAULT_TOLERANCES)
        table.update(self.tolerances)
        return table

    def sizing(self) -> tuple:
        spec = _SIZING[self.command]
        samples = self.samples if self.samples is not None else spec["samples"]
        grid = self.grid if self.grid is not None else spec["grid"]
        return samples, grid


def _line_of(text: str, key: str) -> int:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if f'"{key}"' in line:
            return lineno
    return 1


def _validate_config(data: dict, source: str | None, text: str = "") -> None:
    def fail(key: str, problem: str):
        if source is not None:
            raise ConfigError(f"{source}:{_line_of(text, key)}: {problem}")
        raise ConfigError(problem)

    known = {f.name for f in ExperimentConfig.__dataclass_fields__.values()}
    for key in data:
        if key not in known:
            fail(key, f"unknown config field {key!r}")
    if "command" not in data:
        fail("command", "missing required field 'command'")
    if data["command"] not in COMMANDS:
        fail("command", f"unknown command {data['command']!r}; choose from {COMMANDS}")
    for key, kind in (("dim", int), ("seed", int)):
        if key in data and not isinstance(data[key], kind):
            fail(key, f"field {key!r} must be an integer")
    for key in ("grid", "samples", "threads"):
        if key in data and data[key] is not None:
            if not isinstance(data[key], int) or data[key] < 1:
                fail(key, f"field {key!r} must be a positive integer")
    if "dim" in data and data["dim"] < 3:
        fail("dim", "field 'dim' must be at least 3")
    if "sigma" in data:
        if not isinstance(data["sigma"], (int, float)) or not data["sigma"] > 0:
            fail("sigma", "field 'sigma' must be a positive number")
    tols = data.get("tolerances", {})
    if not isinstance(tols, dict):
        fail("tolerances", "field 'tolerances' must be an object")
    for name, value in tols.items():
        if name not in DEFAULT_TOLERANCES:
            fail(
                name,
                f"unknown tolerance {name!r}; known: {sorted(DEFAULT_TOLERANCES)}",
            )
        if not isinstance(value, (int, float)):
            fail(name, f"tolerance {name!r} must be a number")


def load_config(path: str, overrides: dict | None = None) -> ExperimentConfig:
    """Read a JSON config file and apply flag overrides on top."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"{path}: cannot read config: {err}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}:{err.lineno}: invalid JSON: {err.msg}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: config must be a JSON object")
    merged = dict(data)
    for key, value in (overrides or {}).items():
        if key == "tolerances":
            tols = dict(merged.get("tolerances", {}))
            tols.update(value)
            merged["tolerances"] = tols
        elif value is not None:
            merged[key] = value
    _validate_config(merged, path, text)
    return ExperimentConfig(**merged)


def _resolve_profile(spec: str) -> CostProfile:
    try:
        return profile_by_name(spec)
    except ConfigError:
        pass
    if Path(spec).exists():
        return tabulated_profile(spec)
    raise ConfigError(f"unknown profile {spec!r} and no such file")


def _parallel_map(fn, items, threads: int | None):
    workers = threads if threads is not None else (os.cpu_count() or 1)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _write_csv(path: Path, header: str, columns: str, rows) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# {header}\n")
        fh.write(columns + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row))
            fh.write("\n")


def emit_plot_data(report, kind: str, path) -> Path:
    """Write a report as a tidy CSV, one observation per row.

    Supported kinds: "mtw-curve" (MtwReport sample rows), "growth-curve"
    (GrowthConditionReport per-radius suprema), "stay-away-family"
    (iterable of (label, StayAwayReport)), "inequalities-curve" (mapping
    with r/bowl/shell/lens arrays). Columns are documented in a header
    comment; an empty report produces a header-only file.
    """
    path = Path(path)
    if kind == "mtw-curve":
        write_report_csv(report, path)
        return path
    if kind == "growth-curve":
        rows = [
            (float(r), float(s)) for r, s in zip(report.radii, report.sup_by_radius)
        ]
        _write_csv(path, "ball-mass suprema: radius, sup ratio", "radius,sup_ratio", rows)
        return path
    if kind == "stay-away-family":
        rows = [
            (float(label), float(rep.sigma_observed), float(rep.sigma_lower_bound))
            for label, rep in report
        ]
        _write_csv(
            path,
            "stay-away margins by source concentration",
            "lambda,sigma_observed,sigma_lower_bound",
            rows,
        )
        return path
    if kind == "inequalities-curve":
        rows = list(
            zip(
                map(float, report["r"]),
                map(float, report["bowl"]),
                map(float, report["shell"]),
                map(float, report["lens"]),
            )
        )
        _write_csv(
            path,
            "trigonometric bounds along the radius",
            "r,bowl,shell,lens",
            rows,
        )
        return path
    raise ConfigError(f"unknown plot kind {kind!r}")


# ---------------------------------------------------------------------------
# Command handlers. Each returns (results dict, passed flag, artifact names).
# ---------------------------------------------------------------------------


def _seeded_instance(config: ExperimentConfig, size: int):
    rng = np.random.default_rng(config.seed)
    src = DiscreteMeasure.from_rows(sample_sphere(rng, size, config.dim))
    tgt = DiscreteMeasure.from_rows(sample_sphere(rng, size, config.dim))
    return src, tgt


def _run_mtw_scan(config: ExperimentConfig, outdir: Path, tol: dict):
    samples, _ = config.sizing()
    profile = _resolve_profile(config.profile)
    report = certify_as(profile, config.sigma, samples, config.seed, config.dim)
    emit_plot_data(report, "mtw-curve", outdir / "mtw_samples.csv")
    results = {
        "c0_estimate": report.c0_estimate,
        "min_value": report.min_value,
        "evaluated": report.samples,
        "certified": report.certified,
    }
    passed = report.certified and report.min_value > tol["mtw_floor"]
    return results, passed, ["mtw_samples.csv"]


def _run_inequalities(config: ExperimentConfig, outdir: Path, tol: dict):
    samples, grid = config.sizing()
    bowl, shell, lens = inequality_constants(points=samples)
    r = np.linspace(1e-6, math.pi, grid)
    curve = {"r": r, "bowl": bowl_ratio(r), "shell": shell_ratio(r), "lens": lens_combo(r)}
    emit_plot_data(curve, "inequalities-curve", outdir / "inequalities_curve.csv")
    probe = 1e-4
    results = {
        "bowl_infimum": bowl,
        "shell_infimum": shell,
        "lens_minimum": lens,
        "lens_argmin_r": float(r[int(np.argmin(curve["lens"]))]),
        "bowl_limit_at_zero": float(bowl_ratio(np.array([probe]))[0]),
        "shell_limit_at_zero": float(shell_ratio(np.array([probe]))[0]),
    }
    passed = (
        bowl >= tol["inequality_floor"]
        and shell >= tol["inequality_floor"]
        and abs(lens) <= tol["trig_min"]
        and results["lens_argmin_r"] == float(r[0])
    )
    return results, passed, ["inequalities_curve.csv"]


def _run_solve(config: ExperimentConfig, outdir: Path, tol: dict):
    _, grid = config.sizing()
    profile = _resolve_profile(config.profile)
    src, tgt = _seeded_instance(config, grid)
    plan = solve_exact(src, tgt, profile)
    plan.validate()
    mono = check_c_monotone(plan)
    margin = gradient_inclusion_margin(plan)
    save_plan(outdir / "plan.csv", plan)
    results = {
        "total_cost": plan.total_cost,
        "marginal_error": plan.marginal_error(),
        "monotone_ok": mono.ok,
        "monotone_margin": mono.worst_margin,
        "gradient_margin": margin,
        "support_size": int(plan.support()[0].size),
    }
    passed = mono.worst_margin >= tol["monotone_margin"] and margin <= tol["gradient_margin"]
    return results, passed, ["plan.csv", "plan.csv.json"]


def _run_diagnose(config: ExperimentConfig, outdir: Path, tol: dict):
    _, grid = config.sizing()
    profile = _resolve_profile(config.profile)
    src, tgt = _seeded_instance(config, grid)
    plan = solve_exact(src, tgt, profile)
    rep = stay_away(plan, "reduced")
    growth = growth_condition(src, config.dim - 1, radius_grid(0.15, math.pi / 2.0))
    emit_plot_data(growth, "growth-curve", outdir / "growth_curve.csv")
    tmap = extract_map(plan)
    margin = lemma_del_loep_check(tmap, pairs=1000, seed=config.seed) if tmap.total else None
    xr = src.rows[plan.support()[0]]
    yr = tgt.rows[plan.support()[1]]
    dists = rows_distance(xr, yr)
    _write_csv(
        outdir / "stay_margins.csv",
        "per-pair distances on the plan support",
        "pair,distance,reduced_margin",
        [(int(k), float(d), float(math.pi - d)) for k, d in enumerate(dists)],
    )
    results = {
        "sigma_observed": rep.sigma_observed,
        "sigma_lower_bound": rep.sigma_lower_bound,
        "growth_constant": growth.constant,
        "lemma_margin": margin,
        "map_total": bool(tmap.total),
    }
    if profile.kind == "antenna":
        results["sigma_original_antenna"] = stay_away(plan, "original-antenna").sigma_observed
    passed = rep.sigma_observed > tol["stay_away"] and (
        margin is None or margin >= tol["lemma_margin"]
    )
    return results, passed, ["growth_curve.csv", "stay_margins.csv"]


def _random_two_support(rng, profile: CostProfile) -> CConvexPotential:
    for _ in range(64):
        a = SpherePoint(sample_sphere(rng, 1, 3)[0])
        b = SpherePoint(sample_sphere(rng, 1, 3)[0])
        off = 0.05 * rng.standard_normal()
        if not 0.5 < distance(a, b) < min(math.pi, profile.domain_cut) - 0.5:
            continue
        try:
            return CConvexPotential(((a, 0.0), (b, off)), profile)
        except DominatedSupportError:
            continue
    raise DomainError("could not draw an active two-support potential")


def _contact_case(args):
    profile, grid_rows, spacing, seed = args
    rng = np.random.default_rng(seed)
    for _ in range(16):
        phi = _random_two_support(rng, profile)
        try:
            x = ridge_point(phi, 0, 1, grid_rows)
        except DomainError:
            continue
        y0, y1 = phi.supports[0][0], phi.supports[1][0]
        seg = np.stack(
            [c_segment(profile, x, y0, y1, t).coords for t in np.linspace(0.0, 1.0, 801)]
        )
        aug = np.vstack(
            [
                grid_rows,
                ridge_samples(phi, 0, 1, grid_rows),
                ridge_arc(phi, 0, 1, x),
                polar_cap_rows(x.coords, 0.25 * spacing),
                x.coords[None, :],
                seg,
            ]
        )
        cs = contact_set(phi, x, aug, tol=1e-8)
        if cs.is_full_sphere:
            continue
        mem = cs.member_rows
        to_seg = np.arccos(np.clip(mem @ seg.T, -1.0, 1.0)).min(axis=1)
        from_seg = np.arccos(np.clip(seg @ mem.T, -1.0, 1.0)).min(axis=1)
        hausdorff = max(float(to_seg.max()), float(from_seg.max())) / spacing
        sub = verify_subdiff_eq_csubdiff(phi, x, aug)
        return {
            "separation": float(distance(y0, y1)),
            "hausdorff_spacings": hausdorff,
            "subdiff_ok": bool(sub.ok),
        }
    raise DomainError("could not realize a ridge configuration")


def _run_contact_verify(config: ExperimentConfig, outdir: Path, tol: dict):
    samples, grid = config.sizing()
    profile = _resolve_profile(config.profile)
    grid_rows = fibonacci_rows(3, grid)
    spacing = grid_covering_radius(grid_rows)
    jobs = [(profile, grid_rows, spacing, config.seed + k) for k in range(samples)]
    cases = _parallel_map(_contact_case, jobs, config.threads)
    _write_csv(
        outdir / "contact_cases.csv",
        "per-case contact geometry: support separation, Hausdorff gap, subdifferential check",
        "case,separation,hausdorff_spacings,subdiff_ok",
        [
            (k, c["separation"], c["hausdorff_spacings"], int(c["subdiff_ok"]))
            for k, c in enumerate(cases)
        ],
    )
    worst = max(c["hausdorff_spacings"] for c in cases)
    results = {
        "cases": len(cases),
        "worst_hausdorff_spacings": worst,
        "subdiff_all_ok": all(c["subdiff_ok"] for c in cases),
        "grid_spacing": float(spacing),
    }
    passed = worst <= tol["contact_spacings"] and results["subdiff_all_ok"]
    return results, passed, ["contact_cases.csv"]


def _run_transform_check(config: ExperimentConfig, outdir: Path, tol: dict):
    samples, grid = config.sizing()
    profile = _resolve_profile(config.profile)
    grid_rows = fibonacci_rows(3, grid)
    rng = np.random.default_rng(config.seed)
    rows = []
    for k in range(samples):
        phi = _random_two_support(rng, profile)
        aug = np.vstack([grid_rows, phi.support_rows])
        vals = evaluate_rows(phi, aug)
        back = c_transform(c_transform(vals, aug, profile), aug, profile)
        overshoot = float(np.max(back - vals))
        support_err = float(np.max(np.abs((back - vals)[grid_rows.shape[0] :])))
        rows.append((k, overshoot, support_err))
    noise = rng.normal(size=grid_rows.shape[0])
    envelope = c_transform(c_transform(noise, grid_rows, profile), grid_rows, profile)
    drop = float(np.max(noise - envelope))
    results = {
        "worst_overshoot": max(r[1] for r in rows),
        "worst_support_error": max(r[2] for r in rows),
        "raw_noise_envelope_drop": drop,
    }
    _write_csv(
        outdir / "transform_cases.csv",
        "double-transform deviation per potential",
        "case,overshoot,support_error",
        rows,
    )
    passed = (
        results["worst_overshoot"] <= tol["transform_overshoot"]
        and results["worst_support_error"] <= tol["transform_support"]
        and drop > 0.0
    )
    return results, passed, ["transform_cases.csv"]


def _run_antenna(config: ExperimentConfig, outdir: Path, tol: dict):
    samples, grid = config.sizing()
    rng = np.random.default_rng(config.seed)
    xs = sample_sphere(rng, samples, 3)
    ys = sample_sphere(rng, samples, 3)
    profile = profile_by_name("antenna")
    via_profile = original_antenna_cost_rows(xs, ys)
    with np.errstate(divide="ignore"):
        direct = -np.log(np.linalg.norm(xs - ys, axis=1))
    # The profile route declares the pole region (coincident pairs) +inf
    # outright; compare the two routes where both are finite, scaled by
    # the local derivative (rounding in the angle is amplified by f' as
    # the pair approaches the pole).
    finite = np.isfinite(via_profile)
    reflected_d = rows_distance(xs, -ys)
    scale = 1.0 + np.asarray(profile.f1(reflected_d[finite]), dtype=float)
    identity_err = float(
        np.max(np.abs(via_profile[finite] - direct[finite]) / scale)
    )
    _write_csv(
        outdir / "antenna_pairs.csv",
        "original-variable cost by profile route and by chord formula",
        "pair,distance,profile_route,chord_formula",
        [
            (k, float(d), float(a), float(b))
            for k, (d, a, b) in enumerate(
                zip(rows_distance(xs, ys), via_profile, direct)
            )
        ],
    )

    src, tgt = _seeded_instance(config, grid)
    reflected = DiscreteMeasure.from_rows(-tgt.rows, tgt.weights)
    plan = solve_exact(src, reflected, profile)
    plan.validate()
    ii, jj, masses = plan.support()
    total_original = float(
        masses @ original_antenna_cost_rows(src.rows[ii], tgt.rows[jj])
    )
    # -log|x - y| differs from the reduced cost at the reflected target by
    # the constant (1/2) log 2, which integrates to itself on probabilities.
    shift_err = abs(total_original - (plan.total_cost - 0.5 * math.log(2.0)))
    sigma_original = float(rows_distance(src.rows[ii], tgt.rows[jj]).min())
    mono = check_c_monotone(plan)
    results = {
        "identity_error": identity_err,
        "total_original": total_original,
        "total_reduced": plan.total_cost,
        "total_shift_error": shift_err,
        "sigma_original": sigma_original,
        "monotone_ok": mono.ok,
    }
    passed = (
        identity_err <= tol["antenna_identity"]
        and shift_err <= tol["antenna_total"]
        and sigma_original > 0.0
        and mono.ok
    )
    return results, passed, ["antenna_pairs.csv"]


_HANDLERS = {
    "mtw-scan": _run_mtw_scan,
    "inequalities": _run_inequalities,
    "solve": _run_solve,
    "diagnose": _run_diagnose,
    "contact-verify": _run_contact_verify,
    "transform-check": _run_transform_check,
    "antenna": _run_antenna,
}


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def run(config: ExperimentConfig) -> int:
    """Execute one experiment; write manifest, report, and CSV artifacts.

    Returns the exit status: 0 when all certifications passed, 1 otherwise.
    """
    if config.command not in _HANDLERS:
        raise ConfigError(f"unknown command {config.command!r}")
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tol = config.resolved_tolerances()
    samples, grid = config.sizing()
    results, passed, artifacts = _HANDLERS[config.command](config, outdir, tol)

    echo = {
        "command": config.command,
        "profile": config.profile,
        "dim": config.dim,
        "grid": grid,
        "samples": samples,
        "sigma": config.sigma,
        "seed": config.seed,
    }
    report = {
        "command": config.command,
        "config": echo,
        "tolerances": tol,
        "results": _jsonable(results),
        "passed": bool(passed),
    }
    (outdir / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    manifest = {
        "command": config.command,
        "config": {**echo, "outdir": config.outdir, "threads": config.threads,
                   "tolerances": tol},
        "created": datetime.now(timezone.utc).isoformat(),
        "artifacts": sorted(artifacts + ["report.json"]),
        "passed": bool(passed),
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return 0 if passed else 1


def _split_tolerance_flags(argv: list) -> tuple:
    rest, tols = [], {}
    k = 0
    while k < len(argv):
        arg = argv[k]
        if arg.startswith("--tol."):
            name, eq, value = arg[6:].partition("=")
            if not eq:
                if k + 1 >= len(argv):
                    raise ConfigError(f"--tol.{name} needs a value")
                value = argv[k + 1]
                k += 1
            try:
                tols[name] = float(value)
            except ValueError:
                raise ConfigError(f"--tol.{name}: not a number: {value!r}")
        else:
            rest.append(arg)
        k += 1
    return rest, tols


def main(argv: list | None = None) -> int:
    """CLI entry point; see module docstring for artifact layout."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv, tol_flags = _split_tolerance_flags(argv)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2

    parser = argparse.ArgumentParser(
        prog="sphere-ot",
        description="Spherical transport experiments: curvature scans, "
        "inequality suites, exact solves, and regularity diagnostics.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file matching ExperimentConfig")
    parser.add_argument("--profile", help="cost profile name or table file")
    parser.add_argument("--dim", type=int, help="ambient dimension (>= 3)")
    parser.add_argument("--sigma", type=float, help="cut-locus margin for scans")
    parser.add_argument("--samples", type=int, help="sample or case count")
    parser.add_argument("--grid", type=int, help="grid or instance size")
    parser.add_argument("--seed", type=int, help="deterministic seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--threads", type=int, help="worker pool size")
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)

    overrides = {
        "command": args.command,
        "profile": args.profile,
        "dim": args.dim,
        "sigma": args.sigma,
        "samples": args.samples,
        "grid": args.grid,
        "seed": args.seed,
        "outdir": args.out,
        "threads": args.threads,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if tol_flags:
        overrides["tolerances"] = tol_flags
    try:
        if args.config:
            config = load_config(args.config, overrides)
        else:
            data = dict(overrides)
            tols = data.pop("tolerances", {})
            _validate_config({**data, "tolerances": tols}, None)
            config = ExperimentConfig(**data, tolerances=tols)
        return run(config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except SphereOTError as err:
        print(f"{args.command} failed: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
