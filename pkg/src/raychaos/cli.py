"""Command-line front end.

Subcommands front the analysis operations and write CSV files (plus a JSON
metadata sidecar and, by default, a rendered figure) into the output
directory.  Configuration precedence, lowest to highest: built-in defaults,
flat JSON config file (--config), preset (--preset), explicit flags.

Exit codes: 0 success, 1 configuration error, 2 I/O failure, 3 numerical
failure in the dynamics.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Optional

from .analysis import (
    escape_scan,
    find_long_lived,
    launch_from_left_mirror,
    lyapunov_estimate,
    sos_collect,
)
from .dynamics import NumericalError, trace
from .geometry import CavityConfig, ConfigError, build_cavity, classify
from .presets import PRESETS
from . import reporting


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved parameters of one CLI run."""

    cavity: CavityConfig
    cap: int = 60000
    # escape-scan grid
    y_min: float = 0.0005
    y_max: float = 0.0205
    n_samples: int = 2000
    scan_angle0: float = 0.0
    # trace / surface-of-section initial condition
    y0: float = 0.001
    angle0: float = 0.0
    n_points: int = 1000
    # Lyapunov estimation
    n_orbits: int = 10
    bounces_per_orbit: int = 10000
    method: str = "exact"
    depth: int = 3
    seed_y_min: Optional[float] = None
    seed_y_max: Optional[float] = None
    seed_samples: int = 400
    # output
    out: str = "."
    workers: int = 1
    figures: bool = True


_CAVITY_KEYS = ("R", "r", "l_left", "l_right", "a", "b")
_RUN_KEYS = (
    "cap", "y_min", "y_max", "n_samples", "scan_angle0",
    "y0", "angle0", "n_points",
    "n_orbits", "bounces_per_orbit", "method", "depth",
    "seed_y_min", "seed_y_max", "seed_samples",
    "out", "workers", "figures",
)
_KNOWN_KEYS = set(_CAVITY_KEYS) | set(_RUN_KEYS)

_DEFAULT_A = 0.003
_DEFAULT_B = 0.025


def parse_config(file: Optional[str] = None, preset: Optional[str] = None,
                 overrides: Optional[dict[str, Any]] = None) -> RunConfig:
    """Merge defaults, config file, preset, and flag overrides into a RunConfig.

    The config file is flat JSON whose keys mirror RunConfig (cavity
    parameters spelled out as R, r, l_left, l_right, a, b).  Unknown keys
    and invariant violations raise ConfigError naming the offender.
    """
    values: dict[str, Any] = {"a": _DEFAULT_A, "b": _DEFAULT_B}
    if file is not None:
        path = Path(file)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config file {file}: {e}") from e
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed config file {file}: {e}") from e
        if not isinstance(doc, dict):
            raise ConfigError(f"malformed config file {file}: expected a JSON object")
        for key, val in doc.items():
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"unknown config key {key!r} in {file}")
            values[key] = val
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset!r} (available: {', '.join(sorted(PRESETS))})")
        values.update(PRESETS[preset])
    if overrides:
        for key, val in overrides.items():
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = val
    missing = [k for k in ("R", "r", "l_left", "l_right") if k not in values]
    if missing:
        raise ConfigError(
            f"missing cavity parameter(s) {', '.join(missing)} "
            f"(set them via --preset, a config file, or flags)")
    cavity = CavityConfig(**{k: float(values.pop(k)) for k in _CAVITY_KEYS})
    cavity.validate()
    run_kwargs: dict[str, Any] = {}
    for key in _RUN_KEYS:
        if key in values:
            run_kwargs[key] = values[key]
    cfg = RunConfig(cavity=cavity, **run_kwargs)
    _validate_run(cfg)
    return cfg


def _validate_run(cfg: RunConfig) -> None:
    if cfg.cap < 1:
        raise ConfigError(f"cap >= 1 violated (cap={cfg.cap})")
    if cfg.n_samples < 2:
        raise ConfigError(f"n_samples >= 2 violated (n_samples={cfg.n_samples})")
    if cfg.n_points < 1:
        raise ConfigError(f"n_points >= 1 violated (n_points={cfg.n_points})")
    if cfg.n_orbits < 1:
        raise ConfigError(f"n_orbits >= 1 violated (n_orbits={cfg.n_orbits})")
    if cfg.bounces_per_orbit < 1:
        raise ConfigError(
            f"bounces_per_orbit >= 1 violated (bounces_per_orbit={cfg.bounces_per_orbit})")
    if cfg.method not in ("exact", "shadow"):
        raise ConfigError(f"method must be 'exact' or 'shadow' (method={cfg.method!r})")
    if cfg.depth < 1:
        raise ConfigError(f"depth >= 1 violated (depth={cfg.depth})")
    if cfg.workers < 1:
        raise ConfigError(f"workers >= 1 violated (workers={cfg.workers})")


def _config_echo(cfg: RunConfig) -> dict[str, Any]:
    doc = asdict(cfg)
    cavity = doc.pop("cavity")
    return {**cavity, **doc}


def _seed_window(cfg: RunConfig) -> tuple[float, float]:
    b = cfg.cavity.b
    lo = cfg.seed_y_min if cfg.seed_y_min is not None else 0.2 * b
    hi = cfg.seed_y_max if cfg.seed_y_max is not None else 0.95 * b
    return lo, hi


def _cmd_stability(cfg: RunConfig, outdir: Path) -> tuple[list[Path], list[Path]]:
    report = classify(cfg.cavity)
    row = (report.label, report.m_left, report.m_right,
           report.M_left, report.M_right,
           report.lambda0_left, report.lambda0_right)
    csv_path = reporting.write_csv(
        outdir / "stability.csv",
        ("config_label", "m_left", "m_right", "M_left", "M_right",
         "lambda0_left", "lambda0_right"),
        [row])
    return [csv_path], []


def _cmd_trace(cfg: RunConfig, outdir: Path) -> tuple[list[Path], list[Path]]:
    geom = build_cavity(cfg.cavity)
    launch = launch_from_left_mirror(geom, cfg.y0, cfg.angle0)
    try:
        result = trace(launch, geom, cfg.cap)
    except NumericalError as e:
        raise NumericalError(
            f"{e} [initial condition y0={cfg.y0!r}, angle0={cfg.angle0!r}]") from e
    rows = [(i, ev.t, ev.point[0], ev.point[1], ev.v_out[0], ev.v_out[1],
             ev.surface.value)
            for i, ev in enumerate(result.events)]
    csv_path = reporting.write_csv(
        outdir / "trace.csv",
        ("event_index", "t", "z", "y", "vz", "vy", "surface_id"),
        rows)
    figures = []
    if cfg.figures:
        figures.append(reporting.render_trace_figure(
            outdir / "trace.png", geom, launch, result.events,
            classify(cfg.cavity).label))
    return [csv_path], figures


def _cmd_sos(cfg: RunConfig, outdir: Path) -> tuple[list[Path], list[Path]]:
    points = sos_collect(cfg.cavity, cfg.y0, cfg.angle0, cfg.n_points)
    csv_path = reporting.write_csv(
        outdir / "sos.csv",
        ("bounce_index", "y", "vy"),
        [(p.bounce_index, p.y, p.v_y) for p in points])
    figures = []
    if cfg.figures:
        figures.append(reporting.render_sos_figure(
            outdir / "sos.png", points, classify(cfg.cavity).label))
    return [csv_path], figures


def _cmd_escape(cfg: RunConfig, outdir: Path) -> tuple[list[Path], list[Path]]:
    records = escape_scan(cfg.cavity, (cfg.y_min, cfg.y_max), cfg.n_samples,
                          cfg.scan_angle0, cfg.cap, cfg.workers)
    csv_path = reporting.write_csv(
        outdir / "escape.csv",
        ("y0", "angle0", "n_bounces", "escape_time_s", "capped"),
        [(r.y0, r.angle0, r.n_bounces, r.escape_time, r.capped)
         for r in records])
    figures = []
    if cfg.figures:
        figures.append(reporting.render_escape_figure(
            outdir / "escape.png", records, classify(cfg.cavity).label))
    return [csv_path], figures


def _cmd_lyapunov(cfg: RunConfig, outdir: Path) -> tuple[list[Path], list[Path]]:
    transient = 100
    search_cap = cfg.bounces_per_orbit + transient
    sample = find_long_lived(
        cfg.cavity, _seed_window(cfg), n_samples=cfg.seed_samples,
        angle0=cfg.scan_angle0, cap=search_cap, depth=cfg.depth,
        max_keep=cfg.n_orbits, workers=cfg.workers)
    if len(sample) == 0:
        raise ConfigError(
            f"no long-lived orbit found in seed window {_seed_window(cfg)} "
            f"at depth {cfg.depth}; widen the window or increase depth")
    estimate = lyapunov_estimate(cfg.cavity, sample, cfg.bounces_per_orbit,
                                 method=cfg.method, transient=transient,
                                 workers=cfg.workers)
    label = classify(cfg.cavity).label
    csv_path = reporting.write_csv(
        outdir / "lyap.csv",
        ("label", "lambda1", "stderr", "exponent_sum", "n_orbits", "bounces"),
        [(label, estimate.lambda1, estimate.stderr, estimate.exponent_sum,
          estimate.n_orbits, estimate.bounces_per_orbit)])
    figures = []
    if cfg.figures:
        figures.append(reporting.render_lyapunov_figure(
            outdir / "lyap.png", estimate, label))
    return [csv_path], figures


_COMMANDS = {
    "stability": _cmd_stability,
    "trace": _cmd_trace,
    "sos": _cmd_sos,
    "lyapunov": _cmd_lyapunov,
    "escape": _cmd_escape,
}


def run_subcommand(name: str, config: RunConfig) -> list[Path]:
    """Run one subcommand, returning the paths of everything written."""
    if name not in _COMMANDS:
        raise ConfigError(f"unknown subcommand {name!r}")
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    csv_paths, figure_paths = _COMMANDS[name](config, outdir)
    duration = time.perf_counter() - t0
    written = []
    for csv_path in csv_paths:
        meta_path = csv_path.with_name(csv_path.stem + ".meta.json")
        reporting.write_metadata(meta_path, name, _config_echo(config),
                                 duration, config.workers)
        written.extend([csv_path, meta_path])
    written.extend(figure_paths)
    return written


def _add_common_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--preset", choices=sorted(PRESETS), default=None,
                    help="built-in cavity preset")
    sp.add_argument("--config", default=None, metavar="FILE",
                    help="flat JSON config file")
    sp.add_argument("--R", type=float, default=None, help="concave-mirror radius (m)")
    sp.add_argument("--r", type=float, default=None, help="convex-surface radius (m)")
    sp.add_argument("--l-left", type=float, default=None, help="left sub-cavity length (m)")
    sp.add_argument("--l-right", type=float, default=None, help="right sub-cavity length (m)")
    sp.add_argument("--a", type=float, default=None, help="central-element half-aperture (m)")
    sp.add_argument("--b", type=float, default=None, help="end-mirror half-aperture (m)")
    sp.add_argument("--cap", type=int, default=None, help="bounce cap")
    sp.add_argument("--out", default=None, metavar="DIR", help="output directory")
    sp.add_argument("--workers", type=int, default=None, help="parallel worker count")
    sp.add_argument("--no-figures", action="store_true",
                    help="skip figure rendering, write CSV only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raychaos",
        description="Ray dynamics and chaos analysis of a composite open optical cavity")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("stability", help="paraxial stability report per sub-cavity")
    _add_common_flags(sp)

    sp = sub.add_parser("trace", help="bounce-by-bounce trace of one ray")
    _add_common_flags(sp)
    sp.add_argument("--y0", type=float, default=None, help="launch offset on the left mirror (m)")
    sp.add_argument("--angle0", type=float, default=None, help="launch angle from +z (rad)")

    sp = sub.add_parser("sos", help="Poincare section at the left mirror")
    _add_common_flags(sp)
    sp.add_argument("--y0", type=float, default=None, help="launch offset on the left mirror (m)")
    sp.add_argument("--angle0", type=float, default=None, help="launch angle from +z (rad)")
    sp.add_argument("--n-points", type=int, default=None, help="left-mirror returns to record")

    sp = sub.add_parser("lyapunov", help="repeller search plus Lyapunov estimation")
    _add_common_flags(sp)
    sp.add_argument("--n-orbits", type=int, default=None, help="orbits to average over")
    sp.add_argument("--bounces", type=int, default=None, help="bounces per orbit")
    sp.add_argument("--method", choices=("exact", "shadow"), default=None,
                    help="tangent propagation method")
    sp.add_argument("--depth", type=int, default=None, help="refinement levels of the search")
    sp.add_argument("--seed-y-min", type=float, default=None, help="seed-scan window low edge (m)")
    sp.add_argument("--seed-y-max", type=float, default=None, help="seed-scan window high edge (m)")
    sp.add_argument("--seed-samples", type=int, default=None, help="seed-scan sample count")

    sp = sub.add_parser("escape", help="escape-time scan over launch offsets")
    _add_common_flags(sp)
    sp.add_argument("--y-min", type=float, default=None, help="scan window low edge (m)")
    sp.add_argument("--y-max", type=float, default=None, help="scan window high edge (m)")
    sp.add_argument("--n-samples", type=int, default=None, help="grid sample count")
    sp.add_argument("--angle0", type=float, default=None, help="launch angle from +z (rad)")
    return parser


def _collect_overrides(ns: argparse.Namespace) -> dict[str, Any]:
    mapping = {
        "R": "R", "r": "r", "l_left": "l_left", "l_right": "l_right",
        "a": "a", "b": "b", "cap": "cap", "out": "out", "workers": "workers",
        "y_min": "y_min", "y_max": "y_max", "n_samples": "n_samples",
        "y0": "y0", "n_points": "n_points",
        "n_orbits": "n_orbits", "bounces": "bounces_per_orbit",
        "method": "method", "depth": "depth",
        "seed_y_min": "seed_y_min", "seed_y_max": "seed_y_max",
        "seed_samples": "seed_samples",
    }
    overrides: dict[str, Any] = {}
    for attr, key in mapping.items():
        value = getattr(ns, attr, None)
        if value is not None:
            overrides[key] = value
    if getattr(ns, "angle0", None) is not None:
        # The escape subcommand's angle applies to the scan grid; trace and
        # sos use the single-orbit launch angle.
        key = "scan_angle0" if ns.command == "escape" else "angle0"
        overrides[key] = ns.angle0
    if getattr(ns, "no_figures", False):
        overrides["figures"] = False
    return overrides


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if not e.code else 1
    try:
        cfg = parse_config(file=ns.config, preset=ns.preset,
                           overrides=_collect_overrides(ns))
        written = run_subcommand(ns.command, cfg)
    except (ConfigError, ValueError, KeyError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
