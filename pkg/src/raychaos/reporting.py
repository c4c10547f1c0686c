"""Deterministic CSV emission, run-metadata sidecars, and figure rendering.

Floats are serialized with 17 significant digits, which round-trips 64-bit
values exactly, and rows are written in a fixed order, so identical runs
produce byte-identical CSV files.  Every CSV is paired with a JSON sidecar
carrying enough information to re-run the job; the sidecar includes the
wall-clock duration and is therefore not byte-stable itself.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence


def _version() -> str:
    try:
        from importlib.metadata import version
        return version("raychaos")
    except Exception:
        return "0.0.0"


@dataclass(frozen=True)
class RunMetadata:
    """Provenance emitted next to every output artifact."""

    tool: str
    version: str
    subcommand: str
    config: dict[str, Any]
    duration_s: float
    workers: int


def format_value(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def write_metadata(path: Path, subcommand: str, config_echo: dict[str, Any],
                   duration_s: float, workers: int) -> Path:
    meta = RunMetadata(tool="raychaos", version=_version(),
                       subcommand=subcommand, config=config_echo,
                       duration_s=duration_s, workers=workers)
    path = Path(path)
    with open(path, "w") as f:
        json.dump(asdict(meta), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _draw_cavity(ax, geom) -> None:
    import numpy as np
    for arc in geom.arcs:
        phi_max = math.asin(arc.aperture_half / arc.radius)
        phi = np.linspace(-phi_max, phi_max, 200)
        z = arc.center[0] + arc.arc_side * arc.radius * np.cos(phi)
        y = arc.radius * np.sin(phi)
        ax.plot(z, y, color="k", lw=1.2)


def render_trace_figure(path: Path, geom, launch, events, label: str) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7.0, 3.2))
    _draw_cavity(ax, geom)
    zs = [launch.pos[0]] + [ev.point[0] for ev in events]
    ys = [launch.pos[1]] + [ev.point[1] for ev in events]
    ax.plot(zs, ys, lw=0.4, color="tab:blue")
    ax.set_xlabel("z (m)")
    ax.set_ylabel("y (m)")
    ax.set_title(f"{label}: {len(events)} bounces")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_sos_figure(path: Path, points, label: str) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.plot([p.y for p in points], [p.v_y for p in points],
            ",", color="tab:blue")
    ax.set_xlabel("y (m)")
    ax.set_ylabel("v_y (m/s)")
    ax.set_title(f"{label}: surface of section at the left mirror")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_escape_figure(path: Path, records, label: str) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7.0, 3.6))
    ys = [r.y0 for r in records]
    ts = [r.escape_time for r in records]
    ax.plot(ys, ts, lw=0.5, color="tab:blue")
    capped = [(r.y0, r.escape_time) for r in records if r.capped]
    if capped:
        ax.plot([c[0] for c in capped], [c[1] for c in capped],
                ".", ms=3, color="tab:red", label="capped")
        ax.legend(loc="upper right")
    if any(t > 0 for t in ts):
        ax.set_yscale("log")
        positive = [t for t in ts if t > 0]
        ax.set_ylim(bottom=0.5 * min(positive))
    ax.set_xlabel("y0 (m)")
    ax.set_ylabel("escape time (s)")
    ax.set_title(f"{label}: escape time vs impact parameter")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_lyapunov_figure(path: Path, estimate, label: str) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    xs = list(range(1, len(estimate.per_orbit) + 1))
    ax.plot(xs, estimate.per_orbit, "o", color="tab:blue", label="per orbit")
    ax.axhline(estimate.lambda1, color="tab:red", lw=1.0,
               label=f"mean = {estimate.lambda1:.4g} 1/s")
    if estimate.stderr > 0:
        ax.axhspan(estimate.lambda1 - estimate.stderr,
                   estimate.lambda1 + estimate.stderr,
                   color="tab:red", alpha=0.15)
    ax.set_xlabel("orbit")
    ax.set_ylabel("lambda_1 (1/s)")
    ax.set_title(f"{label}: largest Lyapunov exponent")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
