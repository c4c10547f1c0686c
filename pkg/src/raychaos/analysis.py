"""Chaos diagnostics built on the event-driven bounce map.

Provides the Poincaré surface of section at the left end mirror, escape-time
scans over initial conditions, recursive search for long-lived (repeller)
orbits, and Lyapunov-exponent estimation by tangent-space renormalization,
with a finite-difference shadow-trajectory variant kept as a built-in
cross-check.

Initial conditions throughout are (y0, angle0): the ray starts on the left
concave mirror surface at transverse offset y0 and leaves it with direction
angle0 measured from the +z axis.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import groupby
from typing import Optional, Sequence

from .dynamics import GRAZING_EPS, NumericalError, RayState, _advance, _survival
from .geometry import CavityConfig, CavityGeometry, build_cavity

#: Default bounce cap, also the cap used for published escape-time scans.
DEFAULT_CAP = 60000


@dataclass(frozen=True)
class SosPoint:
    """Transverse state (y, v_y) just after a reflection at the left mirror."""

    bounce_index: int
    y: float
    v_y: float


@dataclass(frozen=True)
class EscapeRecord:
    """Outcome of one trace: bounce count and time of the last bounce."""

    y0: float
    angle0: float
    n_bounces: int
    escape_time: float
    capped: bool


@dataclass(frozen=True)
class LyapunovEstimate:
    """Largest Lyapunov exponent averaged over an ensemble of orbits.

    ``exponent_sum`` is the mean over orbits of the sum of all four
    exponents (pairs-rule diagnostic); it is NaN for the shadow method,
    which tracks only the leading exponent.  ``spectrum`` holds the mean
    of the full exponent quadruple when available.
    """

    lambda1: float
    stderr: float
    exponent_sum: float
    n_orbits: int
    bounces_per_orbit: int
    spectrum: Optional[tuple[float, float, float, float]] = None
    per_orbit: tuple[float, ...] = ()


@dataclass(frozen=True)
class RepellerSample:
    """Initial conditions that survived to the bounce cap during search."""

    initials: tuple[tuple[float, float], ...]
    refinement_depth: int
    survival_times: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.initials)


def launch_from_left_mirror(geom: CavityGeometry, y0: float, angle0: float) -> RayState:
    """Ray state on the left concave mirror surface, heading into the cavity."""
    mirror = geom.arcs[0]
    if abs(y0) > mirror.aperture_half:
        raise ValueError(
            f"|y0| <= b violated (y0={y0}, b={mirror.aperture_half})")
    R = mirror.radius
    z0 = R - math.sqrt(R * R - y0 * y0)
    return RayState(pos=(z0, y0), vel=(math.cos(angle0), math.sin(angle0)))


def sos_collect(config: CavityConfig, y0: float, angle0: float,
                n_points: int, max_bounces: Optional[int] = None) -> list[SosPoint]:
    """Poincaré section at the left mirror: (y, v_y) after each reflection there.

    Traces until ``n_points`` left-mirror reflections are recorded or the
    ray escapes (early escape returns a shorter list).  ``max_bounces``
    bounds total work for orbits that stop visiting the left mirror; it
    defaults to 1000 bounces per requested point.
    """
    if n_points < 1:
        raise ValueError(f"n_points >= 1 violated (got {n_points})")
    geom = build_cavity(config)
    if max_bounces is None:
        max_bounces = max(1000 * n_points, 10000)
    state = launch_from_left_mirror(geom, y0, angle0)
    params = geom._arc_params
    z, y = state.pos
    vz, vy = state.vel
    points: list[SosPoint] = []
    n = 0
    while len(points) < n_points and n < max_bounces:
        hit = _advance(params, z, y, vz, vy)
        if hit is None:
            break
        z, y, vz, vy = hit[1], hit[2], hit[3], hit[4]
        n += 1
        if hit[8] == 0:
            points.append(SosPoint(bounce_index=n, y=y, v_y=vy))
    return points


def _scan_chunk(args):
    # One worker's share of an escape scan; must stay top-level (picklable)
    # and be the single code path for any worker count.
    params, R, ys, angle0, cap = args
    vz = math.cos(angle0)
    vy = math.sin(angle0)
    out = []
    for y0 in ys:
        z0 = R - math.sqrt(R * R - y0 * y0)
        try:
            n, t_last, capped = _survival(params, z0, y0, vz, vy, cap)
        except NumericalError as e:
            raise NumericalError(
                f"{e} [initial condition y0={y0!r}, angle0={angle0!r}]") from e
        out.append((y0, n, t_last, capped))
    return out


def escape_scan(config: CavityConfig, y_range: tuple[float, float],
                n_samples: int, angle0: float = 0.0, cap: int = DEFAULT_CAP,
                workers: int = 1) -> list[EscapeRecord]:
    """Escape time over a uniform, endpoint-inclusive grid of y0 values.

    One trace per sample; the escape time is the time of the last bounce,
    capped at ``cap`` bounces.  Records are ordered by grid index and are
    bit-identical for any ``workers`` count (samples are independent and
    merged in index order).
    """
    if n_samples < 2:
        raise ValueError(f"n_samples >= 2 violated (got {n_samples})")
    geom = build_cavity(config)
    b = config.b
    y_min, y_max = y_range
    if not (-b <= y_min <= y_max <= b):
        raise ValueError(
            f"y_range within [-b, b] violated (range=({y_min}, {y_max}), b={b})")
    ys = [y_min + i * (y_max - y_min) / (n_samples - 1) for i in range(n_samples)]
    R = config.R
    params = geom._arc_params
    if workers <= 1:
        rows = _scan_chunk((params, R, ys, angle0, cap))
    else:
        size = -(-n_samples // workers)
        chunks = [(params, R, ys[i:i + size], angle0, cap)
                  for i in range(0, n_samples, size)]
        rows = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_scan_chunk, chunks):
                rows.extend(part)
    return [EscapeRecord(y0=y0, angle0=angle0, n_bounces=n,
                         escape_time=t, capped=capped)
            for (y0, n, t, capped) in rows]


def _grid_local_maxima(records: Sequence[EscapeRecord]) -> list[EscapeRecord]:
    # Interior grid points whose escape time is >= both neighbors.
    out = []
    for i in range(1, len(records) - 1):
        t = records[i].escape_time
        if t >= records[i - 1].escape_time and t >= records[i + 1].escape_time:
            out.append(records[i])
    return out


def find_long_lived(config: CavityConfig, y_range: tuple[float, float],
                    n_samples: int = 400, angle0: float = 0.0,
                    cap: int = DEFAULT_CAP, depth: int = 3, factor: int = 10,
                    n_peaks: int = 8, max_keep: int = 10,
                    workers: int = 1) -> RepellerSample:
    """Search for initial conditions that survive to the bounce cap.

    Level 1 is a uniform seed scan of ``y_range``; each further level
    re-scans a window of +/- one grid spacing around the highest local
    maxima of escape time, shrinking the spacing by ``factor``, so local
    resolution grows by ``factor`` per level.  Returns up to ``max_keep``
    capped initial conditions spread over what was found, or an empty
    sample if no orbit reaches the cap (non-chaotic region or too-coarse
    scan).
    """
    if depth < 1:
        raise ValueError(f"depth >= 1 violated (got {depth})")
    y_lo, y_hi = y_range
    records = escape_scan(config, y_range, n_samples, angle0, cap, workers)
    spacing = (y_hi - y_lo) / (n_samples - 1)
    capped: dict[float, float] = {}
    for rec in records:
        if rec.capped:
            capped.setdefault(rec.y0, rec.escape_time)
    level_lists = [records]
    for _level in range(1, depth):
        candidates = []
        for recs in level_lists:
            candidates.extend(_grid_local_maxima(recs))
        candidates.sort(key=lambda r: (-r.escape_time, r.y0))
        peaks: list[EscapeRecord] = []
        for cand in candidates:
            if all(abs(cand.y0 - p.y0) > 2.0 * spacing for p in peaks):
                peaks.append(cand)
            if len(peaks) == n_peaks:
                break
        if not peaks:
            break
        level_lists = []
        for peak in peaks:
            lo = max(peak.y0 - spacing, y_lo)
            hi = min(peak.y0 + spacing, y_hi)
            child = escape_scan(config, (lo, hi), 2 * factor + 1,
                                angle0, cap, workers)
            for rec in child:
                if rec.capped:
                    capped.setdefault(rec.y0, rec.escape_time)
            level_lists.append(child)
        spacing /= factor
    if not capped:
        return RepellerSample(initials=(), refinement_depth=depth,
                              survival_times=())
    found = sorted(capped.items())
    if len(found) > max_keep:
        idxs = sorted({round(i * (len(found) - 1) / (max_keep - 1))
                       for i in range(max_keep)})
        found = [found[i] for i in idxs]
    return RepellerSample(
        initials=tuple((y0, angle0) for y0, _ in found),
        refinement_depth=depth,
        survival_times=tuple(t for _, t in found),
    )


def _tangent_bounce(basis, tau, vz, vy, nx, ny, ndotv, rho, sigma):
    # Apply the exact linearized (flight + reflection) to each 4-vector
    # [dz, dy, dvz, dvy] in place.  Same formulas as dynamics.tangent_step.
    for i, (dz, dy, dvz, dvy) in enumerate(basis):
        drc_z = dz + tau * dvz
        drc_y = dy + tau * dvy
        ndotdrc = nx * drc_z + ny * drc_y
        dtau = -ndotdrc / ndotv
        dqz = drc_z + vz * dtau
        dqy = drc_y + vy * dtau
        dnz = sigma * dqz / rho
        dny = sigma * dqy / rho
        ndotdv = nx * dvz + ny * dvy
        vdotdn = vz * dnz + vy * dny
        basis[i] = (
            drc_z - 2.0 * ndotdrc * nx,
            drc_y - 2.0 * ndotdrc * ny,
            dvz - 2.0 * (ndotdv + vdotdn) * nx - 2.0 * ndotv * dnz,
            dvy - 2.0 * (ndotdv + vdotdn) * ny - 2.0 * ndotv * dny,
        )


def _lyap_orbit_exact(params, R, y0, angle0, bounces, transient):
    # Benettin with a full 4-vector tangent basis, reorthonormalized by
    # modified Gram-Schmidt every bounce.  Returns (lambda_spectrum, T)
    # or None if the orbit escapes early.
    z = R - math.sqrt(R * R - y0 * y0)
    y = y0
    vz = math.cos(angle0)
    vy = math.sin(angle0)
    # Hadamard-rotated orthonormal start basis: the canonical axes can sit
    # exactly on neutral directions of the bounce map (a displacement along
    # the velocity is one), which starves the leading vector of unstable
    # growth; mixing all axes into every vector keeps the overlaps generic.
    basis = [(0.5, 0.5, 0.5, 0.5), (0.5, -0.5, 0.5, -0.5),
             (0.5, 0.5, -0.5, -0.5), (0.5, -0.5, -0.5, 0.5)]
    sums = [0.0, 0.0, 0.0, 0.0]
    t = 0.0
    t_ref = 0.0
    total = transient + bounces
    for k in range(total):
        hit = _advance(params, z, y, vz, vy)
        if hit is None:
            return None
        tau, pz, py, vz2, vy2, nx, ny, ndotv, idx = hit
        if abs(ndotv) < GRAZING_EPS:
            raise NumericalError(
                f"tangent map ill-conditioned: grazing incidence |n.v| = {abs(ndotv)} "
                f"at bounce {k} (y0={y0}, angle0={angle0})")
        rho = params[idx][1]
        sigma = params[idx][4]
        _tangent_bounce(basis, tau, vz, vy, nx, ny, ndotv, rho, sigma)
        t += tau
        z, y, vz, vy = pz, py, vz2, vy2
        accumulate = k >= transient
        for i in range(4):
            wz, wy, wvz, wvy = basis[i]
            for j in range(i):
                bz, by, bvz, bvy = basis[j]
                proj = wz * bz + wy * by + wvz * bvz + wvy * bvy
                wz -= proj * bz
                wy -= proj * by
                wvz -= proj * bvz
                wvy -= proj * bvy
            nrm = math.sqrt(wz * wz + wy * wy + wvz * wvz + wvy * wvy)
            if nrm == 0.0:
                raise NumericalError("degenerate tangent basis")
            if accumulate:
                sums[i] += math.log(nrm)
            basis[i] = (wz / nrm, wy / nrm, wvz / nrm, wvy / nrm)
        if k == transient - 1:
            t_ref = t
    T = t - t_ref
    return tuple(s / T for s in sums), T


def _lyap_orbit_shadow(params, R, y0, angle0, bounces, transient, d0=1e-9):
    # Benettin two-trajectory method: a satellite offset by d0 in phase
    # space is advanced bounce-for-bounce with the reference, extrapolated
    # to the reference bounce times, and renormalized back to d0.
    z = R - math.sqrt(R * R - y0 * y0)
    y = y0
    vz = math.cos(angle0)
    vy = math.sin(angle0)
    t = 0.0
    # Initial offset along position-y: generic, and keeps |v| = 1 exactly.
    sz, sy, svz, svy = z, y + d0, vz, vy
    st = 0.0
    lam_sum = 0.0
    t_ref = 0.0
    total = transient + bounces
    for k in range(total):
        hit = _advance(params, z, y, vz, vy)
        if hit is None:
            return None
        shit = _advance(params, sz, sy, svz, svy)
        if shit is None:
            return None
        t += hit[0]
        z, y, vz, vy = hit[1], hit[2], hit[3], hit[4]
        st += shit[0]
        sz, sy, svz, svy = shit[1], shit[2], shit[3], shit[4]
        # Compare at the reference bounce time.
        dt = t - st
        ez = sz + dt * svz - z
        ey = sy + dt * svy - y
        evz = svz - vz
        evy = svy - vy
        dist = math.sqrt(ez * ez + ey * ey + evz * evz + evy * evy)
        if dist == 0.0:
            raise NumericalError("shadow trajectory collapsed onto reference")
        if k >= transient:
            lam_sum += math.log(dist / d0)
        if k == transient - 1:
            t_ref = t
        # Pull the satellite back to distance d0 along the displacement.
        scale = d0 / dist
        sz = z + ez * scale
        sy = y + ey * scale
        svz = vz + evz * scale
        svy = vy + evy * scale
        sn = math.hypot(svz, svy)
        svz /= sn
        svy /= sn
        st = t
    T = t - t_ref
    return lam_sum / T, T


def _lyap_chunk(args):
    params, R, initials, bounces, transient, method = args
    out = []
    for (y0, angle0) in initials:
        try:
            if method == "exact":
                res = _lyap_orbit_exact(params, R, y0, angle0, bounces, transient)
                out.append(None if res is None else res[0])
            else:
                res = _lyap_orbit_shadow(params, R, y0, angle0, bounces, transient)
                out.append(None if res is None else (res[0],))
        except NumericalError as e:
            raise NumericalError(
                f"{e} [initial condition y0={y0!r}, angle0={angle0!r}]") from e
    return out


def lyapunov_estimate(config: CavityConfig, sample: RepellerSample,
                      bounces: int, method: str = "exact",
                      transient: int = 100, workers: int = 1) -> LyapunovEstimate:
    """Largest Lyapunov exponent averaged over the sampled orbits.

    Each orbit contributes lambda_1 = (1/T) sum of per-bounce log growth
    factors of a renormalized tangent vector, with T the flow time after a
    ``transient`` lead-in that is propagated but not accumulated.  With
    ``method="exact"`` a full orthonormalized 4-vector basis is carried, so
    the whole spectrum and its sum (pairs rule) come along; with
    ``method="shadow"`` a finite-difference satellite trajectory tracks the
    leading exponent only and ``exponent_sum`` is NaN.

    Orbits escaping before ``transient + bounces`` are dropped with a
    warning; if every orbit escapes this raises ValueError.  Mean, standard
    error and all reductions are computed in fixed orbit order, so results
    do not depend on ``workers``.
    """
    if len(sample) == 0:
        raise ValueError("empty repeller sample: no orbits to average")
    if bounces < 1:
        raise ValueError(f"bounces >= 1 violated (got {bounces})")
    if method not in ("exact", "shadow"):
        raise ValueError(f"unknown method {method!r} (expected 'exact' or 'shadow')")
    geom = build_cavity(config)
    params = geom._arc_params
    R = config.R
    initials = list(sample.initials)
    if workers <= 1:
        results = _lyap_chunk((params, R, initials, bounces, transient, method))
    else:
        size = -(-len(initials) // workers)
        chunks = [(params, R, initials[i:i + size], bounces, transient, method)
                  for i in range(0, len(initials), size)]
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_lyap_chunk, chunks):
                results.extend(part)
    kept: list[tuple[float, ...]] = []
    for (y0, angle0), res in zip(initials, results):
        if res is None:
            warnings.warn(
                f"orbit (y0={y0}, angle0={angle0}) escaped before "
                f"{transient + bounces} bounces; dropped from the estimate")
        else:
            kept.append(res)
    if not kept:
        raise ValueError(
            f"all {len(initials)} orbits escaped before {transient + bounces} bounces")
    n = len(kept)
    lam1s = [spec[0] for spec in kept]
    mean = math.fsum(lam1s) / n
    if n > 1:
        var = math.fsum((x - mean) ** 2 for x in lam1s) / (n - 1)
        stderr = math.sqrt(var / n)
    else:
        stderr = 0.0
    if method == "exact":
        spectrum = tuple(math.fsum(spec[i] for spec in kept) / n for i in range(4))
        exponent_sum = math.fsum(spectrum)
    else:
        spectrum = None
        exponent_sum = float("nan")
    return LyapunovEstimate(
        lambda1=mean, stderr=stderr, exponent_sum=exponent_sum,
        n_orbits=n, bounces_per_orbit=bounces,
        spectrum=spectrum, per_orbit=tuple(lam1s),
    )


def pairs_check(estimate: LyapunovEstimate, tol: float) -> bool:
    """True iff the summed exponents vanish within ``tol`` (pairs rule)."""
    if estimate.n_orbits == 0 or estimate.bounces_per_orbit == 0:
        raise ValueError("no data: empty Lyapunov estimate")
    if math.isnan(estimate.exponent_sum):
        raise ValueError(
            "no data: estimate lacks a full tangent basis (shadow method)")
    return abs(estimate.exponent_sum) <= tol


def survival_curve(records: Sequence[EscapeRecord]) -> list[tuple[float, float]]:
    """Fraction of initial conditions with escape time > t, as a step function.

    Capped records never escape within the simulated horizon, so they hold
    the curve up; all-capped input gives the constant 1.0.
    """
    if not records:
        raise ValueError("no data: empty record list")
    n_total = len(records)
    times = sorted(r.escape_time for r in records if not r.capped)
    curve = [(0.0, 1.0)]
    remaining = n_total
    for t, group in groupby(times):
        remaining -= sum(1 for _ in group)
        curve.append((t, remaining / n_total))
    return curve
