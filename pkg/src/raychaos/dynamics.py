"""Event-driven propagation of a unit-speed ray between specular reflections.

Motion is free flight between collisions with the four reflective arcs.
Velocities have unit magnitude, so elapsed time in seconds equals path
length in meters.  The module also provides the exact linearization of the
bounce map (flight + curved-mirror reflection) used for Lyapunov analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from .geometry import CavityGeometry, SurfaceId

#: Minimum advance time before the next hit is accepted.  The same arc
#: remains eligible: a concave arc legitimately reflects a ray onto itself.
T_EPS = 1e-12

#: Two arcs hit within T_EPS at points farther apart than this is an error.
POINT_TOL = 1e-9

#: |n . v| below this makes the linearized collision-time variation
#: ill-conditioned; applies to the tangent map only.
GRAZING_EPS = 1e-10


class NumericalError(RuntimeError):
    """The dynamics could not be continued reliably."""


@dataclass(frozen=True)
class RayState:
    """Position, unit velocity, elapsed time and bounce count of the ray."""

    pos: tuple[float, float]
    vel: tuple[float, float]
    t: float = 0.0
    bounces: int = 0


@dataclass(frozen=True)
class BounceEvent:
    """One specular reflection: v_out = v_in - 2 (n . v_in) n."""

    surface: SurfaceId
    t: float
    point: tuple[float, float]
    normal: tuple[float, float]
    v_in: tuple[float, float]
    v_out: tuple[float, float]


@dataclass(frozen=True)
class TangentVector:
    """Infinitesimal phase-space displacement (equal-time convention)."""

    d_pos: tuple[float, float]
    d_vel: tuple[float, float]


@dataclass(frozen=True)
class Escaped:
    """The ray left the cavity; time of the final reflection is recorded."""

    t_last_bounce: float


@dataclass(frozen=True)
class CapReached:
    cap: int


@dataclass(frozen=True)
class TraceResult:
    """Ordered bounce events plus the escape outcome of one trace."""

    events: tuple[BounceEvent, ...]
    outcome: Union[Escaped, CapReached]
    path_length: float
    t0: float = 0.0

    @property
    def escaped(self) -> bool:
        return isinstance(self.outcome, Escaped)

    @property
    def n_bounces(self) -> int:
        return len(self.events)

    @property
    def last_bounce_time(self) -> float:
        return self.events[-1].t if self.events else self.t0


def _arc_hit(cz, rho, ap, side, nsign, z, y, vz, vy):
    """Earliest acceptable intersection of the ray with one arc, or None.

    Returns (t, pz, py, ncz, ncy) with the unnormalized normal direction.
    Acceptance: t > T_EPS, impact on the arc's z side of its center,
    |py| <= ap (closed aperture), and the ray approaching the reflective
    side.  The quadratic is solved in the cancellation-safe form (larger
    root from the sign of b, the other from the product of roots).
    """
    dz = z - cz
    b_half = dz * vz + y * vy
    c_coef = dz * dz + y * y - rho * rho
    disc = b_half * b_half - c_coef
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    q = -(b_half + math.copysign(sq, b_half))
    if q != 0.0:
        t1 = q
        t2 = c_coef / q
        if t2 < t1:
            t1, t2 = t2, t1
    else:
        t1 = t2 = 0.0
    for t in (t1, t2):
        if t <= T_EPS:
            continue
        pz = z + t * vz
        py = y + t * vy
        if (pz - cz) * side <= 0.0:
            continue
        if py > ap or py < -ap:
            continue
        ncz = (pz - cz) * nsign
        ncy = py * nsign
        if ncz * vz + ncy * vy >= 0.0:
            continue
        return (t, pz, py, ncz, ncy)
    return None


def _advance(params, z, y, vz, vy):
    """One bounce of the bare kernel: earliest valid hit over the four arcs.

    Returns None on escape, else (t_hit, pz, py, vz', vy', nx, ny, n.v_in,
    arc_index) with the normal normalized to unit length.  Raises
    NumericalError when two arcs collide within T_EPS at distinct points.
    """
    hits = []
    for idx, (cz, rho, ap, side, nsign) in enumerate(params):
        h = _arc_hit(cz, rho, ap, side, nsign, z, y, vz, vy)
        if h is not None:
            hits.append((h[0], idx, h[1], h[2], h[3], h[4]))
    if not hits:
        return None
    hits.sort()
    t, idx, pz, py, ncz, ncy = hits[0]
    for t2, idx2, pz2, py2, _, _ in hits[1:]:
        if t2 - t <= T_EPS and (pz2 - pz) ** 2 + (py2 - py) ** 2 > POINT_TOL * POINT_TOL:
            raise NumericalError(
                f"ambiguous earliest collision: arcs {idx} and {idx2} hit within "
                f"{T_EPS} s at distinct points ({pz}, {py}) vs ({pz2}, {py2})"
            )
    nn = math.hypot(ncz, ncy)
    nx = ncz / nn
    ny = ncy / nn
    dot = nx * vz + ny * vy
    return (t, pz, py, vz - 2.0 * dot * nx, vy - 2.0 * dot * ny, nx, ny, dot, idx)


def _survival(params, z, y, vz, vy, cap):
    """Bounce count, last-bounce time and cap flag, without event storage."""
    t = 0.0
    n = 0
    while n < cap:
        hit = _advance(params, z, y, vz, vy)
        if hit is None:
            break
        t += hit[0]
        z, y, vz, vy = hit[1], hit[2], hit[3], hit[4]
        n += 1
    return n, t, n == cap


def intersect_ray_arc(pos, vel, arc) -> Optional[tuple[float, tuple[float, float], tuple[float, float]]]:
    """Earliest intersection (t_hit, point, unit normal) with one arc.

    Absent (None) when the ray misses the arc's circle, lands outside the
    aperture or on the non-reflective side, or is receding.
    """
    h = _arc_hit(arc.center[0], arc.radius, arc.aperture_half, arc.arc_side,
                 arc.normal_sign, pos[0], pos[1], vel[0], vel[1])
    if h is None:
        return None
    t, pz, py, ncz, ncy = h
    nn = math.hypot(ncz, ncy)
    return (t, (pz, py), (ncz / nn, ncy / nn))


def reflect(v_in, n):
    """Specular reflection v_out = v_in - 2 (n . v_in) n."""
    dot = v_in[0] * n[0] + v_in[1] * n[1]
    if dot >= 0.0:
        raise ValueError(f"reflection from non-approaching ray (n.v = {dot})")
    return (v_in[0] - 2.0 * dot * n[0], v_in[1] - 2.0 * dot * n[1])


def step(state: RayState, geom: CavityGeometry) -> tuple[RayState, Optional[BounceEvent]]:
    """Advance to the earliest collision over the four arcs and reflect.

    With no collision ahead the state is returned unchanged with event
    None, which the caller interprets as escape.
    """
    hit = _advance(geom._arc_params, state.pos[0], state.pos[1],
                   state.vel[0], state.vel[1])
    if hit is None:
        return state, None
    t_hit, pz, py, vz2, vy2, nx, ny, _, idx = hit
    event = BounceEvent(
        surface=geom.arcs[idx].surface,
        t=state.t + t_hit,
        point=(pz, py),
        normal=(nx, ny),
        v_in=state.vel,
        v_out=(vz2, vy2),
    )
    new_state = RayState(pos=(pz, py), vel=(vz2, vy2), t=event.t,
                         bounces=state.bounces + 1)
    return new_state, event


def trace(initial: RayState, geom: CavityGeometry, cap: int) -> TraceResult:
    """Iterate bounces until escape or the bounce cap.

    Escape time is the time of the last bounce, not of any exit-plane
    crossing.  A ray that never collides yields an empty event list with
    t_last_bounce equal to the start time.
    """
    if cap < 1:
        raise ValueError(f"trace requires cap >= 1 (got {cap})")
    params = geom._arc_params
    events = []
    state = initial
    while len(events) < cap:
        state, event = _step_fast(state, geom, params)
        if event is None:
            break
        events.append(event)
    if len(events) == cap:
        outcome: Union[Escaped, CapReached] = CapReached(cap)
    else:
        outcome = Escaped(events[-1].t if events else initial.t)
    path_length = (events[-1].t - initial.t) if events else 0.0
    return TraceResult(events=tuple(events), outcome=outcome,
                       path_length=path_length, t0=initial.t)


def _step_fast(state, geom, params):
    # step() variant reusing a prefetched params tuple.
    hit = _advance(params, state.pos[0], state.pos[1], state.vel[0], state.vel[1])
    if hit is None:
        return state, None
    t_hit, pz, py, vz2, vy2, nx, ny, _, idx = hit
    event = BounceEvent(geom.arcs[idx].surface, state.t + t_hit, (pz, py),
                        (nx, ny), state.vel, (vz2, vy2))
    return RayState((pz, py), (vz2, vy2), event.t, state.bounces + 1), event


def tangent_step(state: RayState, tv: TangentVector, event: BounceEvent,
                 geom: CavityGeometry) -> TangentVector:
    """Exact linearization of (free flight + reflection) applied to tv.

    `state` is the pre-flight state that produced `event` via step.  The
    convention is equal-time: the input displacement is taken at the moment
    just after the previous bounce, the output at the moment just after
    this one.  Includes the first-order variation of the collision time and
    the curvature of the arc (variation of the normal along the surface).
    """
    v0z, v0y = state.vel
    nx, ny = event.normal
    ndotv = nx * v0z + ny * v0y
    if abs(ndotv) < GRAZING_EPS:
        raise NumericalError(f"tangent map ill-conditioned: grazing incidence |n.v| = {abs(ndotv)}")
    arc = geom.arc(event.surface)
    rho = arc.radius
    sigma = arc.normal_sign
    tau = event.t - state.t

    # Flight to the reference collision time.
    drc_z = tv.d_pos[0] + tau * tv.d_vel[0]
    drc_y = tv.d_pos[1] + tau * tv.d_vel[1]
    dvz, dvy = tv.d_vel

    # Collision-time variation and perturbed impact-point displacement.
    ndotdrc = nx * drc_z + ny * drc_y
    dtau = -ndotdrc / ndotv
    dqz = drc_z + v0z * dtau
    dqy = drc_y + v0y * dtau

    # Normal varies along the arc: n = sigma (p - c) / rho.
    dnz = sigma * dqz / rho
    dny = sigma * dqy / rho

    # Post-bounce displacement is the mirror image of the pre-bounce one.
    drp_z = drc_z - 2.0 * ndotdrc * nx
    drp_y = drc_y - 2.0 * ndotdrc * ny

    ndotdv = nx * dvz + ny * dvy
    vdotdn = v0z * dnz + v0y * dny
    dvp_z = dvz - 2.0 * (ndotdv + vdotdn) * nx - 2.0 * ndotv * dnz
    dvp_y = dvy - 2.0 * (ndotdv + vdotdn) * ny - 2.0 * ndotv * dny
    return TangentVector((drp_z, drp_y), (dvp_z, dvp_y))
