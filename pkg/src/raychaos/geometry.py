"""Cavity construction and closed-form paraxial stability analysis.

The composite cavity consists of two concave end mirrors (radius ``R``,
half-aperture ``b``) facing each other along the optical (z) axis, coupled
through a central biconvex element built from two convex arcs (radius ``r``,
half-aperture ``a``) joined at their edge points.  Rays with ``|y| > a``
bypass the central element; rays with ``|y| > b`` at an end mirror escape.

All lengths are in meters.  The left concave vertex sits at the origin and
the optical axis is the z axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional

#: Half-trace within this distance of 1 counts as marginally stable.
MARGINAL_TOL = 1e-9


class ConfigError(ValueError):
    """A cavity configuration violates one of its invariants."""


class StableCavityError(ValueError):
    """Magnification requested for a stable (m < 1) sub-cavity."""


class SurfaceId(Enum):
    LEFT_CONCAVE = "left_concave"
    LEFT_CONVEX = "left_convex"
    RIGHT_CONVEX = "right_convex"
    RIGHT_CONCAVE = "right_concave"


# Axial direction the reflective side looks toward, per surface.
_FACING = {
    SurfaceId.LEFT_CONCAVE: +1,
    SurfaceId.LEFT_CONVEX: -1,
    SurfaceId.RIGHT_CONVEX: +1,
    SurfaceId.RIGHT_CONCAVE: -1,
}

# +1: normal points away from the circle center (convex element surfaces);
# -1: normal points toward the center (concave end mirrors, hit from inside).
_NORMAL_SIGN = {
    SurfaceId.LEFT_CONCAVE: -1,
    SurfaceId.LEFT_CONVEX: +1,
    SurfaceId.RIGHT_CONVEX: +1,
    SurfaceId.RIGHT_CONCAVE: -1,
}

# Which z side of the circle center carries the physical arc.
_ARC_SIDE = {
    SurfaceId.LEFT_CONCAVE: -1,
    SurfaceId.LEFT_CONVEX: -1,
    SurfaceId.RIGHT_CONVEX: +1,
    SurfaceId.RIGHT_CONCAVE: +1,
}


@dataclass(frozen=True)
class CavityConfig:
    """Geometric parameters of the composite cavity.

    Parameters
    ----------
    R : float
        Radius of curvature of both concave end mirrors (m).
    r : float
        Radius of curvature of both convex element surfaces (m).
    l_left, l_right : float
        Vertex-to-vertex lengths of the left and right sub-cavities (m).
    a : float
        Half-aperture of the central element (m).
    b : float
        Half-aperture of the end mirrors (m).
    """

    R: float
    r: float
    l_left: float
    l_right: float
    a: float = 0.003
    b: float = 0.025

    def validate(self) -> None:
        """Raise :class:`ConfigError` naming the first violated invariant."""
        for name in ("R", "r", "l_left", "l_right", "a", "b"):
            value = getattr(self, name)
            if not (value > 0.0) or not math.isfinite(value):
                raise ConfigError(f"{name} > 0 violated (got {value})")
        if not self.a < self.r:
            raise ConfigError(f"a < r violated (a={self.a}, r={self.r})")
        if not self.b < self.R:
            raise ConfigError(f"b < R violated (b={self.b}, R={self.R})")
        if not self.a < self.b:
            raise ConfigError(f"a < b violated (a={self.a}, b={self.b})")
        if not self.l_left < self.R:
            raise ConfigError(f"l_left < R violated (l_left={self.l_left}, R={self.R})")
        if not self.l_right < self.R:
            raise ConfigError(f"l_right < R violated (l_right={self.l_right}, R={self.R})")
        L = self.l_left + self.l_right + 2.0 * sagitta(self.r, self.a)
        if not L < 2.0 * self.R:
            raise ConfigError(f"L < 2R violated (L={L}, R={self.R})")


@dataclass(frozen=True)
class ArcMirror:
    """One reflective circular arc of the cavity.

    ``vertex_z`` is the nominal axial position of the arc vertex, placed
    exactly from the configuration; ``center`` is derived from it and may
    carry one rounding ulp.  ``aperture_half`` bounds the transverse
    coordinate ``|y|`` of valid impact points.
    """

    surface: SurfaceId
    center: tuple[float, float]
    radius: float
    aperture_half: float
    facing: int
    vertex_z: float

    def __post_init__(self) -> None:
        if not self.aperture_half < self.radius:
            raise ConfigError(
                f"aperture_half < radius violated on {self.surface.value} "
                f"({self.aperture_half} >= {self.radius})"
            )

    @property
    def normal_sign(self) -> int:
        return _NORMAL_SIGN[self.surface]

    @property
    def arc_side(self) -> int:
        return _ARC_SIDE[self.surface]

    @property
    def vertex(self) -> tuple[float, float]:
        return (self.vertex_z, 0.0)


@dataclass(frozen=True)
class CavityGeometry:
    """The four arcs of the composite cavity in fixed surface order."""

    config: CavityConfig
    arcs: tuple[ArcMirror, ArcMirror, ArcMirror, ArcMirror]
    total_length: float
    sagitta: float

    def arc(self, surface: SurfaceId) -> ArcMirror:
        return self.arcs[list(SurfaceId).index(surface)]

    @cached_property
    def _arc_params(self) -> tuple[tuple[float, float, float, int, int], ...]:
        # Flat per-arc tuples (cz, radius, aperture, arc_side, normal_sign)
        # consumed by the hot intersection kernel.
        return tuple(
            (arc.center[0], arc.radius, arc.aperture_half, arc.arc_side, arc.normal_sign)
            for arc in self.arcs
        )


def sagitta(r: float, a: float) -> float:
    """Axial depth of a circular arc of radius ``r`` and half-aperture ``a``."""
    return r - math.sqrt(r * r - a * a)


def build_cavity(config: CavityConfig) -> CavityGeometry:
    """Place the four arcs of the composite cavity.

    The left concave vertex sits at z = 0.  The convex element surfaces are
    joined at their edge points (z = l_left + s_r, y = +/-a), so the central
    obstacle is a closed lens shape with no flat side faces.  The right
    concave vertex sits at z = L = l_left + l_right + 2 s_r.
    """
    config.validate()
    R, r = config.R, config.r
    s_r = sagitta(r, config.a)

    v_left_concave = 0.0
    v_left_convex = config.l_left
    v_right_convex = config.l_left + 2.0 * s_r
    total_length = v_right_convex + config.l_right
    v_right_concave = total_length

    arcs = (
        ArcMirror(SurfaceId.LEFT_CONCAVE, (v_left_concave + R, 0.0), R, config.b,
                  _FACING[SurfaceId.LEFT_CONCAVE], v_left_concave),
        ArcMirror(SurfaceId.LEFT_CONVEX, (v_left_convex + r, 0.0), r, config.a,
                  _FACING[SurfaceId.LEFT_CONVEX], v_left_convex),
        ArcMirror(SurfaceId.RIGHT_CONVEX, (v_right_convex - r, 0.0), r, config.a,
                  _FACING[SurfaceId.RIGHT_CONVEX], v_right_convex),
        ArcMirror(SurfaceId.RIGHT_CONCAVE, (v_right_concave - R, 0.0), R, config.b,
                  _FACING[SurfaceId.RIGHT_CONCAVE], v_right_concave),
    )
    return CavityGeometry(config=config, arcs=arcs, total_length=total_length, sagitta=s_r)


def half_trace(R: float, r: float, l: float) -> float:
    """Half-trace of the round-trip ray-transfer matrix of one sub-cavity.

    A concave mirror of radius ``R`` and a convex mirror of radius ``r`` at
    distance ``l`` give m = 2 (1 - l/R)(1 + l/r) - 1.  The sub-cavity is
    unstable for m > 1, marginal for m = 1 and stable for m < 1.
    """
    if not (R > 0.0 and r > 0.0 and l >= 0.0):
        raise ValueError(f"half_trace requires R, r > 0 and l >= 0 (got {R}, {r}, {l})")
    return 2.0 * (1.0 - l / R) * (1.0 + l / r) - 1.0


def magnification(m: float) -> float:
    """Per-round-trip transverse stretch factor M = m + sqrt(m^2 - 1)."""
    if m < 1.0:
        raise StableCavityError(f"stable sub-cavity: magnification undefined (m={m})")
    return m + math.sqrt(m * m - 1.0)


def lyapunov_axial(M: float, l: float, v: float = 1.0) -> float:
    """Lyapunov exponent of the axial orbit of an unstable sub-cavity.

    The round trip takes time 2 l / v and stretches transverse deviations by
    M, so the per-time rate is (v / 2l) ln M.
    """
    if M < 1.0:
        raise ValueError(f"lyapunov_axial requires M >= 1 (got {M})")
    if not l > 0.0:
        raise ValueError(f"lyapunov_axial requires l > 0 (got {l})")
    return (v / (2.0 * l)) * math.log(M)


@dataclass(frozen=True)
class ParaxialReport:
    """Stability classification of the two sub-cavities.

    ``M_*`` and ``lambda0_*`` are populated only for unstable sub-cavities.
    ``label`` is the two-letter code, left then right, with U (unstable,
    m > 1), M (marginal, m = 1 within tolerance) or S (stable, m < 1).
    """

    m_left: float
    m_right: float
    M_left: Optional[float]
    M_right: Optional[float]
    lambda0_left: Optional[float]
    lambda0_right: Optional[float]
    label: str


def _stability_char(m: float) -> str:
    if abs(m - 1.0) <= MARGINAL_TOL:
        return "M"
    return "U" if m > 1.0 else "S"


def classify(config: CavityConfig, v: float = 1.0) -> ParaxialReport:
    """Classify both sub-cavities and fill in unstable-side diagnostics."""
    config.validate()
    sides = []
    for l in (config.l_left, config.l_right):
        m = half_trace(config.R, config.r, l)
        char = _stability_char(m)
        if char == "U":
            M = magnification(m)
            lam0 = lyapunov_axial(M, l, v)
        else:
            M = None
            lam0 = None
        sides.append((m, M, lam0, char))
    (m_l, M_l, lam_l, c_l), (m_r, M_r, lam_r, c_r) = sides
    return ParaxialReport(
        m_left=m_l, m_right=m_r,
        M_left=M_l, M_right=M_r,
        lambda0_left=lam_l, lambda0_right=lam_r,
        label=c_l + c_r,
    )
