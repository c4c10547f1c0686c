"""Event-driven ray dynamics and chaos analysis for a composite open cavity."""

from .geometry import (
    ArcMirror,
    CavityConfig,
    CavityGeometry,
    ConfigError,
    ParaxialReport,
    StableCavityError,
    SurfaceId,
    build_cavity,
    classify,
    half_trace,
    lyapunov_axial,
    magnification,
    sagitta,
)
from .dynamics import (
    BounceEvent,
    CapReached,
    Escaped,
    NumericalError,
    RayState,
    TangentVector,
    TraceResult,
    intersect_ray_arc,
    reflect,
    step,
    tangent_step,
    trace,
)
from .analysis import (
    EscapeRecord,
    LyapunovEstimate,
    RepellerSample,
    SosPoint,
    escape_scan,
    find_long_lived,
    launch_from_left_mirror,
    lyapunov_estimate,
    pairs_check,
    sos_collect,
    survival_curve,
)
from .presets import PRESETS, preset_config

try:
    from importlib.metadata import version as _pkg_version
    __version__ = _pkg_version("raychaos")
except Exception:  # pragma: no cover - only hit on uninstalled source trees
    __version__ = "0.0.0"

__all__ = [
    "ArcMirror",
    "BounceEvent",
    "CapReached",
    "CavityConfig",
    "CavityGeometry",
    "ConfigError",
    "EscapeRecord",
    "Escaped",
    "LyapunovEstimate",
    "NumericalError",
    "PRESETS",
    "ParaxialReport",
    "RayState",
    "RepellerSample",
    "SosPoint",
    "StableCavityError",
    "SurfaceId",
    "TangentVector",
    "TraceResult",
    "build_cavity",
    "classify",
    "escape_scan",
    "find_long_lived",
    "half_trace",
    "intersect_ray_arc",
    "launch_from_left_mirror",
    "lyapunov_axial",
    "lyapunov_estimate",
    "magnification",
    "pairs_check",
    "preset_config",
    "reflect",
    "sagitta",
    "sos_collect",
    "step",
    "survival_curve",
    "tangent_step",
    "trace",
]
