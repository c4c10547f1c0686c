"""Built-in cavity presets.

The two-letter names state the paraxial character of the left and right
sub-cavity (U unstable, M marginal, S stable); ``fig2a``/``fig2b`` are the
symmetric hard-chaos and soft-chaos demonstration cavities.
"""

from .geometry import CavityConfig

PRESETS: dict[str, dict[str, float]] = {
    "UU": {"R": 1.0, "r": 0.25, "l_left": 0.04, "l_right": 0.04},
    "US": {"R": 1.0, "r": 0.90, "l_left": 0.05, "l_right": 0.30},
    "SS": {"R": 1.0, "r": 0.90, "l_left": 0.45, "l_right": 0.45},
    "MM": {"R": 1.0, "r": 0.80, "l_left": 0.20, "l_right": 0.20},
    "SM": {"R": 1.0, "r": 0.80, "l_left": 0.40, "l_right": 0.20},
    "UM": {"R": 1.0, "r": 0.80, "l_left": 0.01, "l_right": 0.20},
    "fig2a": {"R": 1.0, "r": 0.25, "l_left": 0.04, "l_right": 0.04},
    "fig2b": {"R": 1.0, "r": 0.90, "l_left": 0.45, "l_right": 0.45},
}


def preset_config(name: str, a: float = 0.003, b: float = 0.025) -> CavityConfig:
    """CavityConfig for a named preset with the standard apertures."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r} (available: {', '.join(sorted(PRESETS))})")
    return CavityConfig(a=a, b=b, **PRESETS[name])
