"""Bundled toy scenes and config-file assembly of simulation inputs.

Scene generators place points at fixed fractions of the scene side so any
cubic bounds gets a geometrically similar scene; the defaults reproduce the
desk-scale 0.36 m cube observed from a 0.23 m standoff cylinder.
"""

import numpy as np

from .chirp import ChirpConfig
from .errors import ConfigError
from .fields import PointScatterers, sheet_benchmark
from .geometry import Aperture, SceneBounds, cylindrical_aperture
from .io import Config

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))

DEFAULT_SIDE = 0.36
DEFAULT_STANDOFF = 0.23


def default_bounds() -> SceneBounds:
    return SceneBounds(center=np.zeros(3), side=DEFAULT_SIDE)


def default_chirp() -> ChirpConfig:
    """Desk-scale waveform: 1.5 GHz carrier keeps lambda/4 above c/(2B)."""
    return ChirpConfig(f0=1.5e9, slope=70.295e12, sample_rate=5e6, num_samples=256)


def default_aperture() -> Aperture:
    return cylindrical_aperture(
        radius=DEFAULT_STANDOFF, n_angles=90, n_heights=4, height_extent=0.25
    )


def single_point(bounds: SceneBounds | None = None) -> PointScatterers:
    """One unit scatterer, off-center so no symmetry hides mistakes."""
    bounds = bounds or default_bounds()
    offset = np.array([0.125, -1.0 / 12.0, 1.0 / 18.0])
    return PointScatterers(
        positions=(bounds.center + bounds.side * offset)[None, :],
        intensities=np.array([1.0]),
    )


def two_points(bounds: SceneBounds | None = None) -> PointScatterers:
    """Two scatterers separated beyond the range resolution, unequal strength."""
    bounds = bounds or default_bounds()
    offsets = np.array([[-1.0 / 6.0, -5.0 / 36.0, -1.0 / 9.0], [2.0 / 9.0, 1.0 / 6.0, 5.0 / 36.0]])
    return PointScatterers(
        positions=bounds.center + bounds.side * offsets,
        intensities=np.array([1.0, 0.7]),
    )


def sphere_shell(
    bounds: SceneBounds | None = None,
    radius: float | None = None,
    count: int = 192,
    center=None,
) -> PointScatterers:
    """Evenly spread unit scatterers on a sphere (Fibonacci lattice).

    Latitudes are the midpoints z_i = 1 - 2(i + 0.5)/n and longitudes advance
    by the golden angle, giving near-uniform area per point.
    """
    bounds = bounds or default_bounds()
    if radius is None:
        radius = 0.25 * bounds.side
    if center is None:
        center = bounds.center
    i = np.arange(count)
    z = 1.0 - 2.0 * (i + 0.5) / count
    phi = i * GOLDEN_ANGLE
    ring = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    dirs = np.stack([ring * np.cos(phi), ring * np.sin(phi), z], axis=1)
    return PointScatterers(
        positions=np.asarray(center) + radius * dirs,
        intensities=np.ones(count),
    )


def bundled_sheet(bounds: SceneBounds | None = None) -> PointScatterers:
    """The undulating-sheet benchmark scaled into the given bounds."""
    bounds = bounds or default_bounds()
    s = bounds.side / DEFAULT_SIDE
    return sheet_benchmark(
        amplitude=0.02 * s,
        base_freq=2.0 / s,
        growth=10.0 / (s * s),
        extent=0.3 * s,
        spacing=0.004 * s,
        center=bounds.center,
    )


BUNDLED_SCENES = {
    "point": single_point,
    "two-points": two_points,
    "shell": sphere_shell,
    "sheet": bundled_sheet,
}


def bundled_scene(name: str, bounds: SceneBounds | None = None) -> PointScatterers:
    try:
        builder = BUNDLED_SCENES[name]
    except KeyError:
        options = ", ".join(sorted(BUNDLED_SCENES))
        raise ValueError(f"unknown scene {name!r}; bundled scenes: {options}") from None
    return builder(bounds)


def bounds_from_config(cfg: Config) -> SceneBounds:
    center = cfg.get_floats("bounds", "center", default=[0.0, 0.0, 0.0])
    if len(center) != 3:
        raise ConfigError("bounds center expects three numbers", 0, 0)
    side = cfg.get_float("bounds", "side", default=DEFAULT_SIDE)
    return SceneBounds(center=np.asarray(center), side=side)


def chirp_from_config(cfg: Config) -> ChirpConfig:
    base = default_chirp()
    return ChirpConfig(
        f0=cfg.get_float("chirp", "f0", default=base.f0),
        slope=cfg.get_float("chirp", "slope", default=base.slope),
        sample_rate=cfg.get_float("chirp", "sample_rate", default=base.sample_rate),
        num_samples=cfg.get_int("chirp", "num_samples", default=base.num_samples),
    )


def aperture_from_config(cfg: Config) -> Aperture:
    center = cfg.get_floats("aperture", "center", default=[0.0, 0.0, 0.0])
    if len(center) != 3:
        raise ConfigError("aperture center expects three numbers", 0, 0)
    return cylindrical_aperture(
        radius=cfg.get_float("aperture", "radius", default=DEFAULT_STANDOFF),
        n_angles=cfg.get_int("aperture", "n_angles", default=90),
        n_heights=cfg.get_int("aperture", "n_heights", default=4),
        height_extent=cfg.get_float("aperture", "height_extent", default=0.25),
        center=tuple(center),
    )


def _explicit_points(cfg: Config) -> PointScatterers:
    rows = cfg.occurrences("scene", "point")
    if not rows:
        raise ConfigError("scene kind 'points' needs at least one 'point' entry", 0, 0)
    positions, intensities = [], []
    for row in rows:
        if len(row.tokens) != 4:
            raise ConfigError(
                "point expects 'x y z intensity'", row.line, row.column
            )
        try:
            vals = [float(t) for t in row.tokens]
        except ValueError:
            raise ConfigError(
                f"point expects numbers, got {row.tokens!r}", row.line, row.column
            ) from None
        positions.append(vals[:3])
        intensities.append(vals[3])
    return PointScatterers(
        positions=np.asarray(positions), intensities=np.asarray(intensities)
    )


def scene_from_config(cfg: Config, bounds: SceneBounds) -> PointScatterers:
    """Build the ground-truth scene named by the [scene] section."""
    kind = cfg.get_str("scene", "kind", default="point")
    if kind == "points":
        scene = _explicit_points(cfg)
    elif kind == "shell":
        center = cfg.get_floats("scene", "center", default=list(bounds.center))
        scene = sphere_shell(
            bounds,
            radius=cfg.get_float("scene", "radius", default=0.25 * bounds.side),
            count=cfg.get_int("scene", "count", default=192),
            center=np.asarray(center),
        )
    elif kind == "sheet":
        s = bounds.side / DEFAULT_SIDE
        scene = sheet_benchmark(
            amplitude=cfg.get_float("scene", "amplitude", default=0.02 * s),
            base_freq=cfg.get_float("scene", "base_freq", default=2.0 / s),
            growth=cfg.get_float("scene", "growth", default=10.0 / (s * s)),
            extent=cfg.get_float("scene", "extent", default=0.3 * s),
            spacing=cfg.get_float("scene", "spacing", default=0.004 * s),
            center=tuple(bounds.center),
        )
    elif kind in BUNDLED_SCENES:
        scene = BUNDLED_SCENES[kind](bounds)
    else:
        options = ", ".join(sorted(BUNDLED_SCENES | {"points": None}))
        raise ConfigError(f"unknown scene kind {kind!r}; expected one of {options}", 0, 0)
    if not bounds.contains(scene.positions).all():
        raise ConfigError("scene has points outside the declared bounds", 0, 0)
    return scene
