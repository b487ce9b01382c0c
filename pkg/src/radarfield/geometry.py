"""Antenna poses, synthetic apertures, and scene bounds."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .chirp import ChirpConfig, range_to_bin
from .errors import DegenerateGeometryError
from .validation import check_nonnegative, check_positions, check_positive, check_positive_int

# An antenna closer to a scatterer than this is treated as coincident.
MIN_ANTENNA_RANGE = 1e-9


@dataclass(frozen=True)
class Pose:
    """One transmit/receive antenna pair. Monostatic when tx == rx."""

    tx: np.ndarray
    rx: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tx", check_positions(self.tx, "tx")[0])
        object.__setattr__(self, "rx", check_positions(self.rx, "rx")[0])

    @property
    def is_monostatic(self) -> bool:
        return bool(np.array_equal(self.tx, self.rx))

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.tx + self.rx)


@dataclass
class Aperture:
    """An ordered list of poses plus optional generation metadata.

    ``tx`` and ``rx`` are (n, 3) arrays; row i is pose i.
    """

    tx: np.ndarray
    rx: np.ndarray
    meta: dict | None = field(default=None)

    def __post_init__(self):
        self.tx = check_positions(self.tx, "tx")
        self.rx = check_positions(self.rx, "rx")
        if self.tx.shape != self.rx.shape:
            raise ValueError(
                f"tx and rx pose counts differ: {self.tx.shape} vs {self.rx.shape}"
            )
        if self.tx.shape[0] == 0:
            raise ValueError("aperture must contain at least one pose")

    def __len__(self) -> int:
        return self.tx.shape[0]

    def pose(self, i: int) -> Pose:
        return Pose(self.tx[i], self.rx[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self.pose(i)


@dataclass(frozen=True)
class SceneBounds:
    """Axis-aligned cubic scene volume with edge length ``side``."""

    center: np.ndarray
    side: float

    def __post_init__(self):
        object.__setattr__(self, "center", check_positions(self.center, "center")[0])
        check_positive(self.side, "side")

    @property
    def lo(self) -> np.ndarray:
        return self.center - 0.5 * self.side

    @property
    def hi(self) -> np.ndarray:
        return self.center + 0.5 * self.side

    @property
    def corners(self) -> np.ndarray:
        """The 8 cube corners, shape (8, 3)."""
        lo, hi = self.lo, self.hi
        g = np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
        return g

    def contains(self, positions: np.ndarray) -> np.ndarray:
        """Boolean mask of points inside the cube (faces inclusive)."""
        p = check_positions(positions, "positions")
        return np.all((p >= self.lo) & (p <= self.hi), axis=1)


def cylindrical_aperture(
    radius: float,
    n_angles: int,
    n_heights: int,
    height_extent: float = 0.0,
    center=(0.0, 0.0, 0.0),
) -> Aperture:
    """Monostatic poses on a cylinder around ``center``.

    Angles are 2 pi i / n_angles for i = 0..n_angles-1; heights span
    [-height_extent/2, +height_extent/2] with ``n_heights`` even steps
    (a single height sits at the cylinder midplane). Ordering is
    angle-major: pose index = i_angle * n_heights + j_height.
    """
    check_positive(radius, "radius")
    check_positive_int(n_angles, "n_angles")
    check_positive_int(n_heights, "n_heights")
    check_nonnegative(height_extent, "height_extent")
    if n_heights > 1 and height_extent <= 0:
        raise ValueError("height_extent must be positive when n_heights > 1")
    center = check_positions(center, "center")[0]

    angles = 2.0 * np.pi * np.arange(n_angles) / n_angles
    if n_heights == 1:
        heights = np.zeros(1)
    else:
        heights = np.linspace(-0.5 * height_extent, 0.5 * height_extent, n_heights)
    ring = np.stack([radius * np.cos(angles), radius * np.sin(angles), np.zeros(n_angles)], axis=1)
    pos = np.repeat(ring, n_heights, axis=0)
    pos[:, 2] = np.tile(heights, n_angles)
    pos = pos + center
    meta = {
        "kind": "cylinder",
        "radius": radius,
        "n_angles": n_angles,
        "n_heights": n_heights,
        "height_extent": height_extent,
        "center": tuple(float(v) for v in center),
    }
    return Aperture(tx=pos.copy(), rx=pos.copy(), meta=meta)


def pose_ranges(pose: Pose, positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Transmit and receive ranges from one pose to each position.

    Raises:
        DegenerateGeometryError: if any position effectively coincides with
            either antenna (range below 1e-9 m).
    """
    p = check_positions(positions, "positions")
    r_t = np.linalg.norm(p - pose.tx, axis=1)
    r_r = np.linalg.norm(p - pose.rx, axis=1)
    bad = (r_t < MIN_ANTENNA_RANGE) | (r_r < MIN_ANTENNA_RANGE)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DegenerateGeometryError(
            f"position {p[i]} coincides with an antenna of the pose"
        )
    return r_t, r_r


def round_trip_delay(pose: Pose, positions: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Round-trip delay and ranges for each position.

    Returns (tau, r_t, r_r) with tau = (R_T + R_R) / c in seconds; tau is
    strictly increasing in |tx - x| for monostatic poses.
    """
    r_t, r_r = pose_ranges(pose, positions)
    return (r_t + r_r) / SPEED_OF_LIGHT, r_t, r_r


def valid_bins(
    chirp: ChirpConfig,
    bounds: SceneBounds,
    aperture: Aperture,
    margin: int = 2,
) -> int:
    """Number of DFT bins K that can carry scene energy.

    The worst-case one-way distance d_max is the maximum over poses and cube
    corners of (R_T + R_R)/2; K = ceil(range_to_bin(d_max)) + margin, clamped
    to the transform length N.
    """
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    corners = bounds.corners
    d_max = 0.0
    for i in range(len(aperture)):
        r_t = np.linalg.norm(corners - aperture.tx[i], axis=1)
        r_r = np.linalg.norm(corners - aperture.rx[i], axis=1)
        d_max = max(d_max, float(np.max(0.5 * (r_t + r_r))))
    k = int(np.ceil(float(range_to_bin(chirp, d_max)))) + margin
    return min(k, chirp.num_samples)


def multistatic_to_monostatic(aperture: Aperture) -> Aperture:
    """Collapse bistatic pairs onto phase-center monostatic poses.

    Each pair is replaced by a virtual monostatic pose at the tx/rx midpoint.
    For a scatterer at least d_min from both antennas the half round trip
    (R_T + R_R)/2 differs from the midpoint range by at most
    |tx - rx|^2 / (4 d_min); the approximation error vanishes for pairs that
    are already monostatic.
    """
    mid = 0.5 * (aperture.tx + aperture.rx)
    meta = dict(aperture.meta or {})
    meta["phase_center_approximation"] = True
    return Aperture(tx=mid.copy(), rx=mid.copy(), meta=meta)
