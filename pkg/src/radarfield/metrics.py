"""Geometric and image-quality metrics for volumetric reconstructions.

Voxel metrics (IoU, PSNR, SSIM) compare two fields on the same grid after
normalizing each by its own maximum; point-set metrics (Chamfer, Hausdorff)
compare extracted point clouds in meters. Conventions that vary across the
literature are pinned here: Chamfer is the symmetric mean of directed
nearest-neighbor means divided by two, SSIM uses a 7x7 uniform window over
valid positions of the three central slices, and PSNR is capped at 99 dB.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyFieldError
from .fields import VoxelField
from .validation import check_positions

PSNR_CAP_DB = 99.0
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2
SSIM_WINDOW = 7
# Brute-force nearest neighbors below this size; indexed search above.
_BRUTE_FORCE_LIMIT = 2000


def _check_same_grid(a: VoxelField, b: VoxelField) -> None:
    if a.values.shape != b.values.shape:
        raise ValueError(
            f"field shapes differ: {a.values.shape} vs {b.values.shape}"
        )
    if not np.allclose(a.bounds.lo, b.bounds.lo) or not np.allclose(
        a.bounds.hi, b.bounds.hi
    ):
        raise ValueError("field bounds differ")


def _normalize_own_max(values: np.ndarray) -> np.ndarray:
    peak = values.max()
    if peak <= 0.0:
        return np.zeros_like(values)
    return values / peak


def iou(a: VoxelField, b: VoxelField, rel_threshold: float = 0.5) -> float:
    """Intersection-over-union of binarized occupancy.

    Each field is thresholded at ``rel_threshold`` times its own maximum,
    so the metric compares support shape, not absolute reflectivity scale.
    Two empty fields are defined to agree perfectly.

    Args:
        a, b: fields on identical grids.
        rel_threshold: relative binarization level in (0, 1].

    Returns:
        |A & B| / |A | B| in [0, 1].
    """
    _check_same_grid(a, b)
    rel_threshold = float(rel_threshold)
    if not 0.0 < rel_threshold <= 1.0:
        raise ValueError(f"rel_threshold must lie in (0, 1], got {rel_threshold!r}")
    mask_a = a.values >= rel_threshold * a.values.max()
    mask_b = b.values >= rel_threshold * b.values.max()
    if a.values.max() <= 0.0:
        mask_a = np.zeros_like(mask_a)
    if b.values.max() <= 0.0:
        mask_b = np.zeros_like(mask_b)
    union = np.count_nonzero(mask_a | mask_b)
    if union == 0:
        return 1.0
    return np.count_nonzero(mask_a & mask_b) / union


def _nearest_distances(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Distance from each src point to its nearest dst point."""
    if max(len(src), len(dst)) >= _BRUTE_FORCE_LIMIT:
        dist, _ = cKDTree(dst).query(src, k=1)
        return dist
    out = np.empty(len(src))
    for lo in range(0, len(src), 256):
        hi = min(lo + 256, len(src))
        diff = src[lo:hi, None, :] - dst[None, :, :]
        out[lo:hi] = np.sqrt((diff**2).sum(axis=2)).min(axis=1)
    return out


def _check_point_sets(a, b):
    a = check_positions(a, "a")
    b = check_positions(b, "b")
    if len(a) == 0 or len(b) == 0:
        raise EmptyFieldError("point sets must be non-empty")
    return a, b


def chamfer(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Chamfer distance in meters.

    Convention: (mean_a min_b |a-b| + mean_b min_a |b-a|) / 2. Identical
    sets give 0; matched singletons give their separation.
    """
    a, b = _check_point_sets(a, b)
    forward = _nearest_distances(a, b).mean()
    backward = _nearest_distances(b, a).mean()
    return float(0.5 * (forward + backward))


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance: the worst nearest-neighbor gap."""
    a, b = _check_point_sets(a, b)
    forward = _nearest_distances(a, b).max()
    backward = _nearest_distances(b, a).max()
    return float(max(forward, backward))


def psnr(a: VoxelField, b: VoxelField) -> float:
    """Peak signal-to-noise ratio in dB between own-max-normalized fields.

    10 log10(1 / MSE) on [0, 1] data, capped at 99 dB when MSE is 0.
    """
    _check_same_grid(a, b)
    na = _normalize_own_max(a.values)
    nb = _normalize_own_max(b.values)
    mse = float(np.mean((na - nb) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB))


def _window_means(img: np.ndarray, size: int) -> np.ndarray:
    """Mean of every valid size x size window via a summed-area table."""
    pad = np.zeros((img.shape[0] + 1, img.shape[1] + 1))
    pad[1:, 1:] = np.cumsum(np.cumsum(img, axis=0), axis=1)
    total = (
        pad[size:, size:]
        - pad[:-size, size:]
        - pad[size:, :-size]
        + pad[:-size, :-size]
    )
    return total / (size * size)


def _ssim_slice(x: np.ndarray, y: np.ndarray) -> float:
    """Mean SSIM over valid 7x7 windows of one slice pair.

    Per window: (2 mu_x mu_y + C1)(2 cov + C2) /
    ((mu_x^2 + mu_y^2 + C1)(var_x + var_y + C2)), population moments.
    """
    w = SSIM_WINDOW
    mu_x = _window_means(x, w)
    mu_y = _window_means(y, w)
    var_x = _window_means(x * x, w) - mu_x**2
    var_y = _window_means(y * y, w) - mu_y**2
    cov = _window_means(x * y, w) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_x**2 + mu_y**2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(np.mean(num / den))


def ssim(a: VoxelField, b: VoxelField) -> float:
    """Mean SSIM over the three axis-aligned central slices.

    Fields are normalized to [0, 1] by their own max; each slice is scored
    over valid 7x7 uniform windows with C1 = 0.01^2, C2 = 0.03^2.
    """
    _check_same_grid(a, b)
    shape = a.values.shape
    if min(shape) < SSIM_WINDOW:
        raise ValueError(
            f"resolution {shape} too small for a {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )
    na = _normalize_own_max(a.values)
    nb = _normalize_own_max(b.values)
    mids = [s // 2 for s in shape]
    slices = [
        (na[mids[0], :, :], nb[mids[0], :, :]),
        (na[:, mids[1], :], nb[:, mids[1], :]),
        (na[:, :, mids[2]], nb[:, :, mids[2]]),
    ]
    return float(np.mean([_ssim_slice(x, y) for x, y in slices]))


@dataclass(frozen=True)
class MetricReport:
    """One row of reconstruction quality numbers.

    Attributes:
        iou: occupancy overlap in [0, 1].
        chamfer: symmetric Chamfer distance, meters.
        hausdorff: symmetric Hausdorff distance, meters.
        psnr: peak signal-to-noise ratio, dB.
        ssim: structural similarity in [-1, 1].
    """

    iou: float
    chamfer: float
    hausdorff: float
    psnr: float
    ssim: float

    def row(self) -> tuple:
        return (self.iou, self.chamfer, self.hausdorff, self.psnr, self.ssim)


def evaluate_fields(
    predicted: VoxelField,
    reference: VoxelField,
    rel_threshold: float = 0.5,
) -> MetricReport:
    """Score a reconstruction against a reference on the same grid.

    Point clouds for the distance metrics are extracted at
    ``rel_threshold`` of each field's own max.

    Raises:
        EmptyFieldError: if either field has no voxel above threshold.
    """
    from .fields import extract_pointcloud

    _check_same_grid(predicted, reference)
    cloud_p = extract_pointcloud(
        predicted, predicted.bounds, predicted.resolution, rel_threshold
    ).positions
    cloud_r = extract_pointcloud(
        reference, reference.bounds, reference.resolution, rel_threshold
    ).positions
    return MetricReport(
        iou=iou(predicted, reference, rel_threshold),
        chamfer=chamfer(cloud_p, cloud_r),
        hausdorff=hausdorff(cloud_p, cloud_r),
        psnr=psnr(predicted, reference),
        ssim=ssim(predicted, reference),
    )
