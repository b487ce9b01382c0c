"""Scene representations: point scatterers, voxel grids, and a neural field.

All field kinds expose the same two operations used by the reconstruction
loop: ``sample(positions) -> sigma`` and
``param_gradient(positions, upstream) -> d(sum(upstream * sigma))/d(params)``,
the exact reverse-mode adjoint of sampling. Reflectivity is nonnegative by
construction (projected voxel values, softplus network output) and zero
outside the scene bounds.

Optimizable fields carry an ``output_scale`` gain: parameters stay O(1) and
``sigma = output_scale * unit_field``. The trainer calibrates the gain from
the measurement geometry so optimizer and regularizer defaults transfer
across scenes.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import EmptyFieldError
from .geometry import SceneBounds
from .validation import check_positions, check_positive, check_positive_int


def _resolution_tuple(resolution) -> tuple[int, int, int]:
    if np.isscalar(resolution):
        r = check_positive_int(resolution, "resolution")
        return (r, r, r)
    res = tuple(int(v) for v in resolution)
    if len(res) != 3 or any(v <= 0 for v in res):
        raise ValueError(f"resolution must be a positive int or 3 of them, got {resolution!r}")
    return res


def grid_axes(bounds: SceneBounds, resolution) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Voxel-center coordinates along each axis."""
    res = _resolution_tuple(resolution)
    lo, hi = bounds.lo, bounds.hi
    return tuple(
        lo[a] + (np.arange(res[a]) + 0.5) * (hi[a] - lo[a]) / res[a] for a in range(3)
    )


def grid_positions(bounds: SceneBounds, resolution) -> np.ndarray:
    """All voxel centers as an (nx*ny*nz, 3) array, z varying fastest."""
    ax = grid_axes(bounds, resolution)
    xs, ys, zs = np.meshgrid(*ax, indexing="ij")
    return np.stack([xs.ravel(), ys.ravel(), zs.ravel()], axis=1)


@dataclass
class QuerySet:
    """Positions with quadrature weights for the volume integral."""

    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.positions = check_positions(self.positions, "positions")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.positions.shape[0],):
            raise ValueError(
                f"weights shape {self.weights.shape} does not match "
                f"{self.positions.shape[0]} positions"
            )

    def __len__(self) -> int:
        return self.positions.shape[0]


def make_query_grid(bounds: SceneBounds, resolution) -> QuerySet:
    """Regular voxel-center quadrature; every weight is the voxel volume."""
    res = _resolution_tuple(resolution)
    pos = grid_positions(bounds, res)
    volume = float(np.prod((bounds.hi - bounds.lo) / np.array(res)))
    return QuerySet(positions=pos, weights=np.full(pos.shape[0], volume))


@dataclass
class PointScatterers:
    """Discrete scatterers: (n, 3) positions with intensities.

    Intensities are integrated reflectivities, so these enter the forward
    model with unit quadrature weight.
    """

    positions: np.ndarray
    intensities: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.intensities = np.asarray(self.intensities, dtype=np.float64).reshape(-1)
        if self.intensities.shape[0] != self.positions.shape[0]:
            raise ValueError("positions and intensities disagree on point count")

    def __len__(self) -> int:
        return self.positions.shape[0]

    def sample(self, positions: np.ndarray, spacing: float) -> np.ndarray:
        """Sum of intensities within half a voxel spacing (Chebyshev) of each query."""
        check_positive(spacing, "spacing")
        q = check_positions(positions, "positions")
        out = np.zeros(q.shape[0])
        for p, w in zip(self.positions, self.intensities):
            near = np.max(np.abs(q - p), axis=1) <= 0.5 * spacing
            out[near] += w
        return out

    def rasterize(self, bounds: SceneBounds, resolution) -> "VoxelField":
        """Bin points into voxels, summing intensities; points outside are dropped."""
        res = _resolution_tuple(resolution)
        values = np.zeros(res)
        if len(self):
            h = (bounds.hi - bounds.lo) / np.array(res)
            idx = np.floor((self.positions - bounds.lo) / h).astype(int)
            inside = np.all((idx >= 0) & (idx < np.array(res)), axis=1)
            # A point exactly on the far face belongs to the last voxel.
            on_face = np.all((idx >= 0) & (idx <= np.array(res)), axis=1) & ~inside
            idx = np.minimum(idx, np.array(res) - 1)
            keep = inside | on_face
            np.add.at(values, tuple(idx[keep].T), self.intensities[keep])
        return VoxelField(bounds=bounds, resolution=res, values=values)


@dataclass
class VoxelField:
    """Trilinearly interpolated voxel grid over cubic scene bounds.

    ``values`` has shape ``resolution``; reported reflectivity is
    ``output_scale * max(value, 0)`` interpolated between voxel centers,
    with edge values extended to the bounds faces and zero outside.
    """

    bounds: SceneBounds
    resolution: tuple
    values: np.ndarray | None = None
    output_scale: float = 1.0

    def __post_init__(self):
        self.resolution = _resolution_tuple(self.resolution)
        if self.values is None:
            self.values = np.zeros(self.resolution)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.resolution:
            raise ValueError(
                f"values shape {self.values.shape} does not match resolution {self.resolution}"
            )
        check_positive(self.output_scale, "output_scale")

    @property
    def spacing(self) -> np.ndarray:
        return (self.bounds.hi - self.bounds.lo) / np.array(self.resolution)

    def params(self) -> list[np.ndarray]:
        return [self.values]

    def set_params(self, params: list[np.ndarray]) -> None:
        (self.values,) = params

    def project(self) -> None:
        """Clamp parameters to the nonnegative orthant (called after optimizer steps)."""
        np.maximum(self.values, 0.0, out=self.values)

    def _interp_setup(self, positions):
        p = check_positions(positions, "positions")
        inside = self.bounds.contains(p)
        u = (p - self.bounds.lo) / self.spacing - 0.5
        i0 = np.floor(u).astype(int)
        frac = u - i0
        res = np.array(self.resolution)
        corners, weights = [], []
        for dx in (0, 1):
            for dy in (0, 1):
                for dz in (0, 1):
                    idx = i0 + np.array([dx, dy, dz])
                    w = np.prod(
                        np.where(np.array([dx, dy, dz]) == 1, frac, 1.0 - frac), axis=1
                    )
                    np.clip(idx, 0, res - 1, out=idx)
                    corners.append(idx)
                    weights.append(w * inside)
        return corners, weights

    def sample(self, positions: np.ndarray) -> np.ndarray:
        corners, weights = self._interp_setup(positions)
        node = np.maximum(self.values, 0.0)
        out = np.zeros(len(weights[0]))
        for idx, w in zip(corners, weights):
            out += w * node[idx[:, 0], idx[:, 1], idx[:, 2]]
        return self.output_scale * out

    def param_gradient(self, positions: np.ndarray, upstream: np.ndarray) -> list[np.ndarray]:
        upstream = np.asarray(upstream, dtype=np.float64)
        corners, weights = self._interp_setup(positions)
        grad = np.zeros_like(self.values)
        for idx, w in zip(corners, weights):
            np.add.at(grad, (idx[:, 0], idx[:, 1], idx[:, 2]), w * upstream)
        # Subgradient of max(v, 0): 1 on v >= 0 so projected-to-zero voxels stay live.
        grad *= self.values >= 0.0
        return [self.output_scale * grad]


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class InrField:
    """Implicit neural reflectivity field.

    Coordinates are normalized to [-1, 1]^3 and lifted by a sinusoidal
    positional encoding with ``n_frequencies`` octaves per axis
    (sin and cos of 2^l pi z, input width 6 L). Hidden layers use sine
    activations; the scalar output passes through softplus, whose final bias
    starts at -4 so the initial volume is near-dark. Weights draw from
    U(-sqrt(6/fan_in), +sqrt(6/fan_in)) with a fixed seed.
    """

    def __init__(
        self,
        bounds: SceneBounds,
        n_frequencies: int = 8,
        hidden=(128, 128),
        seed: int = 0,
        output_scale: float = 1.0,
        final_bias: float = -4.0,
    ):
        self.bounds = bounds
        self.n_frequencies = check_positive_int(n_frequencies, "n_frequencies")
        self.hidden = tuple(int(h) for h in hidden)
        if not self.hidden or any(h <= 0 for h in self.hidden):
            raise ValueError(f"hidden widths must be positive, got {hidden!r}")
        self.seed = int(seed)
        self.output_scale = check_positive(output_scale, "output_scale")

        rng = np.random.default_rng(self.seed)
        widths = [6 * self.n_frequencies, *self.hidden, 1]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            bound = np.sqrt(6.0 / fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            self.biases.append(np.zeros(fan_out))
        self.biases[-1][:] = final_bias

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def set_params(self, params: list[np.ndarray]) -> None:
        it = iter(params)
        for i in range(len(self.weights)):
            self.weights[i] = next(it)
            self.biases[i] = next(it)

    def project(self) -> None:
        """Nonnegativity comes from softplus; nothing to clamp."""

    def _encode(self, positions):
        p = check_positions(positions, "positions")
        inside = self.bounds.contains(p)
        z = 2.0 * (p - self.bounds.lo) / (self.bounds.hi - self.bounds.lo) - 1.0
        freqs = np.pi * 2.0 ** np.arange(self.n_frequencies)
        args = z[:, :, None] * freqs[None, None, :]  # (n, 3, L)
        flat = args.reshape(p.shape[0], -1)
        return np.concatenate([np.sin(flat), np.cos(flat)], axis=1), inside

    def _forward(self, positions):
        enc, inside = self._encode(positions)
        acts = [enc]
        pres = []
        h = enc
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = h @ w.T + b
            pres.append(a)
            h = np.sin(a) if i < len(self.weights) - 1 else a
            if i < len(self.weights) - 1:
                acts.append(h)
        return acts, pres, inside

    def sample(self, positions: np.ndarray) -> np.ndarray:
        _, pres, inside = self._forward(positions)
        return self.output_scale * _softplus(pres[-1][:, 0]) * inside

    def param_gradient(self, positions: np.ndarray, upstream: np.ndarray) -> list[np.ndarray]:
        upstream = np.asarray(upstream, dtype=np.float64)
        acts, pres, inside = self._forward(positions)
        g = (upstream * inside * self.output_scale)[:, None] * _sigmoid(pres[-1])
        grads: list[np.ndarray] = []
        for i in range(len(self.weights) - 1, -1, -1):
            grads.append(g.sum(axis=0))  # bias
            grads.append(g.T @ acts[i])  # weight
            if i > 0:
                g = (g @ self.weights[i]) * np.cos(pres[i - 1])
        grads.reverse()
        return grads


def sample_field(field, positions: np.ndarray) -> np.ndarray:
    """Reflectivity sigma at each position (zero outside the field's bounds)."""
    if isinstance(field, PointScatterers):
        raise TypeError(
            "point scatterers have no pointwise density; rasterize them first"
        )
    return field.sample(positions)


def field_param_gradient(field, positions: np.ndarray, upstream: np.ndarray) -> list[np.ndarray]:
    """Gradient of sum(upstream * sigma(positions)) with respect to field parameters."""
    return field.param_gradient(positions, upstream)


def field_to_grid(field, bounds: SceneBounds, resolution) -> np.ndarray:
    """Sample (or rasterize) a field on a regular grid; shape = resolution."""
    res = _resolution_tuple(resolution)
    if isinstance(field, PointScatterers):
        return field.rasterize(bounds, res).values
    return field.sample(grid_positions(bounds, res)).reshape(res)


def extract_pointcloud(
    field,
    bounds: SceneBounds,
    resolution,
    rel_threshold: float = 0.5,
    mode: str = "threshold",
    slice_axis: int = 1,
) -> PointScatterers:
    """Turn a field into a point cloud on a regular grid.

    ``threshold`` keeps voxel centers whose value reaches rel_threshold times
    the grid maximum. ``slice-argmax`` keeps the single brightest voxel of
    each nonempty slice perpendicular to ``slice_axis`` (the sheet-benchmark
    error probe).

    Raises:
        EmptyFieldError: if the sampled grid is identically zero.
    """
    res = _resolution_tuple(resolution)
    grid = field_to_grid(field, bounds, res)
    peak = float(grid.max())
    if peak <= 0.0:
        raise EmptyFieldError("field is identically zero on the extraction grid")
    centers = grid_positions(bounds, res).reshape(*res, 3)
    if mode == "threshold":
        mask = grid >= rel_threshold * peak
        return PointScatterers(centers[mask], grid[mask])
    if mode == "slice-argmax":
        if slice_axis not in (0, 1, 2):
            raise ValueError(f"slice_axis must be 0, 1, or 2, got {slice_axis}")
        moved = np.moveaxis(grid, slice_axis, 0)
        cmoved = np.moveaxis(centers, slice_axis, 0)
        pts, vals = [], []
        for s in range(moved.shape[0]):
            plane = moved[s]
            if plane.max() <= 0.0:
                continue
            flat = int(np.argmax(plane))
            ij = np.unravel_index(flat, plane.shape)
            pts.append(cmoved[s][ij])
            vals.append(plane[ij])
        return PointScatterers(np.array(pts), np.array(vals))
    raise ValueError(f"unknown extraction mode {mode!r}")


def sheet_height(y, amplitude: float, base_freq: float, growth: float):
    """Analytic sheet elevation z(y) = A sin(2 pi (f0 y + g y^2 / 2))."""
    y = np.asarray(y, dtype=np.float64)
    return amplitude * np.sin(2.0 * np.pi * (base_freq * y + 0.5 * growth * y * y))


def sheet_benchmark(
    amplitude: float = 0.02,
    base_freq: float = 2.0,
    growth: float = 10.0,
    extent: float = 0.3,
    spacing: float = 0.002,
    center=(0.0, 0.0, 0.0),
) -> PointScatterers:
    """Unit-intensity sheet whose undulation frequency grows along y.

    The sheet is the surface z = sheet_height(y) sampled on an (x, y) lattice
    of pitch ``spacing`` covering a centered square of side ``extent``; the
    instantaneous spatial frequency at y is base_freq + growth * y.
    """
    check_positive(extent, "extent")
    check_positive(spacing, "spacing")
    half = 0.5 * extent
    line = np.arange(-half, half + 0.5 * spacing, spacing)
    xs, ys = np.meshgrid(line, line, indexing="ij")
    zs = sheet_height(ys, amplitude, base_freq, growth)
    pos = np.stack([xs.ravel(), ys.ravel(), zs.ravel()], axis=1) + np.asarray(center)
    return PointScatterers(pos, np.ones(pos.shape[0]))
