"""Persistence: measurement datasets, config files, and exporters.

Dataset files are little-endian binary:

    offset 0   magic "SPNR" (4 bytes)
    offset 4   version u32 (currently 1)
    offset 8   chirp as 4 x f64 (f0, slope, sample_rate, num_samples)
    offset 40  pose count P (u32)
    offset 44  valid bin count K (u32)
    offset 48  normalization scale (f64)
    offset 56  poses, P records of 6 x f64 (tx, rx)
    then       spectra, pose-major, K pairs of (f32 re, f32 im) per pose

Spectra are 32-bit on disk and 64-bit in memory; the quantization (~1e-7
relative) sits far below training tolerances. Volumes are raw little-endian
f32, x-fastest, with a key=value sidecar. Config files use a small
sectioned key=value grammar (see docs/formats.md) parsed with line/column
error reporting.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .chirp import ChirpConfig
from .errors import (
    BadMagicError,
    ConfigError,
    EmptyFieldError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .fields import PointScatterers, VoxelField
from .geometry import Aperture, SceneBounds

MAGIC = b"SPNR"
VERSION = 1

HISTORY_COLUMNS = (
    "step",
    "total",
    "magnitude",
    "complex",
    "smoothness",
    "sparsity",
    "grad_mean",
    "grad_std",
)

METRIC_COLUMNS = ("label", "iou", "chamfer", "hausdorff", "psnr", "ssim")


@dataclass
class MeasurementSet:
    """A full acquisition: per-pose spectra over the K valid bins.

    ``scale`` is the factor dividing the raw spectra; physical values are
    ``scale * spectra``. Freshly simulated data has scale 1 until
    :func:`normalize_measurements` rescales the maximum magnitude to 1.
    """

    chirp: ChirpConfig
    aperture: Aperture
    k_bins: int
    scale: float
    spectra: np.ndarray

    def __post_init__(self):
        self.k_bins = int(self.k_bins)
        self.scale = float(self.scale)
        self.spectra = np.asarray(self.spectra, dtype=np.complex128)
        if self.k_bins < 1 or self.k_bins > self.chirp.num_samples:
            raise ValueError(f"k_bins must lie in [1, {self.chirp.num_samples}]")
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.spectra.shape != (len(self.aperture), self.k_bins):
            raise ValueError(
                f"spectra shape {self.spectra.shape} does not match "
                f"{len(self.aperture)} poses x {self.k_bins} bins"
            )

    def __len__(self) -> int:
        return len(self.aperture)


def normalize_measurements(ms: MeasurementSet) -> MeasurementSet:
    """Rescale so the maximum |Z| over all poses and bins is 1.

    The applied factor folds into ``scale`` so physical values are preserved.
    An all-zero set is returned unchanged.
    """
    peak = float(np.abs(ms.spectra).max()) if ms.spectra.size else 0.0
    if peak <= 0.0:
        return ms
    return MeasurementSet(
        chirp=ms.chirp,
        aperture=ms.aperture,
        k_bins=ms.k_bins,
        scale=ms.scale * peak,
        spectra=ms.spectra / peak,
    )


def write_dataset(path, ms: MeasurementSet) -> None:
    """Serialize a MeasurementSet to the binary layout above."""
    chirp = ms.chirp
    header = MAGIC + struct.pack(
        "<I4dIId",
        VERSION,
        chirp.f0,
        chirp.slope,
        chirp.sample_rate,
        float(chirp.num_samples),
        len(ms.aperture),
        ms.k_bins,
        ms.scale,
    )
    poses = np.hstack([ms.aperture.tx, ms.aperture.rx]).astype("<f8")
    flat = np.empty((len(ms.aperture), ms.k_bins, 2), dtype="<f4")
    flat[:, :, 0] = ms.spectra.real
    flat[:, :, 1] = ms.spectra.imag
    with open(path, "wb") as f:
        f.write(header)
        f.write(poses.tobytes())
        f.write(flat.tobytes())


def _take(buf: bytes, offset: int, count: int, what: str) -> tuple[bytes, int]:
    if offset + count > len(buf):
        raise TruncatedFileError(
            f"file ends inside {what} ({offset + count} bytes needed, "
            f"{len(buf)} present)",
            offset=len(buf),
        )
    return buf[offset : offset + count], offset + count


def read_dataset(path) -> MeasurementSet:
    """Parse a dataset file, reporting the byte offset of any defect."""
    with open(path, "rb") as f:
        buf = f.read()
    raw, off = _take(buf, 0, 4, "magic")
    if raw != MAGIC:
        raise BadMagicError(f"bad magic {raw!r}, expected {MAGIC!r}", offset=0)
    raw, off = _take(buf, off, 4, "version")
    (version,) = struct.unpack("<I", raw)
    if version != VERSION:
        raise UnsupportedVersionError(
            f"unsupported version {version}, expected {VERSION}", offset=4
        )
    raw, off = _take(buf, off, 32, "chirp header")
    f0, slope, sample_rate, num_samples = struct.unpack("<4d", raw)
    raw, off = _take(buf, off, 16, "pose/bin counts and scale")
    n_poses, k_bins, scale = struct.unpack("<IId", raw)
    raw, off = _take(buf, off, 48 * n_poses, "pose table")
    poses = np.frombuffer(raw, dtype="<f8").reshape(n_poses, 6)
    raw, off = _take(buf, off, 8 * n_poses * k_bins, "spectra")
    pairs = np.frombuffer(raw, dtype="<f4").reshape(n_poses, k_bins, 2)
    chirp = ChirpConfig(
        f0=f0, slope=slope, sample_rate=sample_rate, num_samples=int(num_samples)
    )
    aperture = Aperture(tx=poses[:, :3].copy(), rx=poses[:, 3:].copy())
    spectra = pairs[:, :, 0].astype(np.float64) + 1j * pairs[:, :, 1].astype(np.float64)
    return MeasurementSet(
        chirp=chirp, aperture=aperture, k_bins=k_bins, scale=scale, spectra=spectra
    )


def write_volume(field: VoxelField, path) -> None:
    """Raw little-endian f32 voxel values (x-fastest) plus a text sidecar."""
    data = np.asarray(field.values, dtype="<f4")
    with open(path, "wb") as f:
        f.write(data.ravel(order="F").tobytes())
    nx, ny, nz = field.resolution
    c = field.bounds.center
    lines = [
        f"resolution = {nx} {ny} {nz}",
        f"center = {float(c[0])!r} {float(c[1])!r} {float(c[2])!r}",
        f"side = {float(field.bounds.side)!r}",
        f"min = {float(data.min())!r}",
        f"max = {float(data.max())!r}",
        f"output_scale = {float(field.output_scale)!r}",
    ]
    with open(str(path) + ".meta", "w") as f:
        f.write("\n".join(lines) + "\n")


def read_volume(path) -> VoxelField:
    """Read back a volume written by :func:`write_volume`."""
    cfg = _parse_keyvalues(str(path) + ".meta")
    res = tuple(int(v) for v in cfg["resolution"])
    center = np.array([float(v) for v in cfg["center"]])
    side = float(cfg["side"][0])
    scale = float(cfg.get("output_scale", ["1.0"])[0])
    with open(path, "rb") as f:
        raw = f.read()
    expected = 4 * res[0] * res[1] * res[2]
    if len(raw) < expected:
        raise TruncatedFileError(
            f"volume holds {len(raw)} bytes, header promises {expected}",
            offset=len(raw),
        )
    values = (
        np.frombuffer(raw[:expected], dtype="<f4")
        .astype(np.float64)
        .reshape(res, order="F")
    )
    bounds = SceneBounds(center=center, side=side)
    return VoxelField(bounds=bounds, resolution=res, values=values, output_scale=scale)


def _parse_keyvalues(path) -> dict:
    out = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            out[key.strip()] = value.split()
    return out


def export_ply(points: PointScatterers, path) -> None:
    """ASCII PLY point cloud with per-vertex intensity."""
    if len(points) == 0:
        raise EmptyFieldError("refusing to export an empty point cloud")
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(points)}",
        "property float x",
        "property float y",
        "property float z",
        "property float intensity",
        "end_header",
    ]
    for p, w in zip(points.positions, points.intensities):
        lines.append(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g} {w:.9g}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def render_slice(field: VoxelField, axis: int, index: int, path) -> None:
    """8-bit binary PGM of one axis-aligned slice, min-max normalized.

    A constant slice maps to all-zero pixels. Image rows follow the first
    remaining axis, columns the second.
    """
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1, or 2, got {axis}")
    if not 0 <= index < field.resolution[axis]:
        raise ValueError(
            f"slice index {index} outside resolution {field.resolution[axis]}"
        )
    plane = np.take(field.values, index, axis=axis)
    lo, hi = float(plane.min()), float(plane.max())
    if hi > lo:
        img = np.round((plane - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        img = np.zeros(plane.shape, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(img.tobytes())


def write_history_csv(history, path) -> None:
    """TrainHistory to CSV; columns are HISTORY_COLUMNS."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(HISTORY_COLUMNS)
        for row in history.rows():
            writer.writerow([f"{v!r}" if isinstance(v, float) else v for v in row])


def append_metrics_csv(report, label: str, path) -> None:
    """Append one MetricReport row, writing the header on first touch."""
    try:
        with open(path) as f:
            has_header = f.readline().strip() != ""
    except FileNotFoundError:
        has_header = False
    with open(path, "a", newline="") as f:
        writer = csv.writer(f)
        if not has_header:
            writer.writerow(METRIC_COLUMNS)
        writer.writerow(
            [label] + [repr(float(v)) for v in report.row()]
        )


_NAME_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_NAME_BODY = _NAME_START | set("0123456789.-")


@dataclass
class ConfigValue:
    """One key occurrence: token list plus source position for errors."""

    tokens: list
    line: int
    column: int


class Config:
    """Parsed sectioned key=value file with typed, position-aware getters."""

    def __init__(self):
        self.sections: dict = {}

    def has(self, section: str) -> bool:
        return section in self.sections

    def occurrences(self, section: str, key: str) -> list:
        return self.sections.get(section, {}).get(key, [])

    def _last(self, section: str, key: str) -> ConfigValue | None:
        occ = self.occurrences(section, key)
        return occ[-1] if occ else None

    def get_str(self, section, key, default=None):
        v = self._last(section, key)
        if v is None:
            if default is None:
                raise ConfigError(f"missing key '{key}' in section [{section}]", 0, 0)
            return default
        if len(v.tokens) != 1:
            raise ConfigError(
                f"key '{key}' expects a single value", v.line, v.column
            )
        return v.tokens[0]

    def _scalar(self, section, key, default, convert, kind):
        v = self._last(section, key)
        if v is None:
            if default is None:
                raise ConfigError(f"missing key '{key}' in section [{section}]", 0, 0)
            return default
        if len(v.tokens) != 1:
            raise ConfigError(f"key '{key}' expects one {kind}", v.line, v.column)
        try:
            return convert(v.tokens[0])
        except ValueError:
            raise ConfigError(
                f"key '{key}': {v.tokens[0]!r} is not a valid {kind}",
                v.line,
                v.column,
            ) from None

    def get_float(self, section, key, default=None):
        return self._scalar(section, key, default, float, "number")

    def get_int(self, section, key, default=None):
        return self._scalar(section, key, default, int, "integer")

    def get_bool(self, section, key, default=None):
        def convert(tok):
            low = tok.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(tok)

        return self._scalar(section, key, default, convert, "boolean")

    def get_floats(self, section, key, default=None):
        v = self._last(section, key)
        if v is None:
            if default is None:
                raise ConfigError(f"missing key '{key}' in section [{section}]", 0, 0)
            return default
        try:
            return [float(t) for t in v.tokens]
        except ValueError:
            raise ConfigError(
                f"key '{key}' expects numbers, got {v.tokens!r}", v.line, v.column
            ) from None


def parse_config(text: str) -> Config:
    """Parse the sectioned key=value grammar documented in docs/formats.md.

    Raises:
        ConfigError: on any syntax defect, with 1-based line and column.
    """
    cfg = Config()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        stripped = body.strip()
        if not stripped:
            continue
        col = body.index(stripped[0]) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("section header missing ']'", lineno, col)
            name = stripped[1:-1].strip()
            if not name or name[0] not in _NAME_START or not set(name) <= _NAME_BODY:
                raise ConfigError(f"bad section name {name!r}", lineno, col + 1)
            section = name
            cfg.sections.setdefault(section, {})
            continue
        if "=" not in stripped:
            raise ConfigError("expected 'key = value' or '[section]'", lineno, col)
        key_part, value_part = stripped.split("=", 1)
        key = key_part.strip()
        if not key or key[0] not in _NAME_START or not set(key) <= _NAME_BODY:
            raise ConfigError(f"bad key name {key!r}", lineno, col)
        if section is None:
            raise ConfigError(
                f"key '{key}' appears before any [section]", lineno, col
            )
        tokens = value_part.split()
        if not tokens:
            raise ConfigError(f"key '{key}' has an empty value", lineno, col)
        value_col = body.index("=") + 2
        cfg.sections[section].setdefault(key, []).append(
            ConfigValue(tokens=tokens, line=lineno, column=value_col)
        )
    return cfg


def load_config(path) -> Config:
    with open(path) as f:
        return parse_config(f.read())
