"""FMCW chirp math: beat tones, sampled spectra, and their closed form.

A linear chirp with slope ``S`` mixed against its echo at round-trip delay
``tau`` gives, after the usual deskew and with the residual video phase
dropped, the complex beat tone

    b(t) = M exp(i 2 pi f0 tau) exp(i 2 pi S tau t),   t in seconds.

Sampling at ``f_s`` turns the beat frequency into a phase step per sample,

    alpha = 2 pi S tau / f_s   [rad/sample],

which lives on the same circle as the DFT bin frequencies
``beta_k = 2 pi k / N``. That makes the N-point DFT of the sampled tone a
pure geometric sum with the closed form

    Z_k = (M/N) e^{i phi} (1 - e^{i alpha N}) / (1 - e^{i (alpha - beta_k)}),

evaluated here in the factored, cancellation-free shape
``(M/N) e^{i(phi + Delta (N-1)/2)} sin(N Delta/2)/sin(Delta/2)`` with
``Delta = alpha - beta_k`` wrapped to one turn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import InvalidDelayError
from .validation import check_positive, check_positive_int

# Gap below which the Dirichlet ratio switches to its series expansion.
SINGULARITY_THRESHOLD = 1e-9


@dataclass(frozen=True)
class ChirpConfig:
    """Sawtooth FMCW chirp parameters.

    Attributes:
        f0: chirp start frequency in Hz.
        slope: chirp slope S in Hz/s.
        sample_rate: ADC sample rate f_s in Hz.
        num_samples: samples per chirp N.
    """

    f0: float
    slope: float
    sample_rate: float
    num_samples: int

    def __post_init__(self):
        check_positive(self.f0, "f0")
        check_positive(self.slope, "slope")
        check_positive(self.sample_rate, "sample_rate")
        check_positive_int(self.num_samples, "num_samples")

    @property
    def duration(self) -> float:
        """Chirp duration T_c = N / f_s in seconds."""
        return self.num_samples / self.sample_rate

    @property
    def bandwidth(self) -> float:
        """Swept bandwidth B = S * T_c in Hz (derived, not the nominal figure)."""
        return self.slope * self.duration

    @property
    def range_resolution(self) -> float:
        """Range bin extent c / (2 B) in meters."""
        return SPEED_OF_LIGHT / (2.0 * self.bandwidth)

    @property
    def bin_spacing(self) -> float:
        """DFT bin spacing f_s / N in Hz."""
        return self.sample_rate / self.num_samples


@dataclass(frozen=True)
class ToneParams:
    """One sampled beat tone: s_t = amplitude * exp(i (alpha t + phase))."""

    amplitude: float
    phase: float
    alpha: float


@dataclass
class Spectrum:
    """A contiguous window of DFT bins.

    ``values[j]`` holds bin ``bin_offset + j``.
    """

    values: np.ndarray
    bin_offset: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 1:
            raise ValueError(f"Spectrum values must be 1-D, got shape {self.values.shape}")

    def __len__(self) -> int:
        return self.values.shape[0]


def wrap_phase(x):
    """Wrap angles to the principal interval [-pi, pi)."""
    return np.mod(np.asarray(x, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi


def beat_params(chirp: ChirpConfig, tau: float, amplitude: float = 1.0) -> ToneParams:
    """Beat tone parameters for an echo at round-trip delay ``tau``.

    Args:
        chirp: chirp configuration.
        tau: round-trip delay in seconds; must satisfy 0 <= tau < T_c.
        amplitude: tone amplitude M.

    Returns:
        ToneParams with phase = 2 pi f0 tau and alpha = 2 pi S tau / f_s.

    Raises:
        InvalidDelayError: if tau is negative or at least one chirp long.
    """
    tau = float(tau)
    if not np.isfinite(tau) or tau < 0.0 or tau >= chirp.duration:
        raise InvalidDelayError(
            f"delay {tau!r} s outside [0, {chirp.duration:.6g}) s for this chirp"
        )
    phase = 2.0 * np.pi * chirp.f0 * tau
    alpha = 2.0 * np.pi * chirp.slope * tau / chirp.sample_rate
    return ToneParams(amplitude=float(amplitude), phase=phase, alpha=alpha)


def synth_beat_time(params: ToneParams, n: int) -> np.ndarray:
    """Synthesize ``n`` samples of the beat tone in the time domain."""
    n = check_positive_int(n, "n")
    t = np.arange(n, dtype=np.float64)
    return params.amplitude * np.exp(1j * (params.alpha * t + params.phase))


def dft(series: np.ndarray) -> Spectrum:
    """Forward DFT with 1/N normalization: Z_k = (1/N) sum_t s_t e^{-i beta_k t}."""
    series = np.asarray(series, dtype=np.complex128)
    if series.ndim != 1 or series.shape[0] == 0:
        raise ValueError(f"series must be a nonempty 1-D array, got shape {series.shape}")
    return Spectrum(np.fft.fft(series) / series.shape[0], bin_offset=0)


def inverse_dft(spectrum: Spectrum, n: int) -> np.ndarray:
    """Invert :func:`dft` back to ``n`` time samples, zero-filling missing bins."""
    n = check_positive_int(n, "n")
    full = np.zeros(n, dtype=np.complex128)
    stop = spectrum.bin_offset + len(spectrum)
    if spectrum.bin_offset < 0 or stop > n:
        raise ValueError(f"spectrum window [{spectrum.bin_offset}, {stop}) exceeds n={n}")
    full[spectrum.bin_offset:stop] = spectrum.values
    return np.fft.ifft(full) * n


def dirichlet_kernel(delta, n: int) -> np.ndarray:
    """Signed Dirichlet ratio sin(n delta/2) / sin(delta/2).

    Near the removable singularity (|delta| < 1e-9 after wrapping) the ratio is
    evaluated by its second-order series n (1 - (n^2 - 1) delta^2 / 24), which
    tends to n as delta -> 0.
    """
    delta = wrap_phase(delta)
    scalar = delta.ndim == 0
    delta = np.atleast_1d(delta)
    out = np.empty_like(delta)
    small = np.abs(delta) < SINGULARITY_THRESHOLD
    out[small] = n * (1.0 - (n * n - 1.0) * delta[small] ** 2 / 24.0)
    big = ~small
    out[big] = np.sin(0.5 * n * delta[big]) / np.sin(0.5 * delta[big])
    return out[0] if scalar else out


def dirichlet_magnitude(alpha: float, beta_k, n: int) -> np.ndarray:
    """Leakage envelope |sin(N Delta / 2) / sin(Delta / 2)| at Delta = alpha - beta_k."""
    n = check_positive_int(n, "n")
    return np.abs(dirichlet_kernel(alpha - np.asarray(beta_k, dtype=np.float64), n))


def tone_spectrum_closed_form(params: ToneParams, n: int, bins=None) -> Spectrum:
    """Closed-form DFT of a sampled beat tone over a window of bins.

    Args:
        params: tone parameters (amplitude M, phase phi, step alpha).
        n: transform length N.
        bins: None for all N bins, an int K for bins [0, K), or a contiguous
            ascending integer array of bin indices in [0, N).

    Returns:
        Spectrum matching ``dft(synth_beat_time(params, n))`` on the window to
        double-precision accuracy.
    """
    n = check_positive_int(n, "n")
    offset, idx = _resolve_bins(bins, n)
    beta = 2.0 * np.pi * idx / n
    delta = wrap_phase(params.alpha - beta)
    ratio = dirichlet_kernel(delta, n)
    values = (params.amplitude / n) * np.exp(1j * (params.phase + 0.5 * delta * (n - 1))) * ratio
    return Spectrum(values, bin_offset=offset)


def range_to_bin(chirp: ChirpConfig, distance: float):
    """Fractional DFT bin index of a scatterer at one-way distance ``distance``.

    The beat frequency is f_b = S * 2 d / c; dividing by the bin spacing
    f_s / N gives the fractional index. Monotone increasing in distance.
    """
    distance = np.asarray(distance, dtype=np.float64)
    if np.any(distance < 0):
        raise ValueError("distance must be nonnegative")
    beat_freq = chirp.slope * 2.0 * distance / SPEED_OF_LIGHT
    return beat_freq / chirp.bin_spacing


def _resolve_bins(bins, n: int) -> tuple[int, np.ndarray]:
    if bins is None:
        return 0, np.arange(n, dtype=np.float64)
    if np.isscalar(bins):
        k = check_positive_int(bins, "bins")
        if k > n:
            raise ValueError(f"bin count {k} exceeds transform length {n}")
        return 0, np.arange(k, dtype=np.float64)
    idx = np.asarray(bins)
    if idx.ndim != 1 or idx.shape[0] == 0:
        raise ValueError("bins must be a nonempty 1-D index array")
    if not np.issubdtype(idx.dtype, np.integer):
        raise ValueError("bin indices must be integers")
    if idx.min() < 0 or idx.max() >= n:
        raise ValueError(f"bin indices must lie in [0, {n})")
    if idx.shape[0] > 1 and not np.all(np.diff(idx) == 1):
        raise ValueError("bin index set must be contiguous ascending")
    return int(idx[0]), idx.astype(np.float64)
