"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from radarfield.chirp import ChirpConfig
from radarfield.geometry import SceneBounds, cylindrical_aperture

# Hardware-like chirp: TI mmWave slope/rate/samples, 77 GHz band.
MMWAVE_SLOPE = 70.295e12
MMWAVE_SAMPLE_RATE = 5e6
MMWAVE_NUM_SAMPLES = 256


def direct_dft(series):
    """O(N^2) summation DFT with 1/N normalization (independent oracle)."""
    series = np.asarray(series, dtype=np.complex128)
    n = series.shape[0]
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ series / n


def central_difference(fn, x0, h):
    """Central finite-difference derivative of scalar fn at x0."""
    return (fn(x0 + h) - fn(x0 - h)) / (2.0 * h)


@pytest.fixture
def mmwave_chirp():
    return ChirpConfig(
        f0=77e9,
        slope=MMWAVE_SLOPE,
        sample_rate=MMWAVE_SAMPLE_RATE,
        num_samples=MMWAVE_NUM_SAMPLES,
    )


@pytest.fixture
def desk_chirp():
    # Identifiable regime: lambda/4 = 5 cm > c/(2B) = 4.2 cm.
    return ChirpConfig(
        f0=1.5e9,
        slope=MMWAVE_SLOPE,
        sample_rate=MMWAVE_SAMPLE_RATE,
        num_samples=MMWAVE_NUM_SAMPLES,
    )


@pytest.fixture
def cube_bounds():
    return SceneBounds(center=np.zeros(3), side=0.36)


@pytest.fixture
def full_aperture():
    return cylindrical_aperture(radius=0.23, n_angles=90, n_heights=4, height_extent=0.25)


@pytest.fixture
def small_aperture():
    return cylindrical_aperture(radius=0.23, n_angles=24, n_heights=3, height_extent=0.25)
