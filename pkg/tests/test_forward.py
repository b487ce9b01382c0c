"""Forward models: closed-form spectral, time-domain, range-quantized, adjoints.

The load-bearing oracle is the time-domain route: synthesize the raw beat
series per scatterer and DFT it. The closed-form spectral model must match it
to 1e-10 on every bin for arbitrary scenes.
"""

import numpy as np
import pytest
from scipy.constants import c as C

from radarfield.chirp import ToneParams, beat_params, dft, synth_beat_time, tone_spectrum_closed_form, wrap_phase
from radarfield.errors import InvalidDelayError
from radarfield.fields import QuerySet
from radarfield.forward import (
    range_quantized_adjoint,
    range_quantized_forward,
    spectral_adjoint,
    spectral_forward,
    time_domain_adjoint,
    time_domain_forward,
)
from radarfield.geometry import Pose


def _mono(x, y, z):
    p = np.array([x, y, z], dtype=np.float64)
    return Pose(tx=p, rx=p)


def _random_scene(rng, n_points, radius=0.17):
    pos = rng.uniform(-radius, radius, size=(n_points, 3))
    w = rng.uniform(0.5, 2.0, size=n_points)
    sigma = rng.uniform(0.0, 1.0, size=n_points)
    return QuerySet(positions=pos, weights=w), sigma


class TestSpectralForward:
    def test_single_scatterer_reduces_to_tone(self, mmwave_chirp):
        pose = _mono(0.23, 0.0, 0.0)
        q = QuerySet(positions=np.zeros((1, 3)), weights=np.array([1.0]))
        d = 0.23
        tau = 2.0 * d / C
        k = 16
        z = spectral_forward(mmwave_chirp, pose, q, np.array([1.0]), k)
        tone = ToneParams(
            amplitude=1.0 / d**2,
            phase=wrap_phase(2.0 * np.pi * mmwave_chirp.f0 * tau),
            alpha=2.0 * np.pi * mmwave_chirp.slope * tau / mmwave_chirp.sample_rate,
        )
        ref = tone_spectrum_closed_form(tone, mmwave_chirp.num_samples, bins=k).values
        assert np.max(np.abs(z - ref)) < 1e-12

    def test_zero_sigma_zero_spectrum(self, mmwave_chirp):
        rng = np.random.default_rng(0)
        q, _ = _random_scene(rng, 10)
        z = spectral_forward(mmwave_chirp, _mono(0.23, 0, 0), q, np.zeros(10), 16)
        assert np.all(z == 0.0)

    @pytest.mark.parametrize("chirp_name", ["mmwave_chirp", "desk_chirp"])
    def test_matches_time_domain_oracle(self, chirp_name, request):
        chirp = request.getfixturevalue(chirp_name)
        rng = np.random.default_rng(42)
        q, sigma = _random_scene(rng, 64)
        pose = Pose(tx=np.array([0.23, 0.0, 0.05]), rx=np.array([0.22, 0.02, 0.05]))
        k = 16
        z = spectral_forward(chirp, pose, q, sigma, k)
        series = time_domain_forward(chirp, pose, q, sigma)
        ref = dft(series).values[:k]
        assert np.max(np.abs(z - ref)) < 1e-10

    def test_matches_time_domain_all_bins(self, desk_chirp):
        rng = np.random.default_rng(1)
        q, sigma = _random_scene(rng, 32)
        pose = _mono(0.0, 0.23, 0.1)
        z = spectral_forward(desk_chirp, pose, q, sigma, desk_chirp.num_samples)
        ref = dft(time_domain_forward(desk_chirp, pose, q, sigma)).values
        assert np.max(np.abs(z - ref)) < 1e-10

    def test_linear_in_sigma(self, desk_chirp):
        rng = np.random.default_rng(2)
        q, s1 = _random_scene(rng, 40)
        s2 = rng.uniform(0.0, 1.0, size=40)
        pose = _mono(0.23, 0, 0)
        a, b = 0.7, -1.3
        z = spectral_forward(desk_chirp, pose, q, a * s1 + b * s2, 16)
        z1 = spectral_forward(desk_chirp, pose, q, s1, 16)
        z2 = spectral_forward(desk_chirp, pose, q, s2, 16)
        scale = np.max(np.abs(z)) + 1.0
        assert np.max(np.abs(z - (a * z1 + b * z2))) < 1e-12 * scale

    def test_chunking_matches_single_pass(self, desk_chirp):
        rng = np.random.default_rng(3)
        q, sigma = _random_scene(rng, 100)
        pose = _mono(0.23, 0, 0)
        full = spectral_forward(desk_chirp, pose, q, sigma, 16)
        chunked = spectral_forward(desk_chirp, pose, q, sigma, 16, chunk_size=7)
        np.testing.assert_allclose(chunked, full, rtol=1e-10, atol=1e-16)

    def test_ordered_reduction_bitwise_repeatable(self, desk_chirp):
        rng = np.random.default_rng(4)
        q, sigma = _random_scene(rng, 50)
        pose = _mono(0.23, 0, 0)
        a = spectral_forward(desk_chirp, pose, q, sigma, 16, ordered=True)
        b = spectral_forward(desk_chirp, pose, q, sigma, 16, ordered=True)
        np.testing.assert_array_equal(a, b)
        blas = spectral_forward(desk_chirp, pose, q, sigma, 16)
        np.testing.assert_allclose(a, blas, rtol=1e-10, atol=1e-16)

    def test_excessive_delay_rejected(self, mmwave_chirp):
        q = QuerySet(positions=np.array([[7700.0, 0.0, 0.0]]), weights=np.array([1.0]))
        with pytest.raises(InvalidDelayError, match="duration"):
            spectral_forward(mmwave_chirp, _mono(0, 0, 0), q, np.array([1.0]), 16)

    def test_validation(self, mmwave_chirp):
        q = QuerySet(positions=np.zeros((2, 3)), weights=np.ones(2))
        with pytest.raises(ValueError, match="sigma"):
            spectral_forward(mmwave_chirp, _mono(0.23, 0, 0), q, np.ones(3), 16)
        with pytest.raises(ValueError, match="k_bins"):
            spectral_forward(mmwave_chirp, _mono(0.23, 0, 0), q, np.ones(2), 0)
        with pytest.raises(ValueError, match="k_bins"):
            spectral_forward(mmwave_chirp, _mono(0.23, 0, 0), q, np.ones(2), 257)


class TestTimeDomain:
    def test_zero_sigma_zero_series(self, mmwave_chirp):
        q = QuerySet(positions=np.zeros((3, 3)), weights=np.ones(3))
        s = time_domain_forward(mmwave_chirp, _mono(0.23, 0, 0), q, np.zeros(3))
        assert np.all(s == 0.0)

    def test_single_scatterer_is_scaled_tone(self, desk_chirp):
        pose = Pose(tx=np.array([0.23, 0.0, 0.0]), rx=np.array([0.20, 0.05, 0.0]))
        x = np.array([[0.01, -0.02, 0.03]])
        q = QuerySet(positions=x, weights=np.array([1.7]))
        r_t = np.linalg.norm(pose.tx - x[0])
        r_r = np.linalg.norm(pose.rx - x[0])
        tone = beat_params(desk_chirp, (r_t + r_r) / C, amplitude=1.7 / (r_t * r_r))
        ref = synth_beat_time(tone, desk_chirp.num_samples)
        s = time_domain_forward(desk_chirp, pose, q, np.array([1.0]))
        np.testing.assert_allclose(s, ref, rtol=1e-10, atol=1e-15)

    def test_chunked_rows_match(self, desk_chirp):
        rng = np.random.default_rng(5)
        q, sigma = _random_scene(rng, 64)
        pose = _mono(0.23, 0, 0)
        full = time_domain_forward(desk_chirp, pose, q, sigma)
        chunked = time_domain_forward(desk_chirp, pose, q, sigma, chunk_size=5)
        np.testing.assert_allclose(chunked, full, rtol=1e-10, atol=1e-16)


class TestRangeQuantized:
    def test_bin_centered_scatterer_single_real_bin(self, mmwave_chirp):
        d = 10.0 * mmwave_chirp.range_resolution
        q = QuerySet(positions=np.array([[d, 0.0, 0.0]]), weights=np.array([1.0]))
        z = range_quantized_forward(mmwave_chirp, _mono(0, 0, 0), q, np.array([2.0]), 16)
        expected = 2.0 / (mmwave_chirp.num_samples * d * d)
        assert z[10] == pytest.approx(expected, rel=1e-12)
        assert np.all(z.imag == 0.0)
        rest = z.copy()
        rest[10] = 0.0
        assert np.all(rest == 0.0)

    def test_same_bin_amplitudes_add(self, mmwave_chirp):
        d = 7.0 * mmwave_chirp.range_resolution
        q = QuerySet(
            positions=np.array([[d, 0.0, 0.0], [-d, 0.0, 0.0]]),
            weights=np.ones(2),
        )
        z = range_quantized_forward(mmwave_chirp, _mono(0, 0, 0), q, np.array([1.0, 2.0]), 16)
        expected = 3.0 / (mmwave_chirp.num_samples * d * d)
        assert z[7] == pytest.approx(expected, rel=1e-12)

    def test_half_bin_energy_split(self, mmwave_chirp):
        # A half-bin tone keeps only |2/pi|^2 of its energy in the rounded
        # bin; the rest leaks across the spectrum. RQ concentrates it all.
        n = mmwave_chirp.num_samples
        d = 10.5 * mmwave_chirp.range_resolution
        q = QuerySet(positions=np.array([[d, 0.0, 0.0]]), weights=np.array([1.0]))
        sigma = np.array([1.0])
        pose = _mono(0, 0, 0)
        z_rq = range_quantized_forward(mmwave_chirp, pose, q, sigma, n)
        b = int(np.argmax(np.abs(z_rq)))
        assert np.count_nonzero(z_rq) == 1
        z_sp = spectral_forward(mmwave_chirp, pose, q, sigma, n)
        total = float(np.sum(np.abs(z_sp) ** 2))
        outside = 1.0 - abs(z_sp[b]) ** 2 / total
        assert outside == pytest.approx(0.59, abs=0.01)

    def test_bins_beyond_window_dropped(self, mmwave_chirp):
        d = 40.0 * mmwave_chirp.range_resolution
        q = QuerySet(positions=np.array([[d, 0.0, 0.0]]), weights=np.array([1.0]))
        z = range_quantized_forward(mmwave_chirp, _mono(0, 0, 0), q, np.array([1.0]), 16)
        assert np.all(z == 0.0)


class TestAdjoints:
    def _dot_test(self, fwd, adj, sigma, residual):
        lhs = float(np.real(np.vdot(residual, fwd)))
        rhs = float(np.dot(sigma, adj))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_spectral_dot_product_identity(self, desk_chirp):
        rng = np.random.default_rng(6)
        q, sigma = _random_scene(rng, 80)
        pose = _mono(0.23, 0, 0)
        k = 16
        residual = rng.normal(size=k) + 1j * rng.normal(size=k)
        z = spectral_forward(desk_chirp, pose, q, sigma, k)
        g = spectral_adjoint(desk_chirp, pose, q, residual, k)
        self._dot_test(z, g, sigma, residual)

    def test_time_domain_dot_product_identity(self, desk_chirp):
        rng = np.random.default_rng(7)
        q, sigma = _random_scene(rng, 30)
        pose = _mono(0.0, 0.23, 0.0)
        n = desk_chirp.num_samples
        residual = rng.normal(size=n) + 1j * rng.normal(size=n)
        s = time_domain_forward(desk_chirp, pose, q, sigma)
        g = time_domain_adjoint(desk_chirp, pose, q, residual)
        self._dot_test(s, g, sigma, residual)

    def test_range_quantized_dot_product_identity(self, mmwave_chirp):
        rng = np.random.default_rng(8)
        q, sigma = _random_scene(rng, 50)
        pose = _mono(0.23, 0, 0)
        k = 16
        residual = rng.normal(size=k) + 1j * rng.normal(size=k)
        z = range_quantized_forward(mmwave_chirp, pose, q, sigma, k)
        g = range_quantized_adjoint(mmwave_chirp, pose, q, residual, k)
        self._dot_test(z, g, sigma, residual)

    def test_zero_residual_zero_gradient(self, desk_chirp):
        rng = np.random.default_rng(9)
        q, _ = _random_scene(rng, 10)
        pose = _mono(0.23, 0, 0)
        assert np.all(spectral_adjoint(desk_chirp, pose, q, np.zeros(16, dtype=complex), 16) == 0.0)
        assert np.all(
            time_domain_adjoint(
                desk_chirp, pose, q, np.zeros(desk_chirp.num_samples, dtype=complex)
            )
            == 0.0
        )

    def test_single_query_single_bin_kernel(self, desk_chirp):
        q = QuerySet(positions=np.array([[0.05, 0.0, 0.0]]), weights=np.array([1.0]))
        pose = _mono(0.23, 0, 0)
        kernel = spectral_forward(desk_chirp, pose, q, np.array([1.0]), 1)[0]
        r = 0.3 - 0.8j
        g = spectral_adjoint(desk_chirp, pose, q, np.array([r]), 1)
        assert g[0] == pytest.approx(np.real(np.conj(kernel) * r), rel=1e-12)

    def test_ordered_adjoint_bitwise_repeatable(self, desk_chirp):
        rng = np.random.default_rng(10)
        q, _ = _random_scene(rng, 40)
        pose = _mono(0.23, 0, 0)
        residual = rng.normal(size=16) + 1j * rng.normal(size=16)
        a = spectral_adjoint(desk_chirp, pose, q, residual, 16, ordered=True)
        b = spectral_adjoint(desk_chirp, pose, q, residual, 16, ordered=True)
        np.testing.assert_array_equal(a, b)

    def test_residual_shape_validated(self, desk_chirp):
        q = QuerySet(positions=np.zeros((1, 3)), weights=np.ones(1))
        pose = _mono(0.23, 0, 0)
        with pytest.raises(ValueError, match="residual"):
            spectral_adjoint(desk_chirp, pose, q, np.zeros(5, dtype=complex), 16)
        with pytest.raises(ValueError, match="residual"):
            time_domain_adjoint(desk_chirp, pose, q, np.zeros(5, dtype=complex))
        with pytest.raises(ValueError, match="residual"):
            range_quantized_adjoint(desk_chirp, pose, q, np.zeros(5, dtype=complex), 16)
