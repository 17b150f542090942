import math

import numpy as np
import pytest

from eprtwin.analysis import difference_image, marginalize_y
from eprtwin.biphoton import UNIT_MOMENTUM, Grid1D
from eprtwin.correlations import Distribution1D, standard_deviation
from eprtwin.exceptions import DomainError, ModelInconsistencyError
from eprtwin.instrument import (
    FOURIER,
    IMAGE,
    X_INVERSION,
    CameraConfig,
    ImagingConfig,
    Interferogram,
    camera_to_crystal,
    detect,
    interferometer_frame,
    map_to_camera,
    simulate_experiment,
)


def gaussian_map(n=32, sigma=5.0, shift=0.0):
    x = np.arange(n) - (n - 1) / 2
    g = np.exp(-((x - shift) ** 2) / (2 * sigma**2))
    return np.outer(g, g)


def profile_width(image, pitch):
    profile = marginalize_y(image)
    axis = Grid1D(len(profile), pitch)
    return standard_deviation(Distribution1D(profile, axis))


class TestImagingMaps:
    def test_image_plane(self):
        axis = map_to_camera(Grid1D(2, 7.658), ImagingConfig(IMAGE, magnification=4))
        assert axis.spacing == pytest.approx(30.632)
        assert axis.spacing == pytest.approx(30.6, rel=1e-2)

    def test_fourier_plane(self):
        cfg = ImagingConfig(FOURIER, effective_focal=15, lambda_0=810)
        axis = map_to_camera(Grid1D(2, 2.577e-3, UNIT_MOMENTUM), cfg)
        assert axis.spacing == pytest.approx(49.8, rel=1e-2)

    def test_unit_magnification_is_identity(self):
        axis = Grid1D(16, 3.0)
        assert map_to_camera(axis, ImagingConfig(IMAGE, magnification=1)) == axis

    def test_round_trip(self):
        cfg = ImagingConfig(FOURIER)
        axis = Grid1D(16, 16.0)
        assert map_to_camera(camera_to_crystal(axis, cfg), cfg).spacing == pytest.approx(16.0, rel=1e-15)

    def test_basis_mismatch(self):
        with pytest.raises(DomainError):
            map_to_camera(Grid1D(16, 1.0), ImagingConfig(FOURIER))

    @pytest.mark.parametrize("kwargs", [{"mode": "side"}, {"magnification": 0}, {"effective_focal": -1}])
    def test_invalid_config(self, kwargs):
        with pytest.raises(DomainError):
            ImagingConfig(**kwargs)


class TestInterferometerFrame:
    def test_quadrature_phase_drops_cross_term(self):
        I = gaussian_map(shift=2.0)
        W = 0.5 * np.sqrt(I * I[::-1, ::-1])
        frame = interferometer_frame(I, W, math.pi / 2, 0.3, 0.2)
        np.testing.assert_allclose(frame.counts, 0.3 * I + 0.2 * I[::-1, ::-1], atol=1e-16)

    def test_constructive_limit(self):
        I = gaussian_map()
        frame = interferometer_frame(I, I, 0.0, 0.25, 0.25)
        np.testing.assert_allclose(frame.counts, 4 * 0.25 * I, rtol=1e-15)

    @pytest.mark.parametrize("k1, k2, dc, dd", [(0.25, 0.25, 0.0, math.pi), (0.4, 0.1, 0.1, 2.9)])
    def test_difference_proportional_to_w(self, k1, k2, dc, dd):
        I = gaussian_map()
        W = 0.7 * I
        a = interferometer_frame(I, W, dc, k1, k2)
        b = interferometer_frame(I, W, dd, k1, k2)
        expected = 2 * math.sqrt(k1 * k2) * (math.cos(dc) - math.cos(dd)) * W
        np.testing.assert_allclose(a.counts - b.counts, expected, rtol=1e-12, atol=1e-12 * expected.max())

    def test_antisymmetric_part_cancels(self):
        sym = gaussian_map()
        x = np.arange(32) - 15.5
        odd = 0.2 * np.outer(np.ones(32), x / 32) * sym
        W = 0.5 * sym
        a = interferometer_frame(sym + odd, W, 0.0)
        b = interferometer_frame(sym + odd, W, math.pi)
        np.testing.assert_allclose(a.counts - b.counts, 2 * 0.25 * 2 * W, rtol=1e-12)

    def test_excess_coherence_raises(self):
        I = gaussian_map()
        with pytest.raises(ModelInconsistencyError):
            interferometer_frame(I, 1.5 * I, math.pi)

    def test_x_inversion(self):
        I = gaussian_map(shift=3.0)
        frame = interferometer_frame(I, 0 * I, 0.0, 0.25, 0.25, inversion=X_INVERSION)
        np.testing.assert_allclose(frame.counts, 0.25 * I + 0.25 * I[:, ::-1])

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            interferometer_frame(gaussian_map(32), gaussian_map(16), 0.0)


class TestDetect:
    def frame(self):
        return Interferogram(gaussian_map(16), 0.0, 0.25, 0.25, IMAGE, 16.0)

    def test_dark_frame(self):
        cam = CameraConfig(exposure_scale=0, read_noise_sigma=0, dark_rate=0)
        assert not detect(self.frame(), cam).counts.any()

    def test_deterministic(self):
        cam = CameraConfig(rng_seed=11)
        a = detect(self.frame(), cam, 1).counts
        b = detect(self.frame(), cam, 1).counts
        assert np.array_equal(a, b)
        assert not np.array_equal(a, detect(self.frame(), cam, 2).counts)
        assert not np.array_equal(a, detect(self.frame(), CameraConfig(rng_seed=12), 1).counts)

    def test_counts_nonnegative(self):
        cam = CameraConfig(exposure_scale=10, read_noise_sigma=20, dark_rate=0)
        assert detect(self.frame(), cam).counts.min() >= 0

    def test_shot_noise_at_peak(self):
        frame = Interferogram(np.ones((2, 2)), 0.0, 0.25, 0.25, IMAGE, 16.0)
        peaks = [
            detect(frame, CameraConfig(exposure_scale=1e4, read_noise_sigma=0, dark_rate=0, rng_seed=s)).counts[0, 0]
            for s in range(1000)
        ]
        rel = np.std(peaks) / np.mean(peaks)
        assert rel == pytest.approx(1 / math.sqrt(1e4), rel=0.1)

    def test_mean_difference_unbiased(self):
        I = gaussian_map(8, 2.0)
        a = interferometer_frame(I, 0.8 * I, 0.0)
        b = interferometer_frame(I, 0.8 * I, math.pi)
        diffs = []
        for seed in range(500):
            cam = CameraConfig(exposure_scale=400, read_noise_sigma=2, dark_rate=50, rng_seed=seed)
            diffs.append(detect(a, cam, 0).counts - detect(b, cam, 1).counts)
        diffs = np.array(diffs)
        sem = diffs.std(axis=0, ddof=1) / math.sqrt(len(diffs))
        expected = 400 * (a.counts - b.counts)
        assert np.all(np.abs(diffs.mean(axis=0) - expected) < 3 * sem)


class TestSimulateExperiment:
    def test_image_plane_width(self, bbo_params):
        c, d = simulate_experiment(bbo_params, ImagingConfig(IMAGE), CameraConfig(), noiseless=True)
        width = profile_width(difference_image(c, d), 16.0)
        assert width == pytest.approx(30.6, rel=1e-2)

    def test_fourier_plane_width(self, bbo_params):
        c, d = simulate_experiment(bbo_params, ImagingConfig(FOURIER), CameraConfig(), noiseless=True)
        width = profile_width(difference_image(c, d), 16.0)
        assert width == pytest.approx(49.8, rel=1e-2)

    def test_equal_phases_give_zero_difference(self, bbo_params):
        c, d = simulate_experiment(bbo_params, ImagingConfig(IMAGE), CameraConfig(n_pixels=64),
                                   delta_c=0.3, delta_d=0.3, noiseless=True)
        assert not difference_image(c, d).any()

    def test_noiseless_pair_peak_is_one(self, bbo_params):
        c, d = simulate_experiment(bbo_params, ImagingConfig(IMAGE), CameraConfig(n_pixels=64), noiseless=True)
        assert max(c.counts.max(), d.counts.max()) == pytest.approx(1.0, rel=1e-15)
        assert c.counts.min() >= 0 and d.counts.min() >= 0

    def test_frames_deterministic(self, bbo_params):
        cam = CameraConfig(n_pixels=64, rng_seed=5)
        a = simulate_experiment(bbo_params, ImagingConfig(FOURIER), cam)
        b = simulate_experiment(bbo_params, ImagingConfig(FOURIER), cam)
        assert all(np.array_equal(x.counts, y.counts) for x, y in zip(a, b))
        assert a[0].detected

    def test_x_inversion_width(self, bbo_params):
        c, d = simulate_experiment(bbo_params, ImagingConfig(IMAGE), CameraConfig(), inversion=X_INVERSION,
                                   noiseless=True)
        assert profile_width(difference_image(c, d), 16.0) == pytest.approx(30.6, rel=1e-2)
