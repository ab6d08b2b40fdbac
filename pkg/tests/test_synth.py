import math

import numpy as np
import pytest
import scipy.linalg

from spread_detect.errors import DetectionError, DimensionError, NotPositiveDefiniteError
from spread_detect.model import ScaleMatrix, build_scale_matrix, build_subspaces
from spread_detect.detectors import projector
from spread_detect.synth import (Hypothesis, Purpose, RngStream, draw_coordinates, sample_complex_gaussian,
                                 sample_inverse_wishart, scale_coordinates, synthesize_trial)


def test_streams_are_reproducible():
    a = RngStream(99, 5, Purpose.PD).generator().standard_normal(8)
    b = RngStream(99, 5, Purpose.PD).generator().standard_normal(8)
    np.testing.assert_array_equal(a, b)


def test_purposes_do_not_share_streams():
    draws = {purpose: RngStream(99, 0, purpose).generator().standard_normal(4).tobytes() for purpose in Purpose}
    assert len(set(draws.values())) == len(Purpose)


class TestComplexGaussian:
    def test_identity_covariance(self):
        x = sample_complex_gaussian(2, 100000, np.eye(2), RngStream(1, 0).generator())
        np.testing.assert_allclose(x @ x.conj().T / x.shape[1], np.eye(2), atol=0.02)

    def test_scalar_variance(self):
        x = sample_complex_gaussian(1, 100000, np.array([[4.0]]), RngStream(2, 0).generator())
        assert 3.8 <= float(np.mean(np.abs(x) ** 2)) <= 4.2

    def test_rejects_zero_covariance(self):
        with pytest.raises(NotPositiveDefiniteError):
            sample_complex_gaussian(2, 3, np.zeros((2, 2)), RngStream(1, 0))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DimensionError):
            sample_complex_gaussian(3, 3, np.eye(2), RngStream(1, 0))


class TestInverseWishart:
    def test_mean_matches_prior(self):
        sigma = ScaleMatrix(np.array([[1.0, 0.3], [0.3, 1.0]]))
        rng = RngStream(3, 0).generator()
        draws = [sample_inverse_wishart(100, sigma, rng) for _ in range(10000)]
        expected = 100 / 98 * sigma.sigma
        np.testing.assert_allclose(np.mean(draws, axis=0).real, expected.real, rtol=0.05, atol=0.01)

    def test_scalar_mean(self):
        rng = RngStream(4, 0).generator()
        draws = [sample_inverse_wishart(12, ScaleMatrix(np.eye(1)), rng)[0, 0].real for _ in range(10000)]
        assert abs(np.mean(draws) - 12 / 11) < 0.05

    def test_draws_are_positive_definite(self):
        sigma = build_scale_matrix(1.0, 0.9, 10)
        rng = RngStream(5, 0).generator()
        for _ in range(50):
            np.linalg.cholesky(sample_inverse_wishart(14, sigma, rng))

    def test_rejects_small_eta(self):
        with pytest.raises(DetectionError, match='eta below data dimension'):
            sample_inverse_wishart(3, build_scale_matrix(1.0, 0.5, 4), RngStream(1, 0))


class TestScaleCoordinates:
    def test_unit_trace_base_case(self):
        out = scale_coordinates(np.array([[1.0]]), np.array([[1.0], [0.0]]), ScaleMatrix(np.eye(2)), 10.0)
        np.testing.assert_allclose(out, [[math.sqrt(10)]])

    def test_weighted_by_scale_matrix(self):
        out = scale_coordinates(np.array([[1.0]]), np.array([[1.0], [0.0]]),
                                ScaleMatrix(np.diag([4.0, 1.0])), 0.0)
        np.testing.assert_allclose(out, [[2.0]])

    def test_minus_infinity_gives_zero(self):
        raw = np.ones((2, 3), dtype=complex)
        out = scale_coordinates(raw, np.eye(4)[:, :2], ScaleMatrix(np.eye(4)), -math.inf)
        assert not np.any(out)

    def test_idempotent_in_power(self):
        rng = RngStream(6, 0).generator()
        raw = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        basis = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
        sigma = build_scale_matrix(2.0, 0.7, 6)
        once = scale_coordinates(raw, basis, sigma, 7.0)
        np.testing.assert_allclose(scale_coordinates(once, basis, sigma, 7.0), once, rtol=1e-10)

    def test_zero_raw_rejected(self):
        with pytest.raises(DetectionError):
            scale_coordinates(np.zeros((1, 1)), np.array([[1.0], [0.0]]), ScaleMatrix(np.eye(2)), 0.0)


class TestSynthesizeTrial:
    def test_shapes(self, reference_cfg):
        sigma = build_scale_matrix(reference_cfg.sigma2, reference_cfg.rho, reference_cfg.n_dim)
        trial = synthesize_trial(reference_cfg, build_subspaces(reference_cfg), sigma, Hypothesis.H1, RngStream(1, 0))
        assert trial.z.shape == (10, 4)
        assert trial.z_l.shape == (10, 12)
        assert trial.true_r.shape == (10, 10)
        assert trial.scm.shape == (10, 10)

    def test_bit_identical_for_same_stream(self, reference_cfg):
        sigma = build_scale_matrix(reference_cfg.sigma2, reference_cfg.rho, reference_cfg.n_dim)
        subspaces = build_subspaces(reference_cfg)
        a = synthesize_trial(reference_cfg, subspaces, sigma, Hypothesis.H1, RngStream(8, 3, Purpose.PD))
        b = synthesize_trial(reference_cfg, subspaces, sigma, Hypothesis.H1, RngStream(8, 3, Purpose.PD))
        assert a.z.tobytes() == b.z.tobytes()
        assert a.z_l.tobytes() == b.z_l.tobytes()

    def test_minus_infinity_snr_reproduces_h0(self, reference_cfg):
        cfg = reference_cfg.with_updates(snr_db=-math.inf)
        sigma = build_scale_matrix(cfg.sigma2, cfg.rho, cfg.n_dim)
        subspaces = build_subspaces(cfg)
        h1 = synthesize_trial(cfg, subspaces, sigma, Hypothesis.H1, RngStream(8, 0))
        h0 = synthesize_trial(cfg, subspaces, sigma, Hypothesis.H0, RngStream(8, 0))
        assert h1.z.tobytes() == h0.z.tobytes()

    def test_signal_power_is_exact(self, reference_cfg):
        cfg = reference_cfg.with_updates(snr_db=15.0)
        sigma = build_scale_matrix(cfg.sigma2, cfg.rho, cfg.n_dim)
        subspaces = build_subspaces(cfg)
        h1 = synthesize_trial(cfg, subspaces, sigma, Hypothesis.H1, RngStream(8, 0))
        h0 = synthesize_trial(cfg, subspaces, sigma, Hypothesis.H0, RngStream(8, 0))
        signal = h1.z - h0.z
        power = np.real(np.trace(signal.conj().T @ np.linalg.solve(sigma.sigma, signal)))
        assert power == pytest.approx(10 ** 1.5, rel=1e-9)

    def test_coordinates_hit_target_powers(self, reference_cfg):
        cfg = reference_cfg.with_updates(snr_db=3.0, inr_db=12.0)
        sigma = build_scale_matrix(cfg.sigma2, cfg.rho, cfg.n_dim)
        subspaces = build_subspaces(cfg)
        coords = draw_coordinates(cfg, subspaces, sigma, RngStream(8, 0))
        assert coords.a.shape == (cfg.p_sig, cfg.k_cells)
        assert coords.w.shape == (cfg.q_intf, cfg.k_cells)
        for basis, coords_part, db in ((subspaces.phi, coords.a, 3.0), (subspaces.upsilon, coords.w, 12.0)):
            mapped = basis @ coords_part
            power = np.real(np.trace(mapped.conj().T @ np.linalg.solve(sigma.sigma, mapped)))
            assert power == pytest.approx(10 ** (db / 10), rel=1e-10)


class TestNullModel:
    """H0 数据的二阶统计特性"""

    def test_no_signal_component_under_null(self, small_cfg):
        sigma = build_scale_matrix(small_cfg.sigma2, small_cfg.rho, small_cfg.n_dim)
        subspaces = build_subspaces(small_cfg)
        coefficients = []
        for index in range(2000):
            trial = synthesize_trial(small_cfg, subspaces, sigma, Hypothesis.H0,
                                     RngStream(small_cfg.seed, index, Purpose.PFA))
            factor = scipy.linalg.cholesky(trial.true_r, lower=True)
            z_w, phi_w, ups_w = (scipy.linalg.solve_triangular(factor, x, lower=True)
                                 for x in (trial.z, subspaces.phi, subspaces.upsilon))
            p_perp = np.eye(small_cfg.n_dim) - projector(ups_w)
            gram = phi_w.conj().T @ p_perp @ phi_w
            coeff = np.linalg.solve(gram, phi_w.conj().T @ p_perp @ z_w)
            # 白化后系数协方差为 gram⁻¹，乘 chol(gram)ᴴ 得到标准复高斯
            coefficients.append(np.linalg.cholesky(gram).conj().T @ coeff)
        x = np.concatenate([c.ravel() for c in coefficients])
        assert abs(np.mean(x)) < 5 / math.sqrt(x.size)
        assert abs(np.mean(np.abs(x) ** 2) - 1.0) < 6 / math.sqrt(x.size)

    def test_noise_only_covariance_matches_prior_mean(self, small_cfg):
        cfg = small_cfg.with_updates(eta=12, inr_db=-math.inf, sigma2=1.0, rho=0.5)
        sigma = build_scale_matrix(cfg.sigma2, cfg.rho, cfg.n_dim)
        subspaces = build_subspaces(cfg)
        total = np.zeros((cfg.n_dim, cfg.n_dim), dtype=complex)
        n_trials = 4000
        for index in range(n_trials):
            trial = synthesize_trial(cfg, subspaces, sigma, Hypothesis.H0, RngStream(cfg.seed, index, Purpose.PFA))
            total += trial.z @ trial.z.conj().T / cfg.k_cells
        expected = cfg.eta / (cfg.eta - cfg.n_dim) * sigma.sigma
        np.testing.assert_allclose(total.real / n_trials, expected.real, atol=0.1)
        np.testing.assert_allclose(total.imag / n_trials, 0.0, atol=0.1)
