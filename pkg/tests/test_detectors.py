import logging

import numpy as np
import pytest
import scipy.linalg

from spread_detect.detectors import (DetectorBank, DetectorInput, DetectorKind, Factor, Mode, evaluate,
                                     literal_projector, t_2s_glrt_i, t_b_2s_glrt_i, t_b_glrt_i, t_b_rao_i,
                                     t_b_wald, t_glrt_i, whiten)
from spread_detect.detectors.rao import FORM_DEFLATED, FORM_PROJECTOR
from spread_detect.errors import DetectionError, RankDeficientError, SampleStarvedError
from spread_detect.model import build_scale_matrix, build_subspaces
from spread_detect.selftest import EXACT_TOL
from spread_detect.synth import Hypothesis, RngStream, synthesize_trial
from tests.conftest import complex_normal, identity_input

E1 = np.array([[1.0], [0.0]])
E2 = np.array([[0.0], [1.0]])


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _trial_input(cfg, hypothesis=Hypothesis.H1, stream=0):
    sigma = build_scale_matrix(cfg.sigma2, cfg.rho, cfg.n_dim)
    subspaces = build_subspaces(cfg)
    trial = synthesize_trial(cfg, subspaces, sigma, hypothesis, RngStream(cfg.seed, stream))
    return DetectorInput.from_trial(trial, cfg, subspaces, sigma)


class TestDetectorKind:
    @pytest.mark.parametrize('name, kind', [
        ('B-Rao-I', DetectorKind.B_RAO_I), ('BRaoI', DetectorKind.B_RAO_I), ('b_rao_i', DetectorKind.B_RAO_I),
        ('2S-GLRT-I', DetectorKind.TWO_STEP_GLRT_I), ('GlrtI', DetectorKind.GLRT_I),
        ('B2sGlrtI', DetectorKind.B_2S_GLRT_I), ('BWald', DetectorKind.B_WALD),
    ])
    def test_parse(self, name, kind):
        assert DetectorKind.parse(name) is kind

    def test_parse_unknown(self):
        with pytest.raises(DetectionError):
            DetectorKind.parse('AMF')


class TestWhiten:
    def test_identity_whitening(self):
        rng = np.random.default_rng(0)
        z = complex_normal(rng, 3, 2)
        data = identity_input(z, np.eye(3)[:, :1], np.eye(3)[:, 1:2])
        bundle = whiten(data, Mode.BAYESIAN)
        np.testing.assert_allclose(bundle.z_w, z)
        np.testing.assert_allclose(bundle.phi_w, data.phi)

    def test_scalar_scaling(self):
        z = np.array([[2.0 + 2j], [4.0]])
        data = DetectorInput(z=z, s=np.zeros((2, 2)), sigma=np.eye(2), eta=4, phi=E1, upsilon=E2, l_train=0)
        np.testing.assert_allclose(whiten(data, Mode.BAYESIAN).z_w, z / 2)

    def test_coordinate_projector(self):
        data = identity_input(np.ones((2, 1)), E1, E2)
        np.testing.assert_allclose(whiten(data).p_perp_upsilon, np.diag([1.0, 0.0]), atol=1e-15)

    def test_projectors_are_orthogonal(self, instances):
        for data in instances:
            bundle = whiten(data, Mode.BAYESIAN)
            for p in (bundle.p_perp_upsilon, bundle.p_perp_b, bundle.p_proj_phi_given_upsilon):
                np.testing.assert_allclose(p, p.conj().T, atol=1e-10)
                np.testing.assert_allclose(p @ p, p, atol=1e-10)

    def test_projector_decomposition(self, instances):
        for data in instances:
            bundle = whiten(data, Mode.BAYESIAN)
            np.testing.assert_allclose(bundle.p_perp_b, bundle.p_perp_upsilon - bundle.p_proj_phi_given_upsilon,
                                       atol=1e-10)

    def test_matches_literal_projector(self, instances):
        for data in instances[:5]:
            bundle = whiten(data, Mode.BAYESIAN)
            literal = np.eye(data.n) - literal_projector(bundle.b_w)
            np.testing.assert_allclose(bundle.p_perp_b, literal, atol=1e-8)

    def test_ordinary_sample_starved(self, starved_cfg):
        data = _trial_input(starved_cfg)
        with pytest.raises(SampleStarvedError, match='sample-starved'):
            whiten(data, Mode.ORDINARY)

    def test_collapsed_signal_subspace(self):
        phi = np.array([[0.0], [1.0], [0.0]])
        upsilon = np.array([[0.0], [2.0], [0.0]])
        with pytest.raises(RankDeficientError):
            whiten(identity_input(np.ones((3, 1)), phi, upsilon))


class TestNullFloor:
    @pytest.mark.parametrize('kind', list(DetectorKind))
    def test_zero_data(self, kind, small_cfg):
        data = _trial_input(small_cfg)
        zero = data.with_data(z=np.zeros_like(data.z))
        assert evaluate(kind, zero) == pytest.approx(kind.null_floor, abs=1e-12)


class TestHandExamples:
    def test_two_step_glrt_single_cell(self):
        z = np.array([[1.5 - 0.5j], [0.7 + 2j]])
        data = DetectorInput(z=z, s=np.eye(2), sigma=np.eye(2), eta=1, phi=E1, upsilon=E2, l_train=2)
        assert t_2s_glrt_i(data) == pytest.approx(abs(z[0, 0]) ** 2, rel=1e-12)

    def test_b_rao_i_single_cell(self):
        data = identity_input(np.array([[1.0], [1.0]]), E1, E2)
        assert t_b_rao_i(data) == pytest.approx(0.5, rel=1e-12)

    def test_glrt_full_dimension(self):
        rng = np.random.default_rng(3)
        z = complex_normal(rng, 2, 3)
        data = DetectorInput(z=z, s=np.eye(2), sigma=np.eye(2), eta=1, phi=E1, upsilon=E2, l_train=2)
        bundle = whiten(data, Mode.ORDINARY)
        expected = np.linalg.det(np.eye(3) + bundle.z_w.conj().T @ bundle.p_perp_upsilon @ bundle.z_w).real
        assert t_glrt_i(data) == pytest.approx(expected, rel=1e-10)

    def test_wald_ratio(self):
        rng = np.random.default_rng(4)
        n, k, l_train, eta = 10, 4, 12, 14
        z_l = complex_normal(rng, n, l_train)
        data = DetectorInput(z=complex_normal(rng, n, k), s=z_l @ z_l.conj().T,
                             sigma=build_scale_matrix(1.0, 0.9, n).sigma, eta=eta,
                             phi=complex_normal(rng, n, 7), upsilon=complex_normal(rng, n, 3), l_train=l_train)
        assert t_b_wald(data) / t_b_2s_glrt_i(data) == pytest.approx(40.0, rel=1e-10)


class TestOracles:
    def test_glrt_against_eigen_whitening(self):
        rng = np.random.default_rng(5)
        n, k = 4, 2
        z_l = complex_normal(rng, n, 8)
        s = z_l @ z_l.conj().T
        data = DetectorInput(z=complex_normal(rng, n, k), s=s, sigma=np.eye(n), eta=5,
                             phi=complex_normal(rng, n, 1), upsilon=complex_normal(rng, n, 1), l_train=8)
        values, vectors = np.linalg.eigh(s)
        inv_sqrt = (vectors / np.sqrt(values)) @ vectors.conj().T
        z_w, phi_w, ups_w = inv_sqrt @ data.z, inv_sqrt @ data.phi, inv_sqrt @ data.upsilon
        b_w = np.hstack([phi_w, ups_w])
        eye_n = np.eye(n)
        num = np.eye(k) + z_w.conj().T @ (eye_n - literal_projector(ups_w)) @ z_w
        den = np.eye(k) + z_w.conj().T @ (eye_n - literal_projector(b_w)) @ z_w
        expected = (np.linalg.det(num) / np.linalg.det(den)).real
        assert t_glrt_i(data) == pytest.approx(expected, rel=1e-9)

    def test_bayesian_glrt_is_substituted_ordinary(self, instances):
        for data in instances:
            m = data.s + data.eta * data.sigma
            substituted = DetectorInput(z=data.z, s=m, sigma=data.sigma, eta=data.eta, phi=data.phi,
                                        upsilon=data.upsilon, l_train=max(data.l_train, data.n))
            assert _rel(t_glrt_i(substituted), t_b_glrt_i(data)) < 1e-10

    def test_two_step_projector_form(self, instances):
        for data in instances:
            bundle = whiten(data, Mode.BAYESIAN)
            projected = np.real(np.trace(bundle.z_w.conj().T @ bundle.p_proj_phi_given_upsilon @ bundle.z_w))
            assert _rel(t_b_2s_glrt_i(data, bundle), projected) < 1e-10

    def test_rao_forms_agree(self, instances):
        for data in instances:
            bundle = whiten(data, Mode.BAYESIAN)
            projector_form = t_b_rao_i(data, bundle, form=FORM_PROJECTOR)
            deflated_form = t_b_rao_i(data, bundle, form=FORM_DEFLATED)
            assert _rel(deflated_form, projector_form) < 1e-10
            t_b_rao_i(data, bundle, check=True)

    def test_unknown_rao_form(self, instances):
        with pytest.raises(ValueError):
            t_b_rao_i(instances[0], form='explicit')

    def test_wald_equivalence(self, instances):
        for data in instances:
            assert _rel(t_b_wald(data), data.alpha * t_b_2s_glrt_i(data)) < 1e-10

    def test_log_form(self, instances):
        for data in instances:
            assert np.exp(t_b_glrt_i(data, log=True)) == pytest.approx(t_b_glrt_i(data), rel=1e-12)
            assert t_glrt_i(data) >= 1.0


class TestInvariances:
    @pytest.mark.parametrize('kind', list(DetectorKind))
    def test_factor_invariance(self, kind, instances):
        for data in instances:
            bank = DetectorBank([kind], Factor.EIGH)
            assert _rel(bank.evaluate_all(data)[kind], evaluate(kind, data)) <= EXACT_TOL

    @pytest.mark.parametrize('kind', list(DetectorKind))
    def test_basis_invariance(self, kind, instances):
        rng = np.random.default_rng(6)
        for data in instances[:8]:
            t_phi = complex_normal(rng, data.p, data.p) + 2 * np.eye(data.p)
            t_ups = complex_normal(rng, data.q, data.q) + 2 * np.eye(data.q)
            changed = DetectorInput(z=data.z, s=data.s, sigma=data.sigma, eta=data.eta, phi=data.phi @ t_phi,
                                    upsilon=data.upsilon @ t_ups, l_train=data.l_train)
            assert _rel(evaluate(kind, changed), evaluate(kind, data)) < 1e-8

    @pytest.mark.parametrize('kind', list(DetectorKind))
    def test_joint_scaling(self, kind, instances):
        c = 3.0 - 1.5j
        for data in instances[:8]:
            scaled = DetectorInput(z=c * data.z, s=abs(c) ** 2 * data.s, sigma=abs(c) ** 2 * data.sigma,
                                   eta=data.eta, phi=data.phi, upsilon=data.upsilon, l_train=data.l_train)
            assert _rel(evaluate(kind, scaled), evaluate(kind, data)) < 1e-8


class TestDispatch:
    def test_ordinary_detectors_starved(self, starved_cfg):
        data = _trial_input(starved_cfg)
        for kind in (DetectorKind.GLRT_I, DetectorKind.TWO_STEP_GLRT_I):
            with pytest.raises(SampleStarvedError) as info:
                evaluate(kind, data)
            assert info.value.to_payload()['error'] == 'sample_starved'

    def test_bayesian_detectors_finite_when_starved(self, starved_cfg):
        data = _trial_input(starved_cfg)
        for kind in DetectorKind:
            if kind.bayesian:
                assert np.isfinite(evaluate(kind, data))

    def test_prior_only_whitening(self, small_cfg):
        data = _trial_input(small_cfg.with_updates(l_train=0))
        assert np.isfinite(t_b_glrt_i(data))

    def test_bank_matches_individual_evaluation(self, small_cfg):
        data = _trial_input(small_cfg)
        values = DetectorBank(list(DetectorKind)).evaluate_all(data)
        for kind, value in values.items():
            assert value == evaluate(kind, data)

    def test_bank_cross_checks_rao_forms_at_debug_level(self, small_cfg, caplog):
        data = _trial_input(small_cfg)
        with caplog.at_level(logging.INFO):
            assert not DetectorBank([DetectorKind.B_RAO_I]).cross_check
        with caplog.at_level(logging.DEBUG):
            bank = DetectorBank([DetectorKind.B_RAO_I, DetectorKind.B_GLRT_I])
            assert bank.cross_check
            values = bank.evaluate_all(data)
        assert values[DetectorKind.B_RAO_I] == evaluate(DetectorKind.B_RAO_I, data)
        assert 'B-Rao-I 两种形式一致' in caplog.text

    def test_bank_whitens_once_per_mode(self):
        bank = DetectorBank([DetectorKind.B_RAO_I, DetectorKind.B_GLRT_I, DetectorKind.GLRT_I])
        assert bank.modes() == [Mode.BAYESIAN, Mode.ORDINARY]

    def test_bundle_mode_mismatch(self, small_cfg):
        data = _trial_input(small_cfg)
        with pytest.raises(ValueError):
            t_b_rao_i(data, whiten(data, Mode.ORDINARY))


def test_cholesky_and_eigh_factors_square_to_m(instances):
    data = instances[0]
    m = data.s + data.eta * data.sigma
    for factor in Factor:
        f = whiten(data, Mode.BAYESIAN, factor).factor
        np.testing.assert_allclose(f @ f.conj().T, m, rtol=1e-10, atol=1e-10 * np.abs(m).max())
    assert np.allclose(np.triu(whiten(data, Mode.BAYESIAN).factor, 1), 0)
    assert scipy.linalg.ishermitian(whiten(data, Mode.BAYESIAN, Factor.EIGH).factor, atol=1e-10)
