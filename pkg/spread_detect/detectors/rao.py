"""Bayesian Rao statistic with interference rejection, and the known-covariance score form."""

import logging
from typing import Optional

import numpy as np

from .base import DetectorInput, herm, hpd_solve, real_trace
from .whitening import Factor, Mode, WhitenedBundle, ensure_bundle

FORM_PROJECTOR = 'projector'
FORM_DEFLATED = 'deflated'
CROSS_FORM_RTOL = 1e-8


def _rao_pieces(bundle: WhitenedBundle):
    z = bundle.z_w
    zh = z.conj().T
    eye = np.eye(bundle.k, dtype=complex)
    g_upsilon = herm(eye + zh @ bundle.p_perp_upsilon @ z)
    q_signal = herm(zh @ bundle.p_proj_phi_given_upsilon @ z)
    g_b = herm(eye + zh @ bundle.p_perp_b @ z)
    return g_upsilon, q_signal, g_b


def _resolvent_trace(g_left: np.ndarray, q_signal: np.ndarray, g_right: np.ndarray) -> float:
    """tr[G_l⁻¹ Q G_r⁻¹]，两次 Hermitian 求解"""
    left = hpd_solve(g_left, q_signal, 'I_K + Zᴴ P⊥_Υ Z')
    return real_trace(hpd_solve(g_right, left.conj().T, '右侧预解矩阵'))


def t_b_rao_i(data: DetectorInput, bundle: Optional[WhitenedBundle] = None,
              factor: Factor = Factor.CHOLESKY, form: str = FORM_PROJECTOR,
              check: bool = False) -> float:
    """B-Rao-I 统计量

    form='projector' 用 I_K + Zᴴ P⊥_B Z 作右侧预解矩阵，
    form='deflated' 用 I_K + Zᴴ P⊥_Υ Z - Zᴴ P_{P⊥_Υ Φ} Z；两者在精确算术下相等。
    check=True 时同时计算两种形式并核对。
    """
    bundle = ensure_bundle(data, bundle, Mode.BAYESIAN, factor)
    g_upsilon, q_signal, g_b = _rao_pieces(bundle)
    if form == FORM_PROJECTOR:
        value = _resolvent_trace(g_upsilon, q_signal, g_b)
    elif form == FORM_DEFLATED:
        value = _resolvent_trace(g_upsilon, q_signal, g_upsilon - q_signal)
    else:
        raise ValueError(f"未知的 B-Rao-I 计算形式: {form}")

    if check:
        other_form = FORM_DEFLATED if form == FORM_PROJECTOR else FORM_PROJECTOR
        other = t_b_rao_i(data, bundle, factor, form=other_form)
        scale = max(abs(value), abs(other), np.finfo(float).tiny)
        if abs(value - other) > CROSS_FORM_RTOL * scale:
            raise ArithmeticError(f"B-Rao-I 两种形式不一致: {value!r} vs {other!r}")
        logging.debug(f"B-Rao-I 两种形式一致: {value:.12g} / {other:.12g}")
    return value


def score_form(data: DetectorInput, r_inv_phi: np.ndarray, r_inv_upsilon: np.ndarray) -> float:
    """tr(Δᴴ Λ Δ)，Δ = Φᴴ R⁻¹ [Z - Υ (Υᴴ R⁻¹ Υ)⁻¹ Υᴴ R⁻¹ Z]"""
    z, phi, upsilon = data.z, data.phi, data.upsilon
    phi_r_z = r_inv_phi.conj().T @ z
    phi_r_phi = herm(r_inv_phi.conj().T @ phi)
    if data.q:
        ups_r_ups = herm(r_inv_upsilon.conj().T @ upsilon)
        phi_r_ups = r_inv_phi.conj().T @ upsilon
        delta = phi_r_z - phi_r_ups @ hpd_solve(ups_r_ups, r_inv_upsilon.conj().T @ z, 'Υᴴ R⁻¹ Υ')
        lambda_inv = phi_r_phi - phi_r_ups @ hpd_solve(ups_r_ups, phi_r_ups.conj().T, 'Υᴴ R⁻¹ Υ')
    else:
        delta, lambda_inv = phi_r_z, phi_r_phi
    return real_trace(delta.conj().T @ hpd_solve(lambda_inv, delta, 'Λ⁻¹'))


def t_given_r(r: np.ndarray, data: DetectorInput) -> float:
    """已知协方差 R 时的 Rao/Wald 统计量（二者同形）"""
    r_inv_phi = hpd_solve(r, data.phi, 'R')
    r_inv_upsilon = hpd_solve(r, data.upsilon, 'R') if data.q else data.upsilon
    return score_form(data, r_inv_phi, r_inv_upsilon)
