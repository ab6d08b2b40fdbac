"""GLRT-type statistics: ordinary and Bayesian, one-step and two-step."""

from typing import Optional

import numpy as np

from .base import DetectorInput, hpd_logdet, hpd_solve, real_trace
from .whitening import Factor, Mode, WhitenedBundle, ensure_bundle


def _log_det_ratio(bundle: WhitenedBundle) -> float:
    """ln|I_K + Zᴴ P⊥_Υ Z| - ln|I_K + Zᴴ P⊥_B Z|（白化域）"""
    z = bundle.z_w
    eye = np.eye(bundle.k, dtype=complex)
    numerator = eye + z.conj().T @ bundle.p_perp_upsilon @ z
    denominator = eye + z.conj().T @ bundle.p_perp_b @ z
    return hpd_logdet(numerator, 'GLRT 分子') - hpd_logdet(denominator, 'GLRT 分母')


def _two_step_trace(bundle: WhitenedBundle) -> float:
    """tr[Zᴴ P⊥_Υ Φ (Φᴴ P⊥_Υ Φ)⁻¹ Φᴴ P⊥_Υ Z]"""
    phi_perp = bundle.p_perp_upsilon @ bundle.phi_w
    gram = bundle.phi_w.conj().T @ phi_perp
    cross = phi_perp.conj().T @ bundle.z_w
    return real_trace(cross.conj().T @ hpd_solve(gram, cross, 'Φᴴ P⊥_Υ Φ'))


def _ratio(log_value: float, log: bool) -> float:
    if log:
        return log_value
    with np.errstate(over="ignore"):
        return float(np.exp(log_value))


def t_glrt_i(data: DetectorInput, bundle: Optional[WhitenedBundle] = None,
             factor: Factor = Factor.CHOLESKY, log: bool = False) -> float:
    """常规 GLRT-I，以 S 白化；需要 L ≥ N"""
    bundle = ensure_bundle(data, bundle, Mode.ORDINARY, factor)
    return _ratio(_log_det_ratio(bundle), log)


def t_2s_glrt_i(data: DetectorInput, bundle: Optional[WhitenedBundle] = None,
                factor: Factor = Factor.CHOLESKY) -> float:
    """常规两步 GLRT-I"""
    bundle = ensure_bundle(data, bundle, Mode.ORDINARY, factor)
    return _two_step_trace(bundle)


def t_b_glrt_i(data: DetectorInput, bundle: Optional[WhitenedBundle] = None,
               factor: Factor = Factor.CHOLESKY, log: bool = False) -> float:
    """贝叶斯 GLRT-I，以 S+ηΣ 白化；L = 0 也可用"""
    bundle = ensure_bundle(data, bundle, Mode.BAYESIAN, factor)
    return _ratio(_log_det_ratio(bundle), log)


def t_b_2s_glrt_i(data: DetectorInput, bundle: Optional[WhitenedBundle] = None,
                  factor: Factor = Factor.CHOLESKY) -> float:
    bundle = ensure_bundle(data, bundle, Mode.BAYESIAN, factor)
    return _two_step_trace(bundle)
