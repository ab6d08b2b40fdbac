"""Bayesian Wald statistic evaluated at the H1 MAP covariance."""

from typing import Optional

from .base import DetectorInput
from .estimators import map_r1_inverse
from .rao import score_form
from .whitening import Factor, Mode, WhitenedBundle, ensure_bundle


def t_b_wald(data: DetectorInput, bundle: Optional[WhitenedBundle] = None,
             factor: Factor = Factor.CHOLESKY) -> float:
    """在 R = R̂₁ 处计算 tr(Δᴴ Λ Δ)；等于 (η+N+L+K)·t_B-2S-GLRT-I"""
    bundle = ensure_bundle(data, bundle, Mode.BAYESIAN, factor)
    r1_inv = map_r1_inverse(data, bundle)
    r_inv_upsilon = r1_inv @ data.upsilon if data.q else data.upsilon
    return score_form(data, r1_inv @ data.phi, r_inv_upsilon)
