"""MAP estimators of the interference coordinates and the covariance, and the log-joint densities."""

from typing import Optional

import numpy as np
import scipy.linalg

from ..errors import RankDeficientError
from ..model import full_column_rank
from .base import DetectorInput, herm, hpd_factor, hpd_logdet, hpd_solve, real_trace
from .whitening import Factor, Mode, WhitenedBundle, ensure_bundle


def _least_squares(basis: np.ndarray, target: np.ndarray, what: str) -> np.ndarray:
    """(XᴴX)⁻¹ Xᴴ Y，经 QR 求解"""
    if basis.shape[1] == 0:
        return np.zeros((0, target.shape[1]), dtype=complex)
    if not full_column_rank(basis):
        raise RankDeficientError(f"{what} 不满列秩", {'matrix': what})
    q, r = np.linalg.qr(basis)
    return scipy.linalg.solve_triangular(r, q.conj().T @ target, lower=False)


def map_w(data: DetectorInput, bundle: Optional[WhitenedBundle] = None,
          factor: Factor = Factor.CHOLESKY) -> np.ndarray:
    """H0 下干扰坐标的 MAP 估计 Ŵ = (ῨᴴῨ)⁻¹ῨᴴZ̆"""
    bundle = ensure_bundle(data, bundle, Mode.BAYESIAN, factor)
    return _least_squares(bundle.upsilon_w, bundle.z_w, 'Υ')


def map_c(data: DetectorInput, bundle: Optional[WhitenedBundle] = None,
          factor: Factor = Factor.CHOLESKY) -> np.ndarray:
    """H1 下堆叠坐标 C = [A; W] 的 MAP 估计"""
    bundle = ensure_bundle(data, bundle, Mode.BAYESIAN, factor)
    return _least_squares(bundle.b_w, bundle.z_w, 'B')


def map_a(data: DetectorInput, bundle: Optional[WhitenedBundle] = None,
          factor: Factor = Factor.CHOLESKY) -> np.ndarray:
    return map_c(data, bundle, factor)[:data.p]


def _sandwich(bundle: WhitenedBundle, p_perp: np.ndarray, alpha: int) -> np.ndarray:
    """F (P⊥ Z Zᴴ P⊥ + I) Fᴴ / α"""
    residual = p_perp @ bundle.z_w
    inner = residual @ residual.conj().T + np.eye(bundle.n)
    f = bundle.factor
    return herm(f @ inner @ f.conj().T) / alpha


def _sandwich_inverse(bundle: WhitenedBundle, p_perp: np.ndarray, alpha: int) -> np.ndarray:
    """α F⁻ᴴ [I - P⊥Z (I_K + Zᴴ P⊥ Z)⁻¹ Zᴴ P⊥] F⁻¹（Woodbury 形式）"""
    residual = p_perp @ bundle.z_w
    resolvent = np.eye(bundle.k) + residual.conj().T @ residual
    inner = np.eye(bundle.n) - residual @ hpd_solve(resolvent, residual.conj().T, 'I_K + Zᴴ P⊥ Z')
    left = bundle.apply_inverse_h(inner)
    # inner 为 Hermitian，F⁻ᴴ (F⁻ᴴ inner)ᴴ = F⁻ᴴ inner F⁻¹
    return herm(alpha * bundle.apply_inverse_h(left.conj().T))


def map_r0(data: DetectorInput, bundle: Optional[WhitenedBundle] = None,
           factor: Factor = Factor.CHOLESKY) -> np.ndarray:
    """H0 下协方差的 MAP 估计 R̂₀（已代入 Ŵ）"""
    bundle = ensure_bundle(data, bundle, Mode.BAYESIAN, factor)
    return _sandwich(bundle, bundle.p_perp_upsilon, data.alpha)


def map_r0_inverse(data: DetectorInput, bundle: Optional[WhitenedBundle] = None,
                   factor: Factor = Factor.CHOLESKY) -> np.ndarray:
    bundle = ensure_bundle(data, bundle, Mode.BAYESIAN, factor)
    return _sandwich_inverse(bundle, bundle.p_perp_upsilon, data.alpha)


def map_r1(data: DetectorInput, bundle: Optional[WhitenedBundle] = None,
           factor: Factor = Factor.CHOLESKY) -> np.ndarray:
    """H1 下协方差的 MAP 估计 R̂₁（已代入 Ĉ）"""
    bundle = ensure_bundle(data, bundle, Mode.BAYESIAN, factor)
    return _sandwich(bundle, bundle.p_perp_b, data.alpha)


def map_r1_inverse(data: DetectorInput, bundle: Optional[WhitenedBundle] = None,
                   factor: Factor = Factor.CHOLESKY) -> np.ndarray:
    bundle = ensure_bundle(data, bundle, Mode.BAYESIAN, factor)
    return _sandwich_inverse(bundle, bundle.p_perp_b, data.alpha)


def _log_joint(r: np.ndarray, residual: np.ndarray, data: DetectorInput) -> float:
    scatter = residual @ residual.conj().T + data.s + data.eta * data.sigma
    logdet = hpd_logdet(r, 'R')
    return -data.alpha * logdet - real_trace(scipy.linalg.cho_solve(hpd_factor(r, 'R'), scatter))


def log_joint_h0(r: np.ndarray, w: np.ndarray, data: DetectorInput) -> float:
    """H0 联合密度（数据、训练数据与先验）的对数，略去常数"""
    residual = data.z - data.upsilon @ np.asarray(w, dtype=complex).reshape(data.q, data.k)
    return _log_joint(r, residual, data)


def log_joint_h1(r: np.ndarray, c: np.ndarray, data: DetectorInput) -> float:
    residual = data.z - data.b @ np.asarray(c, dtype=complex).reshape(data.p + data.q, data.k)
    return _log_joint(r, residual, data)
