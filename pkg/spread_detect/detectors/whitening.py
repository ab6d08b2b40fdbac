"""Whitening by S+ηΣ (Bayesian) or S (ordinary) and the cached projectors."""

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg

from ..errors import NotPositiveDefiniteError, RankDeficientError, SampleStarvedError
from ..model import full_column_rank
from .base import DetectorInput, herm


class Mode(str, Enum):
    BAYESIAN = 'bayesian'
    ORDINARY = 'ordinary'


class Factor(str, Enum):
    """白化因子 F（F Fᴴ = M）的取法"""

    CHOLESKY = 'cholesky'
    EIGH = 'eigh'


def projector(x: np.ndarray, what: str = 'X') -> np.ndarray:
    """列空间正交投影，基于 QR 正交化"""
    n = x.shape[0]
    if x.shape[1] == 0:
        return np.zeros((n, n), dtype=complex)
    if not full_column_rank(x):
        raise RankDeficientError(f"{what} 不满列秩，无法构造投影", {'matrix': what})
    q, _ = np.linalg.qr(x)
    return q @ q.conj().T


def literal_projector(x: np.ndarray) -> np.ndarray:
    """X (XᴴX)⁻¹ Xᴴ 的直接形式，仅用于核对"""
    n = x.shape[0]
    if x.shape[1] == 0:
        return np.zeros((n, n), dtype=complex)
    gram = x.conj().T @ x
    return x @ np.linalg.solve(gram, x.conj().T)


@dataclass(frozen=True)
class WhitenedBundle:
    """白化后的 Z、Φ、Υ、B 及三个投影矩阵，可在多个检测器间只读共享"""

    mode: Mode
    factor_kind: Factor
    factor: np.ndarray
    z_w: np.ndarray
    phi_w: np.ndarray
    upsilon_w: np.ndarray
    b_w: np.ndarray
    p_perp_upsilon: np.ndarray
    p_perp_b: np.ndarray
    p_proj_phi_given_upsilon: np.ndarray

    def apply_inverse_h(self, x: np.ndarray) -> np.ndarray:
        """F⁻ᴴ x"""
        if self.factor_kind is Factor.CHOLESKY:
            return scipy.linalg.solve_triangular(self.factor, x, lower=True, trans='C')
        return np.linalg.solve(self.factor.conj().T, x)

    @property
    def n(self) -> int:
        return self.z_w.shape[0]

    @property
    def k(self) -> int:
        return self.z_w.shape[1]


def whitening_matrix(data: DetectorInput, mode: Mode) -> np.ndarray:
    if Mode(mode) is Mode.BAYESIAN:
        return herm(data.s + data.eta * data.sigma)
    return herm(data.s)


def _factorize(m: np.ndarray, mode: Mode, factor: Factor) -> np.ndarray:
    if Factor(factor) is Factor.CHOLESKY:
        try:
            return scipy.linalg.cholesky(m, lower=True)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError(f"{mode.value} 白化矩阵不是正定矩阵", {'mode': mode.value})
    values, vectors = np.linalg.eigh(m)
    if values[0] <= 0:
        raise NotPositiveDefiniteError(f"{mode.value} 白化矩阵不是正定矩阵", {'mode': mode.value})
    return (vectors * np.sqrt(values)) @ vectors.conj().T


def whiten(data: DetectorInput, mode: Mode = Mode.BAYESIAN, factor: Factor = Factor.CHOLESKY) -> WhitenedBundle:
    """以 F⁻¹ 白化 Z、Φ、Υ、B，并缓存 P⊥_Υ、P⊥_B、P_{P⊥_Υ Φ}"""
    mode = Mode(mode)
    if mode is Mode.ORDINARY and data.l_train < data.n:
        raise SampleStarvedError(
            f"sample-starved: L={data.l_train} < N={data.n}，样本协方差矩阵奇异，常规检测器失效",
            {'mode': mode.value, 'l_train': data.l_train, 'n_dim': data.n},
        )
    f = _factorize(whitening_matrix(data, mode), mode, Factor(factor))

    if Factor(factor) is Factor.CHOLESKY:
        def solve(x):
            return scipy.linalg.solve_triangular(f, x, lower=True)
    else:
        def solve(x):
            return np.linalg.solve(f, x)

    z_w = solve(data.z)
    phi_w = solve(data.phi)
    upsilon_w = solve(data.upsilon) if data.q else np.zeros((data.n, 0), dtype=complex)
    b_w = np.hstack([phi_w, upsilon_w])

    eye = np.eye(data.n, dtype=complex)
    p_perp_upsilon = herm(eye - projector(upsilon_w, 'Υ'))
    p_perp_b = herm(eye - projector(b_w, 'B'))
    try:
        p_proj = herm(projector(p_perp_upsilon @ phi_w, 'P⊥_Υ Φ'))
    except RankDeficientError:
        raise RankDeficientError("白化后信号子空间落入干扰子空间 (P⊥_Υ Φ 不满列秩)",
                                 {'matrix': 'P⊥_Υ Φ'})
    return WhitenedBundle(
        mode=mode, factor_kind=Factor(factor), factor=f,
        z_w=z_w, phi_w=phi_w, upsilon_w=upsilon_w, b_w=b_w,
        p_perp_upsilon=p_perp_upsilon, p_perp_b=p_perp_b,
        p_proj_phi_given_upsilon=p_proj,
    )


def ensure_bundle(data: DetectorInput, bundle, mode: Mode, factor: Factor = Factor.CHOLESKY) -> WhitenedBundle:
    """复用已缓存的白化结果，未提供时现算"""
    if bundle is None:
        return whiten(data, mode, factor)
    if bundle.mode is not Mode(mode):
        raise ValueError(f"白化模式不符: 需要 {Mode(mode).value}，实际 {bundle.mode.value}")
    return bundle
