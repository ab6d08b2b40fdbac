"""Random sampling of the Bayesian data model."""

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
import scipy.linalg

from .errors import DetectionError, DimensionError, NotPositiveDefiniteError
from .model import Coordinates, ScaleMatrix, ScenarioConfig, SubspaceModel, TrialData, db_to_linear


class Purpose(int, Enum):
    """随机流用途划分，门限标定与性能估计互不共享"""

    CALIBRATE = 1
    PD = 2
    PFA = 3
    CFAR = 4
    SELFTEST = 5


class Hypothesis(str, Enum):
    H0 = 'H0'
    H1 = 'H1'


@dataclass(frozen=True)
class RngStream:
    """(seed, purpose, stream_id) 确定的独立随机流"""

    seed: int
    stream_id: int
    purpose: int = 0

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=(int(self.purpose), self.stream_id))
        return np.random.Generator(np.random.PCG64(sequence))


RngLike = Union[RngStream, np.random.Generator]


def _as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def _cholesky(cov: np.ndarray, what: str) -> np.ndarray:
    try:
        return scipy.linalg.cholesky(cov, lower=True)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(f"{what} 不是正定矩阵，Cholesky 分解失败")


def standard_complex_gaussian(rows: int, cols: int, rng: RngLike) -> np.ndarray:
    """实部和虚部方差均为 1/2 的 IID 复高斯矩阵"""
    gen = _as_generator(rng)
    real = gen.standard_normal((rows, cols))
    imag = gen.standard_normal((rows, cols))
    return (real + 1j * imag) / np.sqrt(2.0)


def sample_complex_gaussian(rows: int, cols: int, cov: np.ndarray, rng: RngLike) -> np.ndarray:
    """列独立、协方差为 cov 的圆对称复高斯矩阵"""
    cov = np.atleast_2d(np.asarray(cov, dtype=complex))
    if cov.shape != (rows, rows):
        raise DimensionError(f"协方差形状 {cov.shape} 与行数 {rows} 不符")
    factor = _cholesky(cov, '协方差矩阵')
    return factor @ standard_complex_gaussian(rows, cols, rng)


def sample_inverse_wishart(eta: int, sigma: ScaleMatrix, rng: RngLike) -> np.ndarray:
    """R ~ CW⁻¹(η, ηΣ)，即 R⁻¹ 为 η 个协方差 (ηΣ)⁻¹ 复高斯矢量外积之和"""
    n = sigma.n
    if eta < n:
        raise DetectionError(f"先验自由度不足: eta below data dimension（{eta} < {n}），逆 Wishart 抽样奇异")
    # C Cᴴ = ηΣ，g = C⁻ᴴ x 的协方差为 (ηΣ)⁻¹，故 R = C (X Xᴴ)⁻¹ Cᴴ
    c = _cholesky(eta * sigma.sigma, '尺度矩阵')
    x = standard_complex_gaussian(n, eta, rng)
    gram_factor = _cholesky(x @ x.conj().T, 'Wishart 样本')
    t = scipy.linalg.solve_triangular(gram_factor, c.conj().T, lower=True)
    r = t.conj().T @ t
    return (r + r.conj().T) / 2


def scale_coordinates(raw: np.ndarray, basis: np.ndarray, sigma: ScaleMatrix, target_db: float) -> np.ndarray:
    """缩放坐标使 tr(rawᴴ basisᴴ Σ⁻¹ basis raw) 等于目标功率"""
    raw = np.atleast_2d(np.asarray(raw, dtype=complex))
    basis = np.asarray(basis, dtype=complex)
    if basis.ndim == 1:
        basis = basis[:, None]
    if basis.shape[1] != raw.shape[0]:
        raise DimensionError(f"基矩阵形状 {basis.shape} 与坐标形状 {raw.shape} 不符")
    target = db_to_linear(target_db)
    if target == 0.0:
        return np.zeros_like(raw)
    mapped = basis @ raw
    factor = scipy.linalg.cho_factor(sigma.sigma, lower=True)
    power = float(np.real(np.trace(mapped.conj().T @ scipy.linalg.cho_solve(factor, mapped))))
    if power <= 0.0:
        raise DetectionError("坐标功率为零，无法缩放到目标 SNR/INR")
    return np.sqrt(target / power) * raw


def draw_coordinates(cfg: ScenarioConfig, subspaces: SubspaceModel, sigma: ScaleMatrix,
                     rng: RngLike) -> Coordinates:
    """抽取信号坐标 A 和干扰坐标 W，并分别缩放到 SNR 和 INR"""
    gen = _as_generator(rng)
    a_raw = standard_complex_gaussian(cfg.p_sig, cfg.k_cells, gen)
    w_raw = standard_complex_gaussian(cfg.q_intf, cfg.k_cells, gen)
    return Coordinates(a=scale_coordinates(a_raw, subspaces.phi, sigma, cfg.snr_db),
                       w=scale_coordinates(w_raw, subspaces.upsilon, sigma, cfg.inr_db))


def synthesize_trial(cfg: ScenarioConfig, subspaces: SubspaceModel, sigma: ScaleMatrix,
                     hypothesis: Hypothesis, rng: RngLike) -> TrialData:
    """按 H0/H1 生成一次试验的 (Z, Z_L, R)"""
    gen = _as_generator(rng)
    n, k, l = cfg.n_dim, cfg.k_cells, cfg.l_train

    # 抽样顺序固定：R, N, N_L, A, W（两种假设下均抽取 A）
    r = sample_inverse_wishart(cfg.eta, sigma, gen)
    r_factor = _cholesky(r, '协方差 R')
    noise = r_factor @ standard_complex_gaussian(n, k, gen)
    noise_l = r_factor @ standard_complex_gaussian(n, l, gen)
    coords = draw_coordinates(cfg, subspaces, sigma, gen)

    z = subspaces.upsilon @ coords.w + noise
    if Hypothesis(hypothesis) is Hypothesis.H1:
        z = z + subspaces.phi @ coords.a
    return TrialData(z=z, z_l=noise_l, true_r=r)
