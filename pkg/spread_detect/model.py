"""Scenario configuration, scale matrix and subspace construction."""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from .errors import ConfigError, NotPositiveDefiniteError, RankDeficientError

RANK_TOL = 1e-8
HERMITIAN_TOL = 1e-10

# 未指定频率时的默认布局
DEFAULT_SIG_BAND = (0.05, 0.30)
DEFAULT_INTF_BAND = (-0.35, -0.10)


def db_to_linear(value_db: float) -> float:
    """dB 转线性功率，-inf dB 对应 0"""
    if value_db == -math.inf:
        return 0.0
    return 10.0 ** (value_db / 10.0)


def _freeze(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


def full_column_rank(matrix: np.ndarray, tol: float = RANK_TOL) -> bool:
    """最小奇异值 > tol * 最大奇异值"""
    if matrix.shape[1] == 0:
        return True
    if matrix.shape[1] > matrix.shape[0]:
        return False
    sv = np.linalg.svd(matrix, compute_uv=False)
    return bool(sv[-1] > tol * sv[0])


@dataclass(frozen=True)
class ScenarioConfig:
    """场景参数：维度、先验和信干噪比设置"""

    n_dim: int = 10
    k_cells: int = 4
    p_sig: int = 7
    q_intf: int = 3
    l_train: int = 12
    eta: int = 14
    sigma2: float = 1.0
    rho: float = 0.9
    inr_db: float = 10.0
    snr_db: float = 10.0
    sig_freqs: Tuple[float, ...] = ()
    intf_freqs: Tuple[float, ...] = ()
    seed: int = 20240601

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ScenarioConfig':
        """从字典构造；未知字段视为错误"""
        unknown = sorted(set(data) - set(cls.field_names()))
        if unknown:
            raise ConfigError([(f"scenario.{key}", "未知字段") for key in unknown])
        values = dict(data)
        for key in ('sig_freqs', 'intf_freqs'):
            if key in values:
                values[key] = tuple(float(f) for f in (values[key] or ()))
        for key in ('inr_db', 'snr_db', 'sigma2', 'rho'):
            if key in values and isinstance(values[key], str):
                try:
                    values[key] = float(values[key])
                except ValueError:
                    raise ConfigError([(key, f"无法解析为实数: {values[key]!r}")])
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        result = {}
        for name in self.field_names():
            value = getattr(self, name)
            if isinstance(value, tuple):
                value = list(value)
            elif isinstance(value, float) and math.isinf(value):
                value = '-inf' if value < 0 else 'inf'
            result[name] = value
        return result

    def with_updates(self, **changes: Any) -> 'ScenarioConfig':
        return replace(self, **changes)

    @property
    def alpha(self) -> int:
        """eta + N + L + K"""
        return self.eta + self.n_dim + self.l_train + self.k_cells


@dataclass(frozen=True)
class ScaleMatrix:
    """逆 Wishart 先验的尺度矩阵 Σ（Hermitian 正定）"""

    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise NotPositiveDefiniteError(f"尺度矩阵必须为方阵，实际形状 {sigma.shape}")
        scale = max(float(np.max(np.abs(sigma))), 1.0)
        if np.max(np.abs(sigma - sigma.conj().T)) > HERMITIAN_TOL * scale:
            raise NotPositiveDefiniteError("尺度矩阵不是 Hermitian 矩阵")
        try:
            scipy.linalg.cholesky(sigma, lower=True)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError("尺度矩阵不是正定矩阵")
        object.__setattr__(self, 'sigma', _freeze(sigma))

    @property
    def n(self) -> int:
        return self.sigma.shape[0]


@dataclass(frozen=True)
class SubspaceModel:
    """信号子空间 Φ、干扰子空间 Υ 及其拼接 B"""

    phi: np.ndarray
    upsilon: np.ndarray
    b: np.ndarray = field(init=False)

    def __post_init__(self):
        phi = _freeze(self.phi)
        upsilon = _freeze(self.upsilon)
        b = _freeze(np.hstack([phi, upsilon]))
        for name, matrix in (('phi', phi), ('upsilon', upsilon), ('b', b)):
            if not full_column_rank(matrix):
                raise RankDeficientError(f"{name} 不满列秩 (形状 {matrix.shape})", {'matrix': name})
        object.__setattr__(self, 'phi', phi)
        object.__setattr__(self, 'upsilon', upsilon)
        object.__setattr__(self, 'b', b)


@dataclass(frozen=True)
class Coordinates:
    """信号坐标 A (p×K) 与干扰坐标 W (q×K)"""

    a: np.ndarray
    w: np.ndarray


@dataclass(frozen=True)
class TrialData:
    """一次蒙特卡洛试验的待检测数据 Z、训练数据 Z_L 和实际协方差 R"""

    z: np.ndarray
    z_l: np.ndarray
    true_r: np.ndarray

    @property
    def scm(self) -> np.ndarray:
        """未归一化样本协方差 S = Z_L Z_Lᴴ"""
        return self.z_l @ self.z_l.conj().T


def build_scale_matrix(sigma2: float, rho: float, n: int) -> ScaleMatrix:
    """构造 Σ(i,j) = σ² ρ^|i-j|"""
    if sigma2 <= 0:
        raise ConfigError([('sigma2', f"sigma2 必须为正数，实际 {sigma2}")])
    if not 0 <= rho < 1:
        raise ConfigError([('rho', f"相关系数越界: rho must lie in [0, 1)（实际 {rho}）")])
    column = sigma2 * np.power(float(rho), np.arange(n))
    return ScaleMatrix(scipy.linalg.toeplitz(column).astype(complex))


def build_steering_subspace(freqs, n: int) -> np.ndarray:
    """按归一化多普勒频率构造单位范数导向矢量矩阵"""
    freqs = [float(f) for f in freqs]
    if len(set(freqs)) != len(freqs):
        raise ConfigError([('freqs', f"频率重复: {freqs}")])
    k = np.arange(n)[:, None]
    steering = np.exp(2j * np.pi * k * np.asarray(freqs, dtype=float)[None, :]) / np.sqrt(n)
    if not full_column_rank(steering):
        raise RankDeficientError(f"导向矩阵不满列秩 (freqs={freqs})")
    return steering


def default_freqs(count: int, band: Tuple[float, float]) -> Tuple[float, ...]:
    if count <= 0:
        return ()
    if count == 1:
        return (float(np.mean(band)),)
    return tuple(float(f) for f in np.linspace(band[0], band[1], count))


def build_subspaces(cfg: ScenarioConfig) -> SubspaceModel:
    """由已校验配置构造 Φ 和 Υ"""
    phi = build_steering_subspace(cfg.sig_freqs, cfg.n_dim)
    upsilon = build_steering_subspace(cfg.intf_freqs, cfg.n_dim)
    return SubspaceModel(phi, upsilon)


def _is_int(value: Any) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """检查全部不变量，返回规范化配置（频率排序、缺省频率补全）"""
    issues: List[Tuple[str, str]] = []

    for name in ('n_dim', 'k_cells', 'p_sig', 'q_intf', 'eta'):
        value = getattr(cfg, name)
        if not _is_int(value) or value < 1:
            issues.append((name, f"必须为正整数，实际 {value!r}"))
    if not _is_int(cfg.l_train) or cfg.l_train < 0:
        issues.append(('l_train', f"必须为非负整数，实际 {cfg.l_train!r}"))
    if not _is_int(cfg.seed) or not 0 <= cfg.seed < 2 ** 64:
        issues.append(('seed', f"必须为 64 位无符号整数，实际 {cfg.seed!r}"))
    if issues:
        raise ConfigError(issues)

    if not cfg.sigma2 > 0:
        issues.append(('sigma2', f"sigma2 必须为正数，实际 {cfg.sigma2}"))
    if not 0 <= cfg.rho < 1:
        issues.append(('rho', f"相关系数越界: rho must lie in [0, 1)（实际 {cfg.rho}）"))
    if cfg.p_sig + cfg.q_intf > cfg.n_dim:
        issues.append(('q_intf', f"子空间维数过大: p+q exceeds N（{cfg.p_sig}+{cfg.q_intf} > {cfg.n_dim}）"))
    if cfg.eta < cfg.n_dim:
        issues.append(('eta', f"先验自由度不足: eta below data dimension（{cfg.eta} < {cfg.n_dim}）"))
    for name in ('inr_db', 'snr_db'):
        value = getattr(cfg, name)
        if math.isnan(value) or value == math.inf:
            issues.append((name, f"必须为有限值或 -inf，实际 {value}"))

    sig = tuple(sorted(cfg.sig_freqs)) or default_freqs(cfg.p_sig, DEFAULT_SIG_BAND)
    intf = tuple(sorted(cfg.intf_freqs)) or default_freqs(cfg.q_intf, DEFAULT_INTF_BAND)
    if len(sig) != cfg.p_sig:
        issues.append(('sig_freqs', f"需要 {cfg.p_sig} 个频率，实际 {len(sig)}"))
    if len(intf) != cfg.q_intf:
        issues.append(('intf_freqs', f"需要 {cfg.q_intf} 个频率，实际 {len(intf)}"))
    for name, values in (('sig_freqs', sig), ('intf_freqs', intf)):
        outside = [f for f in values if not -0.5 <= f < 0.5]
        if outside:
            issues.append((name, f"频率必须位于 [-0.5, 0.5)，越界: {outside}"))
    union = sig + intf
    if len(set(union)) != len(union):
        issues.append(('intf_freqs', "信号与干扰频率必须两两不同"))
    if issues:
        raise ConfigError(issues)

    normalized = replace(cfg, sig_freqs=sig, intf_freqs=intf)
    try:
        build_subspaces(normalized)
    except RankDeficientError as e:
        raise ConfigError([('intf_freqs', f"[Φ, Υ] 不满列秩: {e.message}")])

    if cfg.eta == cfg.n_dim:
        logging.warning(f"eta = N = {cfg.n_dim}，逆 Wishart 均值无定义（退化情形）")
    return normalized


def config_fingerprint(cfg: ScenarioConfig) -> str:
    """场景配置的稳定摘要，用于门限文件匹配；H0 统计量与 SNR 和种子无关，二者不计入"""
    data = {k: v for k, v in cfg.to_dict().items() if k not in ('seed', 'snr_db')}
    canonical = json.dumps(data, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def scenario_from_mapping(data: Optional[Dict[str, Any]]) -> ScenarioConfig:
    return validate_config(ScenarioConfig.from_dict(data or {}))
