"""Detector kinds, detector input and shared Hermitian linear algebra."""

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg

from ..errors import DetectionError, DimensionError, NotPositiveDefiniteError
from ..model import ScaleMatrix, ScenarioConfig, SubspaceModel, TrialData


class DetectorKind(str, Enum):
    """六种检测统计量"""

    GLRT_I = 'GLRT-I'
    TWO_STEP_GLRT_I = '2S-GLRT-I'
    B_GLRT_I = 'B-GLRT-I'
    B_2S_GLRT_I = 'B-2S-GLRT-I'
    B_RAO_I = 'B-Rao-I'
    B_WALD = 'B-Wald'

    @property
    def bayesian(self) -> bool:
        return self not in (DetectorKind.GLRT_I, DetectorKind.TWO_STEP_GLRT_I)

    @property
    def ratio_form(self) -> bool:
        """行列式比值型统计量（零数据时为 1），其余为迹型（零数据时为 0）"""
        return self in (DetectorKind.GLRT_I, DetectorKind.B_GLRT_I)

    @property
    def null_floor(self) -> float:
        return 1.0 if self.ratio_form else 0.0

    @classmethod
    def parse(cls, name: str) -> 'DetectorKind':
        """接受 'B-Rao-I'、'BRaoI'、'b_rao_i'、'B_RAO_I' 等写法"""
        key = re.sub(r'[^a-z0-9]', '', str(name).lower())
        aliases = {re.sub(r'[^a-z0-9]', '', k.value.lower()): k for k in cls}
        aliases.update({re.sub(r'[^a-z0-9]', '', k.name.lower()): k for k in cls})
        aliases.update({'twostepglrti': cls.TWO_STEP_GLRT_I, 'b2sglrti': cls.B_2S_GLRT_I,
                        'bwald': cls.B_WALD})
        if key not in aliases:
            raise DetectionError(f"未知检测器: {name}", {'known': [k.value for k in cls]})
        return aliases[key]


DEFAULT_DETECTORS = (
    DetectorKind.GLRT_I,
    DetectorKind.TWO_STEP_GLRT_I,
    DetectorKind.B_GLRT_I,
    DetectorKind.B_2S_GLRT_I,
    DetectorKind.B_RAO_I,
)


@dataclass(frozen=True)
class DetectorInput:
    """检测器输入 (Z, S, Σ, η, Φ, Υ) 以及训练样本数 L"""

    z: np.ndarray
    s: np.ndarray
    sigma: np.ndarray
    eta: int
    phi: np.ndarray
    upsilon: np.ndarray
    l_train: int

    def __post_init__(self):
        sigma = self.sigma.sigma if isinstance(self.sigma, ScaleMatrix) else self.sigma
        object.__setattr__(self, 'sigma', np.asarray(sigma, dtype=complex))
        for name in ('z', 's', 'phi', 'upsilon'):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex))
        if self.upsilon.ndim == 1:
            object.__setattr__(self, 'upsilon', self.upsilon.reshape(self.n, -1))
        n = self.n
        for name in ('s', 'sigma'):
            if getattr(self, name).shape != (n, n):
                raise DimensionError(f"{name} 形状 {getattr(self, name).shape} 与 N={n} 不符")
        for name in ('phi', 'upsilon'):
            if getattr(self, name).shape[0] != n:
                raise DimensionError(f"{name} 形状 {getattr(self, name).shape} 与 N={n} 不符")

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def k(self) -> int:
        return self.z.shape[1]

    @property
    def p(self) -> int:
        return self.phi.shape[1]

    @property
    def q(self) -> int:
        return self.upsilon.shape[1]

    @property
    def b(self) -> np.ndarray:
        return np.hstack([self.phi, self.upsilon])

    @property
    def alpha(self) -> int:
        return self.eta + self.n + self.l_train + self.k

    def with_data(self, z: Optional[np.ndarray] = None, s: Optional[np.ndarray] = None) -> 'DetectorInput':
        return DetectorInput(
            z=self.z if z is None else z,
            s=self.s if s is None else s,
            sigma=self.sigma, eta=self.eta, phi=self.phi, upsilon=self.upsilon,
            l_train=self.l_train,
        )

    @classmethod
    def from_trial(cls, trial: TrialData, cfg: ScenarioConfig, subspaces: SubspaceModel,
                   sigma: ScaleMatrix) -> 'DetectorInput':
        return cls(z=trial.z, s=trial.scm, sigma=sigma.sigma, eta=cfg.eta,
                   phi=subspaces.phi, upsilon=subspaces.upsilon, l_train=cfg.l_train)


def herm(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


def hpd_factor(matrix: np.ndarray, what: str = '矩阵'):
    try:
        return scipy.linalg.cho_factor(herm(matrix), lower=True)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(f"{what} 不是正定矩阵")


def hpd_solve(matrix: np.ndarray, rhs: np.ndarray, what: str = '矩阵') -> np.ndarray:
    """Hermitian 正定方程组求解，不显式求逆"""
    if matrix.shape[0] == 0:
        return np.zeros((0,) + rhs.shape[1:], dtype=complex)
    return scipy.linalg.cho_solve(hpd_factor(matrix, what), rhs)


def hpd_logdet(matrix: np.ndarray, what: str = '矩阵') -> float:
    if matrix.shape[0] == 0:
        return 0.0
    c, _ = hpd_factor(matrix, what)
    return float(2.0 * np.sum(np.log(np.real(np.diag(c)))))


def real_trace(matrix: np.ndarray) -> float:
    return float(np.real(np.trace(matrix)))
