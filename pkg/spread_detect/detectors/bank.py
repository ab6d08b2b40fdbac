"""Dispatch over detector kinds with one whitening per mode per trial."""

import logging
from typing import Dict, Iterable, Optional

from ..errors import SampleStarvedError
from .base import DetectorInput, DetectorKind
from .glrt import t_2s_glrt_i, t_b_2s_glrt_i, t_b_glrt_i, t_glrt_i
from .rao import t_b_rao_i
from .wald import t_b_wald
from .whitening import Factor, Mode, WhitenedBundle, whiten

STATISTICS = {
    DetectorKind.GLRT_I: t_glrt_i,
    DetectorKind.TWO_STEP_GLRT_I: t_2s_glrt_i,
    DetectorKind.B_GLRT_I: t_b_glrt_i,
    DetectorKind.B_2S_GLRT_I: t_b_2s_glrt_i,
    DetectorKind.B_RAO_I: t_b_rao_i,
    DetectorKind.B_WALD: t_b_wald,
}


def mode_of(kind: DetectorKind) -> Mode:
    return Mode.BAYESIAN if DetectorKind(kind).bayesian else Mode.ORDINARY


def unavailable_reason(kind: DetectorKind, n_dim: int, l_train: int) -> Optional[str]:
    """常规检测器在 L < N 时不可用，返回原因；可用时返回 None"""
    if not DetectorKind(kind).bayesian and l_train < n_dim:
        return f"sample-starved: L={l_train} < N={n_dim}，样本协方差矩阵不可逆"
    return None


def evaluate(kind: DetectorKind, data: DetectorInput,
             bundle: Optional[WhitenedBundle] = None,
             factor: Factor = Factor.CHOLESKY) -> float:
    """按检测器类型计算统计量"""
    kind = DetectorKind(kind)
    reason = unavailable_reason(kind, data.n, data.l_train)
    if reason:
        raise SampleStarvedError(reason, {'detector': kind.value, 'l_train': data.l_train, 'n_dim': data.n})
    return STATISTICS[kind](data, bundle, factor)


class DetectorBank:
    """一组检测器：每次试验每种白化模式只计算一次"""

    def __init__(self, kinds: Iterable[DetectorKind], factor: Factor = Factor.CHOLESKY):
        self.kinds = [DetectorKind(k) for k in kinds]
        self.factor = Factor(factor)
        self.cross_check = logging.getLogger().isEnabledFor(logging.DEBUG)

    def modes(self):
        return sorted({mode_of(k) for k in self.kinds}, key=lambda m: m.value)

    def evaluate_all(self, data: DetectorInput) -> Dict[DetectorKind, float]:
        bundles = {mode: whiten(data, mode, self.factor) for mode in self.modes()}
        values = {kind: evaluate(kind, data, bundles[mode_of(kind)], self.factor) for kind in self.kinds}
        if self.cross_check and DetectorKind.B_RAO_I in values:
            # DEBUG 级别下核对 B-Rao-I 的两种计算形式
            t_b_rao_i(data, bundles[Mode.BAYESIAN], self.factor, check=True)
        return values
