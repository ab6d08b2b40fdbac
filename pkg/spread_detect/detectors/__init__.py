"""Detection statistics for range-spread targets in subspace interference."""

from .bank import DetectorBank, evaluate, unavailable_reason
from .base import DEFAULT_DETECTORS, DetectorInput, DetectorKind
from .estimators import (log_joint_h0, log_joint_h1, map_a, map_c, map_r0, map_r0_inverse,
                         map_r1, map_r1_inverse, map_w)
from .glrt import t_2s_glrt_i, t_b_2s_glrt_i, t_b_glrt_i, t_glrt_i
from .rao import t_b_rao_i, t_given_r
from .wald import t_b_wald
from .whitening import Factor, Mode, WhitenedBundle, literal_projector, projector, whiten

__all__ = [
    "DetectorBank", "DetectorInput", "DetectorKind", "DEFAULT_DETECTORS", "Factor", "Mode",
    "WhitenedBundle", "evaluate", "unavailable_reason", "whiten", "projector", "literal_projector",
    "t_glrt_i", "t_2s_glrt_i", "t_b_glrt_i", "t_b_2s_glrt_i", "t_b_rao_i", "t_b_wald", "t_given_r",
    "map_w", "map_a", "map_c", "map_r0", "map_r0_inverse", "map_r1", "map_r1_inverse",
    "log_joint_h0", "log_joint_h1",
]
