"""Algebraic identity suite over random detector inputs."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .detectors import (DetectorInput, DetectorKind, Factor, Mode, evaluate, map_r0, map_r0_inverse, map_r1,
                        map_r1_inverse, map_w, t_b_2s_glrt_i, t_b_rao_i, t_b_wald, t_given_r, unavailable_reason,
                        whiten)
from .detectors.base import herm, hpd_logdet, hpd_solve
from .detectors.rao import FORM_DEFLATED, FORM_PROJECTOR
from .detectors.whitening import whitening_matrix
from .model import build_scale_matrix
from .synth import Purpose, RngStream, standard_complex_gaussian

EXACT_TOL = 1e-10
INVERSE_TOL = 1e-8


def relative_error(actual, expected, floor: float = 0.0) -> float:
    """‖actual - expected‖ / max(‖expected‖, floor)；expected 可能为零时用 floor 给出尺度"""
    actual = np.asarray(actual)
    expected = np.asarray(expected)
    scale = max(float(np.linalg.norm(expected)), floor, np.finfo(float).tiny)
    return float(np.linalg.norm(actual - expected)) / scale


def random_instance(rng: np.random.Generator) -> DetectorInput:
    """N∈[4,10], K∈[1,6], p+q≤N, η∈[N,2N], L∈[0,2N] 的随机输入"""
    n = int(rng.integers(4, 11))
    k = int(rng.integers(1, 7))
    p = int(rng.integers(1, n))
    q = int(rng.integers(1, n - p + 1))
    eta = int(rng.integers(n, 2 * n + 1))
    l_train = int(rng.integers(0, 2 * n + 1))
    sigma = build_scale_matrix(float(rng.uniform(0.1, 10.0)), float(rng.uniform(0.0, 0.95)), n)
    z_l = standard_complex_gaussian(n, l_train, rng)
    return DetectorInput(
        z=standard_complex_gaussian(n, k, rng),
        s=z_l @ z_l.conj().T,
        sigma=sigma.sigma,
        eta=eta,
        phi=standard_complex_gaussian(n, p, rng),
        upsilon=standard_complex_gaussian(n, q, rng),
        l_train=l_train,
    )


def _resolvent_identity(data: DetectorInput) -> float:
    bundle = whiten(data, Mode.BAYESIAN)
    z, zh = bundle.z_w, bundle.z_w.conj().T
    eye = np.eye(data.k)
    g_upsilon = herm(eye + zh @ bundle.p_perp_upsilon @ z)
    q_signal = herm(zh @ bundle.p_proj_phi_given_upsilon @ z)
    deflated = g_upsilon - q_signal
    return relative_error(eye + hpd_solve(deflated, q_signal), hpd_solve(deflated, g_upsilon))


def _projector_decomposition(data: DetectorInput) -> float:
    """P⊥_B = P⊥_Ῠ - P_{P⊥_Ῠ Φ̃}；p+q=N 时两侧均为零矩阵，按 ‖P⊥_Ῠ‖_F 归一化"""
    bundle = whiten(data, Mode.BAYESIAN)
    return relative_error(bundle.p_perp_b, bundle.p_perp_upsilon - bundle.p_proj_phi_given_upsilon,
                          floor=max(float(np.linalg.norm(bundle.p_perp_upsilon)), 1.0))


def _rao_forms(data: DetectorInput) -> float:
    bundle = whiten(data, Mode.BAYESIAN)
    return relative_error(t_b_rao_i(data, bundle, form=FORM_DEFLATED),
                          t_b_rao_i(data, bundle, form=FORM_PROJECTOR))


def _woodbury(data: DetectorInput) -> float:
    bundle = whiten(data, Mode.BAYESIAN)
    return max(
        relative_error(map_r0_inverse(data, bundle), np.linalg.inv(map_r0(data, bundle))),
        relative_error(map_r1_inverse(data, bundle), np.linalg.inv(map_r1(data, bundle))),
    )


def _pushthrough(data: DetectorInput) -> float:
    bundle = whiten(data, Mode.BAYESIAN)
    m = whitening_matrix(data, Mode.BAYESIAN)
    return max(
        relative_error(map_r0_inverse(data, bundle) @ data.upsilon, data.alpha * hpd_solve(m, data.upsilon)),
        relative_error(map_r1_inverse(data, bundle) @ data.phi, data.alpha * hpd_solve(m, data.phi)),
        relative_error(map_r1_inverse(data, bundle) @ data.upsilon, data.alpha * hpd_solve(m, data.upsilon)),
    )


def _determinant(data: DetectorInput) -> float:
    """|Z₀Z₀ᴴ + M| = |M|·|I_K + (Z̆ - ῨW)ᴴ(Z̆ - ῨW)|，以对数比较"""
    bundle = whiten(data, Mode.BAYESIAN)
    w = map_w(data, bundle)
    m = whitening_matrix(data, Mode.BAYESIAN)
    residual = data.z - data.upsilon @ w
    residual_w = bundle.z_w - bundle.upsilon_w @ w
    lhs = hpd_logdet(residual @ residual.conj().T + m)
    rhs = hpd_logdet(m) + hpd_logdet(np.eye(data.k) + residual_w.conj().T @ residual_w)
    return abs(float(np.expm1(lhs - rhs)))


def _wald_equivalence(data: DetectorInput) -> float:
    return relative_error(t_b_wald(data), data.alpha * t_b_2s_glrt_i(data))


def _rao_score_form(data: DetectorInput) -> float:
    return relative_error(t_given_r(map_r0(data), data), data.alpha * t_b_rao_i(data))


def _factor_invariance(data: DetectorInput) -> float:
    """全部可用检测器在 Cholesky 与 EIGH 白化下的统计量一致"""
    errors = [relative_error(evaluate(kind, data, factor=Factor.EIGH), evaluate(kind, data))
              for kind in DetectorKind if unavailable_reason(kind, data.n, data.l_train) is None]
    return max(errors)


IDENTITIES: Dict[str, tuple] = {
    'resolvent': (_resolvent_identity, EXACT_TOL),
    'projector_decomposition': (_projector_decomposition, EXACT_TOL),
    'rao_forms': (_rao_forms, EXACT_TOL),
    'woodbury': (_woodbury, INVERSE_TOL),
    'pushthrough': (_pushthrough, INVERSE_TOL),
    'determinant': (_determinant, INVERSE_TOL),
    'wald_equivalence': (_wald_equivalence, EXACT_TOL),
    'rao_score_form': (_rao_score_form, INVERSE_TOL),
    'factor_invariance': (_factor_invariance, EXACT_TOL),
}


@dataclass
class IdentityCheck:
    name: str
    tolerance: float
    worst: float = 0.0
    failures: int = 0

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass
class SelftestReport:
    seed: int
    n_instances: int
    checks: List[IdentityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def format(self) -> str:
        lines = [f"恒等式自检 ({self.n_instances} 个随机实例, seed={self.seed})", "━━━━━━━━━━━━━━━━"]
        for check in self.checks:
            icon = "✅" if check.passed else "❌"
            lines.append(f"{icon} {check.name}: 最大相对误差 {check.worst:.2e} (容差 {check.tolerance:.0e})")
        return '\n'.join(lines)


def run_selftest(seed: int, n_instances: int = 100,
                 identities: Optional[Dict[str, tuple]] = None) -> SelftestReport:
    """在随机实例上逐条核对代数恒等式"""
    identities = identities or IDENTITIES
    report = SelftestReport(seed=seed, n_instances=n_instances)
    checks = {name: IdentityCheck(name, tol) for name, (_, tol) in identities.items()}
    for index in range(n_instances):
        data = random_instance(RngStream(seed, index, Purpose.SELFTEST).generator())
        for name, (check_fn, tol) in identities.items():
            error = check_fn(data)
            entry = checks[name]
            entry.worst = max(entry.worst, error)
            if not error <= tol:
                entry.failures += 1
                logging.debug(f"{name} 未通过: 实例 {index} (N={data.n}, K={data.k}, p={data.p}, "
                              f"q={data.q}, L={data.l_train}) 相对误差 {error:.3e}")
    report.checks = list(checks.values())
    return report
