"""Monte Carlo engine: threshold calibration, PD/PFA estimation, SNR sweeps and CFAR scans."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .detectors import DetectorBank, DetectorInput, DetectorKind, Factor, unavailable_reason
from .errors import CalibrationError, SampleStarvedError
from .model import ScenarioConfig, build_scale_matrix, build_subspaces, validate_config
from .synth import Hypothesis, Purpose, RngStream, synthesize_trial

Z_95 = 1.96
MIN_EXCEEDANCES = 10
DEFAULT_CHUNK = 250
CFAR_GRID = 'grid'
CFAR_PANELS = 'panels'
CFAR_LAYOUTS = (CFAR_GRID, CFAR_PANELS)


@dataclass(frozen=True)
class ThresholdRecord:
    """某检测器在目标虚警概率下的标定门限"""

    detector: DetectorKind
    pfa_target: float
    n_trials: int
    threshold: float
    seed: int

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['detector'] = self.detector.value
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> 'ThresholdRecord':
        return cls(
            detector=DetectorKind.parse(data['detector']),
            pfa_target=float(data['pfa_target']),
            n_trials=int(data['n_trials']),
            threshold=float(data['threshold']),
            seed=int(data['seed']),
        )


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    detector: DetectorKind
    pd: float
    ci_half: float
    threshold: float
    n_trials: int


@dataclass
class SweepResult:
    """SNR 扫描结果：每行一个 (检测器, SNR) 点"""

    pfa_target: float
    seed: int
    rows: List[SweepRow] = field(default_factory=list)
    thresholds: Dict[DetectorKind, ThresholdRecord] = field(default_factory=dict)
    skipped: Dict[DetectorKind, str] = field(default_factory=dict)

    def curve(self, kind: DetectorKind) -> List[SweepRow]:
        return [row for row in self.rows if row.detector is DetectorKind(kind)]

    def pd_at(self, kind: DetectorKind, snr_db: float) -> SweepRow:
        for row in self.curve(kind):
            if row.snr_db == snr_db:
                return row
        raise KeyError(f"{DetectorKind(kind).value} @ {snr_db} dB")


@dataclass(frozen=True)
class CfarPoint:
    sigma2: float
    rho: float
    pfa_hat: float
    ci_half: float
    n_trials: int


@dataclass
class CfarTable:
    """固定门限下虚警概率随 (σ², ρ) 的变化"""

    detector: DetectorKind
    threshold: ThresholdRecord
    points: List[CfarPoint] = field(default_factory=list)

    def spread(self) -> Tuple[float, float]:
        values = [p.pfa_hat for p in self.points]
        return (min(values), max(values)) if values else (math.nan, math.nan)


def wald_ci_half(rate: float, n_trials: int) -> float:
    """二项分布 Wald 95% 置信区间半宽"""
    if n_trials <= 0:
        return math.nan
    return Z_95 * math.sqrt(max(rate * (1.0 - rate), 0.0) / n_trials)


def exceedance_rank(n_trials: int, pfa: float) -> int:
    """降序排列后门限所在的零基位置 m = ⌈n·pfa⌉"""
    return int(math.ceil(n_trials * pfa - 1e-9))


def threshold_from_statistics(statistics: Sequence[float], pfa: float) -> float:
    """降序排序后取第 ⌈n·pfa⌉ 位（零基），无并列时恰有 ⌈n·pfa⌉ 个统计量严格超过门限"""
    values = np.sort(np.asarray(statistics, dtype=float))[::-1]
    n = values.size
    if not 0 < pfa < 1:
        raise CalibrationError(f"虚警概率必须位于 (0, 1)，实际 {pfa}")
    if n * pfa < MIN_EXCEEDANCES:
        raise CalibrationError(
            f"试验次数不足: n·pfa = {n * pfa:g} < {MIN_EXCEEDANCES}",
            {'n_trials': n, 'pfa': pfa},
        )
    m = exceedance_rank(n, pfa)
    if m >= n:
        raise CalibrationError(f"试验次数不足: 需要 n > {m}", {'n_trials': n, 'pfa': pfa})
    return float(values[m])


def exceedance_rate(statistics: np.ndarray, threshold: float) -> Tuple[float, float]:
    statistics = np.asarray(statistics, dtype=float)
    rate = float(np.count_nonzero(statistics > threshold)) / statistics.size
    return rate, wald_ci_half(rate, statistics.size)


def cfar_points(cfg: ScenarioConfig, sigma2_grid: Sequence[float], rho_grid: Sequence[float],
                layout: str = CFAR_GRID) -> List[Tuple[float, float]]:
    """CFAR 扫描点

    grid: σ² 网格与 ρ 网格的笛卡尔积；
    panels: ρ 固定为场景值扫描 σ²，再把 σ² 固定为场景值扫描 ρ，重复点只算一次。
    """
    if layout == CFAR_GRID:
        return [(float(s), float(r)) for s in sigma2_grid for r in rho_grid]
    if layout == CFAR_PANELS:
        points = [(float(s), float(cfg.rho)) for s in sigma2_grid]
        points += [(float(cfg.sigma2), float(r)) for r in rho_grid]
        return list(dict.fromkeys(points))
    raise ValueError(f"未知的 CFAR 布局: {layout}")


def _run_chunk(task) -> np.ndarray:
    """工作进程入口：对 [start, stop) 区间的试验计算全部检测器统计量"""
    cfg, kinds, hypothesis, purpose, seed, start, stop, factor = task
    subspaces = build_subspaces(cfg)
    sigma = build_scale_matrix(cfg.sigma2, cfg.rho, cfg.n_dim)
    bank = DetectorBank(kinds, factor)
    out = np.empty((stop - start, len(kinds)))
    for row, trial_index in enumerate(range(start, stop)):
        stream = RngStream(seed, trial_index, purpose)
        trial = synthesize_trial(cfg, subspaces, sigma, hypothesis, stream)
        values = bank.evaluate_all(DetectorInput.from_trial(trial, cfg, subspaces, sigma))
        out[row] = [values[kind] for kind in bank.kinds]
    return out


class MonteCarloEngine:
    """蒙特卡洛引擎：按试验编号分块并行，按块顺序归约，结果与进程数无关"""

    def __init__(self, workers: int = 1, chunk_size: int = DEFAULT_CHUNK,
                 factor: Factor = Factor.CHOLESKY):
        self.workers = max(int(workers), 1)
        self.chunk_size = max(int(chunk_size), 1)
        self.factor = Factor(factor)

    def simulate(self, cfg: ScenarioConfig, kinds: Sequence[DetectorKind], hypothesis: Hypothesis,
                 purpose: Purpose, n_trials: int, seed: Optional[int] = None) -> Dict[DetectorKind, np.ndarray]:
        """生成 n_trials 次试验并返回每个检测器的统计量数组"""
        kinds = [DetectorKind(k) for k in kinds]
        seed = cfg.seed if seed is None else int(seed)
        if len(cfg.sig_freqs) != cfg.p_sig or len(cfg.intf_freqs) != cfg.q_intf:
            cfg = validate_config(cfg)
        for kind in kinds:
            reason = unavailable_reason(kind, cfg.n_dim, cfg.l_train)
            if reason:
                raise SampleStarvedError(reason, {'detector': kind.value})
        tasks = [
            (cfg, kinds, Hypothesis(hypothesis), int(purpose), seed, start,
             min(start + self.chunk_size, n_trials), self.factor)
            for start in range(0, n_trials, self.chunk_size)
        ]
        if not tasks:
            return {kind: np.empty(0) for kind in kinds}
        if self.workers == 1 or len(tasks) == 1:
            chunks = [_run_chunk(task) for task in tasks]
        else:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                chunks = list(pool.map(_run_chunk, tasks))
        logging.debug(f"完成 {n_trials} 次 {Hypothesis(hypothesis).value} 试验 ({len(tasks)} 块)")
        stacked = np.vstack(chunks)
        return {kind: stacked[:, i] for i, kind in enumerate(kinds)}

    def calibrate_many(self, kinds: Sequence[DetectorKind], cfg: ScenarioConfig, pfa: float,
                       n_trials: int, seed: Optional[int] = None) -> Dict[DetectorKind, ThresholdRecord]:
        """在同一批 H0 试验上标定多个检测器的门限"""
        seed = cfg.seed if seed is None else int(seed)
        if n_trials * pfa < MIN_EXCEEDANCES:
            raise CalibrationError(
                f"试验次数不足: n·pfa = {n_trials * pfa:g} < {MIN_EXCEEDANCES}",
                {'n_trials': n_trials, 'pfa': pfa},
            )
        if n_trials < 100 / pfa:
            logging.warning(f"门限标定试验次数 {n_trials} 少于 100/PFA = {100 / pfa:.0f}")
        logging.info(f"开始门限标定: PFA={pfa:g}, 试验次数={n_trials}")
        statistics = self.simulate(cfg, kinds, Hypothesis.H0, Purpose.CALIBRATE, n_trials, seed)
        records = {}
        for kind, values in statistics.items():
            threshold = threshold_from_statistics(values, pfa)
            records[kind] = ThresholdRecord(kind, pfa, n_trials, threshold, seed)
            logging.info(f"{kind.value} 门限: {threshold:.6g}")
        return records

    def calibrate_threshold(self, kind: DetectorKind, cfg: ScenarioConfig, pfa: float,
                            n_trials: int, seed: Optional[int] = None) -> ThresholdRecord:
        return self.calibrate_many([kind], cfg, pfa, n_trials, seed)[DetectorKind(kind)]

    def _estimate(self, kind, cfg, threshold, n_trials, seed, hypothesis, purpose):
        statistics = self.simulate(cfg, [kind], hypothesis, purpose, n_trials, seed)[DetectorKind(kind)]
        return exceedance_rate(statistics, threshold)

    def estimate_pd(self, kind: DetectorKind, cfg: ScenarioConfig, threshold: float,
                    n_trials: int, seed: Optional[int] = None) -> Tuple[float, float]:
        """H1 试验中统计量超过门限的比例及其置信区间半宽"""
        return self._estimate(kind, cfg, threshold, n_trials, seed, Hypothesis.H1, Purpose.PD)

    def estimate_pfa(self, kind: DetectorKind, cfg: ScenarioConfig, threshold: float,
                     n_trials: int, seed: Optional[int] = None) -> Tuple[float, float]:
        """H0 试验中统计量超过门限的比例及其置信区间半宽"""
        return self._estimate(kind, cfg, threshold, n_trials, seed, Hypothesis.H0, Purpose.PFA)

    def sweep_snr(self, kinds: Sequence[DetectorKind], cfg: ScenarioConfig, snr_grid: Sequence[float],
                  pfa: float, seed: Optional[int] = None, n_threshold_trials: Optional[int] = None,
                  n_pd_trials: int = 2000) -> SweepResult:
        """每个检测器标定一次门限，在整个 SNR 网格上复用"""
        cfg = validate_config(cfg)
        seed = cfg.seed if seed is None else int(seed)
        n_threshold_trials = n_threshold_trials or int(math.ceil(100 / pfa))
        result = SweepResult(pfa_target=pfa, seed=seed)

        available = []
        for kind in (DetectorKind(k) for k in kinds):
            reason = unavailable_reason(kind, cfg.n_dim, cfg.l_train)
            if reason:
                result.skipped[kind] = reason
                logging.info(f"跳过 {kind.value}: {reason}")
            else:
                available.append(kind)
        if not snr_grid or not available:
            return result

        result.thresholds = self.calibrate_many(available, cfg, pfa, n_threshold_trials, seed)
        per_point = {}
        for snr_db in snr_grid:
            point_cfg = cfg.with_updates(snr_db=float(snr_db))
            statistics = self.simulate(point_cfg, available, Hypothesis.H1, Purpose.PD, n_pd_trials, seed)
            per_point[float(snr_db)] = statistics
            summary = ', '.join(
                f"{kind.value}={exceedance_rate(statistics[kind], result.thresholds[kind].threshold)[0]:.3f}"
                for kind in available
            )
            logging.info(f"SNR {float(snr_db):g} dB: {summary}")

        for kind in available:
            threshold = result.thresholds[kind].threshold
            for snr_db in snr_grid:
                pd, ci_half = exceedance_rate(per_point[float(snr_db)][kind], threshold)
                result.rows.append(SweepRow(float(snr_db), kind, pd, ci_half, threshold, n_pd_trials))
        return result

    def cfar_scan_many(self, kinds: Sequence[DetectorKind], cfg: ScenarioConfig, sigma2_grid: Sequence[float],
                       rho_grid: Sequence[float], pfa: float, n_trials: int, seed: Optional[int] = None,
                       n_threshold_trials: Optional[int] = None,
                       layout: str = CFAR_GRID) -> Dict[DetectorKind, CfarTable]:
        """在参考 (σ², ρ) 处标定各检测器门限，再在同一批 H0 试验上逐点重估虚警概率"""
        cfg = validate_config(cfg)
        kinds = [DetectorKind(k) for k in kinds]
        n_threshold_trials = n_threshold_trials or max(n_trials, int(math.ceil(100 / pfa)))
        records = self.calibrate_many(kinds, cfg, pfa, n_threshold_trials, seed)
        tables = {kind: CfarTable(detector=kind, threshold=records[kind]) for kind in kinds}
        for sigma2, rho in cfar_points(cfg, sigma2_grid, rho_grid, layout):
            point_cfg = validate_config(cfg.with_updates(sigma2=sigma2, rho=rho))
            statistics = self.simulate(point_cfg, kinds, Hypothesis.H0, Purpose.CFAR, n_trials, seed)
            estimates = []
            for kind in kinds:
                pfa_hat, ci_half = exceedance_rate(statistics[kind], records[kind].threshold)
                tables[kind].points.append(CfarPoint(sigma2, rho, pfa_hat, ci_half, n_trials))
                estimates.append(f"{kind.value}={pfa_hat:.4g} ± {ci_half:.2g}")
            logging.info(f"CFAR σ²={sigma2:g}, ρ={rho:g}: {', '.join(estimates)}")
        return tables

    def cfar_scan(self, kind: DetectorKind, cfg: ScenarioConfig, sigma2_grid: Sequence[float],
                  rho_grid: Sequence[float], pfa: float, n_trials: int, seed: Optional[int] = None,
                  n_threshold_trials: Optional[int] = None, layout: str = CFAR_GRID) -> CfarTable:
        """单个检测器的 CFAR 扫描"""
        tables = self.cfar_scan_many([kind], cfg, sigma2_grid, rho_grid, pfa, n_trials, seed,
                                     n_threshold_trials, layout)
        return tables[DetectorKind(kind)]


def calibrate_threshold(kind: DetectorKind, cfg: ScenarioConfig, pfa: float, n_trials: int,
                        seed: Optional[int] = None, workers: int = 1) -> ThresholdRecord:
    return MonteCarloEngine(workers).calibrate_threshold(kind, cfg, pfa, n_trials, seed)


def estimate_pd(kind: DetectorKind, cfg: ScenarioConfig, threshold: float, n_trials: int,
                seed: Optional[int] = None, workers: int = 1) -> Tuple[float, float]:
    return MonteCarloEngine(workers).estimate_pd(kind, cfg, threshold, n_trials, seed)


def estimate_pfa(kind: DetectorKind, cfg: ScenarioConfig, threshold: float, n_trials: int,
                 seed: Optional[int] = None, workers: int = 1) -> Tuple[float, float]:
    return MonteCarloEngine(workers).estimate_pfa(kind, cfg, threshold, n_trials, seed)


def sweep_snr(kinds: Sequence[DetectorKind], cfg: ScenarioConfig, snr_grid: Sequence[float], pfa: float,
              seed: Optional[int] = None, n_threshold_trials: Optional[int] = None,
              n_pd_trials: int = 2000, workers: int = 1) -> SweepResult:
    return MonteCarloEngine(workers).sweep_snr(kinds, cfg, snr_grid, pfa, seed, n_threshold_trials, n_pd_trials)


def cfar_scan(kind: DetectorKind, cfg: ScenarioConfig, sigma2_grid: Sequence[float], rho_grid: Sequence[float],
              pfa: float, n_trials: int, seed: Optional[int] = None, workers: int = 1,
              layout: str = CFAR_GRID) -> CfarTable:
    return MonteCarloEngine(workers).cfar_scan(kind, cfg, sigma2_grid, rho_grid, pfa, n_trials, seed,
                                               layout=layout)


def cfar_scan_many(kinds: Sequence[DetectorKind], cfg: ScenarioConfig, sigma2_grid: Sequence[float],
                   rho_grid: Sequence[float], pfa: float, n_trials: int, seed: Optional[int] = None,
                   workers: int = 1, layout: str = CFAR_GRID) -> Dict[DetectorKind, CfarTable]:
    return MonteCarloEngine(workers).cfar_scan_many(kinds, cfg, sigma2_grid, rho_grid, pfa, n_trials, seed,
                                                    layout=layout)
