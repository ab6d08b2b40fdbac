"""Application orchestrator for the detection simulator."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence

import yaml

from .config import ConfigManager, ExperimentSpec
from .detectors import DetectorInput, DetectorKind, evaluate, unavailable_reason
from .errors import ConfigError, DimensionError, SampleStarvedError
from .matio import ingest_complex_matrix
from .model import build_scale_matrix, build_subspaces, config_fingerprint
from .montecarlo import CfarTable, MonteCarloEngine, SweepResult, ThresholdRecord
from .report import (format_cfar_summary, format_summary, write_cfar_csv, write_json, write_manifest,
                     write_pd_svg, write_results_csv)
from .selftest import SelftestReport, run_selftest
from .state import ThresholdStore
from .synth import Hypothesis

RESULTS_FILE = 'results.csv'
THRESHOLDS_FILE = 'thresholds.json'
MANIFEST_FILE = 'manifest.json'
SUMMARY_FILE = 'summary.txt'
PLOT_FILE = 'pd_vs_snr.svg'
CFAR_FILE = 'cfar.csv'


@dataclass(frozen=True)
class SingleDecision:
    """单次检测结果；未提供门限时 decision 为 None"""

    detector: DetectorKind
    statistic: float
    threshold: Optional[float] = None
    decision: Optional[Hypothesis] = None

    def to_dict(self) -> Dict:
        return {
            'detector': self.detector.value,
            'statistic': self.statistic,
            'threshold': self.threshold,
            'decision': self.decision.value if self.decision else None,
        }


class DetectionSimulator:
    """检测仿真主程序"""

    def __init__(self, config_path: Optional[str] = None, overrides: Optional[Dict] = None):
        self.config_path = config_path
        self.overrides = overrides or {}
        self._setup_logging()
        self._init_components()

    def _setup_logging(self):
        """设置日志"""
        try:
            config = {}
            if self.config_path:
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    config = yaml.safe_load(f) or {}
            general = {**config.get('general', {}), **self.overrides.get('general', {})}
            experiment = {**config.get('experiment', {}), **self.overrides.get('experiment', {})}
            log_level = general.get('log_level', 'INFO')
            log_file = general.get('log_file') or ''
            output_dir = experiment.get('output_dir') or ConfigManager.DEFAULT_CONFIG['experiment']['output_dir']
        except Exception:
            log_level, log_file = 'INFO', ''
            output_dir = ConfigManager.DEFAULT_CONFIG['experiment']['output_dir']

        if log_file:
            log_path = Path(log_file)
        else:
            log_path = Path(output_dir) / 'logs' / 'simulate.log'
        log_path.parent.mkdir(parents=True, exist_ok=True)

        logging.basicConfig(
            level=getattr(logging, str(log_level).upper(), logging.INFO),
            format='%(asctime)s - %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler(log_path, encoding='utf-8'),
                logging.StreamHandler()
            ]
        )

    def _init_components(self):
        """初始化所有组件"""
        self.config = ConfigManager(self.config_path, self.overrides)
        self.spec: ExperimentSpec = self.config.experiment_spec()
        self.output_dir = Path(self.spec.output_dir)
        self.engine = MonteCarloEngine(self.spec.threads)
        logging.info(f"检测仿真初始化完成: 输出目录 {self.output_dir}, 工作进程 {self.spec.threads}")

    @property
    def thresholds_path(self) -> Path:
        return self.output_dir / THRESHOLDS_FILE

    def _store_thresholds(self, records: Dict[DetectorKind, ThresholdRecord]) -> ThresholdStore:
        store = ThresholdStore(str(self.thresholds_path))
        store.record_all(records, config_fingerprint(self.spec.scenario))
        logging.info(f"门限已写入 {self.thresholds_path}")
        return store

    def run_experiment(self) -> SweepResult:
        """SNR 扫描：写出 results.csv、thresholds.json、manifest.json、summary.txt 及可选 SVG"""
        spec = self.spec
        if not spec.snr_grid_db:
            raise ConfigError([('experiment.snr_grid_db', "sweep 需要非空 SNR 网格")])
        logging.info(f"开始 SNR 扫描: {len(spec.detectors)} 个检测器, {len(spec.snr_grid_db)} 个 SNR 点")

        result = self.engine.sweep_snr(
            spec.detectors, spec.scenario, spec.snr_grid_db, spec.pfa,
            seed=spec.seed, n_threshold_trials=spec.n_threshold_trials, n_pd_trials=spec.n_pd_trials,
        )

        self.output_dir.mkdir(parents=True, exist_ok=True)
        write_results_csv(self.output_dir / RESULTS_FILE, result)
        if result.thresholds:
            self._store_thresholds(result.thresholds)
        write_manifest(self.output_dir / MANIFEST_FILE, self.config.resolved(), {
            'skipped': {kind.value: reason for kind, reason in result.skipped.items()},
        })
        summary = format_summary(result, spec.scenario.to_dict())
        (self.output_dir / SUMMARY_FILE).write_text(summary, encoding='utf-8')
        logging.info("运行摘要:\n" + summary)
        if spec.emit_plots:
            write_pd_svg(self.output_dir / PLOT_FILE, result, title=f"PFA = {spec.pfa:g}")
        return result

    def _split_available(self, kinds: Sequence[DetectorKind]):
        """按当前场景把检测器分为可用与跳过两组"""
        scenario = self.spec.scenario
        available, skipped = [], {}
        for kind in (DetectorKind(k) for k in kinds):
            reason = unavailable_reason(kind, scenario.n_dim, scenario.l_train)
            if reason:
                logging.info(f"跳过 {kind.value}: {reason}")
                skipped[kind] = reason
            else:
                available.append(kind)
        if not available:
            raise SampleStarvedError("所选检测器在当前场景下均不可用",
                                     {'detectors': [DetectorKind(k).value for k in kinds]})
        return available, skipped

    def calibrate(self, kinds: Optional[Sequence[DetectorKind]] = None) -> Dict[DetectorKind, ThresholdRecord]:
        """只标定门限并写入 thresholds.json"""
        spec = self.spec
        available, _ = self._split_available(kinds or spec.detectors)
        records = self.engine.calibrate_many(available, spec.scenario, spec.pfa, spec.n_threshold_trials, spec.seed)
        self._store_thresholds(records)
        write_manifest(self.output_dir / MANIFEST_FILE, self.config.resolved())
        return records

    def run_single(self, kind: DetectorKind, z_path: str, zl_path: Optional[str] = None,
                   thresholds_path: Optional[str] = None) -> SingleDecision:
        """对用户提供的 Z 和 Z_L 文件计算统计量，有门限时给出判决"""
        kind = DetectorKind.parse(str(kind))
        cfg = self.spec.scenario
        z = ingest_complex_matrix(z_path)
        expected_z = (cfg.n_dim, cfg.k_cells)
        if z.shape != expected_z:
            raise DimensionError(f"Z 形状 {z.shape} 与场景 (N, K) = {expected_z} 不符",
                                 {'actual': list(z.shape), 'expected': list(expected_z)})
        if zl_path:
            z_l = ingest_complex_matrix(zl_path)
        else:
            z_l = z[:, :0]
        expected_zl = (cfg.n_dim, cfg.l_train)
        if z_l.shape != expected_zl:
            raise DimensionError(f"Z_L 形状 {z_l.shape} 与场景 (N, L) = {expected_zl} 不符",
                                 {'actual': list(z_l.shape), 'expected': list(expected_zl)})

        subspaces = build_subspaces(cfg)
        sigma = build_scale_matrix(cfg.sigma2, cfg.rho, cfg.n_dim)
        data = DetectorInput(z=z, s=z_l @ z_l.conj().T, sigma=sigma.sigma, eta=cfg.eta,
                             phi=subspaces.phi, upsilon=subspaces.upsilon, l_train=cfg.l_train)
        statistic = evaluate(kind, data)
        logging.info(f"{kind.value} 统计量: {statistic:.6g}")

        if not thresholds_path:
            return SingleDecision(kind, statistic)
        record = ThresholdStore(thresholds_path).lookup(kind, config_fingerprint(cfg))
        if record is None:
            logging.warning(f"{thresholds_path} 中没有 {kind.value} 的门限，不作判决")
            return SingleDecision(kind, statistic)
        decision = Hypothesis.H1 if statistic > record.threshold else Hypothesis.H0
        logging.info(f"门限 {record.threshold:.6g}，判决 {decision.value}")
        return SingleDecision(kind, statistic, record.threshold, decision)

    def cfar_scan(self) -> Dict[DetectorKind, CfarTable]:
        """固定门限在 (σ², ρ) 扫描点上的虚警概率，所选检测器共享同一批 H0 试验"""
        spec, cfar = self.spec, self.config.cfar_spec()
        available, skipped = self._split_available(cfar.detectors)
        tables = self.engine.cfar_scan_many(
            available, spec.scenario, cfar.sigma2_grid, cfar.rho_grid, spec.pfa, cfar.n_trials,
            seed=spec.seed, n_threshold_trials=cfar.n_threshold_trials, layout=cfar.layout,
        )
        self.output_dir.mkdir(parents=True, exist_ok=True)
        write_cfar_csv(self.output_dir / CFAR_FILE, list(tables.values()))
        write_manifest(self.output_dir / MANIFEST_FILE, self.config.resolved(),
                       {'skipped': {kind.value: reason for kind, reason in skipped.items()}})
        summary = format_cfar_summary(list(tables.values()), skipped)
        (self.output_dir / SUMMARY_FILE).write_text(summary, encoding='utf-8')
        logging.info("CFAR 摘要:\n" + summary)
        return tables

    def selftest(self) -> SelftestReport:
        """在随机实例上核对代数恒等式"""
        n_instances = int(self.config.get('selftest', 'n_instances'))
        report = run_selftest(self.spec.seed, n_instances)
        text = report.format()
        if report.passed:
            logging.info("自检通过:\n" + text)
        else:
            logging.error("自检未通过:\n" + text)
        write_json(self.output_dir / 'selftest.json', {
            'seed': report.seed,
            'n_instances': report.n_instances,
            'passed': report.passed,
            'checks': [
                {'name': c.name, 'tolerance': c.tolerance, 'worst': c.worst, 'failures': c.failures}
                for c in report.checks
            ],
        })
        return report

