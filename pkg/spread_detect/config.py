"""Configuration manager for the detection simulator."""

import copy
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import psutil
import yaml

from .detectors import DEFAULT_DETECTORS, DetectorKind
from .errors import ConfigError, DetectionError
from .model import ScenarioConfig, validate_config
from .montecarlo import CFAR_GRID, CFAR_LAYOUTS

SCHEMA_VERSION = 1
SEED_ENV = 'DETECT_SEED'
FREE_SECTIONS = ('scenario', 'provenance')
CFAR_DETECTORS = (DetectorKind.B_RAO_I, DetectorKind.B_GLRT_I, DetectorKind.B_2S_GLRT_I)


def default_threads() -> int:
    """默认工作进程数取物理核数"""
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


def parse_db(value: Any, field_name: str) -> float:
    """dB 值可写作数字、YAML .inf 或字符串 'inf'/'-inf'"""
    if isinstance(value, bool):
        raise ConfigError([(field_name, f"必须为实数，实际 {value!r}")])
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError([(field_name, f"必须为实数，实际 {value!r}")])


@dataclass(frozen=True)
class ExperimentSpec:
    """一次 SNR 扫描实验的全部参数"""

    scenario: ScenarioConfig
    detectors: Tuple[DetectorKind, ...]
    snr_grid_db: Tuple[float, ...]
    pfa: float = 0.01
    n_threshold_trials: int = 10000
    n_pd_trials: int = 2000
    output_dir: str = 'results'
    emit_plots: bool = False
    threads: int = 1

    @property
    def seed(self) -> int:
        return self.scenario.seed


@dataclass(frozen=True)
class CfarSpec:
    detectors: Tuple[DetectorKind, ...]
    layout: str
    sigma2_grid: Tuple[float, ...]
    rho_grid: Tuple[float, ...]
    n_trials: int
    n_threshold_trials: int


class ConfigManager:
    """配置管理器：加载 YAML/JSON 配置，合并默认值并严格校验"""

    DEFAULT_CONFIG = {
        'schema_version': SCHEMA_VERSION,
        'general': {
            'log_level': 'INFO',
            'log_file': ''
        },
        'scenario': ScenarioConfig().to_dict(),
        'experiment': {
            'detectors': [kind.value for kind in DEFAULT_DETECTORS],
            'snr_grid_db': [0, 5, 10, 15, 20, 25],
            'pfa': 0.01,
            'n_threshold_trials': 10000,
            'n_pd_trials': 2000,
            'output_dir': 'results',
            'emit_plots': False,
            'threads': None,
            'seed': None
        },
        'cfar': {
            'detectors': [kind.value for kind in CFAR_DETECTORS],
            'layout': CFAR_GRID,
            'sigma2_grid': [0.1, 1.0, 10.0],
            'rho_grid': [0.1, 0.5, 0.9],
            'n_trials': 10000,
            'n_threshold_trials': 10000
        },
        'selftest': {
            'n_instances': 100
        },
        'provenance': {}
    }

    def __init__(self, config_path: Optional[str] = None, overrides: Optional[Dict[str, Dict[str, Any]]] = None):
        self.config_path = Path(config_path) if config_path else None
        self.overrides = overrides or {}
        self.config: Dict = {}
        self.load()

    def load(self) -> Dict:
        """加载配置文件"""
        user_config: Dict = {}
        if self.config_path is not None:
            if not self.config_path.exists():
                raise FileNotFoundError(f"配置文件不存在: {self.config_path}")
            with open(self.config_path, 'r', encoding='utf-8') as f:
                try:
                    user_config = yaml.safe_load(f) or {}
                except yaml.YAMLError as e:
                    raise ConfigError([('<file>', f"无法解析 {self.config_path}: {e}")])
            if not isinstance(user_config, dict):
                raise ConfigError([('<file>', "顶层必须是映射")])

        issues = self._unknown_keys(self.DEFAULT_CONFIG, user_config, '')
        if issues:
            raise ConfigError(issues)

        merged = self._merge_config(self.DEFAULT_CONFIG, user_config)
        merged = self._merge_config(merged, self.overrides)
        self.config = merged
        self._apply_seed_env()
        self._validate()
        return self.config

    def _merge_config(self, default: Dict, user: Dict) -> Dict:
        """递归合并配置"""
        result = copy.deepcopy(default)
        for key, value in user.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._merge_config(result[key], value)
            else:
                result[key] = copy.deepcopy(value)
        return result

    def _unknown_keys(self, default: Dict, user: Dict, prefix: str) -> List[Tuple[str, str]]:
        """未知字段一律报错，scenario 字段交给 ScenarioConfig 校验"""
        issues = []
        for key, value in user.items():
            path = f"{prefix}{key}"
            if key not in default:
                issues.append((path, "未知字段"))
            elif key in FREE_SECTIONS and not prefix:
                continue
            elif isinstance(default[key], dict):
                if not isinstance(value, dict):
                    issues.append((path, "必须是映射"))
                else:
                    issues.extend(self._unknown_keys(default[key], value, f"{path}."))
        return issues

    def _apply_seed_env(self):
        raw = os.environ.get(SEED_ENV)
        if raw is None or raw.strip() == '':
            return
        try:
            seed = int(raw.strip(), 0)
        except ValueError:
            raise ConfigError([(SEED_ENV, f"必须为整数，实际 {raw!r}")])
        logging.info(f"环境变量 {SEED_ENV} 覆盖随机种子: {seed}")
        self.config['experiment']['seed'] = seed

    def _validate(self):
        """验证配置"""
        issues: List[Tuple[str, str]] = []
        if self.config.get('schema_version') != SCHEMA_VERSION:
            issues.append(('schema_version', f"只支持版本 {SCHEMA_VERSION}，实际 {self.config.get('schema_version')!r}"))

        experiment = self.config['experiment']
        detectors = experiment.get('detectors') or []
        if not detectors:
            issues.append(('experiment.detectors', "至少需要一个检测器"))
        for name in detectors:
            try:
                DetectorKind.parse(str(name))
            except DetectionError as e:
                issues.append(('experiment.detectors', e.message))
        pfa = experiment.get('pfa')
        if not isinstance(pfa, (int, float)) or isinstance(pfa, bool) or not 0 < pfa < 1:
            issues.append(('experiment.pfa', f"必须位于 (0, 1)，实际 {pfa!r}"))
        for key in ('n_threshold_trials', 'n_pd_trials'):
            issues.extend(self._positive_int(f'experiment.{key}', experiment.get(key)))
        for key in ('n_trials', 'n_threshold_trials'):
            issues.extend(self._positive_int(f'cfar.{key}', self.config['cfar'].get(key)))
        issues.extend(self._positive_int('selftest.n_instances', self.config['selftest'].get('n_instances')))
        if experiment.get('threads') is not None:
            issues.extend(self._positive_int('experiment.threads', experiment.get('threads')))
        seed = experiment.get('seed')
        if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64):
            issues.append(('experiment.seed', f"必须为 64 位无符号整数，实际 {seed!r}"))
        grid = experiment.get('snr_grid_db')
        if not isinstance(grid, list):
            issues.append(('experiment.snr_grid_db', "必须为列表"))
        else:
            for value in grid:
                try:
                    parse_db(value, 'experiment.snr_grid_db')
                except ConfigError as e:
                    issues.extend(e.issues)
        cfar_detectors = self.config['cfar'].get('detectors')
        if not isinstance(cfar_detectors, list) or not cfar_detectors:
            issues.append(('cfar.detectors', "至少需要一个检测器"))
        else:
            for name in cfar_detectors:
                try:
                    DetectorKind.parse(str(name))
                except DetectionError as e:
                    issues.append(('cfar.detectors', e.message))
        layout = self.config['cfar'].get('layout')
        if layout not in CFAR_LAYOUTS:
            issues.append(('cfar.layout', f"必须为 {' 或 '.join(CFAR_LAYOUTS)} 之一，实际 {layout!r}"))
        if issues:
            raise ConfigError(issues)
        self.scenario()

    @staticmethod
    def _positive_int(name: str, value: Any) -> List[Tuple[str, str]]:
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            return [(name, f"必须为正整数，实际 {value!r}")]
        return []

    def get(self, *keys: str, default: Any = None) -> Any:
        """获取配置项"""
        value: Any = self.config
        for key in keys:
            if isinstance(value, dict):
                value = value.get(key, default)
            else:
                return default
        return value

    @property
    def seed(self) -> int:
        seed = self.get('experiment', 'seed')
        return int(seed) if seed is not None else int(self.get('scenario', 'seed'))

    @property
    def threads(self) -> int:
        threads = self.get('experiment', 'threads')
        return int(threads) if threads else default_threads()

    def scenario(self) -> ScenarioConfig:
        """校验后的场景，随机种子按优先级取值"""
        data = dict(self.get('scenario'))
        data['seed'] = self.seed
        return validate_config(ScenarioConfig.from_dict(data))

    def experiment_spec(self) -> ExperimentSpec:
        experiment = self.config['experiment']
        return ExperimentSpec(
            scenario=self.scenario(),
            detectors=tuple(DetectorKind.parse(str(name)) for name in experiment['detectors']),
            snr_grid_db=tuple(parse_db(v, 'experiment.snr_grid_db') for v in experiment['snr_grid_db']),
            pfa=float(experiment['pfa']),
            n_threshold_trials=int(experiment['n_threshold_trials']),
            n_pd_trials=int(experiment['n_pd_trials']),
            output_dir=str(experiment['output_dir']),
            emit_plots=bool(experiment['emit_plots']),
            threads=self.threads,
        )

    def cfar_spec(self) -> CfarSpec:
        cfar = self.config['cfar']
        return CfarSpec(
            detectors=tuple(DetectorKind.parse(str(name)) for name in cfar['detectors']),
            layout=str(cfar['layout']),
            sigma2_grid=tuple(float(v) for v in cfar['sigma2_grid']),
            rho_grid=tuple(float(v) for v in cfar['rho_grid']),
            n_trials=int(cfar['n_trials']),
            n_threshold_trials=int(cfar['n_threshold_trials']),
        )

    def resolved(self) -> Dict:
        """解析后的完整配置（频率补全、种子确定），写入运行清单后可直接重跑"""
        resolved = copy.deepcopy(self.config)
        resolved.pop('provenance', None)
        resolved['scenario'] = self.scenario().to_dict()
        resolved['experiment']['seed'] = self.seed
        resolved['experiment']['threads'] = self.threads
        resolved['experiment']['snr_grid_db'] = [
            _db_for_json(parse_db(v, 'experiment.snr_grid_db')) for v in resolved['experiment']['snr_grid_db']
        ]
        return resolved


def _db_for_json(value: float) -> Any:
    if math.isinf(value):
        return '-inf' if value < 0 else 'inf'
    return value
