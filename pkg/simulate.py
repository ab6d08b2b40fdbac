#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""距离扩展目标自适应检测仿真入口文件。"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from spread_detect.app import DetectionSimulator
from spread_detect.errors import DetectionError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_DETECTION_ERROR = 2
EXIT_INTERRUPTED = 130

VERBS = ('sweep', 'calibrate', 'detect', 'cfar-scan', 'selftest')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="距离扩展目标在子空间干扰下的贝叶斯自适应检测仿真")
    parser.add_argument('verb', choices=VERBS, help="sweep | calibrate | detect | cfar-scan | selftest")
    parser.add_argument('--config', help="实验配置文件 (YAML 或 JSON)，默认使用脚本目录下的 config.yaml")
    parser.add_argument('--out', help="输出目录")
    parser.add_argument('--seed', type=int, help="随机种子（环境变量 DETECT_SEED 优先）")
    parser.add_argument('--threads', type=int, help="工作进程数")
    parser.add_argument('--pfa', type=float, help="目标虚警概率")
    parser.add_argument('--trials', type=int, help="本命令主要阶段的试验次数")
    parser.add_argument('--plots', action='store_true', help="输出 PD-SNR 曲线 SVG")
    parser.add_argument('--detector', help="detect 使用的检测器，如 B-Rao-I")
    parser.add_argument('--z', dest='z_path', help="detect 的待检测数据文件 (N×K)")
    parser.add_argument('--zl', dest='zl_path', help="detect 的训练数据文件 (N×L)")
    parser.add_argument('--thresholds', help="detect 使用的门限文件 thresholds.json")
    return parser


def build_overrides(args: argparse.Namespace) -> Dict[str, Dict]:
    """命令行参数转成配置覆盖项；--trials 作用于各命令的主要阶段"""
    experiment: Dict = {}
    if args.out:
        experiment['output_dir'] = args.out
    if args.seed is not None:
        experiment['seed'] = args.seed
    if args.threads is not None:
        experiment['threads'] = args.threads
    if args.pfa is not None:
        experiment['pfa'] = args.pfa
    if args.plots:
        experiment['emit_plots'] = True

    overrides: Dict[str, Dict] = {'experiment': experiment}
    if args.trials is not None:
        if args.verb == 'sweep':
            experiment['n_pd_trials'] = args.trials
        elif args.verb == 'calibrate':
            experiment['n_threshold_trials'] = args.trials
        elif args.verb == 'cfar-scan':
            overrides['cfar'] = {'n_trials': args.trials}
        elif args.verb == 'selftest':
            overrides['selftest'] = {'n_instances': args.trials}
    return overrides


def run(args: argparse.Namespace, config_path: Optional[str]) -> int:
    simulator = DetectionSimulator(config_path, build_overrides(args))

    if args.verb == 'sweep':
        simulator.run_experiment()
    elif args.verb == 'calibrate':
        records = simulator.calibrate()
        for record in records.values():
            print(json.dumps(record.to_dict(), ensure_ascii=False))
    elif args.verb == 'detect':
        if not args.detector or not args.z_path:
            print("错误: detect 需要 --detector 和 --z", file=sys.stderr)
            return EXIT_FAILURE
        decision = simulator.run_single(args.detector, args.z_path, args.zl_path, args.thresholds)
        print(json.dumps(decision.to_dict(), ensure_ascii=False))
    elif args.verb == 'cfar-scan':
        simulator.cfar_scan()
    elif args.verb == 'selftest':
        report = simulator.selftest()
        print(report.format())
        if not report.passed:
            return EXIT_FAILURE
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    args = build_parser().parse_args(argv)
    config_path = args.config
    if config_path is None:
        default_path = Path(__file__).resolve().parent / 'config.yaml'
        config_path = str(default_path) if default_path.exists() else None
    elif not Path(config_path).exists():
        print(f"错误: 配置文件不存在: {config_path}", file=sys.stderr)
        return EXIT_FAILURE

    try:
        return run(args, config_path)
    except KeyboardInterrupt:
        print("\n仿真已停止", file=sys.stderr)
        return EXIT_INTERRUPTED
    except DetectionError as e:
        print(json.dumps(e.to_payload(), ensure_ascii=False), file=sys.stderr)
        return EXIT_DETECTION_ERROR
    except Exception as e:
        logging.error(f"仿真出错: {e}", exc_info=True)
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
