"""Artifact writers: results CSV, manifest, SVG curves and a plain-text summary."""

import csv
import json
import logging
import math
import platform
import subprocess
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .montecarlo import CfarTable, SweepResult

CSV_COLUMNS = ['detector', 'snr_db', 'pd', 'ci_half', 'threshold', 'n_trials', 'pfa_target', 'seed']
PALETTE = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b']


def git_describe(cwd: Optional[Path] = None) -> str:
    """返回 git describe 字符串；不在仓库中时返回 'unknown'"""
    try:
        result = subprocess.run(
            ['git', 'describe', '--always', '--dirty', '--tags'],
            cwd=str(cwd or Path(__file__).resolve().parent),
            capture_output=True, text=True, timeout=10,
        )
    except (OSError, subprocess.SubprocessError) as e:
        logging.warning(f"无法获取 git 版本信息: {e}")
        return 'unknown'
    if result.returncode != 0:
        logging.warning("当前目录不是 git 仓库，版本信息记为 unknown")
        return 'unknown'
    return result.stdout.strip()


def provenance() -> Dict:
    return {
        'git_describe': git_describe(),
        'python': platform.python_version(),
        'numpy': np.__version__,
    }


def _format_float(value: float) -> str:
    return repr(float(value))


def write_results_csv(path: Path, result: SweepResult) -> Path:
    """按固定列顺序写出 SNR 扫描结果，浮点采用 repr 保证可逐字节复现"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(CSV_COLUMNS)
        for row in result.rows:
            writer.writerow([
                row.detector.value, _format_float(row.snr_db), _format_float(row.pd),
                _format_float(row.ci_half), _format_float(row.threshold), row.n_trials,
                _format_float(result.pfa_target), result.seed,
            ])
    logging.info(f"结果已写入 {path}")
    return path


def read_results_csv(path: Path) -> List[Dict[str, str]]:
    with open(path, 'r', encoding='utf-8', newline='') as f:
        return list(csv.DictReader(f))


def write_cfar_csv(path: Path, tables: Sequence[CfarTable]) -> Path:
    """每个检测器的扫描点依次写出，门限随检测器变化"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['detector', 'sigma2', 'rho', 'pfa_hat', 'ci_half', 'threshold', 'n_trials', 'pfa_target'])
        for table in tables:
            for point in table.points:
                writer.writerow([
                    table.detector.value, _format_float(point.sigma2), _format_float(point.rho),
                    _format_float(point.pfa_hat), _format_float(point.ci_half),
                    _format_float(table.threshold.threshold), point.n_trials,
                    _format_float(table.threshold.pfa_target),
                ])
    logging.info(f"CFAR 表已写入 {path}")
    return path


def write_json(path: Path, payload: Dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2, ensure_ascii=False, sort_keys=False)
        f.write('\n')
    return path


def write_manifest(path: Path, resolved_config: Dict, extra: Optional[Dict] = None) -> Path:
    """写出完整解析后的配置和来源信息，可直接作为配置文件重新运行"""
    payload = dict(resolved_config)
    payload['provenance'] = {**provenance(), **(extra or {})}
    write_json(path, payload)
    logging.info(f"运行清单已写入 {path}")
    return path


class SvgPlot:
    """折线图：x 轴 SNR (dB)，y 轴 PD ∈ [0, 1]"""

    def __init__(self, width: int = 640, height: int = 420, margin: int = 56):
        self.width = width
        self.height = height
        self.margin = margin

    def _x(self, value: float, lo: float, hi: float) -> float:
        span = (hi - lo) or 1.0
        return self.margin + (value - lo) / span * (self.width - 2 * self.margin)

    def _y(self, value: float) -> float:
        return self.height - self.margin - value * (self.height - 2 * self.margin)

    def render(self, curves: Dict[str, Sequence[tuple]], title: str = '') -> str:
        xs = [x for points in curves.values() for x, _ in points if math.isfinite(x)]
        lo, hi = (min(xs), max(xs)) if xs else (0.0, 1.0)
        m, w, h = self.margin, self.width, self.height
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
            '<rect width="100%" height="100%" fill="white"/>',
            f'<line x1="{m}" y1="{h - m}" x2="{w - m}" y2="{h - m}" stroke="black"/>',
            f'<line x1="{m}" y1="{m}" x2="{m}" y2="{h - m}" stroke="black"/>',
        ]
        for tick in np.linspace(0.0, 1.0, 6):
            y = self._y(tick)
            parts.append(f'<line x1="{m - 4}" y1="{y:.1f}" x2="{m}" y2="{y:.1f}" stroke="black"/>')
            parts.append(f'<text x="{m - 8}" y="{y + 4:.1f}" font-size="11" text-anchor="end">{tick:.1f}</text>')
        for tick in np.linspace(lo, hi, 6):
            x = self._x(tick, lo, hi)
            parts.append(f'<line x1="{x:.1f}" y1="{h - m}" x2="{x:.1f}" y2="{h - m + 4}" stroke="black"/>')
            parts.append(f'<text x="{x:.1f}" y="{h - m + 18}" font-size="11" text-anchor="middle">{tick:g}</text>')
        parts.append(f'<text x="{w / 2:.0f}" y="{h - 12}" font-size="12" text-anchor="middle">SNR (dB)</text>')
        parts.append(f'<text x="16" y="{h / 2:.0f}" font-size="12" transform="rotate(-90 16 {h / 2:.0f})" '
                     f'text-anchor="middle">PD</text>')
        if title:
            parts.append(f'<text x="{w / 2:.0f}" y="24" font-size="14" text-anchor="middle">{title}</text>')

        for index, (name, points) in enumerate(curves.items()):
            color = PALETTE[index % len(PALETTE)]
            coords = ' '.join(f"{self._x(x, lo, hi):.2f},{self._y(y):.2f}"
                              for x, y in points if math.isfinite(x))
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
            legend_y = m + 16 * index
            parts.append(f'<line x1="{w - m - 110}" y1="{legend_y}" x2="{w - m - 90}" y2="{legend_y}" '
                         f'stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{w - m - 84}" y="{legend_y + 4}" font-size="11">{name}</text>')
        parts.append('</svg>')
        return '\n'.join(parts) + '\n'


def write_pd_svg(path: Path, result: SweepResult, title: str = '') -> Path:
    curves = {}
    for kind in dict.fromkeys(row.detector for row in result.rows):
        curves[kind.value] = [(row.snr_db, row.pd) for row in result.curve(kind)]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(SvgPlot().render(curves, title), encoding='utf-8')
    logging.info(f"PD 曲线已写入 {path}")
    return path


def format_summary(result: SweepResult, scenario: Dict, timestamp: Optional[str] = None) -> str:
    """检测器 × SNR 的 PD 文本表"""
    timestamp = timestamp or datetime.now().strftime('%Y-%m-%d %H:%M:%S')
    lines = [
        f"📊 检测性能报告 [N={scenario.get('n_dim')}, K={scenario.get('k_cells')}, "
        f"p={scenario.get('p_sig')}, q={scenario.get('q_intf')}, L={scenario.get('l_train')}, "
        f"η={scenario.get('eta')}]",
        "━━━━━━━━━━━━━━━━━━━━━━",
        f"🎯 PFA={result.pfa_target:g}, seed={result.seed}",
    ]
    if result.thresholds:
        lines.append("")
        lines.append("📏 门限")
        for kind, record in result.thresholds.items():
            lines.append(f"  • {kind.value}: {record.threshold:.6g} ({record.n_trials} 次试验)")

    snrs = list(dict.fromkeys(row.snr_db for row in result.rows))
    if snrs:
        lines.append("")
        lines.append("📈 检测概率")
        header = f"  {'SNR(dB)':>8}" + ''.join(f"{kind.value:>13}" for kind in result.thresholds)
        lines.append(header)
        for snr in snrs:
            cells = ''.join(f"{result.pd_at(kind, snr).pd:>13.3f}" for kind in result.thresholds)
            lines.append(f"  {snr:>8g}{cells}")

    if result.skipped:
        lines.append("")
        lines.append("⛔ 跳过的检测器")
        for kind, reason in result.skipped.items():
            lines.append(f"  • {kind.value}: {reason}")

    lines.append("")
    lines.append(f"⏰ 报告时间: {timestamp}")
    return '\n'.join(lines) + '\n'


def format_cfar_summary(tables: Sequence[CfarTable], skipped: Optional[Dict] = None) -> str:
    lines = ["📊 CFAR 扫描", "━━━━━━━━━━━━━━━━━━━━━━"]
    if tables:
        lines.append(f"🎯 目标 PFA={tables[0].threshold.pfa_target:g}")
    for table in tables:
        lo, hi = table.spread()
        lines.append("")
        lines.append(f"🔎 {table.detector.value}，门限 {table.threshold.threshold:.6g}")
        for point in table.points:
            lines.append(f"  • σ²={point.sigma2:g}, ρ={point.rho:g}: PFA={point.pfa_hat:.4g} ± {point.ci_half:.2g}")
        lines.append(f"📐 PFA 范围: [{lo:.4g}, {hi:.4g}]")

    if skipped:
        lines.append("")
        lines.append("⛔ 跳过的检测器")
        for kind, reason in skipped.items():
            lines.append(f"  • {kind.value}: {reason}")
    return '\n'.join(lines) + '\n'
