"""Threshold persistence module."""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

from .detectors import DetectorKind
from .montecarlo import ThresholdRecord


class ThresholdStore:
    """门限存储：按检测器名保存标定结果及场景指纹"""

    def __init__(self, state_file: str):
        self.state_file = Path(state_file)
        self.state = self._load_state()

    def _load_state(self) -> Dict:
        """加载门限文件"""
        if self.state_file.exists():
            try:
                with open(self.state_file, 'r', encoding='utf-8') as f:
                    data = json.load(f)
                if isinstance(data, dict) and isinstance(data.get('thresholds'), dict):
                    return data
                logging.warning("门限文件格式不符，重新创建")
            except (json.JSONDecodeError, IOError):
                logging.warning("门限文件损坏，重新创建")
        return {'thresholds': {}}

    def save(self):
        """保存门限文件"""
        try:
            self.state_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self.state_file, 'w', encoding='utf-8') as f:
                json.dump(self.state, f, indent=2, ensure_ascii=False)
        except IOError as e:
            logging.error(f"保存门限文件失败: {e}")

    def record(self, record: ThresholdRecord, fingerprint: str, save: bool = True):
        """记录一次门限标定"""
        entry = record.to_dict()
        entry['fingerprint'] = fingerprint
        self.state['thresholds'][record.detector.value] = entry
        if save:
            self.save()

    def record_all(self, records: Dict[DetectorKind, ThresholdRecord], fingerprint: str):
        for record in records.values():
            self.record(record, fingerprint, save=False)
        self.save()

    def lookup(self, kind: DetectorKind, fingerprint: Optional[str] = None) -> Optional[ThresholdRecord]:
        """按检测器名查找门限；场景指纹不一致时给出警告"""
        kind = DetectorKind(kind)
        entry = self.state['thresholds'].get(kind.value)
        if entry is None:
            return None
        if fingerprint is not None and entry.get('fingerprint') != fingerprint:
            logging.warning(f"{kind.value} 门限的场景指纹与当前场景不一致，门限可能不适用")
        return ThresholdRecord.from_dict(entry)

    def detectors(self) -> List[str]:
        return sorted(self.state['thresholds'])
