"""Exception hierarchy for the detection simulator."""

from typing import Any, Dict, List, Optional, Tuple


class DetectionError(Exception):
    """所有可预期错误的基类，可序列化为机器可读的 JSON"""

    code = 'detection_error'

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_payload(self) -> Dict[str, Any]:
        return {'error': self.code, 'message': self.message, 'details': self.details}


class ConfigError(DetectionError):
    """配置校验失败，issues 为 (字段, 说明) 列表"""

    code = 'config_invalid'

    def __init__(self, issues: List[Tuple[str, str]]):
        self.issues = list(issues)
        text = '; '.join(f"{field}: {msg}" for field, msg in self.issues)
        super().__init__(f"配置无效: {text}", {'issues': [
            {'field': field, 'message': msg} for field, msg in self.issues
        ]})


class NotPositiveDefiniteError(DetectionError):
    code = 'not_positive_definite'


class SampleStarvedError(NotPositiveDefiniteError):
    """训练样本数 L < N，样本协方差矩阵奇异"""

    code = 'sample_starved'


class RankDeficientError(DetectionError):
    code = 'rank_deficient'


class DimensionError(DetectionError):
    code = 'dimension_mismatch'


class MatrixFormatError(DetectionError):
    """矩阵文本格式错误，附带行号和列号"""

    code = 'matrix_format'

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (行 {line}, 列 {column})", {'line': line, 'column': column})
        self.line = line
        self.column = column


class CalibrationError(DetectionError):
    code = 'calibration_precondition'
