"""Plain-text complex matrix files.

Format: a header line ``rows cols``, then ``rows*cols`` entries in row-major
order, each ``re,im`` with no spaces inside, separated by any whitespace.
"""

import math
import re
from pathlib import Path
from typing import Iterator, Tuple

import numpy as np

from .errors import MatrixFormatError

UNICODE_MINUS = '−'
_TOKEN = re.compile(r'\S+')


def _tokens(lines) -> Iterator[Tuple[str, int, int]]:
    for line_no, line in enumerate(lines, start=1):
        for match in _TOKEN.finditer(line):
            yield match.group(0), line_no, match.start() + 1


def _parse_float(text: str, line: int, column: int) -> float:
    try:
        value = float(text.replace(UNICODE_MINUS, '-'))
    except ValueError:
        raise MatrixFormatError(f"无法解析数值 '{text}'", line, column)
    if not math.isfinite(value):
        raise MatrixFormatError(f"数值非有限: '{text}'", line, column)
    return value


def parse_complex_matrix(text: str) -> np.ndarray:
    """解析矩阵文本，错误信息带行号和列号"""
    lines = text.splitlines()
    header_index = next((i for i, line in enumerate(lines) if line.strip()), None)
    if header_index is None:
        raise MatrixFormatError("文件为空，缺少 'rows cols' 头", 1, 1)

    header = lines[header_index].split()
    if len(header) != 2 or not all(h.isdigit() for h in header):
        raise MatrixFormatError(f"头部格式错误: '{lines[header_index].strip()}'，应为 'rows cols'",
                                header_index + 1, 1)
    rows, cols = int(header[0]), int(header[1])
    expected = rows * cols

    values = np.empty(expected, dtype=complex)
    count = 0
    last = (header_index + 1, 1)
    for token, line, column in _tokens(lines[header_index + 1:]):
        line += header_index + 1
        last = (line, column)
        if count >= expected:
            raise MatrixFormatError(f"元素数量超过 {rows}×{cols} = {expected}", line, column)
        parts = token.split(',')
        if len(parts) != 2:
            raise MatrixFormatError(f"元素格式错误 '{token}'，应为 're,im'", line, column)
        re_part = _parse_float(parts[0], line, column)
        im_part = _parse_float(parts[1], line, column + len(parts[0]) + 1)
        values[count] = complex(re_part, im_part)
        count += 1

    if count != expected:
        raise MatrixFormatError(f"元素数量不符: 读到 {count}，头部声明 {rows}×{cols} = {expected}", *last)
    return values.reshape(rows, cols)


def ingest_complex_matrix(path) -> np.ndarray:
    """读取复矩阵文件"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"矩阵文件不存在: {path}")
    return parse_complex_matrix(path.read_text(encoding='utf-8'))


def format_complex_matrix(matrix: np.ndarray) -> str:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    rows, cols = matrix.shape
    lines = [f"{rows} {cols}"]
    for row in matrix:
        lines.append(' '.join(f"{float(v.real)!r},{float(v.imag)!r}" for v in row))
    return '\n'.join(lines) + '\n'


def write_complex_matrix(path, matrix: np.ndarray):
    """写出复矩阵文件；repr 浮点格式保证读回逐位一致"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_complex_matrix(matrix), encoding='utf-8')
