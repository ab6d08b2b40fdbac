import numpy as np
import pytest

from spread_detect.errors import MatrixFormatError
from spread_detect.matio import (format_complex_matrix, ingest_complex_matrix, parse_complex_matrix,
                                 write_complex_matrix)


def test_parse_row_major():
    matrix = parse_complex_matrix("2 2\n1,0 0,1\n-1,2 3.5,-0.25\n")
    np.testing.assert_array_equal(matrix, [[1, 1j], [-1 + 2j, 3.5 - 0.25j]])


def test_entries_may_span_lines():
    matrix = parse_complex_matrix("\n1 3\n1,1\n2,2   3,3\n")
    np.testing.assert_array_equal(matrix, [[1 + 1j, 2 + 2j, 3 + 3j]])


def test_unicode_minus():
    assert parse_complex_matrix("1 1\n−1.5,−2")[0, 0] == -1.5 - 2j


def test_zero_columns():
    assert parse_complex_matrix("3 0\n").shape == (3, 0)


@pytest.mark.parametrize('text, line, column', [
    ("", 1, 1),
    ("2 x\n", 1, 1),
    ("1 2\n1,0 abc,1\n", 2, 5),
    ("1 2\n1,0 2,nan\n", 2, 7),
    ("1 1\n1,0 2,0\n", 2, 5),
    ("1 1\n1;0\n", 2, 1),
])
def test_errors_carry_position(text, line, column):
    with pytest.raises(MatrixFormatError) as info:
        parse_complex_matrix(text)
    assert (info.value.line, info.value.column) == (line, column)


def test_count_mismatch():
    with pytest.raises(MatrixFormatError, match='元素数量不符'):
        parse_complex_matrix("2 2\n1,0 2,0 3,0\n")


def test_file_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(3)
    matrix = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    path = tmp_path / 'nested' / 'z.txt'
    write_complex_matrix(path, matrix)
    assert ingest_complex_matrix(path).tobytes() == matrix.tobytes()
    assert format_complex_matrix(matrix).startswith('4 3\n')


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        ingest_complex_matrix(tmp_path / 'absent.txt')
