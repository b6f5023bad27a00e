import json

import numpy as np
import pytest

from nmfdescent.bench import RECORD_FIELDS
from nmfdescent.io import (ParseError, emit, images_to_matrix, images_to_tensor, load_matrix,
                           read_matrix_csv, read_pgm, records_to_csv, write_matrix_csv,
                           write_pgm)


def test_csv_round_trip_bit_exact(tmp_path, rng):
    A = rng.standard_normal((5, 3)) * 10.0 ** rng.integers(-300, 300, (5, 3))
    p = tmp_path / "a.csv"
    write_matrix_csv(A, p)
    assert p.read_text().splitlines()[0] == "5,3"
    assert np.array_equal(read_matrix_csv(p), A)
    assert np.array_equal(load_matrix(p), A)


@pytest.mark.parametrize("text,line", [("", 1), ("2;2\n1,2\n3,4\n", 1), ("2,2\n1,2\n", 3),
                                       ("2,2\n1,2\n3\n", 3), ("1,2\n1,x\n", 2)])
def test_csv_parse_errors(tmp_path, text, line):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(ParseError) as info:
        read_matrix_csv(p)
    assert info.value.line == line


def test_pgm_hand_decode(tmp_path):
    p = tmp_path / "x.pgm"
    p.write_bytes(b"P5\n# comment\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    img = read_pgm(p)
    assert np.array_equal(img.ravel(), [0, 1, 128 / 255, 64 / 255])
    col = load_matrix(p)
    assert col.shape == (4, 1)


def test_pgm_round_trip_and_stacking(tmp_path, rng):
    paths = []
    imgs = []
    for i in range(3):
        img = np.rint(rng.random((4, 5)) * 15) / 15
        p = tmp_path / f"{i}.pgm"
        write_pgm(img, p, maxval=15)
        assert np.allclose(read_pgm(p), img)
        paths.append(p)
        imgs.append(img)
    M = images_to_matrix(paths)
    assert M.shape == (20, 3) and np.allclose(M[:, 1], imgs[1].ravel())
    assert images_to_tensor(paths).shape == (4, 5, 3)


@pytest.mark.parametrize("data,offset", [(b"P2\n1 1\n255\n\x00", 0),
                                         (b"P5\n2 2\n255\n\x00", 12),
                                         (b"P5\n1 1\n300\n\x00", 7),
                                         (b"P5\n1 x\n255\n\x00", 5)])
def test_pgm_errors(tmp_path, data, offset):
    p = tmp_path / "bad.pgm"
    p.write_bytes(data)
    with pytest.raises(ParseError) as info:
        read_pgm(p)
    assert info.value.offset == offset


def test_records_csv_and_json(tmp_path):
    assert records_to_csv([], RECORD_FIELDS).strip() == ",".join(RECORD_FIELDS)
    recs = [{"a": 1, "b": 0.1}, {"a": 2, "b": float("inf")}]
    p = tmp_path / "r.json"
    emit(recs, "json", p)
    back = json.loads(p.read_text())
    assert back[0] == {"a": 1, "b": 0.1} and back[1]["b"] is None
    p = tmp_path / "r.csv"
    emit(recs, "csv", p)
    assert p.read_text().splitlines()[1] == "1,0.10000000000000001"
    with pytest.raises(ValueError):
        emit(recs, "xml", p)
