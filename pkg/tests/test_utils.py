import os

import pytest

from personasim.errors import DataError
from personasim.utils import (
    atomic_write_text,
    create_nested,
    csv_text,
    format_float,
    iter_jsonl,
    merge_nested,
    parse_override,
    read_jsonl,
    sha256_file,
    write_jsonl,
)


def test_atomic_write_leaves_no_temporary(tmp_path):
    path = tmp_path / "sub" / "out.txt"
    atomic_write_text(str(path), "first")
    atomic_write_text(str(path), "second")
    assert path.read_text() == "second"
    assert os.listdir(tmp_path / "sub") == ["out.txt"]


def test_jsonl(tmp_path):
    path = str(tmp_path / "rows.jsonl")
    write_jsonl(path, [{"a": 1}, {"b": "é"}])
    assert read_jsonl(path) == [{"a": 1}, {"b": "é"}]
    assert "é" in open(path, encoding="utf-8").read()


def test_truncated_final_line(tmp_path):
    path = tmp_path / "rows.jsonl"
    path.write_text('{"a": 1}\n\n{"b": 2}\n{"c": ', encoding="utf-8")
    assert read_jsonl(str(path)) == [{"a": 1}, {"b": 2}]
    with pytest.raises(DataError, match=":4]"):
        read_jsonl(str(path), tolerate_truncated=False)


def test_malformed_inner_line(tmp_path):
    path = tmp_path / "rows.jsonl"
    path.write_text('{"a": 1}\nnot json\n{"b": 2}\n', encoding="utf-8")
    with pytest.raises(DataError, match=":2]"):
        list(iter_jsonl(str(path)))


def test_csv_and_floats():
    assert csv_text(("a", "b"), [(1, "x,y")]) == 'a,b\n1,"x,y"\n'
    assert format_float(0.1 + 0.2) == "0.30000000000000004"
    assert float(format_float(1 / 3)) == 1 / 3
    assert format_float(1) == "1.0"


def test_sha256(tmp_path):
    path = tmp_path / "f.txt"
    path.write_bytes(b"abc")
    assert sha256_file(str(path)) == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    )


def test_merge_nested():
    dest = {"a": {"b": 1, "c": [1, 2]}, "d": None}
    merge_nested(dest, {"a": {"c": [3]}, "d": {"e": 1}, "f": 2})
    assert dest == {"a": {"b": 1, "c": [3]}, "d": {"e": 1}, "f": 2}
    with pytest.raises(ValueError):
        merge_nested({"a": {"b": 1}}, {"a": 3})


def test_overrides():
    assert create_nested("a", "b", 1) == {"a": {"b": 1}}
    assert parse_override("census.per_state=12") == {"census": {"per_state": 12}}
    assert parse_override("generation.tiers=[DESCRIPTIVE]") == {
        "generation": {"tiers": ["DESCRIPTIVE"]}
    }
    assert parse_override("name=a=b") == {"name": "a=b"}
    with pytest.raises(ValueError):
        parse_override("seed")
    with pytest.raises(ValueError):
        parse_override("=3")
