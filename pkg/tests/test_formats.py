from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from singularpde.formats import (
    AtomicDirectory,
    FormatError,
    field_from_json,
    field_to_json,
    load_bundle,
    load_field,
    read_csv,
    read_manifest,
    rows_to_csv,
    save_bundle,
    save_field,
    verify_manifest,
    write_manifest,
)
from singularpde.roughfield import fractional_gaussian_field, generate_rough
from singularpde.spectral import Grid


@given(st.integers(0, 10_000), st.sampled_from([(1, 32), (2, 8)]))
def test_field_json_roundtrip_is_bit_exact(seed, shape):
    g = Grid(*shape, 1.5)
    f = fractional_gaussian_field(-0.2, g, seed)
    back = field_from_json(field_to_json(f))
    assert back.grid == g and np.array_equal(back.coeffs, f.coeffs)


@pytest.mark.parametrize("encoding", ["base64", "raw"])
def test_field_file_roundtrip(tmp_path, encoding):
    f = fractional_gaussian_field(0.5, Grid(1, 64, 1.0), 1)
    save_field(f, tmp_path / "f.json", encoding)
    assert np.array_equal(load_field(tmp_path / "f.json").coeffs, f.coeffs)


def test_field_header_is_checked():
    f = fractional_gaussian_field(0.5, Grid(1, 16, 1.0), 1)
    doc = json.loads(field_to_json(f))
    doc["layout"] = "fortran"
    with pytest.raises(FormatError):
        field_from_json(json.dumps(doc))
    doc = json.loads(field_to_json(f))
    doc["version"] = 99
    with pytest.raises(FormatError, match="version"):
        field_from_json(json.dumps(doc))
    with pytest.raises(FormatError):
        field_from_json("not json")


def test_bundle_roundtrip_and_manifest(tmp_path):
    b = generate_rough(-0.3, Grid(1, 32, 1.0), 5, n_slices=3, T=0.5)
    save_bundle(tmp_path / "b", b, {"seed": 5})
    back = load_bundle(tmp_path / "b")
    assert back.T == 0.5 and back.n_slices == 3
    assert all(np.array_equal(x.coeffs, y.coeffs) for x, y in zip(back.slices, b.slices))
    assert verify_manifest(tmp_path / "b") == []
    (tmp_path / "b" / "slice_001.json").write_text("{}")
    assert verify_manifest(tmp_path / "b") == ["slice_001.json"]


def test_atomic_directory_replaces_only_outputs(tmp_path):
    target = tmp_path / "out"
    with AtomicDirectory(target) as tmp:
        write_manifest(tmp, {"kind": "test", "n": 1})
    assert read_manifest(target)["n"] == 1
    with AtomicDirectory(target) as tmp:
        write_manifest(tmp, {"kind": "test", "n": 2})
    assert read_manifest(target)["n"] == 2
    foreign = tmp_path / "foreign"
    foreign.mkdir()
    (foreign / "keep.txt").write_text("x")
    with pytest.raises(FileExistsError):
        with AtomicDirectory(foreign):
            pass
    assert (foreign / "keep.txt").read_text() == "x"


def test_failed_write_leaves_previous_output(tmp_path):
    target = tmp_path / "out"
    with AtomicDirectory(target) as tmp:
        write_manifest(tmp, {"kind": "test", "n": 1})
    with pytest.raises(RuntimeError):
        with AtomicDirectory(target) as tmp:
            write_manifest(tmp, {"kind": "test", "n": 2})
            raise RuntimeError("boom")
    assert read_manifest(target)["n"] == 1
    assert [p.name for p in tmp_path.iterdir()] == ["out"]


def test_csv_roundtrip_keeps_floats_exact(tmp_path):
    rows = [{"t": 0.1, "v": 1 / 3}, {"t": 0.2, "v": np.pi}]
    (tmp_path / "r.csv").write_text(rows_to_csv(rows))
    back = read_csv(tmp_path / "r.csv")
    assert [float(r["v"]) for r in back] == [1 / 3, np.pi]
