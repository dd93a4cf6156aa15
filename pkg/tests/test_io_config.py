import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from styleco.config import ConfigError, RunConfig, config_from_dict, load_config
from styleco.io import (read_constraints, read_manifest, read_matrix, read_pgm, read_truth,
                        sha256_file, write_csv, write_matrix, write_pgm)


@given(arrays(np.uint8, st.tuples(st.integers(1, 20), st.integers(1, 20))))
def test_pgm_roundtrip(tmp_path_factory, img):
    p = tmp_path_factory.mktemp("pgm") / "a.pgm"
    write_pgm(p, img)
    np.testing.assert_array_equal(read_pgm(p), img)


def test_pgm_float_scaling(tmp_path):
    write_pgm(tmp_path / "f.pgm", np.array([[0.0, 0.5, 1.0]]))
    assert read_pgm(tmp_path / "f.pgm").tolist() == [[0, 128, 255]]


@given(arrays(st.sampled_from([np.float64, np.float32, np.int64]),
              st.tuples(st.integers(0, 6), st.integers(0, 6)),
              elements=st.integers(-1000, 1000)))
def test_matrix_roundtrip(tmp_path_factory, a):
    p = tmp_path_factory.mktemp("mat") / "m.bin"
    write_matrix(p, a, note="x", ids=["a", "b"])
    b, header = read_matrix(p)
    assert b.dtype == a.dtype and b.shape == a.shape
    np.testing.assert_array_equal(a, b)
    assert header["note"] == "x" and header["ids"] == ["a", "b"]


def test_matrix_bad_magic(tmp_path):
    (tmp_path / "x.bin").write_bytes(b"nope")
    with pytest.raises(ValueError):
        read_matrix(tmp_path / "x.bin")


def test_manifest(tmp_path):
    (tmp_path / "m.txt").write_text("# comment\nmeshes/a.obj chairA\n/abs/b.obj\n\n")
    entries = read_manifest(tmp_path / "m.txt")
    assert entries == [(tmp_path / "meshes/a.obj", "chairA"), (tmp_path / "/abs/b.obj", "b")]
    (tmp_path / "d.txt").write_text("a.obj x\nb.obj x\n")
    with pytest.raises(ValueError, match="duplicate"):
        read_manifest(tmp_path / "d.txt")
    (tmp_path / "e.txt").write_text("a.obj x y\n")
    with pytest.raises(ValueError):
        read_manifest(tmp_path / "e.txt")


def test_constraints(tmp_path):
    (tmp_path / "c.txt").write_text("T a b c\nL a gothic # note\nT b c d\n")
    triplets, labels = read_constraints(tmp_path / "c.txt")
    assert triplets == [("a", "b", "c"), ("b", "c", "d")] and labels == {"a": "gothic"}
    (tmp_path / "bad.txt").write_text("T a b\n")
    with pytest.raises(ValueError, match="bad constraint"):
        read_constraints(tmp_path / "bad.txt")


def test_csv_truth_and_hash(tmp_path):
    write_csv(tmp_path / "t.csv", ["shape_id", "style"], [["a", "x"], ["b", "y"]])
    assert read_truth(tmp_path / "t.csv") == {"a": "x", "b": "y"}
    assert len(sha256_file(tmp_path / "t.csv")) == 64


def test_config_defaults_and_overrides(tmp_path):
    cfg = RunConfig()
    assert cfg.fusion.beta == 1.0 and cfg.cluster.tau_s == 0.55
    c2 = cfg.replace(seed=3, fusion__eta=0.5)
    assert c2.seed == 3 and c2.fusion.eta == 0.5 and cfg.fusion.eta == 0.2
    (tmp_path / "c.toml").write_text('mode = "labels"\n[paths]\nmanifest = "m.txt"\n[fusion]\nlam = 5.0\n')
    c3 = load_config(tmp_path / "c.toml")
    assert c3.mode == "labels" and c3.fusion.lam == 5.0
    assert c3.paths.manifest == str(tmp_path / "m.txt")
    (tmp_path / "c.json").write_text(json.dumps(c3.to_dict()))
    assert load_config(tmp_path / "c.json") == c3


@pytest.mark.parametrize("data", [
    {"bogus": 1},
    {"fusion": {"nope": 2}},
    {"mode": "other"},
    {"jobs": 0},
    {"fusion": {"eta": 0.0}},
    {"simplify": {"target_reduction": 1.5}},
    {"render": 3},
    {"synth": {"label_fraction": 2}},
])
def test_config_errors(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_config_unreadable(tmp_path):
    (tmp_path / "x.toml").write_text("this is = = not toml")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "x.toml")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
