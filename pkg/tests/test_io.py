import json
import math

import numpy as np
import pytest

from windfound.io import gauss_to_nodes, read_json, read_table, read_vtk, write_json, write_table, write_vtk


def test_table_round_trip(tmp_path):
    rows = [["a", 0.1, 1e-300], ["b", -2.5e7, 1 / 3]]
    write_table(tmp_path / "t.csv", ["name", "x", "y"], rows)
    header, back = read_table(tmp_path / "t.csv")
    assert header == ["name", "x", "y"]
    assert back == rows


def test_json_non_finite_as_null(tmp_path):
    write_json(tmp_path / "d.json", {"a": math.nan, "b": [1.0, math.inf], "c": np.float64(2.5), "d": np.arange(3)})
    text = (tmp_path / "d.json").read_text()
    json.loads(text)  # strict JSON, no NaN tokens
    assert "NaN" not in text and "Infinity" not in text
    assert read_json(tmp_path / "d.json") == {"a": None, "b": [1.0, None], "c": 2.5, "d": [0, 1, 2]}


def test_json_deterministic(tmp_path):
    write_json(tmp_path / "a.json", {"z": 1, "a": 2})
    write_json(tmp_path / "b.json", {"a": 2, "z": 1})
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_json_rejects_unknown_objects(tmp_path):
    with pytest.raises(TypeError):
        write_json(tmp_path / "x.json", {"a": object()})


class TestVtk:
    def grid(self):
        X = np.array([[x, y, z] for z in (0.0, 1.0) for y in (0.0, 1.0) for x in (0.0, 1.0, 2.0)])
        hexes = np.array([[0, 1, 4, 3, 6, 7, 10, 9], [1, 2, 5, 4, 7, 8, 11, 10]])
        return X, hexes

    def test_round_trip(self, tmp_path):
        X, hexes = self.grid()
        rng = np.random.default_rng(0)
        u = rng.normal(size=(12, 3))
        s = rng.normal(size=12)
        s[3] = np.nan
        write_vtk(tmp_path / "f.vtk", X, hexes, point_data={"u": u, "s": s}, cell_data={"c": [1.0, 2.0]})
        back = read_vtk(tmp_path / "f.vtk")
        assert np.array_equal(back["nodes"], X)
        assert np.array_equal(back["hexes"], hexes)
        assert np.array_equal(back["point_data"]["u"], u)
        assert np.array_equal(back["point_data"]["s_defined"], np.isfinite(s).astype(int))
        assert back["point_data"]["s"][3] == 0.0
        assert np.array_equal(back["point_data"]["s"][np.isfinite(s)], s[np.isfinite(s)])
        assert np.array_equal(back["cell_data"]["c"], [1.0, 2.0])

    def test_header(self, tmp_path):
        X, hexes = self.grid()
        write_vtk(tmp_path / "f.vtk", X, hexes)
        lines = (tmp_path / "f.vtk").read_text().splitlines()
        assert lines[0] == "# vtk DataFile Version 3.0"
        assert lines[3] == "DATASET UNSTRUCTURED_GRID"
        assert lines.count("12") == 2  # cell types


class TestGaussToNodes:
    def test_average(self):
        hexes = np.array([[0, 1, 2, 3, 4, 5, 6, 7], [1, 8, 9, 2, 5, 10, 11, 6]])
        out = gauss_to_nodes(12, hexes, np.array([1.0, 3.0]))
        assert out[0] == 1.0 and out[8] == 3.0
        assert out[1] == 2.0

    def test_nan_skipped_and_unreached_nodes(self):
        hexes = np.array([[0, 1, 2, 3, 4, 5, 6, 7], [1, 8, 9, 2, 5, 10, 11, 6]])
        out = gauss_to_nodes(13, hexes, np.array([np.nan, 3.0]))
        assert np.isnan(out[0]) and np.isnan(out[12])
        assert out[1] == 3.0
