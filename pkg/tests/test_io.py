import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdboundary import io
from fdboundary.distortion import GridGeometry, GridMap, dilatation_field
from fdboundary.fuchsian import FLAT, FuchsianGroup, Translation
from fdboundary.hyperbolic import MobiusTransform

G = GridGeometry(-1 - 1j, 2 / 32, 33, 33)


def disk_map(fn=lambda z: z ** 2 + 0.1 * z):
    return GridMap.from_function(fn, G, lambda z: np.abs(z) < 0.8)


@pytest.mark.parametrize("suffix", [".csv", ".json"])
def test_gridmap_round_trip(tmp_path, suffix):
    gmap = disk_map()
    path = tmp_path / f"map{suffix}"
    io.write_gridmap(path, gmap)
    back = io.read_gridmap(path)
    assert back.geometry.shape == gmap.geometry.shape
    assert np.array_equal(back.domain_mask, gmap.domain_mask)
    assert np.array_equal(back.samples[gmap.domain_mask], gmap.samples[gmap.domain_mask])
    assert np.allclose(back.geometry.nodes(), gmap.geometry.nodes(), atol=1e-14)


def test_json_gridmap_is_bit_exact(tmp_path):
    gmap = disk_map(lambda z: np.exp(z) / 3)
    io.write_gridmap(tmp_path / "m.json", gmap)
    back = io.read_gridmap(tmp_path / "m.json")
    assert back.geometry == gmap.geometry
    io.write_gridmap(tmp_path / "again.json", back)
    assert (tmp_path / "m.json").read_bytes() == (tmp_path / "again.json").read_bytes()


@pytest.mark.parametrize("text, err", [
    ("a,b,c\n", io.ParseError),
    ("x,y,u,v,mask\n0,0,zero,0,1\n", io.ParseError),
    ("x,y,u,v,mask\n0,0,0,0\n", io.ParseError),
    ("x,y,u,v,mask\n0,0,0,0,1\n1,0,0,0,1\n0,1,0,0,1\n", io.InputValidationError),
    ("x,y,u,v,mask\n0,0,0,0,1\n1,0,0,0,1\n3,0,0,0,1\n0,1,0,0,1\n1,1,0,0,1\n3,1,0,0,1\n", io.InputValidationError),
    ("x,y,u,v,mask\n1,0,0,0,1\n0,0,0,0,1\n0,1,0,0,1\n1,1,0,0,1\n", io.InputValidationError),
])
def test_bad_csv(tmp_path, text, err):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(err):
        io.read_gridmap_csv(p)


def test_gridmap_schema_violation():
    d = io.gridmap_to_dict(disk_map())
    d["nx"] = 1
    with pytest.raises(io.InputValidationError):
        io.gridmap_from_dict(d)


def test_dumps_encodes_non_finite_and_sorts():
    s = io.dumps({"b": math.inf, "a": [np.float64(1.5), math.nan, -math.inf], "c": 1 + 2j, "d": np.int32(3)})
    d = json.loads(s)
    assert list(d) == ["a", "b", "c", "d"]
    assert d["a"] == [1.5, "NaN", "-Infinity"]
    assert d["c"] == [1.0, 2.0]
    assert io.number(d["b"]) == math.inf


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_json_numbers_round_trip(xs):
    assert [io.number(v) for v in json.loads(io.dumps(xs))] == xs


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.data())
def test_rle_round_trip(nx, ny, data):
    bits = data.draw(st.lists(st.booleans(), min_size=nx * ny, max_size=nx * ny))
    mask = np.array(bits).reshape(nx, ny)
    assert np.array_equal(io.rle_to_mask(io.mask_to_rle(mask), nx, ny), mask)


def test_rle_rejects_runs_outside_grid():
    with pytest.raises(io.InputValidationError):
        io.rle_to_mask([[10, 10]], 3, 3)


@pytest.mark.parametrize("fmt", ["json", "png"])
def test_mask_files(tmp_path, fmt):
    mask = np.abs(G.nodes()) < 0.7
    if fmt == "json":
        path = tmp_path / "m.json"
        io.write_json(path, io.mask_to_dict(G, mask))
        geom, back = io.read_mask(path)
    else:
        path = tmp_path / "m.png"
        io.write_mask_png(path, mask)
        geom, back = io.read_mask(path, {"origin": [-1, -1], "spacing": G.spacing})
    assert geom == G
    assert np.array_equal(back, mask)


def test_png_mask_needs_geometry(tmp_path):
    io.write_mask_png(tmp_path / "m.png", np.ones((4, 4), bool))
    with pytest.raises(io.InputValidationError):
        io.read_mask(tmp_path / "m.png")


@pytest.mark.parametrize("group", [
    FuchsianGroup((MobiusTransform(1.0, -0.5),)),
    FuchsianGroup((MobiusTransform(np.exp(0.3j), 0.2 + 0.4j), MobiusTransform(1.0, 0.6j))),
    FuchsianGroup((Translation(1.0), Translation(0.3 + 1.1j)), FLAT),
    FuchsianGroup.trivial(),
])
def test_group_round_trip(group):
    back = io.group_from_dict(json.loads(io.dumps(io.group_to_dict(group))))
    assert back.mode == group.mode
    for a, b in zip(back.generators, group.generators):
        z = np.array([0.1, -0.3j, 0.2 + 0.2j])
        assert np.array_equal(a.apply(z), b.apply(z))


@pytest.mark.parametrize("d", [
    {"mode": "hyperbolic-disk", "generators": [{"rotation_re": 0.0, "rotation_im": 1.0, "center_re": 0.0,
                                                 "center_im": 0.0}]},
    {"mode": "flat-torus", "generators": [{"shift_re": 1.0, "shift_im": 0.0}, {"shift_re": 2.0, "shift_im": 0.0}]},
    {"mode": "flat-torus", "generators": [{"rotation_re": 1.0, "rotation_im": 0.0, "center_re": 0.1,
                                            "center_im": 0.0}]},
    {"mode": "sphere", "generators": []},
    {"generators": [{"shift_re": 1.0}]},
])
def test_invalid_groups(d):
    with pytest.raises(io.InputValidationError):
        io.group_from_dict(d)


def test_dilatation_csv(tmp_path):
    fld = dilatation_field(disk_map(lambda z: z))
    io.write_dilatation_csv(tmp_path / "k.csv", fld)
    rows = (tmp_path / "k.csv").read_text().splitlines()
    assert rows[0] == "x,y,K,flag"
    assert len(rows) == 1 + G.nx * G.ny
