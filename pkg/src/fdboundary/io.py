"""Readers and writers for grid maps, masks, groups and reports.

JSON output is deterministic: keys sorted, floats written with ``repr`` (the
shortest string that round-trips exactly), non-finite floats as the strings
``"Infinity"``, ``"-Infinity"`` and ``"NaN"``.
"""

from __future__ import annotations

import base64
import csv
import json
import math
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .distortion import FLAG_NAMES, DilatationField, GridGeometry, GridMap
from .fuchsian import FLAT, HYPERBOLIC, FuchsianGroup, GroupValidationError, Translation
from .hyperbolic import MobiusTransform

CSV_HEADER = ["x", "y", "u", "v", "mask"]
SPACING_RTOL = 1e-6
NONFINITE = {"Infinity": math.inf, "-Infinity": -math.inf, "NaN": math.nan}


class ParseError(ValueError):
    """An input file cannot be read as the expected format."""


class InputValidationError(ValueError):
    """An input parses but violates a schema or a semantic constraint."""


# JSON


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays, complex numbers and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def number(x) -> float:
    """Inverse of the non-finite encoding."""
    return NONFINITE[x] if isinstance(x, str) else float(x)


def load_schema(name: str) -> dict:
    return json.loads(resources.files("fdboundary").joinpath("schemas", f"{name}.schema.json").read_text())


def validate(obj, schema_name: str) -> None:
    try:
        jsonschema.validate(to_jsonable(obj), load_schema(schema_name))
    except jsonschema.ValidationError as exc:
        raise InputValidationError(f"{schema_name}: {exc.message}") from exc


# grid maps


def _fmt(x: float) -> str:
    return repr(float(x))


def write_gridmap_csv(path, gmap: GridMap) -> None:
    g = gmap.geometry
    z = g.nodes()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for j in range(g.ny):
            for i in range(g.nx):
                m = bool(gmap.domain_mask[i, j])
                s = gmap.samples[i, j] if m else 0j
                w.writerow([_fmt(z[i, j].real), _fmt(z[i, j].imag), _fmt(s.real), _fmt(s.imag), int(m)])


def _axis(values, name):
    u = np.unique(values)
    if u.size < 2:
        raise InputValidationError(f"grid needs at least two distinct {name} values")
    d = np.diff(u)
    if np.max(np.abs(d - d[0])) > SPACING_RTOL * max(1.0, abs(d[0])):
        raise InputValidationError(f"{name} values are not equally spaced")
    return u, float(d[0])


def read_gridmap_csv(path) -> GridMap:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not rows or [c.strip() for c in rows[0]] != CSV_HEADER:
        raise ParseError(f"{path}: header must be {','.join(CSV_HEADER)}")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != 5:
        raise ParseError(f"{path}: every row needs 5 fields")
    xs, hx = _axis(data[:, 0], "x")
    ys, hy = _axis(data[:, 1], "y")
    if abs(hx - hy) > 1e-9 * hx:
        raise InputValidationError("x and y spacings differ")
    nx, ny = xs.size, ys.size
    if data.shape[0] != nx * ny:
        raise InputValidationError(f"{data.shape[0]} rows do not form a {nx} x {ny} grid")
    i = np.rint((data[:, 0] - xs[0]) / hx).astype(int)
    j = np.rint((data[:, 1] - ys[0]) / hx).astype(int)
    if np.any(i != np.tile(np.arange(nx), ny)) or np.any(j != np.repeat(np.arange(ny), nx)):
        raise InputValidationError("rows are not in row-major order")
    samples = np.zeros((nx, ny), complex)
    mask = np.zeros((nx, ny), bool)
    samples[i, j] = data[:, 2] + 1j * data[:, 3]
    mask[i, j] = data[:, 4] != 0
    geom = GridGeometry(complex(xs[0], ys[0]), hx, nx, ny)
    try:
        return GridMap(geom, samples, mask)
    except ValueError as exc:
        raise InputValidationError(str(exc)) from exc


def _b64(a: np.ndarray, dtype) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype=dtype).tobytes()).decode("ascii")


def _unb64(s: str, dtype, shape):
    try:
        a = np.frombuffer(base64.b64decode(s, validate=True), dtype=dtype)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"bad base64 array: {exc}") from exc
    if a.size != shape[0] * shape[1]:
        raise InputValidationError("array length does not match nx * ny")
    return a.reshape(shape)


def gridmap_to_dict(gmap: GridMap) -> dict:
    g = gmap.geometry
    s = np.where(gmap.domain_mask, gmap.samples, 0)
    return {
        "format": "gridmap",
        "encoding": "base64-float64-le",
        "origin": [g.origin.real, g.origin.imag],
        "spacing": g.spacing,
        "nx": g.nx,
        "ny": g.ny,
        "u": _b64(s.real, "<f8"),
        "v": _b64(s.imag, "<f8"),
        "mask": _b64(gmap.domain_mask, "u1"),
    }


def gridmap_from_dict(d: dict) -> GridMap:
    validate(d, "gridmap")
    shape = (d["nx"], d["ny"])
    geom = GridGeometry(complex(*d["origin"]), float(d["spacing"]), *shape)
    u = _unb64(d["u"], "<f8", shape)
    v = _unb64(d["v"], "<f8", shape)
    m = _unb64(d["mask"], "u1", shape).astype(bool)
    try:
        return GridMap(geom, u + 1j * v, m)
    except ValueError as exc:
        raise InputValidationError(str(exc)) from exc


def read_gridmap(path) -> GridMap:
    if str(path).endswith(".json"):
        return gridmap_from_dict(load_json(path))
    return read_gridmap_csv(path)


def write_gridmap(path, gmap: GridMap) -> None:
    if str(path).endswith(".json"):
        write_json(path, gridmap_to_dict(gmap))
    else:
        write_gridmap_csv(path, gmap)


def write_dilatation_csv(path, fld: DilatationField) -> None:
    z = fld.geometry.nodes()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "K", "flag"])
        for j in range(fld.geometry.ny):
            for i in range(fld.geometry.nx):
                w.writerow([_fmt(z[i, j].real), _fmt(z[i, j].imag), _fmt(fld.k_values[i, j]),
                            FLAG_NAMES[int(fld.flags[i, j])]])


# masks


def mask_to_rle(mask: np.ndarray) -> list:
    """Runs ``[start, length]`` of true cells in row-major (``j`` outer) order."""
    flat = np.asarray(mask, bool).T.ravel()
    edges = np.diff(np.concatenate([[0], flat.astype(np.int8), [0]]))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return [[int(s), int(e - s)] for s, e in zip(starts, ends)]


def rle_to_mask(runs, nx: int, ny: int) -> np.ndarray:
    flat = np.zeros(nx * ny, bool)
    for s, n in runs:
        if s < 0 or n < 0 or s + n > flat.size:
            raise InputValidationError("run outside the grid")
        flat[s:s + n] = True
    return flat.reshape(ny, nx).T


def mask_to_dict(geometry: GridGeometry, mask) -> dict:
    return {"format": "mask-rle", "origin": [geometry.origin.real, geometry.origin.imag], "spacing": geometry.spacing,
            "nx": geometry.nx, "ny": geometry.ny, "runs": mask_to_rle(mask)}


def write_mask_png(path, mask: np.ndarray) -> None:
    from PIL import Image

    img = (np.asarray(mask, bool).T[::-1] * 255).astype(np.uint8)
    Image.fromarray(img, mode="L").save(path)


def read_mask(path, geometry_cfg: dict | None = None):
    """``(geometry, mask)`` from a run-length JSON file or a PNG plus ``{"origin", "spacing"}``."""
    if str(path).endswith(".json"):
        d = load_json(path)
        validate(d, "mask")
        geom = GridGeometry(complex(*d["origin"]), float(d["spacing"]), d["nx"], d["ny"])
        return geom, rle_to_mask(d["runs"], d["nx"], d["ny"])
    from PIL import Image, UnidentifiedImageError

    try:
        img = np.asarray(Image.open(path).convert("L"))
    except (OSError, UnidentifiedImageError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not geometry_cfg:
        raise InputValidationError("a PNG mask needs a geometry {origin, spacing} in the config")
    mask = (img[::-1] > 127).T
    geom = GridGeometry(complex(*geometry_cfg["origin"]), float(geometry_cfg["spacing"]), *mask.shape)
    return geom, mask


# groups


def group_to_dict(group: FuchsianGroup) -> dict:
    gens = []
    for g in group.generators:
        if isinstance(g, Translation):
            gens.append({"shift_re": g.shift.real, "shift_im": g.shift.imag})
        else:
            gens.append({"rotation_re": g.rotation.real, "rotation_im": g.rotation.imag,
                         "center_re": g.center.real, "center_im": g.center.imag})
    return {"mode": group.mode, "generators": gens}


def group_from_dict(d: dict) -> FuchsianGroup:
    validate(d, "group")
    mode = d.get("mode", HYPERBOLIC)
    gens = []
    for g in d["generators"]:
        if mode == FLAT:
            if "shift_re" not in g:
                raise InputValidationError("flat-torus generators are translations")
            gens.append(Translation(complex(g["shift_re"], g["shift_im"])))
        else:
            if "rotation_re" not in g:
                raise InputValidationError("hyperbolic generators need rotation and center")
            try:
                gens.append(MobiusTransform(complex(g["rotation_re"], g["rotation_im"]),
                                            complex(g["center_re"], g["center_im"])))
            except ValueError as exc:
                raise InputValidationError(str(exc)) from exc
    try:
        return FuchsianGroup(tuple(gens), mode)
    except GroupValidationError as exc:
        raise InputValidationError(str(exc)) from exc


def read_group(path) -> FuchsianGroup:
    return group_from_dict(load_json(path))
