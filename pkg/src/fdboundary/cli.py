"""Command-line interface.

Exit codes: 0 success, 2 unreadable input, 3 invalid input, 4 ring inequality
violated.  Every command writes its reports into ``--out`` (default ``.``);
reports carry no timestamps or absolute paths so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import boundary, criteria, distortion, fuchsian, io, modulus

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_VIOLATION = 4
PERCENTILES = (5, 25, 50, 75, 95)
BOUNDARY_WINDOW = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise io.ParseError(message)


def _floats(text: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise io.ParseError(f"cannot parse {text!r} as numbers") from exc
    if n is not None and len(vals) != n:
        raise io.ParseError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _point(text: str) -> complex:
    x, y = _floats(text, 2)
    return complex(x, y)


def _cfg_point(v) -> complex:
    return complex(io.number(v[0]), io.number(v[1]))


def _write(args, name: str, obj) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    io.write_json(path, obj)
    return path


def _common(args, command: str) -> dict:
    return {"command": command, "input": Path(args.input).name}


# commands


def cmd_distortion(args, cfg) -> int:
    gmap = io.read_gridmap(args.input)
    fld = distortion.dilatation_field(gmap)
    report = distortion.finite_distortion_check(fld)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_dilatation_csv(out / "dilatation.csv", fld)
    K = fld.k_values[fld.inside & np.isfinite(fld.k_values)]
    pct = {str(p): float(np.percentile(K, p)) for p in PERCENTILES} if K.size else {}
    flags = {name: int(np.sum(fld.flags == code)) for code, name in sorted(distortion.FLAG_NAMES.items())}
    g = gmap.geometry
    summary = _common(args, "distortion") | {
        "grid": {"origin": [g.origin.real, g.origin.imag], "spacing": g.spacing, "nx": g.nx, "ny": g.ny},
        "finite_fraction": report.finite_fraction,
        "n_flagged": len(report.flagged_cells),
        "n_inside": int(fld.inside.sum()),
        "percentiles": pct,
        "median": pct.get("50", float("nan")),
        "max": float(K.max()) if K.size else float("nan"),
        "flag_counts": flags,
    }
    _write(args, "distortion.json", summary)
    return EXIT_OK


def _boundary_error(geometry: distortion.GridGeometry, mask: np.ndarray, p: complex) -> str | None:
    i, j, ok = geometry.nearest(p)
    if not ok:
        return "point lies outside the grid"
    i, j = int(i), int(j)
    w = BOUNDARY_WINDOW
    win = mask[max(0, i - w): i + w + 1, max(0, j - w): j + w + 1]
    edge = i - w < 0 or j - w < 0 or i + w >= geometry.nx or j + w >= geometry.ny
    if win.any() and (not win.all() or edge):
        return None
    return "point is not on the boundary of the domain mask"


def cmd_classify(args, cfg) -> int:
    gmap = io.read_gridmap(args.input)
    points = [_point(p) for p in args.point] if args.point else [_cfg_point(p) for p in cfg.get("points", [])]
    if not points:
        raise io.InputValidationError("classify needs at least one boundary point")
    try:
        ccfg = criteria.CriteriaConfig.from_dict(cfg.get("criteria"))
    except (TypeError, ValueError) as exc:
        raise io.InputValidationError(str(exc)) from exc
    fld = distortion.dilatation_field(gmap)
    results = []
    for p in points:
        entry = {"point": [p.real, p.imag]}
        err = _boundary_error(gmap.geometry, gmap.domain_mask, p)
        if err is None:
            try:
                entry["report"] = criteria.classify_boundary_point(fld, p, ccfg).as_dict()
            except ValueError as exc:
                err = str(exc)
        entry["status"] = "ok" if err is None else "error"
        if err is not None:
            entry["error"] = err
        results.append(entry)
    _write(args, "classify.json", _common(args, "classify") | {"points": results})
    return EXIT_OK


def cmd_verify_ring(args, cfg) -> int:
    gmap = io.read_gridmap(args.input)
    ring_cfg = cfg.get("ring", {})
    if args.ring:
        x, y, R1, R2 = _floats(args.ring, 4)
        p0 = complex(x, y)
    elif ring_cfg:
        p0, R1, R2 = _cfg_point(ring_cfg["p0"]), ring_cfg["R1"], ring_cfg["R2"]
    else:
        raise io.InputValidationError("verify-ring needs --ring or a ring entry in the config")
    xi = args.xi or cfg.get("xi", "uniform")
    spec = modulus.RingSpec(p0, R1, R2)
    rep = modulus.verify_ring_inequality(
        gmap, spec, xi,
        n_curves=args.n_curves or cfg.get("n_curves", 64),
        resolution=cfg.get("resolution", 256),
        k_scale=cfg.get("k_scale", 1.0),
    )
    out = _common(args, "verify-ring") | {
        "ring": {"p0": [p0.real, p0.imag], "R1": R1, "R2": R2},
        "xi": xi,
        "k_scale": cfg.get("k_scale", 1.0),
        "lhs": rep.lhs,
        "rhs": rep.rhs,
        "satisfied": rep.satisfied,
        "slack": rep.slack,
        "slack_tolerance": rep.slack_tolerance,
        "n_curves": rep.n_curves,
        "lhs_lower_bound": rep.lhs_lower_bound,
        "converged": rep.converged,
        "notes": rep.notes,
    }
    _write(args, "ring.json", out)
    if not rep.satisfied:
        print(f"ring inequality violated: lhs={rep.lhs:.6g} > rhs={rep.rhs:.6g}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _arc_dict(arc) -> dict:
    d = {"kind": arc.kind, "start": [arc.start.real, arc.start.imag], "end": [arc.end.real, arc.end.imag]}
    if arc.kind == "circular-arc":
        d["center"] = [arc.center.real, arc.center.imag]
        d["radius"] = arc.radius
    return d


def _word(w) -> str:
    return " ".join(str(s) for s in w)


def cmd_fuchsian_orbit(args, cfg) -> int:
    group = io.read_group(args.input)
    oc = cfg.get("orbit", {})
    z0 = _point(args.z0) if args.z0 else _cfg_point(oc.get("z0", [0, 0]))
    radius = args.radius if args.radius is not None else oc.get("radius", 2.5)
    depth = args.max_word or oc.get("max_word_length", 12)
    pts = fuchsian.orbit(group, z0, radius, depth)
    rows = [{"point": [p.real, p.imag], "distance": float(group.distance(z0, p)), "word": _word(e.word)}
            for e, p in pts]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "orbit.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im", "distance", "word"])
        for r in rows:
            w.writerow([repr(r["point"][0]), repr(r["point"][1]), repr(r["distance"]), r["word"]])
    _write(args, "orbit.json", _common(args, "fuchsian orbit") | {
        "mode": group.mode, "z0": [z0.real, z0.imag], "radius": radius, "max_word_length": depth,
        "count": len(rows), "points": rows,
    })
    return EXIT_OK


def _polygon(args, cfg, group):
    pc = cfg.get("polygon", {})
    center = _point(args.center) if args.center else _cfg_point(pc.get("center", [0, 0]))
    depth = args.depth or pc.get("depth", 4)
    return fuchsian.dirichlet_polygon(group, center, depth), depth


def cmd_fuchsian_polygon(args, cfg) -> int:
    group = io.read_group(args.input)
    poly, depth = _polygon(args, cfg, group)
    _write(args, "polygon.json", _common(args, "fuchsian polygon") | {
        "mode": group.mode,
        "center": [poly.center.real, poly.center.imag],
        "depth": depth,
        "n_sides": len(poly.sides),
        "sides": [_arc_dict(a) | {"neighbor": [gc.real, gc.imag], "word": _word(e.word)}
                  for a, gc, e in zip(poly.sides, poly.neighbor_points, poly.elements)],
        "equidistance_residual": poly.equidistance_residual() if poly.sides else 0.0,
    })
    return EXIT_OK


def cmd_fuchsian_pave(args, cfg) -> int:
    group = io.read_group(args.input)
    poly, _ = _polygon(args, cfg, group)
    pv = cfg.get("pave", {})
    samples = args.samples or pv.get("samples", 10_000)
    depth = pv.get("depth", 6)
    rep = fuchsian.paving_check(group, poly, samples, depth)
    _write(args, "pave.json", _common(args, "fuchsian pave") | {
        "mode": group.mode, "samples": samples, "depth": depth, "n_sides": len(poly.sides),
        "covered_fraction": rep.covered_fraction,
        "multiply_covered_fraction": rep.multiply_covered_fraction,
        "samples_used": rep.samples_used,
        "samples_in_band": rep.samples_in_band,
        "sample_radius": rep.sample_radius,
    })
    return EXIT_OK


def cmd_fuchsian_qdist(args, cfg) -> int:
    group = io.read_group(args.input)
    if args.pair:
        pairs = [_floats(p, 4) for p in args.pair]
    else:
        pairs = [[io.number(v) for v in p] for p in cfg.get("qdist", {}).get("pairs", [])]
    if not pairs:
        raise io.InputValidationError("qdist needs at least one pair")
    rows = []
    for x1, y1, x2, y2 in pairs:
        z1, z2 = complex(x1, y1), complex(x2, y2)
        rows.append({"z1": [x1, y1], "z2": [x2, y2], "distance": fuchsian.quotient_distance(group, z1, z2),
                     "direct": float(group.distance(z1, z2))})
    _write(args, "qdist.json", _common(args, "fuchsian qdist") | {"mode": group.mode, "pairs": rows})
    return EXIT_OK


def _probe_p0(args, cfg) -> complex:
    if args.p0:
        return _point(args.p0)
    if "p0" not in cfg.get("probe", {}):
        raise io.InputValidationError("probe needs --p0 or probe.p0 in the config")
    return _cfg_point(cfg["probe"]["p0"])


def cmd_probe_extend(args, cfg) -> int:
    gmap = io.read_gridmap(args.input)
    p0 = _probe_p0(args, cfg)
    n = cfg.get("probe", {}).get("n_sequences", 16)
    ext = boundary.extension_probe(gmap, p0, n)
    land = boundary.cluster_on_image_boundary(gmap, p0, n)
    _write(args, "extend.json", _common(args, "probe extend") | {
        "p0": [p0.real, p0.imag],
        "extension": ext.as_dict(),
        "boundary_landing": {"ok": land.ok, "threshold": land.threshold, "image_spacing": land.image_spacing,
                             "max_distance": float(np.max(land.distances)), "distances": land.distances},
    })
    return EXIT_OK


def _read_mask(args, cfg):
    return io.read_mask(args.input, cfg.get("mask_geometry"))


def cmd_probe_flatness(args, cfg) -> int:
    geom, mask = _read_mask(args, cfg)
    p0 = _probe_p0(args, cfg)
    pc = cfg.get("probe", {})
    levels = [int(v) for v in _floats(args.levels)] if args.levels else pc.get("N", [1, 2, 5, 10])
    v = boundary.weak_flatness_probe(geom, mask, p0, tuple(levels), n_scales=pc.get("n_scales", 5))
    _write(args, "flatness.json", _common(args, "probe flatness") | {"p0": [p0.real, p0.imag]} | v.as_dict())
    return EXIT_OK


def cmd_probe_access(args, cfg) -> int:
    geom, mask = _read_mask(args, cfg)
    p0 = _probe_p0(args, cfg)
    v = boundary.strong_accessibility_probe(geom, mask, p0, n_scales=cfg.get("probe", {}).get("access_scales", 4))
    _write(args, "access.json", _common(args, "probe access") | {"p0": [p0.real, p0.imag]} | v.as_dict())
    return EXIT_OK


# parser


def build_parser() -> argparse.ArgumentParser:
    glob = argparse.ArgumentParser(add_help=False)
    glob.add_argument("--config", default=argparse.SUPPRESS, help="run configuration (JSON)")
    glob.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads for compiled kernels")
    glob.add_argument("--out", default=argparse.SUPPRESS, help="output directory (default: .)")

    parser = _Parser(prog="fdboundary", description=__doc__.splitlines()[0], parents=[glob])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("distortion", parents=[glob], help="dilatation field and summary of a grid map")
    p.add_argument("input", help="grid map (.csv or .json)")
    p.set_defaults(func=cmd_distortion)

    p = sub.add_parser("classify", parents=[glob], help="boundary-extension criteria at boundary points")
    p.add_argument("input")
    p.add_argument("--point", action="append", help="boundary point x,y (repeatable)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify-ring", parents=[glob], help="check the ring modulus inequality")
    p.add_argument("input")
    p.add_argument("--ring", help="x,y,R1,R2 (hyperbolic radii)")
    p.add_argument("--xi", choices=modulus.XI_NAMES)
    p.add_argument("--n-curves", type=int)
    p.set_defaults(func=cmd_verify_ring)

    p = sub.add_parser("fuchsian", parents=[glob], help="orbits, Dirichlet polygons and quotient distances")
    fsub = p.add_subparsers(dest="fuchsian_command", required=True, parser_class=_Parser)
    q = fsub.add_parser("orbit", parents=[glob])
    q.add_argument("input", help="group file (.json)")
    q.add_argument("--z0")
    q.add_argument("--radius", type=float)
    q.add_argument("--max-word", type=int)
    q.set_defaults(func=cmd_fuchsian_orbit)
    for name, func in (("polygon", cmd_fuchsian_polygon), ("pave", cmd_fuchsian_pave)):
        q = fsub.add_parser(name, parents=[glob])
        q.add_argument("input")
        q.add_argument("--center")
        q.add_argument("--depth", type=int)
        if name == "pave":
            q.add_argument("--samples", type=int)
        q.set_defaults(func=func)
    q = fsub.add_parser("qdist", parents=[glob])
    q.add_argument("input")
    q.add_argument("--pair", action="append", help="x1,y1,x2,y2 (repeatable)")
    q.set_defaults(func=cmd_fuchsian_qdist)

    p = sub.add_parser("probe", parents=[glob], help="cluster-set and boundary-geometry probes")
    psub = p.add_subparsers(dest="probe_command", required=True, parser_class=_Parser)
    q = psub.add_parser("extend", parents=[glob])
    q.add_argument("input", help="grid map")
    q.add_argument("--p0")
    q.set_defaults(func=cmd_probe_extend)
    q = psub.add_parser("flatness", parents=[glob])
    q.add_argument("input", help="domain mask (.json run-length or .png)")
    q.add_argument("--p0")
    q.add_argument("--levels", help="comma-separated N values")
    q.set_defaults(func=cmd_probe_flatness)
    q = psub.add_parser("access", parents=[glob])
    q.add_argument("input", help="domain mask")
    q.add_argument("--p0")
    q.set_defaults(func=cmd_probe_access)
    return parser


def _load_config(args) -> dict:
    path = getattr(args, "config", None)
    if path is None:
        return {}
    cfg = io.load_json(path)
    io.validate(cfg, "run_config")
    return cfg


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if not hasattr(args, "out"):
            args.out = "."
        cfg = _load_config(args)
        threads = getattr(args, "threads", None) or cfg.get("threads")
        if threads:
            import numba

            numba.set_num_threads(min(int(threads), numba.config.NUMBA_NUM_THREADS))
        return args.func(args, cfg)
    except io.ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, RuntimeError, KeyError) as exc:
        # library validation errors (group, orbit, resolution, ring) share exit 3
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
