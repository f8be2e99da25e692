"""Regenerate the shipped fixtures in ``fixtures/``.

Usage: python3 scripts/make_fixtures.py [OUTDIR]
"""

import math
import sys
from pathlib import Path

import numpy as np

from fdboundary import io
from fdboundary.distortion import GridGeometry, GridMap
from fdboundary.fuchsian import HYPERBOLIC, FuchsianGroup
from fdboundary.hyperbolic import MobiusTransform

GRID = GridGeometry(-1 - 1j, 2 / 128, 129, 129)
FINE = GridGeometry(-1 - 1j, 2 / 256, 257, 257)


def unit_disk(z):
    return np.abs(z) < 1


def stretch(a):
    def f(z):
        r = np.abs(z)
        return z * np.where(r > 0, r, 1.0) ** (a - 1)
    return f


def log_map(z):
    """Radial map with dilatation ``log(1/|z|)`` for ``|z| < 1/e`` and conformal outside."""
    r = np.abs(z)
    inner = r < math.exp(-1)
    safe = np.where((r > 0) & inner, r, 0.5)
    return np.where(inner, np.where(r > 0, z / (safe * np.log(1 / safe)), 0), math.e * z)


def upper_half_disk(z):
    return (np.abs(z) < 0.9) & (z.imag >= -1e-12)


def disk_mask(z):
    return np.abs(z) < 0.9


def slit_mask(z):
    slit = (np.abs(z.imag) < 1e-12) & (z.real >= -0.3)
    return disk_mask(z) & ~slit


def main(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    io.write_gridmap(out / "identity.csv", GridMap.from_function(lambda z: z, GRID, disk_mask))
    io.write_gridmap(out / "stretch2.csv", GridMap.from_function(stretch(2.0), GRID, unit_disk))
    io.write_gridmap(out / "stretch05.csv", GridMap.from_function(stretch(0.5), GRID, unit_disk))
    io.write_gridmap(out / "logdil.json", GridMap.from_function(log_map, FINE, upper_half_disk))
    (out / "malformed.csv").write_text("x,y,u,v,mask\n0.0,0.0,zero,0.0,1\n")

    g = MobiusTransform(1.0, -0.5)
    io.write_json(out / "cyclic.json", io.group_to_dict(FuchsianGroup((g,))))
    io.write_json(out / "trivial.json", io.group_to_dict(FuchsianGroup.trivial()))
    io.write_json(out / "elliptic.json", {"mode": HYPERBOLIC, "generators": [
        {"rotation_re": math.cos(1.0), "rotation_im": math.sin(1.0), "center_re": 0.0, "center_im": 0.0}]})

    z = GRID.nodes()
    io.write_mask_png(out / "disk_mask.png", disk_mask(z))
    io.write_json(out / "slit_mask.json", io.mask_to_dict(FINE, slit_mask(FINE.nodes())))

    r1, r2 = 2 * math.atanh(0.2), 2 * math.atanh(0.4)
    ring = {"p0": [0.0, 0.0], "R1": r1, "R2": r2}
    configs = {
        "classify_identity": {"points": [[0.9, 0.0], [0.0, -0.9], [-0.54, 0.72]]},
        "classify_log": {"points": [[0.0, 0.0], [0.3, 0.5]]},
        "ring": {"ring": ring, "xi": "one-over-t"},
        "ring_corrupt": {"ring": ring, "xi": "one-over-t", "k_scale": 0.5},
        "fuchsian": {"orbit": {"z0": [0.0, 0.0], "radius": 2.5, "max_word_length": 12},
                     "polygon": {"center": [0.0, 0.0], "depth": 4},
                     "pave": {"samples": 10000, "depth": 6},
                     "qdist": {"pairs": [[0.0, 0.0, 0.5, 0.0], [0.0, 0.25, 0.0, 0.0], [0.1, 0.2, -0.3, 0.4]]}},
        "probe_extend": {"probe": {"p0": [1.0, 0.0]}},
        "probe_disk": {"probe": {"p0": [0.9, 0.0]},
                       "mask_geometry": {"origin": [-1.0, -1.0], "spacing": GRID.spacing}},
        "probe_slit": {"probe": {"p0": [-0.3, 0.0]}},
    }
    for name, cfg in configs.items():
        io.write_json(out / f"{name}.config.json", cfg)


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "fixtures")
