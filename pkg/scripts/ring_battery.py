"""Ring inequality on identity, rotation and radial stretches; prints one row per case."""

import math
import time

import numpy as np

from fdboundary.distortion import GridGeometry, GridMap
from fdboundary.modulus import RingSpec, verify_ring_inequality

GRID = GridGeometry(-0.8 - 0.8j, 1 / 256, 411, 411)
RING = RingSpec(0, 2 * math.atanh(0.2), 2 * math.atanh(0.4))
MAPS = {
    "identity": lambda z: z,
    "rotation": lambda z: np.exp(0.7j) * z,
    "stretch a=0.5": lambda z: z * np.abs(z) ** -0.5,
    "stretch a=2": lambda z: z * np.abs(z),
    "stretch a=3": lambda z: z * np.abs(z) ** 2,
}


def main() -> None:
    print(f"{'map':<16}{'xi':<12}{'lhs':>10}{'rhs':>10}{'lhs/rhs':>10}  ok")
    t0 = time.perf_counter()
    for name, fn in MAPS.items():
        gmap = GridMap.from_function(fn, GRID)
        for xi in ("uniform", "one-over-t"):
            rep = verify_ring_inequality(gmap, RING, xi)
            print(f"{name:<16}{xi:<12}{rep.lhs:10.4f}{rep.rhs:10.4f}{rep.lhs / rep.rhs:10.4f}  {rep.satisfied}")
    print(f"total {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
