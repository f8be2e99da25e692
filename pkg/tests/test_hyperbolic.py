import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdboundary.hyperbolic import (
    DegenerateError,
    DomainError,
    MobiusTransform,
    compose,
    geodesic_between,
    hyperbolic_area,
    hyperbolic_distance,
    hyperbolic_length,
    perpendicular_bisector,
)


def mp_distance(z1, z2):
    """log((1+t)/(1-t)) in 50-digit arithmetic."""
    mpmath.mp.dps = 50
    z1, z2 = mpmath.mpc(z1), mpmath.mpc(z2)
    t = abs(z1 - z2) / abs(1 - z1 * mpmath.conj(z2))
    return mpmath.log((1 + t) / (1 - t))


def disk_points(max_abs=0.95):
    return st.builds(
        lambda r, a: r * complex(math.cos(a), math.sin(a)),
        st.floats(0.0, max_abs),
        st.floats(0.0, 2 * math.pi),
    )


def mobius():
    return st.builds(
        lambda phi, c: MobiusTransform(complex(math.cos(phi), math.sin(phi)), c),
        st.floats(0.0, 2 * math.pi),
        disk_points(0.9),
    )


R_ONE = (math.e - 1) / (math.e + 1)


@pytest.mark.parametrize(
    "z1, z2, expected",
    [(0, 0, 0.0), (0, R_ONE, 1.0), (0, 0.5, math.log(3))],
)
def test_distance_closed_forms(z1, z2, expected):
    assert hyperbolic_distance(z1, z2) == pytest.approx(expected, abs=1e-10)
    assert float(mp_distance(z1, z2)) == pytest.approx(expected, abs=1e-12)


@given(disk_points(0.999), disk_points(0.999))
def test_distance_matches_high_precision_formula(z1, z2):
    ref = float(mp_distance(z1, z2))
    assert hyperbolic_distance(z1, z2) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_distance_rejects_boundary_points():
    with pytest.raises(DomainError):
        hyperbolic_distance(0, 1.0)
    with pytest.raises(DomainError):
        hyperbolic_distance(0, 1 - 1e-13)


def test_apply_examples():
    assert MobiusTransform.identity().apply(0.3 + 0.4j) == 0.3 + 0.4j
    g = MobiusTransform(1.0, 0.5)
    assert g.apply(0.5) == 0
    assert g.apply(0) == -0.5


@given(mobius(), disk_points(0.99))
def test_apply_inverse_roundtrip(g, z):
    assert abs(g.inverse().apply(g.apply(z)) - z) < 1e-12


@given(mobius(), mobius(), disk_points(0.95))
def test_compose_matches_sequential_apply(g1, g2, z):
    assert abs(compose(g1, g2).apply(z) - g1.apply(g2.apply(z))) < 1e-11


def test_compose_examples():
    g = MobiusTransform(1j, 0.2 - 0.4j)
    assert compose(MobiusTransform.identity(), g).apply(0.1) == pytest.approx(g.apply(0.1), abs=1e-14)
    assert compose(g, g.inverse()).is_identity(1e-12)
    a = MobiusTransform(1.0, 0.3)
    assert abs(compose(a, a).apply(0) - a.apply(a.apply(0))) < 1e-11


@settings(max_examples=200)
@given(mobius(), disk_points(0.97), disk_points(0.97))
def test_isometry(g, z1, z2):
    assert abs(hyperbolic_distance(g.apply(z1), g.apply(z2)) - hyperbolic_distance(z1, z2)) < 1e-9


def test_triangle_inequality_random_triples():
    rng = np.random.default_rng(7)
    r = 0.99 * np.sqrt(rng.random((3, 10_000)))
    z = r * np.exp(2j * np.pi * rng.random((3, 10_000)))
    a, b, c = z
    slack = hyperbolic_distance(a, b) + hyperbolic_distance(b, c) - hyperbolic_distance(a, c)
    assert slack.min() >= -1e-12
    assert np.all(hyperbolic_distance(a, b) == hyperbolic_distance(b, a))


def test_length_examples():
    assert hyperbolic_length([0.3j, 0.3j]) == 0.0
    assert hyperbolic_length([0, 0.5]) == pytest.approx(math.log(3), abs=1e-6)
    assert hyperbolic_length([0, R_ONE]) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(DegenerateError):
        hyperbolic_length([0.1])


def test_geodesic_polyline_length_converges_to_distance():
    z1, z2 = 0.5 + 0.1j, -0.2 + 0.7j
    arc = geodesic_between(z1, z2)
    target = hyperbolic_distance(z1, z2)
    errs = [abs(hyperbolic_length(arc.sample(n)) - target) for n in (4, 16, 64, 256)]
    assert errs[-1] < 1e-6
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_area_examples():
    assert hyperbolic_area(lambda z: np.zeros(z.shape, bool), 64) == 0.0
    t = 0.25
    oracle = 4 * math.pi * t / (1 - t)
    assert hyperbolic_area(lambda z: np.abs(z) < 0.5, 1024) == pytest.approx(oracle, rel=0.01)


def test_area_full_disk_matches_radial_quadrature():
    from scipy.integrate import quad

    oracle = quad(lambda r: 2 * math.pi * r * 4 / (1 - r * r) ** 2, 0, 0.99)[0]
    assert hyperbolic_area(lambda z: np.abs(z) < 0.99, 1024) == pytest.approx(oracle, rel=0.01)


def test_area_is_monotone_in_the_set():
    small = hyperbolic_area(lambda z: np.abs(z - 0.1) < 0.3, 256)
    big = hyperbolic_area(lambda z: np.abs(z - 0.1) < 0.4, 256)
    assert big > small


def test_area_invariant_under_mobius():
    g = MobiusTransform(np.exp(0.4j), 0.3 - 0.2j)
    ginv = g.inverse()
    base = hyperbolic_area(lambda z: np.abs(z) < 0.6, 1024)
    moved = hyperbolic_area(lambda z: np.abs(ginv.apply(z)) < 0.6, 1024)
    assert moved == pytest.approx(base, rel=0.01)


def test_geodesic_examples():
    arc = geodesic_between(0, 0.5)
    assert arc.kind == "diameter"
    arc = geodesic_between(0.5, 0.5j)
    assert arc.kind == "circular-arc"
    assert arc.orthogonality_residual() < 1e-10
    for z in (0.5, 0.5j):
        assert abs(abs(z - arc.center) - arc.radius) < 1e-12
    assert geodesic_between(-0.3, 0.3).kind == "diameter"
    with pytest.raises(DegenerateError):
        geodesic_between(0.2, 0.2)


def test_geodesic_is_length_minimizing_path():
    z1, z2 = 0.6 + 0.2j, -0.1 - 0.7j
    along = hyperbolic_length(geodesic_between(z1, z2).sample(400))
    straight = hyperbolic_length(np.linspace(z1, z2, 400))
    assert along == pytest.approx(hyperbolic_distance(z1, z2), abs=1e-6)
    assert straight > along


def bisector_residual(z1, z2, n=100):
    p = perpendicular_bisector(z1, z2).sample(n, trim=0.01)
    return np.max(np.abs(hyperbolic_distance(p, z1) - hyperbolic_distance(p, z2)))


def test_bisector_examples():
    arc = perpendicular_bisector(-0.5, 0.5)
    assert arc.kind == "diameter"
    assert abs(arc.start.real) < 1e-12 and abs(arc.end.real) < 1e-12
    # hyperbolic midpoint of 0 and 0.8, found by a 1-D root search on the real axis
    from scipy.optimize import brentq

    r_star = brentq(lambda r: hyperbolic_distance(r, 0) - hyperbolic_distance(r, 0.8), 0.0, 0.8, xtol=1e-15)
    arc = perpendicular_bisector(0, 0.8)
    crossing = arc.center.real - arc.radius
    assert crossing == pytest.approx(r_star, abs=1e-10)
    assert bisector_residual(0, 0.8) < 1e-8
    assert bisector_residual(0.2, 0.6) < 1e-8


@given(disk_points(0.9), disk_points(0.9))
def test_bisector_equidistance(z1, z2):
    if hyperbolic_distance(z1, z2) < 1e-3:
        return
    arc = perpendicular_bisector(z1, z2)
    assert arc.orthogonality_residual() < 1e-9
    assert bisector_residual(z1, z2, 50) < 1e-8
