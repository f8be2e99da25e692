import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from fdboundary.fuchsian import (
    FLAT,
    CertificationError,
    FuchsianGroup,
    GroupValidationError,
    OrbitExplosionError,
    Translation,
    dirichlet_polygon,
    orbit,
    paving_check,
    project,
    quotient_distance,
)
from fdboundary.hyperbolic import MobiusTransform, hyperbolic_distance

G = MobiusTransform(1.0, -0.5)  # z -> (z + 0.5) / (1 + 0.5 z)
CYCLIC = FuchsianGroup((G,))
TORUS = FuchsianGroup((Translation(1.0), Translation(1j)), FLAT)


def iterate_orbit(z0, radius, n=20):
    """Orbit points of the cyclic fixture by explicit iteration of the map and its inverse."""
    pts = [z0]
    for g in (G, G.inverse()):
        z = z0
        for _ in range(n):
            z = g.apply(z)
            pts.append(z)
    return np.sort_complex([p for p in pts if hyperbolic_distance(z0, p) <= radius])


@pytest.fixture(scope="module")
def cyclic_polygon():
    return dirichlet_polygon(CYCLIC, 0j, depth=4)


@pytest.fixture(scope="module")
def torus_polygon():
    return dirichlet_polygon(TORUS, 0j, depth=3)


def test_trivial_group_orbit():
    out = orbit(FuchsianGroup.trivial(), 0.2 + 0.1j, 5.0, 4)
    assert len(out) == 1
    elem, p = out[0]
    assert elem.word == () and p == 0.2 + 0.1j


@pytest.mark.parametrize("radius", [2.5, math.log(3) + 1e-6, 0.5, 4.0])
def test_cyclic_orbit_matches_explicit_iteration(radius):
    got = np.sort_complex([p for _, p in orbit(CYCLIC, 0j, radius, 12)])
    want = iterate_orbit(0j, radius)
    assert len(got) == len(want)
    assert np.allclose(got, want, atol=1e-12)


def test_cyclic_orbit_counts():
    # h(0, g^2(0)) = 2 log 3 < 2.5, so radius 2.5 holds five points
    assert 2 * math.log(3) < 2.5
    assert len(orbit(CYCLIC, 0j, 2.5, 10)) == 5
    assert len(orbit(CYCLIC, 0j, math.log(3) + 1e-6, 10)) == 3


def test_orbit_words_reproduce_transforms():
    for elem, p in orbit(CYCLIC, 0.1j, 4.0, 10):
        t = MobiusTransform.identity()
        for s in elem.word:
            t = t.compose(G if s > 0 else G.inverse())
        assert abs(t.apply(0.1j) - p) < 1e-9


def test_orbit_is_discrete():
    # Schottky pair: isometric circles of the generators are disjoint
    grp = FuchsianGroup((MobiusTransform(1.0, 0.9), MobiusTransform(1.0, 0.9j)))
    pts = np.array([p for _, p in orbit(grp, 0j, 3.0, 6)])
    d = hyperbolic_distance(pts[:, None], pts[None, :])
    d[np.diag_indices_from(d)] = np.inf
    assert d.min() > 0.5


def test_orbit_explosion_is_reported():
    grp = FuchsianGroup((MobiusTransform(1.0, 0.05), MobiusTransform(1.0, 0.05j)))
    with pytest.raises(OrbitExplosionError):
        orbit(grp, 0j, 3.0, 30, frontier_cap=50)


def test_validation_rejects_elliptic_and_identity():
    with pytest.raises(GroupValidationError):
        FuchsianGroup((MobiusTransform(np.exp(1j * math.sqrt(2)), 0.0),))
    with pytest.raises(GroupValidationError):
        FuchsianGroup((MobiusTransform.identity(),))
    with pytest.raises(GroupValidationError):
        FuchsianGroup((Translation(1.0), Translation(2.0)), FLAT)


def test_trivial_group_polygon():
    assert dirichlet_polygon(FuchsianGroup.trivial(), 0j, 3).sides == []


def test_cyclic_polygon_sides(cyclic_polygon):
    poly = cyclic_polygon
    assert len(poly.sides) == 2
    assert poly.equidistance_residual() < 1e-8
    r_star = brentq(lambda r: hyperbolic_distance(r, 0) - hyperbolic_distance(r, 0.5), 0, 0.5, xtol=1e-15)
    crossings = sorted(
        (s.center.real - math.copysign(s.radius, s.center.real)) for s in poly.sides
    )
    assert np.allclose(crossings, [-r_star, r_star], atol=1e-10)
    assert sorted(abs(w) for w in poly.neighbor_points) == pytest.approx([0.5, 0.5])
    assert poly.contains(0j)


def test_cyclic_polygon_is_convex(cyclic_polygon):
    rng = np.random.default_rng(3)
    z = 0.9 * np.sqrt(rng.random((2, 2000))) * np.exp(2j * np.pi * rng.random((2, 2000)))
    a, b = z[:, cyclic_polygon.contains(z[0]) & cyclic_polygon.contains(z[1])]
    from fdboundary.hyperbolic import geodesic_between

    for p, q in zip(a[:50], b[:50]):
        if abs(p - q) < 1e-6:
            continue
        assert cyclic_polygon.contains(geodesic_between(p, q).sample(20)).all()


def test_torus_polygon_is_unit_square(torus_polygon):
    poly = torus_polygon
    assert len(poly.sides) == 4
    corners = {(round(p.real, 9), round(p.imag, 9)) for s in poly.sides for p in (s.start, s.end)}
    assert corners == {(0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5)}


def test_paving_trivial():
    rep = paving_check(FuchsianGroup.trivial(), dirichlet_polygon(FuchsianGroup.trivial(), 0j, 1), 2000, 3)
    assert rep.covered_fraction == 1.0 and rep.multiply_covered_fraction == 0.0


def test_paving_cyclic(cyclic_polygon):
    rep = paving_check(CYCLIC, cyclic_polygon, samples=10_000, depth=6)
    assert rep.covered_fraction >= 0.999
    assert rep.multiply_covered_fraction <= 0.001


def test_paving_torus(torus_polygon):
    rep = paving_check(TORUS, torus_polygon, samples=10_000, depth=4)
    assert rep.covered_fraction == 1.0
    assert rep.multiply_covered_fraction <= 0.001


def test_paving_matches_projection_oracle(cyclic_polygon):
    # every sample has a representative in the polygon
    rng = np.random.default_rng(0)
    z = 0.95 * np.sqrt(rng.random(200)) * np.exp(2j * np.pi * rng.random(200))
    for w in z:
        assert cyclic_polygon.contains(project(CYCLIC, w, cyclic_polygon))


def test_quotient_distance_examples():
    assert quotient_distance(CYCLIC, 0.3j, 0.3j) == 0.0
    assert quotient_distance(CYCLIC, 0j, 0.5) < 1e-12
    want = min(hyperbolic_distance(0.25j, w) for w in (0, 0.5, -0.5))
    assert want == hyperbolic_distance(0.25j, 0)
    assert quotient_distance(CYCLIC, 0.25j, 0j) == pytest.approx(want, abs=1e-12)
    assert quotient_distance(FuchsianGroup.trivial(), 0.1, 0.4) == hyperbolic_distance(0.1, 0.4)


def test_quotient_distance_zero_on_orbits():
    for z in (0.1 + 0.2j, -0.3j, 0.45):
        for _, p in orbit(CYCLIC, z, 5.0, 10):
            assert quotient_distance(CYCLIC, z, p) < 1e-9


def test_quotient_distance_requires_depth():
    with pytest.raises(CertificationError):
        quotient_distance(CYCLIC, 0.0, 0.999, depth=1)


@settings(max_examples=100, deadline=None)
@given(
    st.complex_numbers(max_magnitude=0.8),
    st.complex_numbers(max_magnitude=0.8),
    st.complex_numbers(max_magnitude=0.8),
)
def test_quotient_metric_axioms(a, b, c):
    dab = quotient_distance(CYCLIC, a, b)
    assert abs(dab - quotient_distance(CYCLIC, b, a)) < 1e-10
    assert dab <= hyperbolic_distance(a, b) + 1e-12
    assert dab <= quotient_distance(CYCLIC, a, c) + quotient_distance(CYCLIC, c, b) + 1e-9


def test_project_examples(cyclic_polygon, torus_polygon):
    assert project(CYCLIC, 0.1 + 0.1j, cyclic_polygon) == 0.1 + 0.1j
    assert abs(project(CYCLIC, 0.5, cyclic_polygon)) < 1e-12
    assert project(TORUS, 1.3 + 0.2j, torus_polygon) == pytest.approx(0.3 + 0.2j, abs=1e-12)


def test_project_is_constant_on_orbits(cyclic_polygon):
    rng = np.random.default_rng(11)
    for w in 0.7 * np.sqrt(rng.random(30)) * np.exp(2j * np.pi * rng.random(30)):
        base = project(CYCLIC, w, cyclic_polygon)
        for _, p in orbit(CYCLIC, w, 3.0, 6):
            assert abs(project(CYCLIC, p, cyclic_polygon) - base) < 1e-8


def test_project_breaks_boundary_ties(torus_polygon):
    # 0.5 and -0.5 are both on the square boundary; the lexicographic minimum wins
    assert project(TORUS, 0.5, torus_polygon) == pytest.approx(-0.5)
    assert project(TORUS, -0.5, torus_polygon) == pytest.approx(-0.5)
