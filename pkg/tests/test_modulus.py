import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fdboundary.distortion import DilatationField, GridGeometry, GridMap
from fdboundary.hyperbolic import MobiusTransform, hyperbolic_distance
from fdboundary.modulus import (
    EUCLIDEAN,
    CurveFamily,
    DegenerateCurveError,
    InadmissibleXiError,
    RingSpec,
    discrete_modulus,
    graph_modulus,
    horizontal_segments,
    ring_majorant,
    make_xi,
    radial_segments,
    rasterize,
    ring_family,
    solve_qp,
    verify_ring_inequality,
    xi_integral,
)

BIG = GridGeometry(-0.8 - 0.8j, 1 / 256, 411, 411)


@pytest.mark.parametrize("a, b", [(1.0, 0.5), (0.5, 1.0), (1.0, 1.0)])
def test_rectangle_modulus(a, b):
    n = 256
    h = max(a, b) / n
    fam = horizontal_segments(a, b, int(round(b / h)))
    geom = GridGeometry(0.5 * h * (1 + 1j), h, int(round(a / h)), int(round(b / h)))
    value, density = discrete_modulus(fam, geom)
    assert value == pytest.approx(b / a, rel=0.02)
    assert density.curve_integrals(fam).min() >= 1 - 1e-9


def test_annulus_modulus():
    res = discrete_modulus(radial_segments(0.2, 0.4, 4096), resolution=512)
    assert res.value == pytest.approx(2 * math.pi / math.log(2), rel=0.05)
    assert res.converged
    assert res.lower_bound <= res.value


def test_point_curve_is_degenerate():
    fam = CurveFamily([np.array([0.1, 0.3]), np.array([0.2 + 0.2j, 0.2 + 0.2j])], EUCLIDEAN)
    with pytest.raises(DegenerateCurveError):
        discrete_modulus(fam, GridGeometry(0j, 0.01, 50, 50))


def test_rasterized_lengths_match_curve_lengths():
    fam = radial_segments(0.1, 0.3, 16, n_vertices=9)
    L = rasterize(fam, GridGeometry(-0.4 - 0.4j, 1 / 128, 103, 103))
    assert np.allclose(np.asarray(L.sum(axis=1)).ravel(), 0.2, rtol=1e-12)
    spec = RingSpec(0.2j, 0.3, 0.9)
    hyp = ring_family(spec, 8, n_vertices=400)
    L = rasterize(hyp, GridGeometry(-0.8 - 0.8j, 1 / 128, 205, 205))
    assert np.allclose(np.asarray(L.sum(axis=1)).ravel(), 0.6, rtol=1e-5)


def test_ring_family_endpoints():
    fam = ring_family(RingSpec(0, 0.5, 1.0), 16)
    assert len(fam) == 16
    for c in fam.curves:
        assert hyperbolic_distance(0, c[0]) == pytest.approx(0.5, abs=1e-8)
        assert hyperbolic_distance(0, c[-1]) == pytest.approx(1.0, abs=1e-8)
    for c in ring_family(RingSpec(0.3, 0.2, 0.7), 8).curves:
        assert hyperbolic_distance(0.3, c[0]) == pytest.approx(0.2, abs=1e-8)
        assert hyperbolic_distance(0.3, c[-1]) == pytest.approx(0.7, abs=1e-8)


def test_ring_spec_rejects_degenerate():
    with pytest.raises(ValueError):
        RingSpec(0, 1.0, 1.0)
    with pytest.raises(ValueError):
        ring_family(RingSpec(0, 0.5, 1.0), 4)


def test_ring_modulus_matches_annulus_formula():
    spec = RingSpec(0, 0.5, 1.0)
    res = discrete_modulus(ring_family(spec, 2048), resolution=512)
    assert res.value == pytest.approx(spec.exact_modulus(), rel=0.05)


def test_conformal_invariance():
    fam = ring_family(RingSpec(0, 0.5, 1.0), 2048)
    base = discrete_modulus(fam, resolution=512).value
    T = MobiusTransform(np.exp(0.4j), 0.3 + 0.2j)
    moved = discrete_modulus(fam.mapped(T.apply_unchecked), resolution=512).value
    assert moved == pytest.approx(base, rel=0.05)


def test_monotone_in_family():
    geom = GridGeometry(-0.45 - 0.45j, 1 / 128, 116, 116)
    small = radial_segments(0.2, 0.4, 64)
    extra = radial_segments(0.2, 0.4, 64, center=0.01)
    big = CurveFamily(small.curves + extra.curves, EUCLIDEAN)
    assert discrete_modulus(big, geom).value >= discrete_modulus(small, geom).value - 1e-6


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_density_is_admissible(n, seed):
    rng = np.random.default_rng(seed)
    curves = [np.cumsum(0.05 * (rng.random(6) - 0.5 + 1j * (rng.random(6) - 0.5))) + 0.5 + 0.5j for _ in range(n)]
    fam = CurveFamily(curves, EUCLIDEAN)
    res = discrete_modulus(fam, GridGeometry(0.3 + 0.3j, 0.01, 41, 41))
    assert res.density.curve_integrals(fam).min() >= 1 - 1e-9
    assert res.lower_bound <= res.value * (1 + 1e-12)


def test_solver_certificate_on_two_overlapping_constraints():
    # rho in two cells, area 1 each; constraints rho0 + rho1 >= 1 and rho1 >= 1 -> rho = (0, 1)
    import scipy.sparse as sp

    L = sp.csr_matrix(np.array([[1.0, 1.0], [0.0, 1.0]]))
    sol = solve_qp(L, np.ones(2), tol=1e-10)
    assert sol.upper == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(sol.rho, [0, 1], atol=1e-6)


@pytest.mark.parametrize(
    "name, R1, R2",
    [("uniform", 0.5, 1.0), ("one-over-t", 0.5, 1.0), ("one-over-t-log", 0.1, 0.5)],
)
def test_xi_are_normalised(name, R1, R2):
    assert xi_integral(make_xi(name, R1, R2), R1, R2) == pytest.approx(1.0, abs=1e-9)


def unit_field(geom=BIG, c=1.0):
    return DilatationField.from_function(lambda z: np.full(z.shape, c), geom)


def test_ring_majorant_uniform_matches_ring_area():
    spec = RingSpec(0, 0.5, 1.0)
    oracle = quad(lambda R: 2 * math.pi * math.sinh(R), 0.5, 1.0)[0] / 0.5 ** 2
    rhs = ring_majorant(unit_field(), spec, make_xi("uniform", 0.5, 1.0))
    assert rhs == pytest.approx(oracle, rel=0.01)


def test_ring_majorant_is_linear_in_k():
    spec = RingSpec(0.1, 0.5, 1.0)
    xi = make_xi("one-over-t", 0.5, 1.0)
    assert ring_majorant(unit_field(c=3.0), spec, xi) == pytest.approx(3 * ring_majorant(unit_field(), spec, xi), rel=1e-12)


def test_ring_majorant_rejects_small_xi():
    with pytest.raises(InadmissibleXiError):
        ring_majorant(unit_field(), RingSpec(0, 0.5, 1.0), lambda t: np.full(np.shape(t), 1.0))


def test_ring_majorant_infinite_on_degenerate_cell():
    fld = unit_field()
    z = BIG.nodes()
    i, j = np.unravel_index(np.argmin(np.abs(z - 0.35)), z.shape)
    fld.flags[i, j] = 2
    fld.k_values[i, j] = np.inf
    assert ring_majorant(fld, RingSpec(0, 0.5, 1.0), make_xi("uniform", 0.5, 1.0)) == math.inf


def radial(a):
    return lambda z: z * np.abs(z) ** (a - 1)


EUCLID_RING = RingSpec(0, 2 * math.atanh(0.2), 2 * math.atanh(0.4))


def test_ring_inequality_identity():
    rep = verify_ring_inequality(GridMap.from_function(lambda z: z, BIG), RingSpec(0, 0.5, 1.0), "uniform")
    assert rep.satisfied
    assert rep.lhs <= rep.rhs
    assert rep.lhs == pytest.approx(RingSpec(0, 0.5, 1.0).exact_modulus(), rel=0.05)


def test_ring_inequality_stretch_has_positive_slack():
    rep = verify_ring_inequality(GridMap.from_function(radial(2), BIG), EUCLID_RING, "uniform")
    assert rep.satisfied and rep.slack > 0
    # image ring is 0.04 < |w| < 0.16
    assert rep.lhs == pytest.approx(2 * math.pi / math.log(4), rel=0.05)


def test_ring_inequality_rejects_bad_xi():
    with pytest.raises(InadmissibleXiError):
        verify_ring_inequality(GridMap.from_function(lambda z: z, BIG), EUCLID_RING, lambda t: 0.5 + 0 * t)


def test_graph_modulus_annulus():
    n = 61
    g = GridGeometry(-0.5 - 0.5j, 1 / (n - 1), n, n)
    r = np.abs(g.nodes())
    D = (r < 0.45) & (r > 0.15)
    E = (r <= 0.15) & (r > 0.15 - 1.5 * g.spacing)
    F = (r >= 0.45) & (r < 0.45 + 1.5 * g.spacing)
    res = graph_modulus(g, D, E, F)
    # 8-neighbour paths are slightly longer than straight lines, so the value sits below the continuum one
    assert res.converged
    assert 0.8 * 2 * math.pi / math.log(3) < res.value < 1.05 * 2 * math.pi / math.log(3)
    assert res.lower_bound <= res.value
