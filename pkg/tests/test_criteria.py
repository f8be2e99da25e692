import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fdboundary.criteria import (
    BOUNDED_MEAN,
    CALDERON,
    FMO,
    LEHTO,
    ORLICZ,
    AnalyticField,
    CriteriaConfig,
    InadmissiblePsiError,
    InsufficientScalesError,
    OutOfDomainError,
    bounded_mean_test,
    calderon_test,
    circle_norm,
    circle_profile,
    classify_boundary_point,
    fmo_test,
    half_plane,
    lehto_test,
    log_growth_test,
    orlicz_test,
    psi_criterion,
    radial_field,
)
from fdboundary.distortion import DilatationField, GridGeometry
from fdboundary.phi import exp_phi

P0 = 0.3 + 0.1j
D = half_plane(P0, 0.7)


def field(k, p0=P0, inside=D):
    return radial_field(k, p0, inside)


ONE = lambda h: np.ones_like(h)
LOG = lambda h: np.maximum(1.0, np.log(1 / h))
INV2 = lambda h: 1 / h ** 2


@pytest.mark.parametrize("p0", [0j, 0.4 - 0.2j])
@pytest.mark.parametrize("r", [0.05, 0.5, 1.5])
def test_circle_norm_is_circumference(p0, r):
    assert circle_norm(field(ONE, p0, None), p0, r) == pytest.approx(2 * math.pi * math.sinh(r), rel=0.01)
    assert circle_norm(field(lambda h: 3 + 0 * h, p0, None), p0, r) == pytest.approx(
        3 * circle_norm(field(ONE, p0, None), p0, r), rel=1e-12
    )


def test_circle_norm_half_plane_and_degenerate():
    assert circle_norm(field(ONE), P0, 0.3) == pytest.approx(math.pi * math.sinh(0.3), rel=1e-12)
    g = GridGeometry(-0.5 - 0.5j, 1 / 128, 129, 129)
    fld = DilatationField.from_function(lambda z: np.ones(z.shape), g)
    i, j, _ = g.nearest(np.tanh(0.25))
    fld.k_values[i, j] = np.inf
    assert circle_norm(fld, 0j, 0.5) == math.inf
    with pytest.raises(OutOfDomainError):
        circle_norm(fld, 0j, 2.0)


def test_lehto_partial_sums_match_quadrature():
    prof = circle_profile(field(ONE), P0, 0.25)
    v = lehto_test(prof)
    oracle = [quad(lambda r: 1 / (math.pi * math.sinh(r)), 0.25 * 2.0 ** -m, 0.25)[0] for m in range(1, 11)]
    assert np.allclose(v.evidence["partial_sums"], oracle, rtol=1e-8)
    assert v.passed and len(v.evidence["partial_sums"]) == 10


@pytest.mark.parametrize("k, passed", [(ONE, True), (LOG, True), (INV2, False)], ids=["one", "log", "inv2"])
def test_lehto_examples(k, passed):
    assert lehto_test(circle_profile(field(k), P0)).passed is passed


def test_lehto_needs_eight_scales():
    with pytest.raises(InsufficientScalesError):
        lehto_test(circle_profile(field(ONE), P0, n_scales=5))


@pytest.mark.parametrize(
    "k, plain, weak",
    [
        (lambda h: 3 * np.log(1 / h), True, True),
        (lambda h: np.log(1 / h) ** 2, False, False),
        (lambda h: np.log(1 / h) * np.log(np.log(1 / h)), False, True),
    ],
    ids=["3log", "log2", "loglog"],
)
def test_log_growth_examples(k, plain, weak):
    prof = circle_profile(field(k, inside=None), P0, 0.25)
    assert log_growth_test(prof, "log").passed is plain
    assert log_growth_test(prof, "loglog").passed is weak


def test_calderon_is_psi_one_over_t():
    fld = field(LOG)
    a = calderon_test(fld, P0)
    b = psi_criterion(fld, P0, lambda t: 1 / t, name=CALDERON)
    assert a.as_dict() == b.as_dict()


def test_calderon_lhs_matches_quadrature():
    v = calderon_test(field(ONE), P0, 0.25)
    oracle = quad(lambda t: math.pi * math.sinh(t) / t ** 2, 0.25 / 1024, 0.25, limit=200)[0]
    assert v.evidence["lhs"][-1] == pytest.approx(oracle, rel=1e-8)
    assert v.evidence["I"][-1] == pytest.approx(math.log(1024), rel=1e-12)


@pytest.mark.parametrize(
    "k, loglog, passed",
    [(ONE, False, True), (LOG, False, False), (lambda h: h ** 2, False, True), (LOG, True, True), (INV2, True, False)],
    ids=["one", "log", "decaying", "log-loglog", "inv2-loglog"],
)
def test_calderon_examples(k, loglog, passed):
    assert calderon_test(field(k), P0, loglog=loglog).passed is passed


def test_zero_psi_is_inadmissible():
    with pytest.raises(InadmissiblePsiError):
        psi_criterion(field(ONE), P0, lambda t: 0 * t)


def test_orlicz_collar_sums_match_quadrature():
    v = orlicz_test(field(ONE), exp_phi(1.0), P0, 0.25)
    oracle = quad(lambda t: math.e * math.pi * math.sinh(t), 0.25 * 2.0 ** -20, 0.25)[0]
    assert v.evidence["partial_sums"][-1] == pytest.approx(oracle, rel=1e-9)


@pytest.mark.parametrize(
    "k, finite, passed",
    [(ONE, True, True), (LOG, True, True), (lambda h: 1 / h, False, False)],
    ids=["one", "log", "inv"],
)
def test_orlicz_examples(k, finite, passed):
    v = orlicz_test(field(k), exp_phi(1.0), P0)
    assert v.evidence["finite"] is finite
    assert v.passed is passed


def test_fmo_oscillation_of_log_matches_radial_oracle():
    # mean deviation of log(1/r) over a small disk, with dh ~ r dr dtheta: 1/e
    v = fmo_test(field(lambda h: np.log(1 / h), inside=None), P0, 0.25)
    assert v.evidence["partial_sums"][-1] == pytest.approx(1 / math.e, rel=2e-3)
    assert v.passed


@pytest.mark.parametrize(
    "k, fmo, bounded",
    [(ONE, True, True), (LOG, True, False), (lambda h: 1 / h, False, False), (lambda h: h ** -0.5, False, False)],
    ids=["one", "log", "inv", "inv-sqrt"],
)
def test_disk_mean_examples(k, fmo, bounded):
    assert fmo_test(field(k), P0).passed is fmo
    assert bounded_mean_test(field(k), P0).passed is bounded


@pytest.mark.parametrize(
    "k, expected, predicted",
    [
        (ONE, {t: True for t in ("lehto", "log_growth", "calderon", "orlicz", "fmo", "bounded_mean")}, True),
        (LOG, {LEHTO: True, FMO: True, BOUNDED_MEAN: False, ORLICZ: True}, True),
        (INV2, {t: False for t in ("lehto", "log_growth", "log_growth_loglog", "calderon", "calderon_loglog",
                                   "orlicz", "fmo", "bounded_mean")}, False),
    ],
    ids=["one", "log", "inv2"],
)
def test_classifier_fixtures(k, expected, predicted):
    rep = classify_boundary_point(field(k), P0)
    assert not rep.errors
    assert {t: rep.verdicts[t].passed for t in expected} == expected
    assert rep.prediction is predicted
    assert rep.as_dict() == classify_boundary_point(field(k), P0).as_dict()


@pytest.mark.parametrize("k", [ONE, LOG, INV2, lambda h: 1 / h, lambda h: h ** -0.5, lambda h: 2 + np.sin(1 / h)])
def test_bounded_mean_implies_fmo(k):
    rep = classify_boundary_point(field(k), P0)
    if rep.verdicts[BOUNDED_MEAN].passed:
        assert rep.verdicts[FMO].passed


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.0, 2.0))
def test_lehto_monotone_in_k(c, p):
    base = lehto_test(circle_profile(field(LOG), P0)).evidence["partial_sums"]
    bigger = lehto_test(circle_profile(field(lambda h: LOG(h) + c * h ** -p), P0)).evidence["partial_sums"]
    assert np.all(np.array(bigger) <= np.array(base) * (1 + 1e-12))


def test_grid_field_reports_resolution():
    g = GridGeometry(-0.6 - 0.6j, 1.2 / 256, 257, 257)
    z = g.nodes()
    fld = DilatationField.from_function(lambda w: np.ones(w.shape), g, (z.imag > 0) & (np.abs(z) < 0.95))
    rep = classify_boundary_point(fld, 0j)
    assert rep.prediction and rep.verdicts[LEHTO].passed
    assert rep.resolution == pytest.approx(4 * 1.2 / 256)
    assert 0 < rep.resolved_scales < 10


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        CriteriaConfig.from_dict({"bogus": 1})
    rep = classify_boundary_point(field(ONE), P0, {"tests": ["lehto"], "n_scales": 5})
    assert rep.verdicts[LEHTO].verdict == "inconclusive" and rep.errors


def test_analytic_field_chart():
    with pytest.raises(OutOfDomainError):
        # tanh(20) rounds onto the unit circle
        circle_norm(AnalyticField(lambda z: np.ones(z.shape)), 0j, 40.0)
