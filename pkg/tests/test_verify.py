import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isopath.errors import InvalidInputError
from isopath.planner import ToolConfig, ToolPath, plan
from isopath.verify import (
    PathQualityReport,
    _distance_along_side,
    analytic_regression,
    band_width,
    chord_deviation_audit,
    edge_distance,
    parse_surface,
    plan_quality,
    side_interval_error,
    van_der_corput,
)

from conftest import FLAT_TARGET

CFG = ToolConfig()


@pytest.fixture(scope="module")
def sphere_plan(sphere, sphere_param):
    return plan(sphere.cloud, sphere_param, CFG)


@pytest.fixture(scope="module")
def cylinder_plan(cylinder, cylinder_param):
    return plan(cylinder.cloud, cylinder_param, CFG)


# --- geometry helpers ----------------------------------------------------

def test_distance_in_normal_plane():
    poly = np.array([[0.0, -5, 3], [0.0, 5, 3]])
    d = _distance_along_side(np.array([0.0, 0, 0]), np.array([0.0, 1, 0]), poly)
    assert d == pytest.approx(3.0)


def test_distance_hits_vertex_exactly():
    poly = np.array([[2.0, 0, 0], [2.0, 1, 0], [2.0, 2, 0]])
    d = _distance_along_side(np.zeros(3), np.array([0.0, 1, 0]), poly)
    assert d == pytest.approx(2.0)


def test_distance_fallback_closest_point():
    poly = np.array([[1.0, 2, 0], [1.0, 3, 0]])
    d = _distance_along_side(np.zeros(3), np.array([0.0, 1, 0]), poly)
    assert d == pytest.approx(np.hypot(1.0, 2.0))


def test_distance_to_single_point():
    d = _distance_along_side(np.zeros(3), np.array([0.0, 1, 0]), np.array([[3.0, 4, 0]]))
    assert d == pytest.approx(5.0)


def test_van_der_corput_prefix():
    np.testing.assert_allclose(van_der_corput(4), [0.5, 0.25, 0.75, 0.125])
    assert np.all((van_der_corput(64) > 0) & (van_der_corput(64) < 1))


# --- side-interval error -------------------------------------------------

def test_flat_error_zero(flat_exact_param, flat_exact):
    paths = plan(flat_exact.cloud, flat_exact_param, CFG)
    err = side_interval_error(paths[3], paths[4])
    np.testing.assert_allclose(err.achieved, FLAT_TARGET, rtol=1e-6)
    assert err.epsilon.max() < 1e-4


def test_non_adjacent_rejected(sphere_plan):
    with pytest.raises(InvalidInputError):
        side_interval_error(sphere_plan[0], sphere_plan[2])


def test_single_point_path_swapped(disk20, disk20_param):
    paths = plan(disk20.cloud, disk20_param, ToolConfig(pattern="contour"))
    err = side_interval_error(paths[0], paths[1])
    assert err.path_a == 1 and len(err.achieved) == len(paths[1])
    np.testing.assert_allclose(err.achieved, paths[1].level * 20.0 / disk20_param.domain.radius, rtol=1e-3)


def test_missing_samples_rejected():
    a = ToolPath(0, np.zeros((2, 3)), np.zeros((2, 2)), "direction", "fill")
    b = ToolPath(1, np.ones((2, 3)), np.ones((2, 2)), "direction", "fill")
    with pytest.raises(InvalidInputError):
        side_interval_error(a, b)


def test_sphere_plan_quality(sphere_plan, sphere_param):
    rep = plan_quality(sphere_plan, sphere_param, CFG)
    assert rep.stats("interior")["mean"] <= 5.0
    assert rep.stats("boundary")["mean"] <= 8.0
    assert rep.near_boundary.any() and (~rep.near_boundary).any()
    np.testing.assert_allclose(rep.e_h, 2 * rep.epsilon)


def test_report_text_and_csv(sphere_plan, sphere_param):
    rep = plan_quality(sphere_plan, sphere_param, CFG)
    text = rep.to_text()
    assert "eps_interior_mean:" in text and "pass_chord:" in text
    rows = rep.to_csv().splitlines()
    assert rows[0].startswith("path_a,path_b")
    assert len(rows) == len(rep.epsilon) + 1
    with pytest.raises(InvalidInputError):
        rep.stats("edges")


def test_report_flags_limits():
    rep = PathQualityReport(
        pairs=np.zeros((2, 2)), params=np.zeros((2, 2)),
        predicted=np.array([1.0, 1.0]), achieved=np.array([1.0, 0.5]),
        near_boundary=np.array([False, True]), chord_max=0.02, chord_limit=0.0105,
    )
    assert rep.flags == {"interior_eps": True, "boundary_eps": False, "chord": False}
    assert not rep.passed


def test_quality_needs_two_paths(sphere_plan, sphere_param):
    with pytest.raises(InvalidInputError):
        plan_quality(sphere_plan[:1], sphere_param, CFG)


def test_band_width_and_edge_distance(sphere_plan, sphere_param):
    w = band_width(sphere_plan, sphere_param.domain)
    assert w == pytest.approx(sphere_plan[CFG.band_paths - 1].level)
    d = edge_distance(sphere_param.domain, np.array([[1.0, 5.0]]))
    assert d[0] == 1.0


# --- chord audit ---------------------------------------------------------

def test_cylinder_chord_bound(cylinder_plan, cylinder_param):
    worst = max(chord_deviation_audit(p, cylinder_param, 16) for p in cylinder_plan)
    assert worst <= 1.05 * CFG.chord


@settings(max_examples=10, deadline=None)
@given(n=st.integers(1, 31))
def test_audit_monotone_in_samples(cylinder_plan, cylinder_param, n):
    p = cylinder_plan[len(cylinder_plan) // 2]
    assert chord_deviation_audit(p, cylinder_param, n) <= chord_deviation_audit(p, cylinder_param, n + 1)


def test_audit_flat_zero(flat_exact, flat_exact_param):
    p = plan(flat_exact.cloud, flat_exact_param, CFG)[2]
    assert chord_deviation_audit(p, flat_exact_param) < 1e-9


def test_audit_bad_samples(cylinder_plan, cylinder_param):
    with pytest.raises(InvalidInputError):
        chord_deviation_audit(cylinder_plan[0], cylinder_param, 0)


# --- analytic regression -------------------------------------------------

@pytest.mark.parametrize("spec,expect", [
    ("plane", ("plane", np.inf)), ("sphere:50", ("sphere", 50.0)),
    ("cylinder", ("cylinder", 25.0)), ("Sphere:12.5", ("sphere", 12.5)),
])
def test_parse_surface(spec, expect):
    assert parse_surface(spec) == expect


@pytest.mark.parametrize("spec", ["torus", "sphere:abc", "cylinder:-3"])
def test_parse_surface_bad(spec):
    with pytest.raises(InvalidInputError):
        parse_surface(spec)


@pytest.mark.parametrize("spec", ["plane", "sphere:50", "cylinder:25"])
def test_analytic_regression_passes(spec):
    res = analytic_regression(spec)
    assert res.passed, res.to_text()
    assert res.to_text().endswith("result: PASS\n")
