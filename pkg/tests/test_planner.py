import numpy as np
import pytest

from isopath import synthetic
from isopath.diffgeo import DerivativeSample
from isopath.errors import GougingError, InvalidCurvatureError, InvalidInputError, TooSparseError
from isopath.param import Parameterization, Rect, parameterize
from isopath.planner import (
    ToolConfig,
    forward_interval,
    forward_step,
    plan,
    plan_contour_parallel,
    plan_direction_parallel,
    side_curvature_euler,
    side_interval,
    side_step_boundary,
    side_step_interior,
)

from conftest import FLAT_TARGET

CFG = ToolConfig()


def make_sample(theta=np.pi / 2, ru=1.0, rv=1.0, L=0.0, N=0.0):
    """Hand-built sample with a unit normal along z."""
    r_u = np.array([ru, 0.0, 0.0])
    r_v = rv * np.array([np.cos(theta), np.sin(theta), 0.0])
    E, G = ru * ru, rv * rv
    return DerivativeSample(
        q=np.zeros(2), position=np.zeros(3), r_u=r_u, r_v=r_v,
        r_uu=np.array([0.0, 0.0, L]), r_vv=np.array([0.0, 0.0, N]),
        normal=np.array([0.0, 0.0, 1.0]), sigma=0.5 * (ru + rv), theta=theta,
        E=E, G=G, L2f=L, N2f=N, delta=(1.0, 1.0),
    )


# --- intervals -----------------------------------------------------------

def test_forward_interval_closed_form():
    assert forward_interval(50.0, 0.01) == pytest.approx(np.sqrt(8 * 0.01 * 50 - 4e-4))
    assert forward_interval(np.inf, 0.01, cap=2.0) == 2.0


def test_forward_interval_flat_needs_cap():
    with pytest.raises(InvalidInputError):
        forward_interval(np.inf, 0.01)


def test_forward_interval_too_curved():
    with pytest.raises(InvalidCurvatureError):
        forward_interval(0.004, 0.01)


def test_side_interval_cases():
    assert side_interval(np.inf, 1, 4, True) == pytest.approx(FLAT_TARGET)
    assert side_interval(50, 1, 4, True) == pytest.approx(np.sqrt(32 * 50 / 54))
    assert side_interval(50, 1, 4, False) == pytest.approx(np.sqrt(32 * 50 / 46))
    # convex shrinks, concave widens relative to flat
    assert side_interval(50, 1, 4, True) < FLAT_TARGET < side_interval(50, 1, 4, False)


def test_side_interval_gouging():
    with pytest.raises(GougingError):
        side_interval(3.0, 1, 4, False)
    # convex regions never gouge
    side_interval(3.0, 1, 4, True)


def test_side_interval_bad_scallop():
    with pytest.raises(InvalidInputError):
        side_interval(10.0, 5, 4, True)


# --- steps ---------------------------------------------------------------

def test_forward_step_flat_uses_cap():
    s = make_sample(ru=2.0, rv=2.0)
    assert forward_step(s, CFG, extent=40.0) == pytest.approx(0.05 * 40.0)


def test_forward_step_curved():
    s = make_sample(rv=2.0, N=-4.0 / 50.0)
    lf = np.sqrt(8 * 0.01 * 50 - 4e-4)
    assert forward_step(s, CFG, extent=400.0) == pytest.approx(lf / 2.0)


def test_side_step_interior_divides_by_ru():
    s = make_sample(ru=2.0, rv=2.0)
    assert side_step_interior(s, CFG) == pytest.approx(FLAT_TARGET / 2.0)


def test_euler_side_curvature():
    s = make_sample(N=-1 / 50.0)
    c = side_curvature_euler(s, H=-1 / 50.0)
    assert c.radius == pytest.approx(50.0) and c.convex


def test_boundary_matches_interior_when_orthogonal():
    kU, kV = -1 / 40.0, -1 / 60.0
    s = make_sample(L=kU, N=kV)
    H = 0.5 * (kU + kV)
    assert abs(side_step_boundary(s, H, CFG) - side_step_interior(s, CFG)) <= 1e-9


def test_boundary_widens_oblique_flat():
    s = make_sample(theta=np.pi / 3)
    ratio = side_step_boundary(s, 0.0, CFG) / side_step_interior(s, CFG)
    assert ratio == pytest.approx(1 / np.cos(np.pi / 6), rel=1e-12)


# --- config --------------------------------------------------------------

@pytest.mark.parametrize("kw", [
    {"cutter_radius": 0.0}, {"scallop": 5.0}, {"chord": -1.0}, {"pattern": "spiral"},
    {"band_paths": 2}, {"band_paths": 6}, {"max_step_fraction": 0.0}, {"fan": 2},
])
def test_tool_config_validation(kw):
    with pytest.raises(InvalidInputError):
        ToolConfig(**kw)


def test_tool_config_scaled():
    c = CFG.scaled(10)
    assert (c.cutter_radius, c.scallop, c.chord) == (40.0, 10.0, 0.1)
    assert c.band_paths == CFG.band_paths


# --- direction-parallel --------------------------------------------------

@pytest.fixture(scope="module")
def flat_paths(flat_exact, flat_exact_param):
    return plan_direction_parallel(flat_exact.cloud, flat_exact_param, CFG)


def test_flat_exact_spacing(flat_paths):
    levels = np.array([p.level for p in flat_paths])
    assert len(flat_paths) == 8
    np.testing.assert_allclose(np.diff(levels), FLAT_TARGET, rtol=1e-6)


def test_paths_indexed_sorted_and_span(flat_paths, flat_exact_param):
    assert [p.index for p in flat_paths] == list(range(len(flat_paths)))
    b = flat_exact_param.domain.b
    for p in flat_paths:
        assert p.params[0, 1] == 0.0 and p.params[-1, 1] == b
        assert np.all(np.diff(p.params[:, 1]) > 0)
        assert len(p.samples) == len(p)
    stages = [p.stage for p in flat_paths]
    assert stages.count("band") == 2 * CFG.band_paths


def test_plane40_spacing_never_exceeds_target(plane40, plane40_param):
    paths = plan(plane40.cloud, plane40_param, CFG)
    gaps = np.diff([p.level for p in paths])
    assert len(paths) == 9
    assert gaps.max() <= FLAT_TARGET * (1 + 1e-3)
    assert paths[0].level == 0.0 and paths[-1].level == pytest.approx(plane40_param.domain.a)


def test_band_collapse_narrow_strip():
    s = synthetic.plane(12.0, 30.0, spacing=1.0)
    param = parameterize(s.cloud, s.breaks)
    cfg = ToolConfig(scallop=3.0)
    paths = plan(s.cloud, param, cfg)
    assert all(p.stage == "band" for p in paths)
    gaps = np.diff([p.level for p in paths])
    assert gaps.max() <= np.sqrt(8 * 3 * 4) + 1e-9
    assert paths[-1].level == pytest.approx(param.domain.a)


def test_direction_needs_rect(disk20, disk20_param):
    with pytest.raises(InvalidInputError):
        plan_direction_parallel(disk20.cloud, disk20_param, CFG)


def test_too_sparse():
    s = synthetic.plane(3.0, spacing=1.5, k=4)
    param = Parameterization(s.cloud, Rect(3.0, 3.0), s.cloud.points[:, :2])
    with pytest.raises(TooSparseError):
        plan(s.cloud, param, CFG)


def test_sphere_side_steps_tighter_than_flat(sphere, sphere_param):
    paths = plan(sphere.cloud, sphere_param, CFG)
    gaps = np.diff([p.level for p in paths])
    assert len(paths) > 8
    # convex curvature shrinks the interval below the flat value
    assert gaps.max() < FLAT_TARGET


# --- contour-parallel ----------------------------------------------------

@pytest.fixture(scope="module")
def disk_paths(disk20, disk20_param):
    return plan_contour_parallel(disk20.cloud, disk20_param, ToolConfig(pattern="contour"))


def test_contour_first_path_single_point(disk_paths):
    first = disk_paths[0]
    assert len(first) == 1 and first.level == 0.0
    np.testing.assert_allclose(first.points[0], [0.0, 0.0, 0.0], atol=1e-9)
    assert len(first.samples) == CFG.fan


def test_contour_rings_closed(disk_paths, disk20_param):
    for p in disk_paths[1:]:
        assert p.params[0, 1] == 0.0 and p.params[-1, 1] == pytest.approx(2 * np.pi)
        np.testing.assert_allclose(p.points[0], p.points[-1], atol=1e-9)
        assert np.all(np.diff(p.params[:, 1]) <= np.pi / 4 + 1e-12)
    assert disk_paths[-1].level == disk20_param.domain.radius


def test_contour_radial_spacing(disk_paths):
    radii = [np.linalg.norm(p.points[:, :2], axis=1).mean() for p in disk_paths]
    gaps = np.diff(radii)
    assert gaps.max() <= FLAT_TARGET * (1 + 1e-3)


def test_contour_needs_disk(plane40, plane40_param):
    with pytest.raises(InvalidInputError):
        plan_contour_parallel(plane40.cloud, plane40_param, ToolConfig(pattern="contour"))


def test_plan_dispatch(disk20, disk20_param):
    paths = plan(disk20.cloud, disk20_param, ToolConfig(pattern="contour"))
    assert all(p.pattern == "contour" for p in paths)
