import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isopath import synthetic
from isopath.cloud import PointCloud, classify_boundary, estimate_normal, fair, orient_normals, query_workers
from isopath.errors import DegenerateGeometryError, InvalidInputError
from isopath.param import build_laplacian


def unit_grid(n=6):
    g = np.arange(n, dtype=float)
    X, Y = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel(), np.zeros(n * n)])


# --- construction ---------------------------------------------------------

def test_rejects_non_finite():
    pts = unit_grid()
    pts[3, 1] = np.nan
    with pytest.raises(InvalidInputError):
        PointCloud(pts)


def test_needs_k_plus_one_points():
    with pytest.raises(InvalidInputError):
        PointCloud(np.random.default_rng(0).random((12, 3)), k=12)
    PointCloud(np.random.default_rng(0).random((13, 3)), k=12)


def test_normals_must_be_unit():
    pts = unit_grid()
    with pytest.raises(InvalidInputError):
        PointCloud(pts, normals=np.tile([0.0, 0.0, 2.0], (len(pts), 1)))


def test_tags_partition_points():
    cloud = PointCloud(unit_grid(), k=4)
    classify_boundary(cloud)
    assert len(cloud.interior_indices) + len(cloud.boundary_indices) == len(cloud)
    assert not set(cloud.interior_indices) & set(cloud.boundary_indices)


# --- knn ------------------------------------------------------------------

def test_knn_self_excluded_gives_nearest_other():
    pts = unit_grid()
    pts[7] += [0.1, 0.0, 0.0]
    cloud = PointCloud(pts, k=4)
    nbh = cloud.knn(pts[8], k=1, exclude_self=True)
    assert nbh.center == 8
    assert nbh.members[0] != 8


def test_knn_grid_axis_neighbors():
    cloud = PointCloud(unit_grid(), k=4)
    nbh = cloud.neighbors(14, k=4)  # node (2, 2)
    assert 14 not in nbh.members
    np.testing.assert_allclose(nbh.distances, 1.0)
    assert set(nbh.members) == {8, 20, 13, 15}


def test_knn_k_too_large():
    cloud = PointCloud(unit_grid(3), k=4)
    with pytest.raises(InvalidInputError):
        cloud.knn(np.zeros(3), k=9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 20))
def test_knn_matches_brute_force(seed, k):
    rng = np.random.default_rng(seed)
    pts = rng.random((100, 3))
    q = rng.random(3)
    cloud = PointCloud(pts, k=min(k, 12))
    nbh = cloud.knn(q, k=k)
    d = np.linalg.norm(pts - q, axis=1)
    expect = np.sort(d)[:k]
    np.testing.assert_allclose(nbh.distances, expect, rtol=0, atol=1e-12)
    assert np.all(np.diff(nbh.distances) >= 0)
    assert len(set(nbh.members)) == k


def test_knn_indices_exclude_self_and_cached():
    cloud = PointCloud(np.random.default_rng(1).random((200, 3)))
    idx = cloud.knn_indices(12)
    assert idx.shape == (200, 12)
    assert not np.any(idx == np.arange(200)[:, None])
    assert cloud.knn_indices(12) is idx


def test_knn_indices_with_duplicates():
    pts = np.random.default_rng(2).random((50, 3))
    pts[10] = pts[11]
    idx = PointCloud(pts, k=5).knn_indices(5)
    assert 10 not in idx[10] and 11 not in idx[11]
    assert 11 in idx[10] and 10 in idx[11]


def test_query_workers_env(monkeypatch):
    monkeypatch.setenv("ISOPATH_THREADS", "3")
    assert query_workers() == 3
    monkeypatch.setenv("ISOPATH_THREADS", "junk")
    assert query_workers() == 1


# --- normals --------------------------------------------------------------

def test_plane_normal_up():
    cloud = PointCloud(unit_grid(8), k=12)
    n = estimate_normal(cloud, 27)
    np.testing.assert_allclose(n, [0.0, 0.0, 1.0], atol=1e-6)


def test_sphere_normals_radial():
    s = synthetic.sphere_cap(50.0, 41, 1.0)
    cloud = PointCloud(s.cloud.points, boundary=s.cloud.boundary)
    normals = cloud.estimate_normals()
    radial = s.analytic_normal(cloud.points)
    inner = cloud.interior_indices
    ang = np.degrees(np.arccos(np.clip(np.sum(normals[inner] * radial[inner], axis=1), -1, 1)))
    assert ang.max() < 2.0
    # single-point estimate agrees with the field
    np.testing.assert_allclose(estimate_normal(cloud, int(inner[100])), normals[inner[100]], atol=1e-12)


def test_cylinder_normals_radial():
    s = synthetic.cylinder_patch(25.0, 20.0, 20.0, 1.0)
    radial = s.analytic_normal(s.cloud.points)
    inner = s.cloud.interior_indices
    dots = np.sum(s.cloud.normals[inner] * radial[inner], axis=1)
    assert np.degrees(np.arccos(np.clip(dots, -1, 1))).max() < 2.0


def test_collinear_neighbors_degenerate():
    pts = np.column_stack([np.arange(20.0), np.zeros(20), np.zeros(20)])
    cloud = PointCloud(pts, k=12)
    with pytest.raises(DegenerateGeometryError):
        cloud.estimate_normals()


def test_orientation_consistent_after_random_flips():
    s = synthetic.sphere_cap(50.0, 31, 1.0)
    rng = np.random.default_rng(3)
    flipped = s.cloud.normals * rng.choice([-1.0, 1.0], size=(len(s.cloud), 1))
    out = orient_normals(s.cloud.points, flipped, s.cloud.knn_indices(12))
    assert np.all(np.sum(out * s.analytic_normal(s.cloud.points), axis=1) > 0)


# --- boundary classification ---------------------------------------------

def test_classify_rect_grid_outer_ring():
    n = 15
    cloud = PointCloud(unit_grid(n), k=12)
    tags = classify_boundary(cloud)
    ring = np.zeros((n, n), dtype=bool)
    ring[0] = ring[-1] = ring[:, 0] = ring[:, -1] = True
    np.testing.assert_array_equal(tags, ring.ravel())


def test_classify_interior_and_corner():
    cloud = PointCloud(unit_grid(10), k=8)
    tags = classify_boundary(cloud)
    assert not tags[44] and tags[0]


def test_classify_three_points_degenerate():
    cloud = PointCloud(np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0]]), k=2)
    with pytest.raises(DegenerateGeometryError):
        classify_boundary(cloud)


def test_classify_disk_ring():
    s = synthetic.flat_disk(15.0)
    expect = s.cloud.boundary.copy()
    cloud = PointCloud(s.cloud.points)
    np.testing.assert_array_equal(classify_boundary(cloud), expect)


# --- fairing --------------------------------------------------------------

def test_fair_zero_steps_identity(plane40):
    w = build_laplacian(plane40.cloud)
    out = fair(plane40.cloud, w, steps=0)
    np.testing.assert_array_equal(out.points, plane40.cloud.points)


def test_fair_planar_fixed_point(plane40):
    w = build_laplacian(plane40.cloud)
    out = fair(plane40.cloud, w, steps=3)
    assert np.abs(out.points - plane40.cloud.points).max() < 1e-9


def test_fair_reduces_noise_and_keeps_boundary():
    s = synthetic.plane(30.0, spacing=1.0, jitter=0.2, seed=1)
    rng = np.random.default_rng(4)
    pts = s.cloud.points.copy()
    inner = s.cloud.interior_indices
    pts[inner, 2] += rng.normal(0.0, 0.1, len(inner))
    noisy = PointCloud(pts, boundary=s.cloud.boundary)
    noisy.estimate_normals()
    w = build_laplacian(noisy)
    out = fair(noisy, w, steps=5)
    assert np.mean(np.abs(out.points[:, 2])) < np.mean(np.abs(pts[:, 2]))
    b = s.cloud.boundary_indices
    np.testing.assert_array_equal(out.points[b], pts[b])


def test_fair_rejects_bad_damping(plane40):
    w = build_laplacian(plane40.cloud)
    with pytest.raises(InvalidInputError):
        fair(plane40.cloud, w, damping=0.0)
