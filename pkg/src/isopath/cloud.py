"""Point cloud container, neighborhood queries and per-point geometry."""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components, minimum_spanning_tree
from scipy.spatial import cKDTree

from .errors import DegenerateGeometryError, InvalidInputError

DEFAULT_K = 12
DEFAULT_GAP_THRESHOLD = 0.7 * np.pi

# relative gap between the two smallest covariance eigenvalues below which
# the normal direction is undetermined
_EIG_TOL = 1e-9


def query_workers():
    """Worker count for KD-tree queries, bounded by ``ISOPATH_THREADS``."""
    value = os.environ.get("ISOPATH_THREADS")
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Neighborhood:
    """K nearest points of a query, closest first."""

    center: int | None
    members: np.ndarray
    distances: np.ndarray


class PointCloud:
    """Unorganized 3D points with normals, boundary tags and a KD-tree.

    Args:
        points: (n, 3) positions in mm.
        normals: optional (n, 3) unit normals.
        boundary: optional boolean mask, True for boundary points.
        k: default neighborhood size.
    """

    def __init__(self, points, normals=None, boundary=None, k=DEFAULT_K):
        pts = np.array(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidInputError(f"points must have shape (n, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("point coordinates must be finite")
        if k < 1:
            raise InvalidInputError("neighborhood size must be at least 1")
        if len(pts) < k + 1:
            raise InvalidInputError(f"need at least k+1 = {k + 1} points, got {len(pts)}")
        self.points = pts
        self.k = int(k)
        self.normals = None
        if normals is not None:
            self.set_normals(normals)
        if boundary is None:
            self.boundary = np.zeros(len(pts), dtype=bool)
        else:
            mask = np.asarray(boundary, dtype=bool)
            if mask.shape != (len(pts),):
                raise InvalidInputError("boundary mask length differs from point count")
            self.boundary = mask.copy()
        self._knn_cache = {}

    def __len__(self):
        return len(self.points)

    @cached_property
    def index(self):
        return cKDTree(self.points)

    @property
    def interior_indices(self):
        return np.flatnonzero(~self.boundary)

    @property
    def boundary_indices(self):
        return np.flatnonzero(self.boundary)

    def set_normals(self, normals):
        nrm = np.array(normals, dtype=float)
        if nrm.shape != self.points.shape:
            raise InvalidInputError("normals must match points in shape")
        if not np.allclose(np.linalg.norm(nrm, axis=1), 1.0, atol=1e-9, rtol=0):
            raise InvalidInputError("normals must have unit length")
        self.normals = nrm

    def knn(self, query, k=None, exclude_self=False):
        """K nearest cloud points to ``query``.

        With ``exclude_self`` a cloud point sitting exactly on the query is
        skipped, so neighbors of an existing point never contain it.
        """
        k = self.k if k is None else int(k)
        self._check_k(k)
        q = np.asarray(query, dtype=float).reshape(3)
        dist, idx = self.index.query(q, k + 1, workers=query_workers())
        center = None
        if exclude_self and dist[0] == 0.0:
            center = int(idx[0])
            dist, idx = dist[1:], idx[1:]
        else:
            dist, idx = dist[:k], idx[:k]
        return Neighborhood(center, idx.astype(np.intp), dist)

    def neighbors(self, i, k=None):
        """Neighborhood of cloud point ``i``, excluding ``i`` itself."""
        k = self.k if k is None else int(k)
        idx = self.knn_indices(k)[i]
        dist = np.linalg.norm(self.points[idx] - self.points[i], axis=1)
        return Neighborhood(int(i), idx, dist)

    def knn_indices(self, k=None):
        """(n, k) neighbor indices of every point, self excluded, closest first."""
        k = self.k if k is None else int(k)
        self._check_k(k)
        cached = self._knn_cache.get(k)
        if cached is not None:
            return cached
        _, idx = self.index.query(self.points, k + 1, workers=query_workers())
        own = np.arange(len(self.points))[:, None]
        is_self = idx == own
        # rows where a duplicate point displaced self from slot 0 drop the last hit instead
        missing = ~is_self.any(axis=1)
        is_self[missing, -1] = True
        out = idx[~is_self].reshape(len(idx), k)
        out.setflags(write=False)
        self._knn_cache[k] = out
        return out

    def _check_k(self, k):
        if k < 1 or k >= len(self.points):
            raise InvalidInputError(f"k must satisfy 1 <= k < {len(self.points)}, got {k}")

    def estimate_normals(self, k=None, orient=True):
        """Estimate (and by default consistently orient) all normals."""
        k = self.k if k is None else int(k)
        idx = self.knn_indices(k)
        normals, bad = _pca_normals(self.points[idx])
        if bad.any():
            first = int(np.flatnonzero(bad)[0])
            raise DegenerateGeometryError(
                f"normal undetermined at {int(bad.sum())} point(s), first is {first}"
            )
        if orient:
            normals = orient_normals(self.points, normals, idx)
        self.normals = normals
        return normals

    def ensure_normals(self, k=None):
        if self.normals is None:
            self.estimate_normals(k)
        return self.normals

    def copy(self, points=None):
        out = PointCloud(self.points if points is None else points, boundary=self.boundary, k=self.k)
        if points is None and self.normals is not None:
            out.normals = self.normals.copy()
        return out


def _pca_normals(nbr_points):
    """Smallest-eigenvalue eigenvectors of per-row covariance matrices.

    ``nbr_points`` is (n, k, 3). Returns unit normals and a mask of rows whose
    two smallest eigenvalues coincide.
    """
    centered = nbr_points - nbr_points.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / nbr_points.shape[1]
    vals, vecs = np.linalg.eigh(cov)
    scale = np.maximum(vals[:, 2], np.finfo(float).tiny)
    bad = (vals[:, 1] - vals[:, 0]) <= _EIG_TOL * scale
    bad |= vals[:, 2] <= 0.0
    return vecs[:, :, 0], bad


def estimate_normal(cloud, i, k=None):
    """Unit normal at point ``i`` from the local covariance spectrum.

    The sign follows the cloud's oriented normal field; it is computed
    on demand if the cloud has none.
    """
    k = cloud.k if k is None else int(k)
    if k < 3:
        raise InvalidInputError("normal estimation needs k >= 3")
    nbh = cloud.neighbors(i, k)
    normal, bad = _pca_normals(cloud.points[nbh.members][None])
    if bad[0]:
        raise DegenerateGeometryError(f"normal undetermined at point {i}")
    normal = normal[0]
    ref = cloud.ensure_normals()[i]
    if normal @ ref < 0:
        normal = -normal
    return normal


def orient_normals(points, normals, nbr_idx):
    """Flip normals into a consistent field by MST propagation.

    Each connected component is seeded at its highest point with a normal
    pointing to +z, then signs propagate along a minimum spanning tree of
    the KNN graph weighted by 1 - |n_i . n_j|.
    """
    normals = np.array(normals, dtype=float)
    n, k = nbr_idx.shape
    rows = np.repeat(np.arange(n), k)
    cols = nbr_idx.ravel()
    dots = np.abs(np.einsum("ij,ij->i", normals[rows], normals[cols]))
    # offset keeps parallel-normal edges, csgraph treats 0 as "no edge"
    weight = 1.0 - dots + 1e-6
    graph = coo_matrix((weight, (rows, cols)), shape=(n, n)).tocsr()
    graph = graph.maximum(graph.T)
    tree = minimum_spanning_tree(graph)
    tree = tree + tree.T
    ncomp, labels = connected_components(tree, directed=False)
    for comp in range(ncomp):
        members = np.flatnonzero(labels == comp)
        seed = int(members[np.argmax(points[members, 2])])
        if normals[seed, 2] < 0:
            normals[seed] = -normals[seed]
        order, pred = breadth_first_order(tree, seed, directed=False, return_predecessors=True)
        for node in order[1:]:
            if normals[node] @ normals[pred[node]] < 0:
                normals[node] = -normals[node]
    return normals


def tangent_basis(normals):
    """Two unit tangent vectors per normal, forming a right-handed frame."""
    nrm = np.atleast_2d(normals)
    helper = np.zeros_like(nrm)
    axis = np.argmin(np.abs(nrm), axis=1)
    helper[np.arange(len(nrm)), axis] = 1.0
    e1 = np.cross(helper, nrm)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(nrm, e1)
    return e1, e2


def classify_boundary(cloud, k=None, gap_threshold=DEFAULT_GAP_THRESHOLD):
    """Tag points whose projected neighbors leave a wide angular gap.

    Neighbors are projected onto the tangent plane; a point is Boundary when
    the largest angle between consecutive projected neighbors exceeds
    ``gap_threshold``. Tags are written into ``cloud.boundary``.
    """
    k = cloud.k if k is None else int(k)
    if k < 3 or len(cloud) - 1 < 3:
        raise DegenerateGeometryError("boundary detection needs at least 3 neighbors per point")
    normals = cloud.ensure_normals()
    idx = cloud.knn_indices(k)
    offsets = cloud.points[idx] - cloud.points[:, None, :]
    e1, e2 = tangent_basis(normals)
    x = np.einsum("nkd,nd->nk", offsets, e1)
    y = np.einsum("nkd,nd->nk", offsets, e2)
    radial = np.hypot(x, y)
    scale = radial.max(axis=1, keepdims=True)
    usable = radial > 1e-12 * np.maximum(scale, 1e-300)
    if np.any(usable.sum(axis=1) < 3):
        raise DegenerateGeometryError("fewer than 3 neighbors project onto the tangent plane")
    angles = np.where(usable, np.arctan2(y, x), np.nan)
    angles = np.sort(angles, axis=1)  # NaNs sort last
    count = usable.sum(axis=1)
    gaps = np.diff(angles, axis=1)
    inner = np.nanmax(np.where(np.isnan(gaps), -np.inf, gaps), axis=1)
    first = angles[:, 0]
    last = angles[np.arange(len(angles)), count - 1]
    wrap = 2 * np.pi - (last - first)
    max_gap = np.maximum(inner, wrap)
    cloud.boundary = max_gap > gap_threshold
    return cloud.boundary.copy()


def fair(cloud, weights, steps=3, damping=0.5):
    """Laplacian fairing with fixed weights; boundary points stay put.

    Each step moves every interior point by ``damping`` times its Laplacian
    ``p_i - sum_j w_ij p_j``. Returns a new cloud; normals must be
    re-estimated on it.
    """
    if not 0.0 < damping <= 1.0:
        raise InvalidInputError("damping must lie in (0, 1]")
    if steps < 0:
        raise InvalidInputError("steps must be non-negative")
    pts = cloud.points.copy()
    rows = weights.rows
    movable = ~cloud.boundary[rows]
    for _ in range(int(steps)):
        target = np.einsum("rk,rkd->rd", weights.weights, pts[weights.neighbors])
        delta = damping * (pts[rows] - target)
        pts[rows[movable]] -= delta[movable]
    return cloud.copy(points=pts)
