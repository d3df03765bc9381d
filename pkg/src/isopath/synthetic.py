"""Synthetic test clouds with known geometry.

Grids are laid out on an (s, t) chart; the outer ring is kept exact while
interior nodes may be jittered. Break points are the four chart corners,
listed counterclockwise from the lower-left one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .errors import InvalidInputError

FLAT_TARGET = np.sqrt(32.0)


@dataclass
class SyntheticSurface:
    """A generated cloud with its break points and analytic description."""

    kind: str
    cloud: PointCloud
    breaks: list
    radius: float = np.inf
    chart: np.ndarray | None = None

    def analytic_normal(self, p):
        """Outward unit normal of the analytic surface at ``p``."""
        p = np.atleast_2d(p)
        if self.kind in ("plane", "disk"):
            return np.tile([0.0, 0.0, 1.0], (len(p), 1))
        if self.kind == "sphere":
            c = p - np.array([0.0, 0.0, -self.radius])
        else:
            c = p - np.array([0.0, 0.0, -self.radius])
            c[:, 1] = 0.0
        return c / np.linalg.norm(c, axis=1, keepdims=True)

    def distance_to_surface(self, p):
        p = np.atleast_2d(p)
        if self.kind in ("plane", "disk"):
            return np.abs(p[:, 2])
        c = p - np.array([0.0, 0.0, -self.radius])
        if self.kind == "cylinder":
            c[:, 1] = 0.0
        return np.abs(np.linalg.norm(c, axis=1) - self.radius)


def _grid(ns, nt, width, height, jitter, seed):
    s = np.linspace(0.0, width, ns)
    t = np.linspace(0.0, height, nt)
    S, T = np.meshgrid(s, t, indexing="ij")
    ring = np.zeros((ns, nt), dtype=bool)
    ring[0] = ring[-1] = ring[:, 0] = ring[:, -1] = True
    S, T, ring = S.ravel(), T.ravel(), ring.ravel()
    if jitter:
        if not 0 <= jitter < 0.5:
            raise InvalidInputError("jitter must lie in [0, 0.5)")
        rng = np.random.default_rng(seed)
        J = rng.uniform(-jitter, jitter, (len(S), 2))
        J[ring] = 0.0
        S = S + J[:, 0] * width / (ns - 1)
        T = T + J[:, 1] * height / (nt - 1)
    # node (i, j) sits at i * nt + j
    corners = [0, (ns - 1) * nt, (ns - 1) * nt + nt - 1, nt - 1]
    return S, T, ring, corners


def _counts(width, height, spacing):
    if spacing <= 0 or width <= 0 or height <= 0:
        raise InvalidInputError("dimensions and spacing must be positive")
    return int(np.ceil(width / spacing - 1e-9)) + 1, int(np.ceil(height / spacing - 1e-9)) + 1


def plane(width=40.0, height=None, spacing=1.0, jitter=0.0, seed=0, k=12):
    """Flat rectangle ``[0, width] x [0, height]`` in z = 0."""
    height = width if height is None else height
    ns, nt = _counts(width, height, spacing)
    S, T, ring, corners = _grid(ns, nt, width, height, jitter, seed)
    pts = np.column_stack([S, T, np.zeros_like(S)])
    cloud = PointCloud(pts, normals=np.tile([0.0, 0.0, 1.0], (len(pts), 1)), boundary=ring, k=k)
    return SyntheticSurface("plane", cloud, corners, chart=np.column_stack([S, T]))


def sphere_cap(radius=50.0, n=45, spacing=1.0, jitter=0.0, seed=0, k=12):
    """Cap ``z = sqrt(R^2 - x^2 - y^2) - R`` over a centered square grid."""
    half = 0.5 * (n - 1) * spacing
    if half * np.sqrt(2) >= radius:
        raise InvalidInputError("grid does not fit under the sphere")
    S, T, ring, corners = _grid(n, n, 2 * half, 2 * half, jitter, seed)
    X, Y = S - half, T - half
    Z = np.sqrt(radius**2 - X**2 - Y**2) - radius
    pts = np.column_stack([X, Y, Z])
    cloud = PointCloud(pts, boundary=ring, k=k)
    cloud.estimate_normals()
    return SyntheticSurface("sphere", cloud, corners, radius=radius, chart=np.column_stack([S, T]))


def cylinder_patch(radius=25.0, length=20.0, arc=20.0, spacing=1.0, jitter=0.0, seed=0, k=12):
    """Patch of a cylinder whose axis is the y-axis shifted to z = -R.

    The chart's first coordinate runs along the axis and the second along
    the arc, so the first rectangle edge follows the axis and paths of
    constant u cross the curvature.
    """
    if arc >= np.pi * radius:
        raise InvalidInputError("arc must be shorter than half the circumference")
    ns, nt = _counts(length, arc, spacing)
    S, T, ring, corners = _grid(ns, nt, length, arc, jitter, seed)
    ang = (T - 0.5 * arc) / radius
    pts = np.column_stack([-radius * np.sin(ang), S, radius * np.cos(ang) - radius])
    cloud = PointCloud(pts, boundary=ring, k=k)
    cloud.estimate_normals()
    return SyntheticSurface("cylinder", cloud, corners, radius=radius, chart=np.column_stack([S, T]))


def flat_disk(radius=20.0, spacing=1.0, jitter=0.0, seed=0, k=12):
    """Flat disk: grid interior plus an exact ring of boundary points.

    Breaks are the ring points at angles 0 and pi.
    """
    nb = int(round(2 * np.pi * radius / spacing))
    if nb % 2:
        nb += 1
    ang = 2 * np.pi * np.arange(nb) / nb
    ring = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
    m = int(np.floor(radius / spacing))
    g = spacing * np.arange(-m, m + 1)
    X, Y = np.meshgrid(g, g, indexing="ij")
    inner = np.column_stack([X.ravel(), Y.ravel()])
    if jitter:
        rng = np.random.default_rng(seed)
        inner = inner + rng.uniform(-jitter, jitter, inner.shape) * spacing
    inner = inner[np.hypot(inner[:, 0], inner[:, 1]) < radius - 0.5 * spacing]
    xy = np.vstack([ring, inner])
    pts = np.column_stack([xy, np.zeros(len(xy))])
    boundary = np.zeros(len(pts), dtype=bool)
    boundary[:nb] = True
    cloud = PointCloud(pts, normals=np.tile([0.0, 0.0, 1.0], (len(pts), 1)), boundary=boundary, k=k)
    return SyntheticSurface("disk", cloud, [0, nb // 2], chart=xy)


def make(kind, **kw):
    """Factory keyed by ``plane``, ``sphere``, ``cylinder`` or ``disk``."""
    table = {"plane": plane, "sphere": sphere_cap, "cylinder": cylinder_patch, "disk": flat_disk}
    if kind not in table:
        raise InvalidInputError(f"unknown synthetic surface {kind!r}")
    return table[kind](**kw)
