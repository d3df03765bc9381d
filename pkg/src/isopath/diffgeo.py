"""Surface evaluation on a parameterized cloud: interpolation and derivatives.

Parametric points are mapped back to 3D with the same affine-weight
machinery used for the Laplacian, applied to the planar images. Derivatives
come from a five-point central-difference stencil.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cloud import tangent_basis
from .errors import DegenerateGeometryError, InvalidInputError, OutOfDomainError
from .param import Disk, solve_affine_weights

INTERP_K = 12
COINCIDENT_TOL = 1e-9
DOMAIN_BAND = 0.5  # tolerance band outside the domain, in units of image spacing
FLAT_TOL = 1e-8

# a direction is convex when its second-form coefficient has this sign
CONVEX_SIGN = -1.0


def _lift(offsets, scale, degree):
    d = offsets / scale
    if degree == 1:
        return d
    x, y = d[..., 0], d[..., 1]
    return np.concatenate([d, np.stack([x * x, x * y, y * y], axis=-1)], axis=-1)


def interpolate(param, q, k=INTERP_K, degree=2, values=None):
    """Map parametric points to 3D (or to any per-point field).

    Weights come from the k nearest parameter images. ``degree=1`` uses
    the plain planar offsets and reproduces affine data; ``degree=2``
    additionally lifts the offsets with their quadratic monomials so that
    quadratic data is reproduced too, which removes the sag of linear
    blending between samples on curved surfaces.

    Args:
        param: solved :class:`~isopath.param.Parameterization`.
        q: one (2,) Cartesian parametric point or an (n, 2) batch.
        k: neighbor count.
        degree: 1 or 2.
        values: per-point field to blend, defaults to the cloud positions.

    Raises:
        OutOfDomainError: a query lies outside the domain by more than half
            the image spacing.
    """
    if degree not in (1, 2):
        raise InvalidInputError("interpolation degree must be 1 or 2")
    Q = np.asarray(q, dtype=float)
    single = Q.ndim == 1
    Q = np.atleast_2d(Q)
    spacing = param.spacing
    inside = param.domain.contains(Q, tol=DOMAIN_BAND * spacing)
    if not np.all(inside):
        bad = Q[~inside][0]
        raise OutOfDomainError(f"parametric point ({bad[0]:.6g}, {bad[1]:.6g}) lies outside the domain")
    vals = param.cloud.points if values is None else np.asarray(values, dtype=float)
    kk = min(int(k), len(param.coords))
    dist, idx = param.tree.query(Q, kk)
    dist = dist.reshape(len(Q), kk)
    idx = idx.reshape(len(Q), kk)
    out = np.empty((len(Q),) + vals.shape[1:])
    hit = dist[:, 0] <= COINCIDENT_TOL
    out[hit] = vals[idx[hit, 0]]
    rest = ~hit
    if rest.any():
        off = param.cartesian[idx[rest]] - Q[rest][:, None, :]
        W = solve_affine_weights(_lift(off, spacing, degree))
        out[rest] = np.einsum("nk,nk...->n...", W, vals[idx[rest]])
    return out[0] if single else out


@dataclass
class DerivativeSample:
    """First and second derivatives at one parametric point.

    ``r_u`` and ``r_v`` are taken along the unit parametric directions the
    sample was built with; for rectangles these are the coordinate axes.
    ``delta`` holds the stencil half-widths actually used.
    """

    q: np.ndarray
    position: np.ndarray
    r_u: np.ndarray
    r_v: np.ndarray
    r_uu: np.ndarray
    r_vv: np.ndarray
    normal: np.ndarray
    sigma: float
    theta: float
    E: float
    G: float
    L2f: float
    N2f: float
    delta: tuple

    @property
    def F(self):
        return float(self.r_u @ self.r_v)


class Curvature(NamedTuple):
    """Normal curvature radius along one direction; ``inf`` when flat."""

    radius: float
    convex: bool

    @property
    def flat(self):
        return np.isinf(self.radius)


def _stencil_center(domain, q, d, delta):
    """Center nearest to ``q`` whose stencil ``c +- delta d`` fits in the domain."""
    if isinstance(domain, Disk):
        R0 = domain.radius
        delta = min(delta, 0.5 * R0)
        rho2 = float(q @ q)
        qd = abs(float(q @ d))
        if rho2 == 0.0 or (rho2 + delta**2 + 2 * delta * qd) <= R0**2:
            return q, delta
        t = (-delta * qd + np.sqrt(delta**2 * qd**2 - rho2 * (delta**2 - R0**2))) / rho2
        return q * min(1.0, t), delta
    hi = np.array([domain.a, domain.b])
    delta = min(delta, 0.5 * float(np.min(hi[np.abs(d) > 0]) / np.max(np.abs(d))))
    reach = delta * np.abs(d)
    return np.clip(q, reach, hi - reach), delta


def derivatives(param, q, directions=((1.0, 0.0), (0.0, 1.0)), k=INTERP_K, degree=2):
    """Finite-difference sample at the Cartesian parametric point ``q``.

    The stencil half-width is the distance from ``q`` to its nearest
    image, floored at the median image spacing. Near the domain edge the
    stencil of each direction keeps its width and its center slides
    inward until it fits; the position itself is always evaluated at
    ``q``.

    ``directions`` are the unit parametric directions treated as u and v.
    """
    q0 = np.asarray(q, dtype=float).reshape(2)
    if not param.domain.contains(q0, tol=DOMAIN_BAND * param.spacing)[0]:
        raise OutOfDomainError(f"parametric point ({q0[0]:.6g}, {q0[1]:.6g}) lies outside the domain")
    du_dir = np.asarray(directions[0], dtype=float)
    dv_dir = np.asarray(directions[1], dtype=float)
    dist, nearest = param.tree.query(q0, 2)
    d_near = dist[1] if dist[0] <= COINCIDENT_TOL else dist[0]
    delta0 = max(float(d_near), param.spacing)
    cu, hu = _stencil_center(param.domain, q0, du_dir, delta0)
    cv, hv = _stencil_center(param.domain, q0, dv_dir, delta0)
    stencil = np.array([q0, cu, cu - hu * du_dir, cu + hu * du_dir, cv, cv - hv * dv_dir, cv + hv * dv_dir])
    p0, pu0, pu1, pu2, pv0, pv1, pv2 = interpolate(param, stencil, k=k, degree=degree)
    r_u = (pu2 - pu1) / (2 * hu)
    r_v = (pv2 - pv1) / (2 * hv)
    r_uu = (pu1 + pu2 - 2 * pu0) / hu**2
    r_vv = (pv1 + pv2 - 2 * pv0) / hv**2
    normal = param.cloud.ensure_normals()[int(nearest[0])]
    nu, nv = np.linalg.norm(r_u), np.linalg.norm(r_v)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateGeometryError(f"vanishing tangent at ({q0[0]:.6g}, {q0[1]:.6g})")
    cos_t = np.clip(r_u @ r_v / (nu * nv), -1.0, 1.0)
    return DerivativeSample(
        q=q0,
        position=p0,
        r_u=r_u,
        r_v=r_v,
        r_uu=r_uu,
        r_vv=r_vv,
        normal=normal,
        sigma=0.5 * (nu + nv),
        theta=float(np.arccos(cos_t)),
        E=float(r_u @ r_u),
        G=float(r_v @ r_v),
        L2f=float(normal @ r_uu),
        N2f=float(normal @ r_vv),
        delta=(hu, hv),
    )


def curvature_radius(sample, direction):
    """``|E/L|`` for ``"U"`` or ``|G/N|`` for ``"V"``, with a convexity flag."""
    if direction == "U":
        first, second = sample.E, sample.L2f
    elif direction == "V":
        first, second = sample.G, sample.N2f
    else:
        raise InvalidInputError(f"direction must be 'U' or 'V', got {direction!r}")
    convex = bool(second * CONVEX_SIGN >= 0)
    if abs(second) < FLAT_TOL * abs(first):
        return Curvature(np.inf, convex)
    return Curvature(abs(first / second), convex)


def normal_curvature(sample, direction):
    """Signed curvature ``II/I`` along U or V against the oriented normal."""
    if direction == "U":
        return sample.L2f / sample.E
    if direction == "V":
        return sample.N2f / sample.G
    raise InvalidInputError(f"direction must be 'U' or 'V', got {direction!r}")


def _quadric_mean_curvature(offsets, normals):
    """Mean curvature of ``z = ax^2 + bxy + cy^2 + dx + ey + f`` fits.

    ``offsets`` is (n, m, 3) relative to each center, ``normals`` (n, 3)
    gives the height axis.
    """
    e1, e2 = tangent_basis(normals)
    x = np.einsum("nmd,nd->nm", offsets, e1)
    y = np.einsum("nmd,nd->nm", offsets, e2)
    z = np.einsum("nmd,nd->nm", offsets, normals)
    scale = np.sqrt(np.mean(x * x + y * y, axis=1))
    if np.any(~(scale > 0)):
        raise DegenerateGeometryError("quadric fit neighborhood collapses")
    xs, ys = x / scale[:, None], y / scale[:, None]
    A = np.stack([xs * xs, xs * ys, ys * ys, xs, ys, np.ones_like(xs)], axis=-1)
    AtA = np.einsum("nmi,nmj->nij", A, A)
    Atz = np.einsum("nmi,nm->ni", A, z)
    cond = np.linalg.cond(AtA)
    if np.any(~np.isfinite(cond)) or np.any(cond > 1e12):
        raise DegenerateGeometryError("quadric fit is rank deficient")
    coef = np.linalg.solve(AtA, Atz[..., None])[..., 0]
    s = scale
    fxx = 2 * coef[:, 0] / s**2
    fxy = coef[:, 1] / s**2
    fyy = 2 * coef[:, 2] / s**2
    fx = coef[:, 3] / s
    fy = coef[:, 4] / s
    num = (1 + fy**2) * fxx - 2 * fx * fy * fxy + (1 + fx**2) * fyy
    return num / (2 * (1 + fx**2 + fy**2) ** 1.5)


def mean_curvature(cloud, i, k=None):
    """Mean curvature at point ``i`` from a local quadric height field.

    The sign follows the oriented normal: a sphere with outward normals
    gives ``-1/R``.
    """
    k = cloud.k if k is None else int(k)
    if k < 5:
        raise InvalidInputError("a quadric fit needs at least 5 neighbors")
    nbh = cloud.neighbors(i, k)
    members = np.concatenate([[i], nbh.members])
    off = cloud.points[members] - cloud.points[i]
    normals = cloud.ensure_normals()
    return float(_quadric_mean_curvature(off[None], normals[i][None])[0])


def mean_curvature_field(cloud, k=None):
    """Mean curvature at every cloud point (vectorized :func:`mean_curvature`)."""
    k = cloud.k if k is None else int(k)
    if k < 5:
        raise InvalidInputError("a quadric fit needs at least 5 neighbors")
    nbrs = cloud.knn_indices(k)
    members = np.concatenate([np.arange(len(cloud))[:, None], nbrs], axis=1)
    off = cloud.points[members] - cloud.points[:, None, :]
    return _quadric_mean_curvature(off, cloud.ensure_normals())
