"""Conformal parameterization of a point cloud onto a rectangle or disk.

The discrete Laplacian uses optimal affine weights: for each interior
point the weights minimize ``|sum_j w_ij (p_i - p_j)|^2`` subject to
``sum_j w_ij = 1``. The Laplace equation is then solved with the
boundary pinned to a rectangle or circle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .cloud import tangent_basis
from .errors import DegenerateGeometryError, InvalidInputError, SolverError, TopologyError

log = logging.getLogger(__name__)

TIKHONOV_MU = 1e-8
BOUNDARY_K = 4
SOLVER_TOL = 1e-8


# ---------------------------------------------------------------------------
# optimal weights
# ---------------------------------------------------------------------------

def solve_affine_weights(offsets, mu=TIKHONOV_MU):
    """Solve ``C w = 1`` for one or many neighborhoods and rescale to sum 1.

    ``offsets`` holds ``p_i - p_j`` per neighbor, shape (m, d) or (n, m, d);
    ``c_jk`` is the dot product of offsets j and k. ``C`` is rank
    deficient whenever m > d, so a Tikhonov term ``mu * trace(C) / m``
    is always added. A final projection removes the small reproduction
    error the regularization leaves behind while keeping ``sum w = 1``.
    """
    D = np.asarray(offsets, dtype=float)
    single = D.ndim == 2
    if single:
        D = D[None]
    n, m, _ = D.shape
    if m < 1:
        raise DegenerateGeometryError("empty neighborhood")
    C = D @ D.transpose(0, 2, 1)
    tr = np.trace(C, axis1=1, axis2=2)
    if np.any(~(tr > 0)):
        raise DegenerateGeometryError("neighborhood collapses onto its center")
    C += (mu * tr / m)[:, None, None] * np.eye(m)
    try:
        W = np.linalg.solve(C, np.ones((n, m, 1)))[..., 0]
    except np.linalg.LinAlgError:
        raise DegenerateGeometryError("weight system is singular") from None
    s = W.sum(axis=1)
    if np.any(~np.isfinite(s)) or np.any(np.abs(s) < 1e-300):
        raise DegenerateGeometryError("weight system is singular")
    W /= s[:, None]
    # move w inside {sum w = 1} to cancel the residual along the neighbor span
    resid = np.einsum("nm,nmd->nd", W, D)
    centered = D - D.mean(axis=1, keepdims=True)
    W -= np.einsum("nmd,nd->nm", np.linalg.pinv(centered.transpose(0, 2, 1)), resid)
    if not np.all(np.isfinite(W)):
        raise DegenerateGeometryError("weight system is singular")
    return W[0] if single else W


def _local_offsets(points, normals, rows, nbrs, frame):
    """Offsets ``p_i - p_j`` in 3D or in the tangent plane at ``p_i``."""
    off = points[rows][:, None, :] - points[nbrs]
    if frame == "ambient":
        return off
    if frame != "tangent":
        raise InvalidInputError(f"unknown weight frame {frame!r}")
    e1, e2 = tangent_basis(normals[rows])
    return np.stack(
        [np.einsum("nkd,nd->nk", off, e1), np.einsum("nkd,nd->nk", off, e2)], axis=-1
    )


def optimal_weights(cloud, i, k=None, frame="tangent"):
    """Weight row of point ``i``: ``(neighbor indices, weights)``.

    ``frame="tangent"`` measures offsets in the tangent plane at ``p_i``;
    ``frame="ambient"`` uses the raw 3D offsets.
    """
    k = cloud.k if k is None else int(k)
    if k < 3:
        raise InvalidInputError("optimal weights need at least 3 neighbors")
    nbh = cloud.neighbors(i, k)
    normals = cloud.ensure_normals() if frame == "tangent" else None
    rows = np.array([i])
    D = _local_offsets(cloud.points, normals, rows, nbh.members[None], frame)
    return nbh.members, solve_affine_weights(D[0])


@dataclass
class WeightSet:
    """Discrete Laplacian rows for the interior points.

    ``rows[r]`` is a point index whose neighbors are ``neighbors[r]`` with
    weights ``weights[r]``; ``residual[r]`` is the 3D fit error
    ``|p_i - sum_j w_ij p_j|``.
    """

    n_points: int
    rows: np.ndarray
    neighbors: np.ndarray
    weights: np.ndarray
    residual: np.ndarray

    def apply(self, f):
        """``(Lf)(i) = f(p_i) - sum_j w_ij f(p_j)`` for every row."""
        f = np.asarray(f, dtype=float)
        return f[self.rows] - np.einsum("rk,rk...->r...", self.weights, f[self.neighbors])

    def row(self, i):
        r = np.searchsorted(self.rows, i)
        if r >= len(self.rows) or self.rows[r] != i:
            raise KeyError(f"point {i} has no Laplacian row")
        return self.neighbors[r], self.weights[r]


def build_laplacian(cloud, k=None, frame="tangent"):
    """Optimal-weight rows for every interior point of ``cloud``."""
    k = cloud.k if k is None else int(k)
    if k < 3:
        raise InvalidInputError("the Laplacian needs at least 3 neighbors")
    rows = cloud.interior_indices
    nbrs = cloud.knn_indices(k)[rows]
    normals = cloud.ensure_normals() if frame == "tangent" else None
    D = _local_offsets(cloud.points, normals, rows, nbrs, frame)
    try:
        W = solve_affine_weights(D)
    except DegenerateGeometryError:
        # locate the offending row for the message
        for r, row in enumerate(rows):
            try:
                solve_affine_weights(D[r])
            except DegenerateGeometryError as exc:
                raise DegenerateGeometryError(f"point {int(row)}: {exc}") from None
        raise
    pts = cloud.points
    resid = np.linalg.norm(pts[rows] - np.einsum("rk,rkd->rd", W, pts[nbrs]), axis=1)
    return WeightSet(len(cloud), rows, nbrs, W, resid)


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rect:
    """Rectangle ``[0, a] x [0, b]``."""

    a: float
    b: float
    kind = "rect"

    def header(self):
        return f"# domain rect {float(self.a)!r} {float(self.b)!r}"

    def contains(self, xy, tol=0.0):
        xy = np.atleast_2d(xy)
        return (
            (xy[:, 0] >= -tol) & (xy[:, 0] <= self.a + tol)
            & (xy[:, 1] >= -tol) & (xy[:, 1] <= self.b + tol)
        )

    @property
    def extent(self):
        return max(self.a, self.b)


@dataclass(frozen=True)
class Disk:
    """Disk of radius ``radius`` centered at the origin."""

    radius: float
    kind = "disk"

    def header(self):
        return f"# domain disk {float(self.radius)!r}"

    def contains(self, xy, tol=0.0):
        xy = np.atleast_2d(xy)
        return np.hypot(xy[:, 0], xy[:, 1]) <= self.radius + tol

    @property
    def extent(self):
        return 2.0 * self.radius


def polar_to_cartesian(coords):
    coords = np.asarray(coords, dtype=float)
    return np.column_stack([coords[:, 0] * np.cos(coords[:, 1]), coords[:, 0] * np.sin(coords[:, 1])])


def cartesian_to_polar(xy):
    xy = np.asarray(xy, dtype=float)
    rho = np.hypot(xy[:, 0], xy[:, 1])
    theta = np.mod(np.arctan2(xy[:, 1], xy[:, 0]), 2 * np.pi)
    theta[theta >= 2 * np.pi] = 0.0
    return np.column_stack([rho, theta])


@dataclass
class Parameterization:
    """Planar images of all cloud points.

    ``coords`` are native to the domain: ``(u, v)`` for :class:`Rect`,
    ``(rho, theta)`` for :class:`Disk`. ``cartesian`` is the planar
    embedding used for neighbor searches and interpolation.
    """

    cloud: object
    domain: Rect | Disk
    coords: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        if self.coords.shape != (len(self.cloud), 2):
            raise InvalidInputError(
                f"parameterization has {len(self.coords)} images for {len(self.cloud)} points"
            )

    @cached_property
    def cartesian(self):
        if isinstance(self.domain, Disk):
            return polar_to_cartesian(self.coords)
        return self.coords.copy()

    @cached_property
    def tree(self):
        return cKDTree(self.cartesian)

    @cached_property
    def spacing(self):
        """Median nearest-neighbor distance between images."""
        d, _ = self.tree.query(self.cartesian, 2)
        return float(np.median(d[:, 1]))

    @property
    def polar(self):
        if isinstance(self.domain, Disk):
            return self.coords
        return cartesian_to_polar(self.cartesian)


# ---------------------------------------------------------------------------
# boundary ordering and assignment
# ---------------------------------------------------------------------------

@dataclass
class BoundaryLoop:
    """Cyclically ordered boundary split into parts at break points.

    ``cumulative`` has one entry more than ``order``: the last entry
    closes the loop back to the first point and equals ``length``.
    """

    order: np.ndarray
    break_positions: np.ndarray
    cumulative: np.ndarray
    length: float
    part_lengths: np.ndarray = field(default=None)

    @classmethod
    def from_points(cls, order, points, break_positions=(0,)):
        order = np.asarray(order, dtype=np.intp)
        pts = np.asarray(points, dtype=float)[order]
        if len(order) > 1:
            closed = np.vstack([pts, pts[:1]])
            chords = np.linalg.norm(np.diff(closed, axis=0), axis=1)
        else:
            chords = np.zeros(1)
        cum = np.concatenate([[0.0], np.cumsum(chords)])
        bp = np.asarray(break_positions, dtype=np.intp)
        ends = np.append(bp[1:], len(order))
        parts = cum[ends] - cum[bp]
        return cls(order, bp, cum, float(cum[-1]), parts)

    def parts(self):
        """``(indices, local cumulative lengths)`` per part, starting at its break."""
        ends = np.append(self.break_positions[1:], len(self.order))
        for s, e in zip(self.break_positions, ends):
            yield self.order[s:e], self.cumulative[s:e] - self.cumulative[s]


@dataclass
class BoundaryMap:
    """Prescribed planar images of the boundary points."""

    indices: np.ndarray
    cartesian: np.ndarray
    domain: Rect | Disk
    native: np.ndarray


def _walk_cycle(pts, nbrs, start):
    """Greedy nearest-unvisited walk, then cheapest insertion of skipped points."""
    n = len(pts)
    visited = np.zeros(n, dtype=bool)
    order = [start]
    visited[start] = True
    cur = start
    heading = None
    while True:
        cand = [j for j in nbrs[cur] if not visited[j]]
        if not cand:
            break
        if heading is not None:
            ahead = [j for j in cand if (pts[j] - pts[cur]) @ heading > 0]
            # a point behind us that is much closer was skipped, take it anyway
            if ahead and np.linalg.norm(pts[ahead[0]] - pts[cur]) <= 2.0 * np.linalg.norm(pts[cand[0]] - pts[cur]):
                cand = ahead
        nxt = cand[0]
        heading = pts[nxt] - pts[cur]
        order.append(nxt)
        visited[nxt] = True
        cur = nxt
    for j in np.flatnonzero(~visited):
        cyc = np.array(order)
        a = pts[cyc]
        b = pts[np.roll(cyc, -1)]
        cost = (np.linalg.norm(a - pts[j], axis=1) + np.linalg.norm(b - pts[j], axis=1)
                - np.linalg.norm(a - b, axis=1))
        pos = int(np.argmin(cost)) + 1
        order.insert(pos, int(j))
    return np.array(order, dtype=np.intp)


def _order_part(pts, members, first, last, k):
    """Harmonic 1D parameter of a part with inverse-distance weights.

    ``first`` is fixed at 0 and ``last`` at 1; members are returned sorted
    by their parameter value.
    """
    if len(members) == 0:
        return members
    nodes = np.concatenate([[first], members, [last]])
    P = pts[nodes]
    kk = min(k, len(nodes) - 1)
    dist, idx = cKDTree(P).query(P, kk + 1)
    dist, idx = dist[:, 1:], idx[:, 1:]
    m = len(nodes)
    adj = sp.coo_matrix((np.ones(idx.size), (np.repeat(np.arange(m), kk), idx.ravel())), shape=(m, m))
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp > 1:
        raise TopologyError("a boundary part is disconnected in the boundary neighbor graph")
    w = 1.0 / dist
    w /= w.sum(axis=1, keepdims=True)
    free = np.arange(1, m - 1)
    A = sp.lil_matrix((m - 2, m - 2))
    rhs = np.zeros(m - 2)
    for r, i in enumerate(free):
        A[r, r] = 1.0
        for j, wij in zip(idx[i], w[i]):
            if j == m - 1:
                rhs[r] += wij
            elif j != 0:
                A[r, j - 1] -= wij
    try:
        x = spla.spsolve(A.tocsc(), rhs) if m > 3 else np.array([rhs[0] / A[0, 0]])
    except RuntimeError:
        raise TopologyError("boundary part ordering system is singular") from None
    x = np.atleast_1d(x)
    if not np.all(np.isfinite(x)):
        raise TopologyError("boundary part ordering system is singular")
    return members[np.argsort(x, kind="stable")]


def _signed_area(pts2):
    x, y = pts2[:, 0], pts2[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def order_boundary(cloud, breaks, k=BOUNDARY_K):
    """Order the boundary into a loop split at ``breaks``.

    Boundary points connected to the first break are walked into a cycle
    that visits the breaks in the given order; each part between two
    consecutive breaks is then re-ordered by its harmonic 1D parameter.
    With two breaks the loop runs counterclockwise seen from the mean
    normal.
    """
    breaks = [int(b) for b in breaks]
    n = len(cloud)
    if len(breaks) < 2:
        raise InvalidInputError("at least 2 break points are required")
    if len(set(breaks)) != len(breaks):
        raise InvalidInputError("break points must be distinct")
    for b in breaks:
        if not 0 <= b < n:
            raise InvalidInputError(f"break point {b} out of range")
        if not cloud.boundary[b]:
            raise InvalidInputError(f"break point {b} is not tagged Boundary")
    bidx = cloud.boundary_indices
    P = cloud.points[bidx]
    btree = cKDTree(P)
    if btree.query_pairs(0.0):
        raise InvalidInputError("duplicate boundary points")
    kk = min(k, len(bidx) - 1)
    _, nb = btree.query(P, kk + 1)
    nb = nb[:, 1:]
    adj = sp.coo_matrix(
        (np.ones(nb.size), (np.repeat(np.arange(len(bidx)), kk), nb.ravel())),
        shape=(len(bidx),) * 2,
    )
    _, labels = connected_components(adj, directed=False)
    local = {int(g): i for i, g in enumerate(bidx)}
    lb = [local[b] for b in breaks]
    comp = labels[lb[0]]
    if any(labels[i] != comp for i in lb):
        raise TopologyError("break points lie on different boundary components")
    members = np.flatnonzero(labels == comp)
    stray = len(bidx) - len(members)
    if stray:
        log.warning("%d boundary points are not connected to the break points", stray)
    sub = {int(g): i for i, g in enumerate(members)}
    Psub = P[members]
    kw = min(2 * k, len(members) - 1)
    _, walk_nb = cKDTree(Psub).query(Psub, kw + 1)
    cycle = _walk_cycle(Psub, walk_nb[:, 1:], sub[lb[0]])

    pos = np.empty(len(cycle), dtype=np.intp)
    pos[cycle] = np.arange(len(cycle))
    bpos = [int(pos[sub[i]]) for i in lb]
    if len(breaks) == 2:
        normal = cloud.ensure_normals()[bidx[members]].mean(axis=0)
        normal /= np.linalg.norm(normal)
        e1, e2 = tangent_basis(normal[None])
        flat = np.column_stack([Psub[cycle] @ e1[0], Psub[cycle] @ e2[0]])
        forward = _signed_area(flat) > 0
    else:
        forward = all(bpos[i] < bpos[i + 1] for i in range(len(bpos) - 1))
        if not forward:
            rev = [(len(cycle) - p) % len(cycle) for p in bpos]
            if not all(rev[i] < rev[i + 1] for i in range(len(rev) - 1)):
                raise TopologyError("break points do not appear in traversal order along the boundary")
    if not forward:
        cycle = np.concatenate([cycle[:1], cycle[1:][::-1]])
        pos[cycle] = np.arange(len(cycle))
        bpos = [int(pos[sub[i]]) for i in lb]

    ordered = []
    starts = []
    for j, s in enumerate(bpos):
        e = bpos[j + 1] if j + 1 < len(bpos) else len(cycle)
        inner = cycle[s + 1:e]
        last = cycle[e % len(cycle)]
        starts.append(len(ordered))
        ordered.append(cycle[s])
        ordered.extend(_order_part(Psub, inner, cycle[s], last, k))
    order = bidx[members[np.array(ordered, dtype=np.intp)]]
    return BoundaryLoop.from_points(order, cloud.points, starts)


def map_boundary_disk(loop, radius=None):
    """Place boundary points on a circle proportionally to chord length.

    The radius defaults to ``L / (2 pi)``, which keeps the boundary length.
    """
    L = loop.length
    if radius is None:
        if L <= 0:
            raise InvalidInputError("boundary has zero length")
        radius = L / (2 * np.pi)
    lam = loop.cumulative[:-1] / L if L > 0 else np.zeros(len(loop.order))
    theta = 2 * np.pi * lam
    native = np.column_stack([np.full(len(theta), float(radius)), theta])
    return BoundaryMap(loop.order.copy(), polar_to_cartesian(native), Disk(float(radius)), native)


def map_boundary_rect(loop):
    """Place the four boundary parts on the edges of a rectangle.

    Part 1 runs along the u-axis from the lower-left corner, the others
    follow counterclockwise. Width and height average opposite parts.
    """
    if len(loop.break_positions) != 4:
        raise InvalidInputError(
            f"rectangle mapping needs exactly 4 break points, got {len(loop.break_positions)}"
        )
    L1, L2, L3, L4 = loop.part_lengths
    if min(L1, L2, L3, L4) <= 0:
        raise InvalidInputError("every boundary part must have positive length")
    a = (L1 + L3) / 2
    b = (L2 + L4) / 2
    chunks = []
    for k, (idx, cum) in enumerate(loop.parts()):
        lam = cum / loop.part_lengths[k]
        if k == 0:
            uv = np.column_stack([lam * a, np.zeros_like(lam)])
        elif k == 1:
            uv = np.column_stack([np.full_like(lam, a), lam * b])
        elif k == 2:
            uv = np.column_stack([a - lam * a, np.full_like(lam, b)])
        else:
            uv = np.column_stack([np.zeros_like(lam), b - lam * b])
        chunks.append(uv)
    uv = np.vstack(chunks)
    return BoundaryMap(loop.order.copy(), uv, Rect(float(a), float(b)), uv)


# ---------------------------------------------------------------------------
# Laplace solve
# ---------------------------------------------------------------------------

def _assemble(weights, bmap):
    n = weights.n_points
    assigned = np.zeros(n, dtype=bool)
    assigned[bmap.indices] = True
    q = np.zeros((n, 2))
    q[bmap.indices] = bmap.cartesian
    rows = weights.rows
    if np.any(assigned[rows]):
        raise InvalidInputError("a boundary-mapped point also has a Laplacian row")
    has_row = np.zeros(n, dtype=bool)
    has_row[rows] = True
    missing = ~(assigned | has_row)
    if missing.any():
        raise SolverError(
            f"{int(missing.sum())} point(s) have neither a Laplacian row nor a boundary image; "
            "they have no path to the mapped boundary"
        )
    r = len(rows)
    pos = np.full(n, -1, dtype=np.intp)
    pos[rows] = np.arange(r)
    nb = weights.neighbors
    w = weights.weights
    on_b = assigned[nb]
    rhs = np.einsum("rk,rkd->rd", np.where(on_b, w, 0.0), q[nb])
    ii = np.repeat(np.arange(r), nb.shape[1])[~on_b.ravel()]
    jj = pos[nb][~on_b]
    vv = -w[~on_b]
    A = sp.csr_matrix(
        (np.concatenate([np.ones(r), vv]), (np.concatenate([np.arange(r), ii]), np.concatenate([np.arange(r), jj]))),
        shape=(r, r),
    )
    anchored = on_b.any(axis=1)
    return A, rhs, q, anchored


def _check_anchored(A, anchored):
    ncomp, labels = connected_components(A, directed=False)
    ok = np.zeros(ncomp, dtype=bool)
    ok[labels[anchored]] = True
    loose = ~ok[labels]
    if loose.any():
        raise SolverError(
            f"{int(loose.sum())} interior point(s) in {int((~ok).sum())} component(s) "
            "have no path to the boundary; the system is singular"
        )


def _solve_direct(A, rhs):
    try:
        lu = spla.splu(A.tocsc())
    except RuntimeError as exc:
        raise SolverError(f"sparse factorization failed: {exc}") from None
    return np.column_stack([lu.solve(rhs[:, c].copy()) for c in range(rhs.shape[1])])


def _solve_gmres(A, rhs, tol):
    try:
        ilu = spla.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=10)
        M = spla.LinearOperator(A.shape, ilu.solve)
    except RuntimeError:
        M = None
    cols = []
    for c in range(rhs.shape[1]):
        x, info = spla.gmres(A, rhs[:, c], rtol=0.1 * tol, atol=0.0, restart=50, maxiter=500, M=M)
        if info < 0:
            raise SolverError(f"GMRES breakdown (info={info})")
        cols.append(x)
    return np.column_stack(cols)


def solve_parameterization(weights, bmap, cloud, solver="direct", tol=SOLVER_TOL):
    """Solve the Laplace system for the interior images.

    Each interior row reads ``q_i - sum_{interior j} w_ij q_j =
    sum_{boundary j} w_ij q_j``; the system is solved once per planar
    coordinate. Disk domains are solved in Cartesian coordinates and
    converted to polar afterwards.

    ``solver`` is ``"direct"`` (sparse LU) or ``"gmres"`` (restarted
    GMRES with an incomplete-LU preconditioner). Either must reach a
    relative residual of ``tol``.
    """
    A, rhs, q, anchored = _assemble(weights, bmap)
    if A.shape[0]:
        _check_anchored(A, anchored)
        if solver == "direct":
            x = _solve_direct(A, rhs)
        elif solver == "gmres":
            x = _solve_gmres(A, rhs, tol)
        else:
            raise InvalidInputError(f"unknown solver {solver!r}")
        res = np.linalg.norm(A @ x - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny)
        if not np.isfinite(res) or res > tol:
            raise SolverError(f"relative residual {res:.3e} exceeds {tol:.1e}", residual=float(res))
        log.debug("Laplace solve: %d unknowns, relative residual %.2e", A.shape[0], res)
        q[weights.rows] = x
    if isinstance(bmap.domain, Disk):
        native = cartesian_to_polar(q)
        native[bmap.indices] = bmap.native
    else:
        native = q
        native[bmap.indices] = bmap.native
    return Parameterization(cloud, bmap.domain, native)


def parameterize(cloud, breaks, domain="rect", k=None, solver="direct", frame="tangent"):
    """Convenience pipeline: weights, boundary order and map, solve."""
    weights = build_laplacian(cloud, k, frame=frame)
    loop = order_boundary(cloud, breaks)
    if domain == "rect":
        bmap = map_boundary_rect(loop)
    elif domain == "disk":
        bmap = map_boundary_disk(loop)
    else:
        raise InvalidInputError(f"unknown domain {domain!r}")
    return solve_parameterization(weights, bmap, cloud, solver=solver)


# ---------------------------------------------------------------------------
# conformality
# ---------------------------------------------------------------------------

@dataclass
class ConformalityReport:
    """Distortion measured at sampled interior images."""

    indices: np.ndarray
    eg_ratio: np.ndarray
    f_ratio: np.ndarray
    theta: np.ndarray

    @property
    def angle_error_deg(self):
        return np.degrees(np.abs(self.theta - np.pi / 2))

    def summary(self):
        ang = self.angle_error_deg
        return {
            "samples": int(len(self.indices)),
            "eg_median": float(np.median(self.eg_ratio)),
            "eg_max": float(np.max(self.eg_ratio)),
            "f_median": float(np.median(self.f_ratio)),
            "angle_median_deg": float(np.median(ang)),
            "angle_max_deg": float(np.max(ang)),
        }


def conformality_report(cloud, param, samples=None, indices=None, seed=0):
    """Sample ``|E-G|/max(E,G)``, ``|F|/E`` and the coordinate angle.

    Derivatives are evaluated at the images of interior points
    (``indices`` overrides the candidate set); ``samples`` draws a
    seeded random subset.
    """
    from .diffgeo import derivatives

    cand = cloud.interior_indices if indices is None else np.asarray(indices, dtype=np.intp)
    if samples is not None and samples < len(cand):
        rng = np.random.default_rng(seed)
        cand = np.sort(rng.choice(cand, size=int(samples), replace=False))
    eg, fr, th = [], [], []
    for i in cand:
        s = derivatives(param, param.cartesian[i])
        F = float(s.r_u @ s.r_v)
        eg.append(abs(s.E - s.G) / max(s.E, s.G))
        fr.append(abs(F) / s.E)
        th.append(s.theta)
    return ConformalityReport(cand, np.array(eg), np.array(fr), np.array(th))
