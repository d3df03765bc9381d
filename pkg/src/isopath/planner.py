"""Forward/side step computation and iso-parametric path planning.

Forward steps bound the chord deviation ``e`` along a path; side steps
bound the scallop height ``h`` left by a ball-end cutter of radius ``r``
between adjacent paths. Paths near the boundary use a side step corrected
for the non-orthogonality of the parametric directions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .diffgeo import (
    CONVEX_SIGN,
    FLAT_TOL,
    Curvature,
    curvature_radius,
    derivatives,
    interpolate,
    mean_curvature_field,
    normal_curvature,
)
from .errors import (
    DegenerateGeometryError,
    GougingError,
    InvalidCurvatureError,
    InvalidInputError,
    OutOfDomainError,
    PlanningError,
    TooSparseError,
)
from .param import Disk, Rect

log = logging.getLogger(__name__)

DIRECTION = "direction"
CONTOUR = "contour"
MAX_POINTS_PER_PATH = 100_000
# smallest forward step, as a fraction of the cap, before giving up on a path
MIN_STEP_FRACTION = 1e-6
# angular cap on ring steps so that even tiny rings keep a few points
MAX_RING_STEP = np.pi / 4
SEAM_TOL = 1e-6


@dataclass(frozen=True)
class ToolConfig:
    """Cutter and tolerance settings, all lengths in mm.

    Attributes:
        cutter_radius: ball-end radius ``r``.
        scallop: scallop height limit ``h``.
        chord: chord deviation limit ``e``.
        pattern: ``"direction"`` or ``"contour"``.
        band_paths: paths planned from each boundary side with the
            corrected side step.
        max_step_fraction: cap on any parametric step relative to the
            domain extent; flat regions step by exactly this cap.
        fan: number of directions sampled around the disk center.
        k: interpolation neighborhood size.
    """

    cutter_radius: float = 4.0
    scallop: float = 1.0
    chord: float = 0.01
    pattern: str = DIRECTION
    band_paths: int = 4
    max_step_fraction: float = 0.05
    fan: int = 16
    k: int = 12

    def __post_init__(self):
        if not self.cutter_radius > 0:
            raise InvalidInputError("cutter radius must be positive")
        if not 0 < self.scallop < self.cutter_radius:
            raise InvalidInputError("scallop height must satisfy 0 < h < r")
        if not self.chord > 0:
            raise InvalidInputError("chord deviation must be positive")
        if self.pattern not in (DIRECTION, CONTOUR):
            raise InvalidInputError(f"pattern must be 'direction' or 'contour', got {self.pattern!r}")
        if not 3 <= self.band_paths <= 5:
            raise InvalidInputError("band paths must lie in [3, 5]")
        if not 0 < self.max_step_fraction <= 1:
            raise InvalidInputError("max step fraction must lie in (0, 1]")
        if self.fan < 3:
            raise InvalidInputError("the center fan needs at least 3 directions")

    def scaled(self, s):
        """Same config with every length multiplied by ``s``."""
        return ToolConfig(
            self.cutter_radius * s, self.scallop * s, self.chord * s, self.pattern,
            self.band_paths, self.max_step_fraction, self.fan, self.k,
        )


@dataclass
class ToolPath:
    """One iso-parametric path.

    ``params`` holds native coordinates: ``(u, v)`` on a rectangle,
    ``(rho, theta)`` on a disk. ``side_steps`` are the per-point side
    steps used to place the next path (filled when that path is planned).
    """

    index: int
    points: np.ndarray
    params: np.ndarray
    pattern: str
    stage: str
    samples: list = field(default_factory=list, repr=False)
    side_steps: np.ndarray | None = field(default=None, repr=False)

    @property
    def level(self):
        """The constant parameter: u for rows, rho for rings."""
        return float(self.params[0, 0])

    def __len__(self):
        return len(self.points)


# ---------------------------------------------------------------------------
# intervals and steps
# ---------------------------------------------------------------------------

def forward_interval(R, e, cap=None):
    """Chord-limited forward interval ``sqrt(8 e R - 4 e^2)``.

    A flat radius (``inf``) returns ``cap``, which is then required.
    """
    if not e > 0:
        raise InvalidInputError("chord deviation must be positive")
    if np.isinf(R):
        if cap is None:
            raise InvalidInputError("a flat radius needs a step cap")
        return float(cap)
    if R <= e / 2:
        raise InvalidCurvatureError(f"curvature radius {R:.6g} mm is not above e/2 = {e / 2:.6g} mm")
    return float(np.sqrt(8 * e * R - 4 * e * e))


def side_interval(R, h, r, convex):
    """Scallop-limited side interval for a ball-end cutter.

    ``sqrt(8 h r R / (R + r))`` on convex and ``sqrt(8 h r R / (R - r))``
    on concave regions; ``sqrt(8 h r)`` when flat.
    """
    if not 0 < h < r:
        raise InvalidInputError("scallop height must satisfy 0 < h < r")
    if np.isinf(R):
        return float(np.sqrt(8 * h * r))
    if convex:
        return float(np.sqrt(8 * h * r * R / (R + r)))
    if R <= r:
        raise GougingError(f"concave radius {R:.6g} mm does not exceed cutter radius {r:.6g} mm")
    return float(np.sqrt(8 * h * r * R / (R - r)))


def forward_step(sample, cfg, extent):
    """Parametric forward step ``l_f / |r_v|``, capped at a fraction of ``extent``."""
    nv = float(np.linalg.norm(sample.r_v))
    if nv == 0.0:
        raise DegenerateGeometryError("forward tangent vanishes")
    cap = cfg.max_step_fraction * extent
    R = curvature_radius(sample, "V").radius
    lf = forward_interval(R, cfg.chord, cap=cap * sample.sigma)
    return min(lf / nv, cap)


def side_step_interior(sample, cfg):
    """Parametric side step ``l_s / |r_u|``."""
    nu = float(np.linalg.norm(sample.r_u))
    if nu == 0.0:
        raise DegenerateGeometryError("side tangent vanishes")
    curv = curvature_radius(sample, "U")
    return side_interval(curv.radius, cfg.scallop, cfg.cutter_radius, curv.convex) / nu


def side_curvature_euler(sample, H):
    """Side-direction curvature from ``kappa_s = 2H - kappa_f``."""
    ks = 2.0 * H - normal_curvature(sample, "V")
    convex = bool(ks * CONVEX_SIGN >= 0)
    if abs(ks) < FLAT_TOL:
        return Curvature(np.inf, convex)
    return Curvature(1.0 / abs(ks), convex)


def side_step_boundary(sample, H, cfg):
    """Side step corrected for a non-orthogonal parametric frame.

    The side curvature follows from the mean curvature ``H`` and the
    forward curvature; the interval is stretched by ``1 / cos|theta -
    pi/2|`` because the parametric side direction is oblique to the path.
    """
    nu = float(np.linalg.norm(sample.r_u))
    if nu == 0.0:
        raise DegenerateGeometryError("side tangent vanishes")
    tilt = abs(sample.theta - np.pi / 2)
    c = np.cos(tilt)
    if not c > 1e-12:
        raise DegenerateGeometryError("parametric directions are parallel")
    curv = side_curvature_euler(sample, H)
    ls = side_interval(curv.radius, cfg.scallop, cfg.cutter_radius, curv.convex)
    return ls / (c * nu)


# ---------------------------------------------------------------------------
# path tracing
# ---------------------------------------------------------------------------

class _Context:
    """Shared state of one planning run."""

    def __init__(self, cloud, param, cfg):
        if len(param.coords) < cfg.k + 1:
            raise TooSparseError(f"{len(param.coords)} points cannot support a path with k = {cfg.k}")
        self.cloud = cloud
        self.param = param
        self.cfg = cfg
        self._H = None

    @property
    def H(self):
        if self._H is None:
            self._H = mean_curvature_field(self.cloud, self.cfg.k)
        return self._H

    def mean_curvature_at(self, cart):
        return interpolate(self.param, cart, k=self.cfg.k, degree=1, values=self.H)

    def sample(self, cart, directions):
        return derivatives(self.param, cart, directions=directions, k=self.cfg.k)


def _trace(ctx, start, end, cart_of, directions_of, step_of):
    """Walk a path in its running parameter from ``start`` to ``end``.

    The final point is clamped exactly to ``end``.
    """
    t = start
    ts, samples = [], []
    cap = ctx.cfg.max_step_fraction
    while True:
        s = ctx.sample(cart_of(t), directions_of(t))
        ts.append(t)
        samples.append(s)
        if t >= end:
            break
        dt = step_of(s, t)
        if not dt > MIN_STEP_FRACTION * cap * abs(end - start):
            raise PlanningError(f"forward step collapsed to {dt:.3g}")
        if len(ts) >= MAX_POINTS_PER_PATH:
            raise PlanningError("path exceeds the point limit")
        t = t + dt
        if t >= end - SEAM_TOL * dt:
            t = end
    return np.array(ts), samples


def _with_context(index, fn, *args):
    try:
        return fn(*args)
    except (PlanningError, DegenerateGeometryError, OutOfDomainError) as exc:
        raise type(exc)(f"path {index}: {exc}") from exc


def _row_path(ctx, u):
    b = ctx.param.domain.b
    axes = ((1.0, 0.0), (0.0, 1.0))
    vs, samples = _trace(
        ctx, 0.0, b,
        lambda v: np.array([u, v]),
        lambda v: axes,
        lambda s, v: forward_step(s, ctx.cfg, b),
    )
    params = np.column_stack([np.full(len(vs), u), vs])
    pts = np.array([s.position for s in samples])
    return params, pts, samples


def _ring_frame(theta):
    c, s = np.cos(theta), np.sin(theta)
    return ((c, s), (-s, c))


def _ring_path(ctx, rho):
    extent = ctx.param.domain.extent
    two_pi = 2 * np.pi

    def step(sample, theta):
        arc = forward_step(sample, ctx.cfg, extent)
        return min(arc / rho, MAX_RING_STEP)

    ths, samples = _trace(
        ctx, 0.0, two_pi,
        lambda th: np.array([rho * np.cos(th), rho * np.sin(th)]),
        _ring_frame,
        step,
    )
    params = np.column_stack([np.full(len(ths), rho), ths])
    pts = np.array([s.position for s in samples])
    return params, pts, samples


def _boundary_steps(ctx, samples):
    H = ctx.mean_curvature_at(np.array([s.q for s in samples]))
    return np.array([side_step_boundary(s, h, ctx.cfg) for s, h in zip(samples, H)])


def _interior_steps(ctx, samples):
    return np.array([side_step_interior(s, ctx.cfg) for s in samples])


def _make(ctx, level, tracer, stage, index_hint):
    params, pts, samples = _with_context(index_hint, tracer, ctx, level)
    return ToolPath(-1, pts, params, ctx.cfg.pattern, stage, samples)


def _assign_steps(ctx, tp, steps_fn, index_hint):
    tp.side_steps = _with_context(index_hint, steps_fn, ctx, tp.samples)
    return float(tp.side_steps.min())


def plan_direction_parallel(cloud, param, cfg):
    """Rows of constant u on a rectangle parameterization.

    Band paths are planned inward from ``u = 0`` and ``u = a`` with the
    corrected side step; the remaining strip is filled from the left band
    with the plain side step. Each step is the minimum over all points of
    the previous path, and filling stops before it would come closer to
    the right band than that minimum allows, so no gap exceeds a computed
    step.

    Returns:
        Paths sorted by u and indexed from 0.
    """
    if not isinstance(param.domain, Rect):
        raise InvalidInputError("direction-parallel planning needs a rectangle parameterization")
    if cfg.pattern != DIRECTION:
        cfg = ToolConfig(**{**cfg.__dict__, "pattern": DIRECTION})
    ctx = _Context(cloud, param, cfg)
    a = param.domain.a
    left, right, fill = [], [], []
    count = 0
    u = 0.0
    while len(left) < cfg.band_paths and u < a:
        tp = _make(ctx, u, _row_path, "band", count)
        left.append(tp)
        u += _assign_steps(ctx, tp, _boundary_steps, count)
        count += 1
    u_left = left[-1].level
    u = a
    collapsed = False
    while len(right) < cfg.band_paths:
        if u <= u_left:
            collapsed = True
            break
        tp = _make(ctx, u, _row_path, "band", count)
        right.append(tp)
        u -= _assign_steps(ctx, tp, _boundary_steps, count)
        count += 1
    if collapsed or u <= u_left:
        log.info("boundary bands meet, the strip is fully covered")
    else:
        u_right = right[-1].level
        step = _assign_steps(ctx, left[-1], _interior_steps, count)
        u = u_left + step
        while u < u_right - SEAM_TOL * step:
            tp = _make(ctx, u, _row_path, "fill", count)
            fill.append(tp)
            step = _assign_steps(ctx, tp, _interior_steps, count)
            count += 1
            u += step
    paths = sorted(left + fill + right, key=lambda p: p.level)
    for i, p in enumerate(paths):
        p.index = i
    return paths


def _center_path(ctx):
    """Single-point path at the disk center with the fan-minimum side step."""
    cfg = ctx.cfg
    samples = []
    for phi in 2 * np.pi * np.arange(cfg.fan) / cfg.fan:
        c, s = np.cos(phi), np.sin(phi)
        samples.append(ctx.sample(np.zeros(2), ((c, s), (-s, c))))
    pos = interpolate(ctx.param, np.zeros(2), k=cfg.k)
    tp = ToolPath(-1, pos[None], np.zeros((1, 2)), CONTOUR, "fill", samples)
    return tp


def plan_contour_parallel(cloud, param, cfg):
    """Rings of constant rho on a disk parameterization.

    Band rings move inward from the circle with the corrected side step.
    The fill starts with the single center point, whose side step is the
    minimum over a fan of directions, and grows rings outward until the
    next one would reach the innermost band ring.

    Returns:
        Paths sorted by rho, the center point first.
    """
    if not isinstance(param.domain, Disk):
        raise InvalidInputError("contour-parallel planning needs a disk parameterization")
    if cfg.pattern != CONTOUR:
        cfg = ToolConfig(**{**cfg.__dict__, "pattern": CONTOUR})
    ctx = _Context(cloud, param, cfg)
    R0 = param.domain.radius
    band = []
    count = 0
    rho = R0
    collapsed = False
    for _ in range(cfg.band_paths):
        tp = _make(ctx, rho, _ring_path, "band", count)
        band.append(tp)
        step = _assign_steps(ctx, tp, _boundary_steps, count)
        count += 1
        rho = rho - step
        if rho <= 0.0:
            collapsed = True
            break
    center = _with_context(count, _center_path, ctx)
    fill = [center]
    count += 1
    if collapsed:
        log.info("boundary rings reach the center, the disk is fully covered")
    else:
        r_inner = band[-1].level
        step = _assign_steps(ctx, center, _interior_steps, count)
        rho = step
        while rho < r_inner - SEAM_TOL * step:
            tp = _make(ctx, rho, _ring_path, "fill", count)
            fill.append(tp)
            step = _assign_steps(ctx, tp, _interior_steps, count)
            count += 1
            rho = rho + step
    paths = sorted(fill + band, key=lambda p: p.level)
    for i, p in enumerate(paths):
        p.index = i
    return paths


def plan(cloud, param, cfg):
    """Dispatch on ``cfg.pattern``."""
    if cfg.pattern == DIRECTION:
        return plan_direction_parallel(cloud, param, cfg)
    return plan_contour_parallel(cloud, param, cfg)

