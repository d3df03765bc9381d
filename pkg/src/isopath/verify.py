"""Path quality metrics and analytic regression oracles.

The side-interval error compares the side interval predicted from the
parametric step, ``l'_s = du * sigma``, against the 3D distance actually
achieved between adjacent paths:

    eps = |l_s - l'_s| / l_s * 100

Since the scallop height grows with the square of the side interval, the
relative scallop error is about twice that, ``e_h = 2 eps``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .diffgeo import curvature_radius, derivatives, interpolate
from .errors import InvalidInputError, IsopathError
from .param import Disk, parameterize, polar_to_cartesian
from .planner import ToolConfig, plan

INTERIOR_EPS_LIMIT = 5.0
BOUNDARY_EPS_LIMIT = 8.0
CHORD_FACTOR = 1.05


# ---------------------------------------------------------------------------
# side-interval error
# ---------------------------------------------------------------------------

def _distance_along_side(p, tangent, poly):
    """Distance from ``p`` to polyline ``poly`` within the plane normal to ``tangent``.

    Falls back to the closest point of the polyline when the plane misses it.
    """
    if len(poly) == 1:
        return float(np.linalg.norm(poly[0] - p))
    s = (poly - p) @ tangent
    a, b = s[:-1], s[1:]
    cross = np.flatnonzero((a * b <= 0) & (a != b))
    best = np.inf
    if len(cross):
        t = a[cross] / (a[cross] - b[cross])
        x = poly[cross] + t[:, None] * (poly[cross + 1] - poly[cross])
        best = float(np.min(np.linalg.norm(x - p, axis=1)))
    # vertices lying in the plane up to round-off, e.g. the seam of a closed ring
    on = np.flatnonzero(np.abs(s) <= 1e-9 * np.max(np.linalg.norm(poly - p, axis=1)))
    if len(on):
        best = min(best, float(np.min(np.linalg.norm(poly[on] - p, axis=1))))
    if np.isfinite(best):
        return best
    return float(np.min(_segment_distances(p, poly[:-1], poly[1:])))


def _segment_distances(p, A, B):
    AB = B - A
    denom = np.einsum("ij,ij->i", AB, AB)
    t = np.where(denom > 0, np.einsum("ij,ij->i", p - A, AB) / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(A + t[:, None] * AB - p, axis=1)


@dataclass
class PairError:
    """Per-point side-interval comparison between two adjacent paths."""

    path_a: int
    path_b: int
    params: np.ndarray
    predicted: np.ndarray
    achieved: np.ndarray

    @property
    def epsilon(self):
        return np.abs(self.achieved - self.predicted) / self.achieved * 100.0


def side_interval_error(path_a, path_b):
    """Side-interval error at every point of ``path_a`` against ``path_b``.

    The achieved interval is measured in the plane through each point that
    is normal to the path's forward tangent; the predicted interval is the
    parametric gap between the paths times the local conformal factor.
    When ``path_a`` is the single center point of a contour plan the roles
    are swapped, as it has no forward tangent.
    """
    if abs(path_a.index - path_b.index) != 1:
        raise InvalidInputError(f"paths {path_a.index} and {path_b.index} are not adjacent")
    if len(path_a) == 1 and len(path_b) > 1:
        path_a, path_b = path_b, path_a
    if not path_a.samples:
        raise InvalidInputError(f"path {path_a.index} carries no derivative samples")
    gap = abs(path_b.level - path_a.level)
    pred, ach = [], []
    for p, s in zip(path_a.points, path_a.samples):
        t = s.r_v / np.linalg.norm(s.r_v)
        ach.append(_distance_along_side(p, t, path_b.points))
        pred.append(gap * s.sigma)
    return PairError(path_a.index, path_b.index, path_a.params.copy(), np.array(pred), np.array(ach))


# ---------------------------------------------------------------------------
# chord deviation
# ---------------------------------------------------------------------------

def van_der_corput(n):
    """First ``n`` points of the base-2 van der Corput sequence, skipping 0.

    Every prefix is a subset of every longer prefix, so a maximum taken
    over these positions can only grow with ``n``.
    """
    out = np.empty(n)
    for i in range(1, n + 1):
        x, denom, k = 0.0, 1.0, i
        while k:
            denom *= 2
            k, bit = divmod(k, 2)
            x += bit / denom
        out[i - 1] = x
    return out


def _native_to_cartesian(domain, native):
    if isinstance(domain, Disk):
        return polar_to_cartesian(native)
    return native


def chord_deviation_audit(path, param, samples_per_segment=16, k=12):
    """Largest distance from the interpolated surface curve to its chords.

    Intermediate points are taken along the iso-parametric curve between
    consecutive path points (an arc of constant rho on disks).
    """
    if samples_per_segment < 1:
        raise InvalidInputError("samples per segment must be at least 1")
    if len(path) < 2:
        return 0.0
    t = van_der_corput(int(samples_per_segment))
    A, B = path.params[:-1], path.params[1:]
    native = (A[:, None, :] + t[None, :, None] * (B - A)[:, None, :]).reshape(-1, 2)
    X = interpolate(param, _native_to_cartesian(param.domain, native), k=k)
    X = X.reshape(len(A), len(t), 3)
    P0, P1 = path.points[:-1], path.points[1:]
    worst = 0.0
    for j in range(len(A)):
        worst = max(worst, float(np.max(_segment_distances_many(X[j], P0[j], P1[j]))))
    return worst


def _segment_distances_many(X, a, b):
    ab = b - a
    denom = ab @ ab
    t = np.clip((X - a) @ ab / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(X))
    return np.linalg.norm(a + t[:, None] * ab - X, axis=1)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _stats(x):
    if len(x) == 0:
        return {"mean": float("nan"), "max": float("nan"), "min": float("nan")}
    return {"mean": float(np.mean(x)), "max": float(np.max(x)), "min": float(np.min(x))}


@dataclass
class PathQualityReport:
    """Side-interval errors of a plan plus its chord audit.

    ``epsilon`` is in percent; ``near_boundary`` marks points on band
    paths or within the band width of the domain edge.
    """

    pairs: np.ndarray
    params: np.ndarray
    predicted: np.ndarray
    achieved: np.ndarray
    near_boundary: np.ndarray
    chord_max: float = float("nan")
    chord_limit: float = float("nan")
    interior_limit: float = INTERIOR_EPS_LIMIT
    boundary_limit: float = BOUNDARY_EPS_LIMIT
    extra: dict = field(default_factory=dict)

    @property
    def epsilon(self):
        if len(self.achieved) == 0:
            return np.zeros(0)
        return np.abs(self.achieved - self.predicted) / self.achieved * 100.0

    @property
    def e_h(self):
        return 2.0 * self.epsilon

    def stats(self, which="all"):
        eps = self.epsilon
        if which == "interior":
            eps = eps[~self.near_boundary]
        elif which == "boundary":
            eps = eps[self.near_boundary]
        elif which != "all":
            raise InvalidInputError(f"unknown subset {which!r}")
        return _stats(eps)

    @property
    def flags(self):
        out = {}
        inner = self.stats("interior")["mean"]
        near = self.stats("boundary")["mean"]
        out["interior_eps"] = bool(np.isnan(inner) or inner <= self.interior_limit)
        out["boundary_eps"] = bool(np.isnan(near) or near <= self.boundary_limit)
        if np.isfinite(self.chord_limit):
            out["chord"] = bool(self.chord_max <= self.chord_limit)
        return out

    @property
    def passed(self):
        return all(self.flags.values())

    def to_text(self):
        lines = [f"points: {len(self.epsilon)}"]
        for which in ("all", "interior", "boundary"):
            st = self.stats(which)
            for key in ("mean", "max", "min"):
                lines.append(f"eps_{which}_{key}: {st[key]:.6f}")
        lines.append(f"e_h_interior_mean: {2 * self.stats('interior')['mean']:.6f}")
        lines.append(f"e_h_boundary_mean: {2 * self.stats('boundary')['mean']:.6f}")
        lines.append(f"chord_max: {self.chord_max:.6f}")
        lines.append(f"chord_limit: {self.chord_limit:.6f}")
        for key, value in sorted(self.extra.items()):
            lines.append(f"{key}: {value:.6f}" if isinstance(value, float) else f"{key}: {value}")
        for key, ok in self.flags.items():
            lines.append(f"pass_{key}: {'yes' if ok else 'no'}")
        return "\n".join(lines) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path_a", "path_b", "s", "t", "predicted", "achieved", "epsilon", "e_h", "near_boundary"])
        eps = self.epsilon
        for (a, b), (s, t), pr, ac, e, nb in zip(
            self.pairs, self.params, self.predicted, self.achieved, eps, self.near_boundary
        ):
            w.writerow([int(a), int(b), f"{s:.6f}", f"{t:.6f}", f"{pr:.6f}", f"{ac:.6f}",
                        f"{e:.6f}", f"{2 * e:.6f}", int(nb)])
        return buf.getvalue()


def band_width(paths, domain):
    """Parametric depth of the boundary band inferred from band paths."""
    levels = np.array([p.level for p in paths if p.stage == "band"])
    if len(levels) == 0:
        return 0.0
    if isinstance(domain, Disk):
        return float(domain.radius - levels.min())
    left = levels[levels <= domain.a / 2]
    right = levels[levels > domain.a / 2]
    wl = float(left.max()) if len(left) else 0.0
    wr = float(domain.a - right.min()) if len(right) else 0.0
    return max(wl, wr)


def edge_distance(domain, native):
    """Parametric distance of native points to the domain edge."""
    native = np.atleast_2d(native)
    if isinstance(domain, Disk):
        return domain.radius - native[:, 0]
    u, v = native[:, 0], native[:, 1]
    return np.minimum.reduce([u, domain.a - u, v, domain.b - v])


def plan_quality(paths, param, cfg=None, chord_samples=16, k=12):
    """Side-interval errors over all adjacent pairs and the chord audit."""
    if len(paths) < 2:
        raise InvalidInputError("quality needs at least two paths")
    ordered = sorted(paths, key=lambda p: p.index)
    width = band_width(ordered, param.domain)
    pairs, params, pred, ach, near = [], [], [], [], []
    for a, b in zip(ordered[:-1], ordered[1:]):
        err = side_interval_error(a, b)
        n = len(err.predicted)
        in_band = "band" in (a.stage, b.stage)
        pairs.append(np.tile([err.path_a, err.path_b], (n, 1)))
        params.append(err.params)
        pred.append(err.predicted)
        ach.append(err.achieved)
        near.append(in_band | (edge_distance(param.domain, err.params) < width))
    chord = max(chord_deviation_audit(p, param, chord_samples, k) for p in ordered)
    limit = CHORD_FACTOR * cfg.chord if cfg is not None else float("nan")
    return PathQualityReport(
        np.vstack(pairs), np.vstack(params), np.concatenate(pred), np.concatenate(ach),
        np.concatenate(near), chord, limit,
    )


# ---------------------------------------------------------------------------
# analytic regression
# ---------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float
    bound: str
    passed: bool

    def line(self):
        return f"{self.name}: {self.value:.6f} ({self.bound}) {'PASS' if self.passed else 'FAIL'}"


@dataclass
class RegressionResult:
    surface: str
    checks: list
    report: PathQualityReport | None = None

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_text(self):
        out = [f"surface: {self.surface}"] + [c.line() for c in self.checks]
        out.append(f"result: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(out) + "\n"


def parse_surface(spec):
    """``"plane"``, ``"sphere:50"`` or ``"cylinder:25"`` to ``(kind, radius)``."""
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    if kind not in ("plane", "sphere", "cylinder"):
        raise InvalidInputError(f"unknown analytic surface {spec!r}")
    if kind == "plane":
        return kind, np.inf
    try:
        radius = float(arg) if arg else (50.0 if kind == "sphere" else 25.0)
    except ValueError:
        raise InvalidInputError(f"bad radius in {spec!r}") from None
    if not radius > 0:
        raise InvalidInputError("radius must be positive")
    return kind, radius


def analytic_regression(surface, cfg=None, spacing=1.0, jitter=0.0, seed=0):
    """Run the full pipeline on a synthetic surface and check closed forms.

    Args:
        surface: ``"plane"``, ``"sphere:R"`` or ``"cylinder:R"``.
        cfg: tool settings, defaults to r=4, h=1, e=0.01.
        spacing: sample spacing in mm.
        jitter: interior jitter as a fraction of the spacing.
    """
    from . import synthetic

    kind, radius = parse_surface(surface)
    cfg = ToolConfig() if cfg is None else cfg
    cfg = ToolConfig(**{**cfg.__dict__, "pattern": "direction"})
    target = float(np.sqrt(8 * cfg.scallop * cfg.cutter_radius))
    stage = "synthesis"
    try:
        if kind == "plane":
            width = 7 * target
            surf = synthetic.plane(width, spacing=spacing, jitter=jitter, seed=seed, k=cfg.k)
        elif kind == "sphere":
            n = int(min(45, np.floor(1.2 * radius / spacing))) | 1
            surf = synthetic.sphere_cap(radius, n, spacing, jitter=jitter, seed=seed, k=cfg.k)
        else:
            # a long arc keeps the flat step cap from masking the chord limit
            surf = synthetic.cylinder_patch(
                radius, min(20.0, 0.8 * radius), min(40.0, 1.6 * radius), spacing,
                jitter=jitter, seed=seed, k=cfg.k,
            )
        stage = "parameterization"
        param = parameterize(surf.cloud, surf.breaks, "rect", k=cfg.k)
        stage = "planning"
        paths = plan(surf.cloud, param, cfg)
        stage = "verification"
        report = plan_quality(paths, param, cfg, k=cfg.k)
    except IsopathError as exc:
        raise type(exc)(f"{surface} {stage}: {exc}") from exc

    checks = []
    if kind == "plane":
        ratio = report.achieved / target
        checks.append(Check("spacing_ratio_min", float(ratio.min()), ">= 0.95", bool(ratio.min() >= 0.95)))
        checks.append(Check("spacing_ratio_max", float(ratio.max()), "<= 1.0", bool(ratio.max() <= 1.0 + 1e-9)))
        flat = [curvature_radius(s, d).flat for p in paths for s in p.samples for d in ("U", "V")]
        checks.append(Check("flat_fraction", float(np.mean(flat)), "== 1", bool(all(flat))))
    else:
        inner = _interior_samples(param, spacing)
        radii = np.array([curvature_radius(derivatives(param, q, k=cfg.k), "V").radius for q in inner])
        if kind == "sphere":
            frac = float(np.mean(np.abs(radii / radius - 1) <= 0.10))
            checks.append(Check("forward_radius_within_10pct", frac, ">= 0.90", frac >= 0.90))
    if kind != "sphere":
        # iso-parametric curves on a sphere also bend within the surface, so
        # the chord bound is only an oracle where they are normal sections
        checks.append(Check("chord_max", report.chord_max, f"<= {report.chord_limit:.6f}",
                            bool(report.chord_max <= report.chord_limit)))
    eps_in = report.stats("interior")["mean"]
    eps_nb = report.stats("boundary")["mean"]
    checks.append(Check("eps_interior_mean", eps_in, f"<= {INTERIOR_EPS_LIMIT}",
                        bool(np.isnan(eps_in) or eps_in <= INTERIOR_EPS_LIMIT)))
    checks.append(Check("eps_boundary_mean", eps_nb, f"<= {BOUNDARY_EPS_LIMIT}",
                        bool(np.isnan(eps_nb) or eps_nb <= BOUNDARY_EPS_LIMIT)))
    return RegressionResult(surface, checks, report)


def _interior_samples(param, spacing, margin_rings=2, count=200):
    """Images of cloud points at least ``margin_rings`` spacings from the edge."""
    dist = edge_distance(param.domain, param.coords)
    idx = np.flatnonzero(dist >= (margin_rings + 0.5) * param.spacing)
    if len(idx) > count:
        idx = idx[np.linspace(0, len(idx) - 1, count).astype(int)]
    return param.cartesian[idx]


