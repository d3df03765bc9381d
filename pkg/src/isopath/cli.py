"""Command-line front end: ``isopath {param,plan,verify,synth}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as iio
from .cloud import DEFAULT_GAP_THRESHOLD, PointCloud, classify_boundary, fair
from .diffgeo import derivatives
from .errors import InvalidInputError, IsopathError, OutOfDomainError, SolverError, exit_code_for
from .param import (
    Disk,
    Parameterization,
    Rect,
    build_laplacian,
    conformality_report,
    map_boundary_disk,
    map_boundary_rect,
    order_boundary,
    polar_to_cartesian,
    solve_parameterization,
)
from .planner import CONTOUR, DIRECTION, ToolConfig, ToolPath, plan
from .svg import domain_svg, paths_svg
from .verify import analytic_regression, plan_quality

log = logging.getLogger("isopath")

CONSISTENCY_TOL = 1e-3  # mm between stored and re-interpolated path points
FILE_PRECISION = 1e-6  # paths.txt keeps 6 decimals


# ---------------------------------------------------------------------------
# shared pipeline steps
# ---------------------------------------------------------------------------

def _load_cloud(args):
    points = iio.read_cloud(args.input)
    cloud = PointCloud(points, k=args.knn)
    cloud.estimate_normals()
    classify_boundary(cloud, gap_threshold=args.gap)
    if getattr(args, "fair", 0):
        weights = build_laplacian(cloud)
        boundary = cloud.boundary
        cloud = fair(cloud, weights, steps=args.fair)
        cloud.boundary = boundary
        cloud.estimate_normals()
    return cloud


def _check_breaks(breaks, domain):
    if domain == "rect" and len(breaks) != 4:
        raise InvalidInputError(
            f"rectangle domain needs exactly 4 break points (one per boundary part), got {len(breaks)}"
        )
    if domain == "disk" and len(breaks) < 2:
        raise InvalidInputError(f"disk domain needs at least 2 break points, got {len(breaks)}")


def _solve(args, cloud):
    if not args.breaks:
        raise InvalidInputError("--breaks is required to compute a parameterization")
    breaks = iio.read_breaks(args.breaks)
    _check_breaks(breaks, args.domain)
    weights = build_laplacian(cloud)
    loop = order_boundary(cloud, breaks)
    bmap = map_boundary_rect(loop) if args.domain == "rect" else map_boundary_disk(loop)
    param = solve_parameterization(weights, bmap, cloud, solver=args.solver)
    return param, loop


def _load_param(path, cloud):
    domain, coords = iio.read_parameterization(path)
    if len(coords) != len(cloud):
        raise InvalidInputError(
            f"{path} holds {len(coords)} parameter images but the cloud has {len(cloud)} points"
        )
    return Parameterization(cloud, domain, coords)


def _tool_config(args, pattern):
    return ToolConfig(
        cutter_radius=args.cutter,
        scallop=args.scallop,
        chord=args.chord,
        pattern=pattern,
        band_paths=args.band_paths,
        max_step_fraction=args.max_step_fraction,
        k=args.knn,
    )


def _pattern_for(args, domain):
    want = args.pattern or (CONTOUR if isinstance(domain, Disk) else DIRECTION)
    if want == DIRECTION and not isinstance(domain, Rect):
        raise InvalidInputError("direction-parallel paths need a rectangle parameterization")
    if want == CONTOUR and not isinstance(domain, Disk):
        raise InvalidInputError("contour-parallel paths need a disk parameterization")
    return want


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_kv(pairs):
    for key, value in pairs:
        print(f"{key}: {value:.6f}" if isinstance(value, float) else f"{key}: {value}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_param(args):
    cloud = _load_cloud(args)
    param, loop = _solve(args, cloud)
    out = _out_dir(args)
    iio.write_parameterization(out / "param.txt", param)
    (out / "domain.svg").write_text(domain_svg(param, loop.order), encoding="utf-8")
    rep = conformality_report(cloud, param, samples=args.samples)
    dom = param.domain
    dims = [("domain", "rect"), ("a", dom.a), ("b", dom.b)] if isinstance(dom, Rect) else [
        ("domain", "disk"), ("R0", dom.radius)]
    _print_kv(dims + [("points", len(cloud)), ("boundary_points", int(cloud.boundary.sum()))]
              + list(rep.summary().items()))
    return 0


def cmd_plan(args):
    cloud = _load_cloud(args)
    if args.param:
        param = _load_param(args.param, cloud)
    else:
        param, _ = _solve(args, cloud)
    pattern = _pattern_for(args, param.domain)
    cfg = _tool_config(args, pattern)
    paths = plan(cloud, param, cfg)
    out = _out_dir(args)
    if not args.param:
        iio.write_parameterization(out / "param.txt", param)
    iio.write_paths(out / "paths.txt", paths)
    (out / "paths.svg").write_text(paths_svg(param, paths), encoding="utf-8")
    report = plan_quality(paths, param, cfg, k=cfg.k)
    report.extra.update({"paths": len(paths), "cl_points": int(sum(len(p) for p in paths))})
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    _print_kv([("paths", len(paths)), ("cl_points", int(sum(len(p) for p in paths))),
               ("eps_interior_mean", report.stats("interior")["mean"]),
               ("eps_boundary_mean", report.stats("boundary")["mean"]),
               ("chord_max", report.chord_max)])
    return 0


def _rebuild_paths(blocks, param, cfg):
    """ToolPaths from a paths file, with samples re-derived and points checked."""
    from .diffgeo import interpolate

    disk = isinstance(param.domain, Disk)
    indices = [b[0] for b in blocks]
    if indices != list(range(len(blocks))):
        raise InvalidInputError("path indices must run 0..n-1 in order")
    n = len(blocks)
    nb = cfg.band_paths
    paths = []
    for index, pattern, pts, params in blocks:
        if pattern != cfg.pattern:
            raise InvalidInputError(f"path {index} has pattern {pattern!r}, expected {cfg.pattern!r}")
        cart = polar_to_cartesian(params) if disk else params.copy()
        # undo rounding that moved a point off the image it was planned on
        snap = FILE_PRECISION * (1.0 + param.domain.extent)
        dist, near = param.tree.query(cart)
        hit = dist <= snap
        cart[hit] = param.cartesian[near[hit]]
        try:
            recon = interpolate(param, cart, k=cfg.k)
        except OutOfDomainError as exc:
            raise InvalidInputError(f"path {index} does not fit the parameterization: {exc}") from None
        err = float(np.max(np.linalg.norm(recon - pts, axis=1)))
        if err > CONSISTENCY_TOL:
            raise InvalidInputError(
                f"path {index} deviates {err:.3g} mm from the parameterization; files do not match"
            )
        samples = []
        for q, (lvl, t) in zip(cart, params):
            if disk:
                c, s = np.cos(t), np.sin(t)
                samples.append(derivatives(param, q, ((c, s), (-s, c)), k=cfg.k))
            else:
                samples.append(derivatives(param, q, k=cfg.k))
        # band membership follows the planner's layout
        band = index >= n - nb if disk else (index < nb or index >= n - nb)
        paths.append(ToolPath(index, pts, params, pattern, "band" if band else "fill", samples))
    return paths


def cmd_verify(args):
    if args.analytic:
        cfg = ToolConfig(args.cutter, args.scallop, args.chord, DIRECTION, args.band_paths,
                         args.max_step_fraction, k=args.knn)
        result = analytic_regression(args.analytic, cfg)
        text = result.to_text()
        if args.out:
            out = _out_dir(args)
            (out / "report.txt").write_text(text + result.report.to_text(), encoding="utf-8")
            (out / "epsilon.csv").write_text(result.report.to_csv(), encoding="utf-8")
        sys.stdout.write(text)
        return 0 if result.passed else 1
    for flag in ("input", "param", "paths"):
        value = getattr(args, flag)
        if not value or not Path(value).exists():
            raise InvalidInputError(f"--{'in' if flag == 'input' else flag} is missing or does not exist")
    cloud = _load_cloud(args)
    param = _load_param(args.param, cloud)
    blocks = iio.read_paths(args.paths)
    if not blocks:
        raise InvalidInputError(f"{args.paths} holds no paths")
    pattern = blocks[0][1]
    if pattern not in (DIRECTION, CONTOUR):
        raise InvalidInputError(f"unknown path pattern {pattern!r}")
    args.pattern = pattern
    cfg = _tool_config(args, _pattern_for(args, param.domain))
    paths = _rebuild_paths(blocks, param, cfg)
    report = plan_quality(paths, param, cfg, k=cfg.k)
    out = _out_dir(args)
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    (out / "epsilon.csv").write_text(report.to_csv(), encoding="utf-8")
    _print_kv([("eps_interior_mean", report.stats("interior")["mean"]),
               ("eps_boundary_mean", report.stats("boundary")["mean"]),
               ("chord_max", report.chord_max)])
    return 0


def cmd_synth(args):
    from . import synthetic

    kw = {"spacing": args.spacing, "jitter": args.jitter, "seed": args.seed, "k": args.knn}
    if args.shape == "plane":
        surf = synthetic.plane(args.size, **kw)
    elif args.shape == "sphere":
        surf = synthetic.sphere_cap(args.radius or 50.0, int(round(args.size / args.spacing)) + 1, **kw)
    elif args.shape == "cylinder":
        surf = synthetic.cylinder_patch(args.radius or 25.0, args.size, args.size, **kw)
    else:
        surf = synthetic.flat_disk(args.radius or args.size / 2, **kw)
    out = _out_dir(args)
    iio.write_xyz(out / "cloud.xyz", surf.cloud.points)
    iio.write_breaks(out / "breaks.txt", surf.breaks)
    _print_kv([("shape", args.shape), ("points", len(surf.cloud)), ("breaks", " ".join(map(str, surf.breaks)))])
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _common(p, need_input=True):
    p.add_argument("--in", dest="input", required=need_input, help="point cloud (.xyz or .ply)")
    p.add_argument("--knn", type=int, default=12, help="neighborhood size K")
    p.add_argument("--gap", type=float, default=DEFAULT_GAP_THRESHOLD,
                   help="angular gap (radians) that marks a boundary point")
    p.add_argument("--fair", type=int, default=0, help="Laplacian fairing steps before solving")
    p.add_argument("--out", default=".", help="output directory")


def _solve_opts(p):
    p.add_argument("--breaks", help="break point file, one index per line")
    p.add_argument("--domain", choices=("rect", "disk"), default="rect")
    p.add_argument("--solver", choices=("direct", "gmres"), default="direct")


def _tool_opts(p):
    p.add_argument("--pattern", choices=(DIRECTION, CONTOUR))
    p.add_argument("--cutter", type=float, default=4.0, help="ball-end radius r (mm)")
    p.add_argument("--scallop", type=float, default=1.0, help="scallop height limit h (mm)")
    p.add_argument("--chord", type=float, default=0.01, help="chord deviation limit e (mm)")
    p.add_argument("--band-paths", type=int, default=4, help="boundary band paths per side (3-5)")
    p.add_argument("--max-step-fraction", type=float, default=0.05,
                   help="cap on parametric steps relative to the domain extent")


def build_parser():
    parser = argparse.ArgumentParser(prog="isopath", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("param", help="parameterize a cloud onto a rectangle or disk")
    _common(p)
    _solve_opts(p)
    p.add_argument("--samples", type=int, default=500, help="conformality samples")
    p.set_defaults(func=cmd_param)

    p = sub.add_parser("plan", help="plan iso-parametric tool paths")
    _common(p)
    _solve_opts(p)
    _tool_opts(p)
    p.add_argument("--param", help="reuse a param.txt instead of solving")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify", help="measure path quality or run an analytic oracle")
    _common(p, need_input=False)
    _tool_opts(p)
    p.add_argument("--param", help="param.txt of the plan")
    p.add_argument("--paths", help="paths.txt of the plan")
    p.add_argument("--analytic", help="plane, sphere:R or cylinder:R")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("synth", help="write a synthetic test cloud and its breaks")
    p.add_argument("--shape", choices=("plane", "sphere", "cylinder", "disk"), default="plane")
    p.add_argument("--size", type=float, default=40.0, help="width (mm); diameter for disks")
    p.add_argument("--radius", type=float, help="curvature radius, or disk radius")
    p.add_argument("--spacing", type=float, default=1.0)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--knn", type=int, default=12)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SolverError as exc:
        res = "n/a" if exc.residual is None else f"{exc.residual:.3e}"
        print(f"error: solver failure: {exc} (residual: {res})", file=sys.stderr)
        return exit_code_for(exc)
    except IsopathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
