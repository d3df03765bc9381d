"""SVG views of the parametric domain: images, boundary and paths."""

from __future__ import annotations

import numpy as np

from .param import Disk

CANVAS = 800.0
MARGIN = 20.0
PALETTE = {"band": "#d62728", "fill": "#1f77b4"}


def _transform(domain):
    """Map Cartesian parametric coordinates to canvas pixels (y up)."""
    if isinstance(domain, Disk):
        lo = np.array([-domain.radius, -domain.radius])
        span = np.array([2 * domain.radius, 2 * domain.radius])
    else:
        lo = np.zeros(2)
        span = np.array([domain.a, domain.b])
    scale = (CANVAS - 2 * MARGIN) / float(max(span.max(), 1e-300))
    width = span[0] * scale + 2 * MARGIN
    height = span[1] * scale + 2 * MARGIN

    def to_px(xy):
        xy = np.atleast_2d(xy)
        x = MARGIN + (xy[:, 0] - lo[0]) * scale
        y = height - MARGIN - (xy[:, 1] - lo[1]) * scale
        return np.column_stack([x, y])

    return to_px, width, height


def _header(width, height):
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.6f}" height="{height:.6f}" '
        f'viewBox="0 0 {width:.6f} {height:.6f}">\n'
        f'<rect x="0" y="0" width="{width:.6f}" height="{height:.6f}" fill="white"/>\n'
    )


def _outline(domain, to_px):
    if isinstance(domain, Disk):
        c = to_px([0.0, 0.0])[0]
        r = to_px([domain.radius, 0.0])[0, 0] - c[0]
        return (f'<circle cx="{c[0]:.6f}" cy="{c[1]:.6f}" r="{r:.6f}" '
                'fill="none" stroke="#999999" stroke-width="1"/>\n')
    p = to_px([[0.0, 0.0], [domain.a, domain.b]])
    x, y = p[0, 0], p[1, 1]
    w, h = p[1, 0] - p[0, 0], p[0, 1] - p[1, 1]
    return (f'<rect x="{x:.6f}" y="{y:.6f}" width="{w:.6f}" height="{h:.6f}" '
            'fill="none" stroke="#999999" stroke-width="1"/>\n')


def _polyline(px, color, width=1.0, closed=False):
    pts = " ".join(f"{x:.6f},{y:.6f}" for x, y in px)
    tag = "polygon" if closed else "polyline"
    return f'<{tag} points="{pts}" fill="none" stroke="{color}" stroke-width="{width:.6f}"/>\n'


def domain_svg(param, boundary_order=None, dot_radius=1.5):
    """Parameter images as dots with the ordered boundary highlighted."""
    to_px, width, height = _transform(param.domain)
    parts = [_header(width, height), _outline(param.domain, to_px)]
    px = to_px(param.cartesian)
    boundary = param.cloud.boundary
    for (x, y), b in zip(px, boundary):
        color = "#d62728" if b else "#333333"
        parts.append(f'<circle cx="{x:.6f}" cy="{y:.6f}" r="{dot_radius:.6f}" fill="{color}"/>\n')
    if boundary_order is not None and len(boundary_order) > 1:
        parts.append(_polyline(px[np.asarray(boundary_order)], "#d62728", 1.5, closed=True))
    parts.append("</svg>\n")
    return "".join(parts)


def paths_svg(param, paths, dot_radius=1.5):
    """All tool paths in the parametric domain, band paths in red."""
    to_px, width, height = _transform(param.domain)
    parts = [_header(width, height), _outline(param.domain, to_px)]
    disk = isinstance(param.domain, Disk)
    for tp in paths:
        native = tp.params
        if disk:
            # draw rings along the arc rather than along chords
            th = np.linspace(native[0, 1], native[-1, 1], max(8 * len(native), 2))
            xy = np.column_stack([native[0, 0] * np.cos(th), native[0, 0] * np.sin(th)])
        else:
            xy = native
        color = PALETTE.get(tp.stage, "#1f77b4")
        if len(xy) == 1 or (disk and native[0, 0] == 0.0):
            c = to_px(xy[:1])[0]
            parts.append(f'<circle cx="{c[0]:.6f}" cy="{c[1]:.6f}" r="{2 * dot_radius:.6f}" fill="{color}"/>\n')
            continue
        parts.append(_polyline(to_px(xy), color))
        cl = to_px(np.column_stack([native[:, 0] * np.cos(native[:, 1]), native[:, 0] * np.sin(native[:, 1])])
                   if disk else native)
        for x, y in cl:
            parts.append(f'<circle cx="{x:.6f}" cy="{y:.6f}" r="{dot_radius:.6f}" fill="{color}"/>\n')
    parts.append("</svg>\n")
    return "".join(parts)
