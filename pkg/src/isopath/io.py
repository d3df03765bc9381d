"""Readers and writers for clouds, break files, parameterizations and paths."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def read_xyz(path):
    """Read whitespace separated ``x y z`` lines; ``#`` starts a comment.

    Extra columns after the first three are ignored.
    """
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) < 3:
                raise InvalidInputError(f"{path}:{lineno}: expected 'x y z', got {line!r}")
            try:
                rows.append([float(v) for v in parts[:3]])
            except ValueError:
                raise InvalidInputError(f"{path}:{lineno}: non-numeric coordinate in {line!r}") from None
    if not rows:
        raise InvalidInputError(f"{path}: no points found")
    return np.array(rows, dtype=float)


def write_xyz(path, points):
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in np.asarray(points, dtype=float):
            fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")


def read_ply(path):
    """Read vertex positions from an ASCII or binary PLY file."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"ply":
            raise InvalidInputError(f"{path}: not a PLY file")
        fmt = None
        elements = []
        while True:
            raw = fh.readline()
            if not raw:
                raise InvalidInputError(f"{path}: header has no end_header")
            line = raw.decode("ascii", errors="replace").strip()
            if line == "end_header":
                break
            tokens = line.split()
            if not tokens or tokens[0] in ("comment", "obj_info"):
                continue
            if tokens[0] == "format":
                fmt = tokens[1]
            elif tokens[0] == "element":
                elements.append((tokens[1], int(tokens[2]), []))
            elif tokens[0] == "property":
                if not elements:
                    raise InvalidInputError(f"{path}: property before element")
                if tokens[1] == "list":
                    elements[-1][2].append((tokens[4], None))
                else:
                    ptype = _PLY_TYPES.get(tokens[1])
                    if ptype is None:
                        raise InvalidInputError(f"{path}: unknown PLY type {tokens[1]!r}")
                    elements[-1][2].append((tokens[2], ptype))
        body = fh.read()
    if fmt not in ("ascii", "binary_little_endian", "binary_big_endian"):
        raise InvalidInputError(f"{path}: unsupported PLY format {fmt!r}")
    names = [e[0] for e in elements]
    if "vertex" not in names:
        raise InvalidInputError(f"{path}: no vertex element")
    vidx = names.index("vertex")
    _, count, props = elements[vidx]
    pnames = [p[0] for p in props]
    if not {"x", "y", "z"} <= set(pnames):
        raise InvalidInputError(f"{path}: vertex element lacks x/y/z")
    if any(p[1] is None for p in props):
        raise InvalidInputError(f"{path}: list properties on vertices are not supported")

    if fmt == "ascii":
        lines = body.decode("ascii", errors="replace").splitlines()
        # ASCII elements are one per line; skip preceding elements line by line
        start = sum(e[1] for e in elements[:vidx])
        rows = [ln.split() for ln in lines[start:start + count]]
        if len(rows) < count:
            raise InvalidInputError(f"{path}: expected {count} vertices, found {len(rows)}")
        try:
            table = np.array([[float(v) for v in r[: len(pnames)]] for r in rows], dtype=float)
        except ValueError:
            raise InvalidInputError(f"{path}: malformed vertex line") from None
        cols = [pnames.index(c) for c in "xyz"]
        return table[:, cols]

    endian = "<" if fmt == "binary_little_endian" else ">"
    offset = 0
    for _, n, eprops in elements[:vidx]:
        if any(p[1] is None for p in eprops):
            raise InvalidInputError(f"{path}: list properties before vertex data are not supported")
        offset += n * np.dtype([(nm, endian + t) for nm, t in eprops]).itemsize
    dtype = np.dtype([(nm, endian + t) for nm, t in props])
    need = offset + count * dtype.itemsize
    if len(body) < need:
        raise InvalidInputError(f"{path}: truncated binary vertex data")
    table = np.frombuffer(body, dtype=dtype, count=count, offset=offset)
    return np.column_stack([table[c].astype(float) for c in "xyz"])


def write_ply(path, points, binary=True):
    pts = np.asarray(points, dtype=float)
    fmt = "binary_little_endian" if binary else "ascii"
    header = (
        f"ply\nformat {fmt} 1.0\nelement vertex {len(pts)}\n"
        "property double x\nproperty double y\nproperty double z\nend_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(pts.astype("<f8").tobytes())
        else:
            for x, y, z in pts:
                fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n".encode("ascii"))


def read_cloud(path):
    """Dispatch on file suffix: ``.ply`` or anything else as XYZ text."""
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"{path}: no such file")
    if path.suffix.lower() == ".ply":
        return read_ply(path)
    return read_xyz(path)


def read_breaks(path):
    """One point index per line, in traversal order."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                out.append(int(line))
            except ValueError:
                raise InvalidInputError(f"{path}:{lineno}: expected a point index, got {line!r}") from None
    return out


def write_breaks(path, breaks):
    Path(path).write_text("".join(f"{int(b)}\n" for b in breaks), encoding="utf-8")


def write_parameterization(path, param):
    """Write ``i u v`` (rect) or ``i rho theta`` (disk) with round-trip precision."""
    dom = param.domain
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dom.header() + "\n")
        for i, (s, t) in enumerate(param.coords):
            fh.write(f"{i} {float(s)!r} {float(t)!r}\n")


_DOMAIN_RE = re.compile(r"#\s*domain\s+(rect|disk)\s+(.*)")


def read_parameterization(path):
    """Inverse of :func:`write_parameterization`: ``(domain, coords)``."""
    from .param import Disk, Rect

    domain = None
    idx, coords = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            m = _DOMAIN_RE.match(line)
            if m:
                vals = [float(v) for v in m.group(2).split()]
                domain = Rect(*vals) if m.group(1) == "rect" else Disk(*vals)
                continue
            if line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise InvalidInputError(f"{path}:{lineno}: expected 'i u v'")
            try:
                idx.append(int(parts[0]))
                coords.append([float(parts[1]), float(parts[2])])
            except ValueError:
                raise InvalidInputError(f"{path}:{lineno}: malformed line") from None
    if domain is None:
        raise InvalidInputError(f"{path}: missing '# domain' header")
    if idx != list(range(len(idx))):
        raise InvalidInputError(f"{path}: point indices must run 0..n-1 in order")
    return domain, np.array(coords, dtype=float).reshape(-1, 2)


def write_paths(path, paths):
    """One ``PATH <index> <pattern>`` block per path, then ``x y z u v`` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for tp in paths:
            fh.write(f"PATH {tp.index} {tp.pattern}\n")
            for (x, y, z), (u, v) in zip(tp.points, tp.params):
                fh.write(f"{x:.6f} {y:.6f} {z:.6f} {u:.6f} {v:.6f}\n")


def read_paths(path):
    """Parse a paths file into ``(index, pattern, points, params)`` tuples."""
    blocks = []
    cur = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "PATH":
                if len(parts) != 3:
                    raise InvalidInputError(f"{path}:{lineno}: bad PATH header")
                cur = [int(parts[1]), parts[2], []]
                blocks.append(cur)
                continue
            if cur is None or len(parts) != 5:
                raise InvalidInputError(f"{path}:{lineno}: expected 'x y z u v'")
            try:
                cur[2].append([float(v) for v in parts])
            except ValueError:
                raise InvalidInputError(f"{path}:{lineno}: malformed number") from None
    out = []
    for index, pattern, rows in blocks:
        arr = np.array(rows, dtype=float).reshape(-1, 5)
        out.append((index, pattern, arr[:, :3], arr[:, 3:]))
    return out
