"""ASCII OFF / OBJ import and export; legacy VTK export with named fields."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import MeshParseError, UnknownFormatError
from .core import build_mesh

_SUFFIXES = {".off": "off", ".obj": "obj", ".vtk": "vtk"}


def _format(path, fmt):
    if fmt is None:
        fmt = _SUFFIXES.get(Path(path).suffix.lower())
        if fmt is None:
            raise UnknownFormatError(f"cannot infer mesh format from {path!r}")
    fmt = fmt.lower()
    if fmt not in ("off", "obj", "vtk"):
        raise UnknownFormatError(f"unknown mesh format {fmt!r}")
    return fmt


def _num(x):
    return repr(float(x))


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _read_off(text):
    lines = _content_lines(text)
    try:
        lineno, head = next(lines)
    except StopIteration:
        raise MeshParseError("empty OFF file") from None
    tokens = head.split()
    if tokens[0] != "OFF":
        raise MeshParseError("missing OFF header", lineno)
    tokens = tokens[1:]
    if not tokens:
        try:
            lineno, head = next(lines)
        except StopIteration:
            raise MeshParseError("missing OFF counts line") from None
        tokens = head.split()
    try:
        nv, nf = int(tokens[0]), int(tokens[1])
    except (ValueError, IndexError):
        raise MeshParseError(f"bad counts line {head!r}", lineno) from None
    verts, faces = [], []
    for lineno, line in lines:
        parts = line.split()
        if len(verts) < nv:
            try:
                verts.append([float(p) for p in parts[:3]])
            except ValueError:
                raise MeshParseError(f"bad vertex {line!r}", lineno) from None
            if len(parts) < 3:
                raise MeshParseError(f"vertex needs 3 coordinates, got {len(parts)}", lineno)
        elif len(faces) < nf:
            try:
                arity = int(parts[0])
                idx = [int(p) for p in parts[1 : 1 + arity]]
            except (ValueError, IndexError):
                raise MeshParseError(f"bad face {line!r}", lineno) from None
            if arity != 3:
                raise MeshParseError(f"face with {arity} vertices; only triangles are supported", lineno)
            if len(idx) != 3:
                raise MeshParseError("truncated face", lineno)
            faces.append(idx)
        else:
            raise MeshParseError("unexpected trailing data", lineno)
    if len(verts) != nv or len(faces) != nf:
        raise MeshParseError(f"expected {nv} vertices and {nf} faces, found {len(verts)} and {len(faces)}")
    return np.array(verts, dtype=float), np.array(faces, dtype=np.int64)


def _read_obj(text):
    verts, faces = [], []
    for lineno, line in _content_lines(text):
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            try:
                verts.append([float(p) for p in parts[1:4]])
            except ValueError:
                raise MeshParseError(f"bad vertex {line!r}", lineno) from None
            if len(parts) < 4:
                raise MeshParseError("vertex needs 3 coordinates", lineno)
        elif tag == "f":
            refs = parts[1:]
            if len(refs) != 3:
                raise MeshParseError(f"face with {len(refs)} vertices; only triangles are supported", lineno)
            idx = []
            for r in refs:
                try:
                    k = int(r.split("/")[0])
                except ValueError:
                    raise MeshParseError(f"bad face index {r!r}", lineno) from None
                idx.append(k - 1 if k > 0 else len(verts) + k)
            faces.append(idx)
        # normals, texture coordinates, groups etc. are ignored
    return np.array(verts, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def import_mesh(path, fmt=None):
    """Read an ASCII OFF or OBJ triangle mesh."""
    fmt = _format(path, fmt)
    if fmt == "vtk":
        raise UnknownFormatError("VTK is an export-only format")
    text = Path(path).read_text()
    verts, faces = _read_off(text) if fmt == "off" else _read_obj(text)
    return build_mesh(verts, faces)


def _vtk_block(name, values, n):
    values = np.asarray(values, dtype=float)
    if values.shape[0] != n:
        raise ValueError(f"field {name!r} has {values.shape[0]} entries, expected {n}")
    if values.ndim == 1:
        out = [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        out += [_num(x) for x in values]
    elif values.ndim == 2 and values.shape[1] == 3:
        out = [f"VECTORS {name} double"]
        out += [" ".join(_num(x) for x in row) for row in values]
    else:
        raise ValueError(f"field {name!r} must be scalar or 3-vector per entry")
    return out


def export_mesh(mesh, path, fmt=None, point_data=None, cell_data=None):
    """Write ``mesh`` as OFF, OBJ or legacy-VTK POLYDATA.

    ``point_data`` / ``cell_data`` map field names to per-vertex / per-triangle
    scalars or 3-vectors; they are only written to VTK files.
    """
    fmt = _format(path, fmt)
    V, T = mesh.vertices, mesh.triangles
    if fmt == "off":
        lines = ["OFF", f"{len(V)} {len(T)} {mesh.n_edges}"]
        lines += [" ".join(_num(x) for x in p) for p in V]
        lines += [f"3 {a} {b} {c}" for a, b, c in T]
    elif fmt == "obj":
        lines = [f"v {' '.join(_num(x) for x in p)}" for p in V]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in T]
    else:
        lines = [
            "# vtk DataFile Version 3.0",
            "surface mesh",
            "ASCII",
            "DATASET POLYDATA",
            f"POINTS {len(V)} double",
        ]
        lines += [" ".join(_num(x) for x in p) for p in V]
        lines.append(f"POLYGONS {len(T)} {4 * len(T)}")
        lines += [f"3 {a} {b} {c}" for a, b, c in T]
        if point_data:
            lines.append(f"POINT_DATA {len(V)}")
            for name, vals in point_data.items():
                lines += _vtk_block(name, vals, len(V))
        if cell_data:
            lines.append(f"CELL_DATA {len(T)}")
            for name, vals in cell_data.items():
                lines += _vtk_block(name, vals, len(T))
    Path(path).write_text("\n".join(lines) + "\n")
