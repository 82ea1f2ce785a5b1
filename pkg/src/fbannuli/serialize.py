"""Meshes, CSV curves, JSON reports and chart archives.

Floats in CSV and JSON are printed with a fixed number of significant
digits and keys are sorted, so identical inputs give identical bytes.
Timestamps only go to a ``.meta.json`` sidecar.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import struct
from fractions import Fraction
from pathlib import Path

import numpy as np

from .verify import OracleChart, grid_triangles

SIG_DIGITS = 12


# -- meshes ----------------------------------------------------------------
def chart_mesh(chart, weld=None):
    """Vertices (u-major) and triangles of a chart; closed charts weld the seam."""
    weld = chart.closed if weld is None else weld
    psi = chart.psi
    nu, nv = psi.shape[:2]
    verts = psi[:, :-1].reshape(-1, 3) if weld else psi.reshape(-1, 3)
    return np.ascontiguousarray(verts, dtype=float), grid_triangles(nu, nv, weld)


def write_obj(path, vertices, faces):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("# fbannuli mesh\n")
        for v in vertices:
            fh.write("v %r %r %r\n" % tuple(float(x) for x in v))
        for f in faces:
            fh.write("f %d %d %d\n" % tuple(int(i) + 1 for i in f))


def write_ply(path, vertices, faces, binary=True):
    header = ("ply\nformat {fmt} 1.0\ncomment fbannuli mesh\n"
              "element vertex {nv}\nproperty double x\nproperty double y\nproperty double z\n"
              "element face {nf}\nproperty list uchar int vertex_indices\nend_header\n")
    fmt = "binary_little_endian" if binary else "ascii"
    head = header.format(fmt=fmt, nv=len(vertices), nf=len(faces)).encode("ascii")
    with open(path, "wb") as fh:
        fh.write(head)
        if binary:
            fh.write(np.asarray(vertices, dtype="<f8").tobytes())
            rec = np.zeros(len(faces), dtype=[("n", "u1"), ("i", "<i4", (3,))])
            rec["n"] = 3
            rec["i"] = faces
            fh.write(rec.tobytes())
        else:
            for v in vertices:
                fh.write(("%r %r %r\n" % tuple(float(x) for x in v)).encode("ascii"))
            for f in faces:
                fh.write(("3 %d %d %d\n" % tuple(int(i) for i in f)).encode("ascii"))


def read_mesh(path):
    """Read an OBJ or PLY (ASCII or binary little-endian) triangle mesh."""
    path = Path(path)
    if path.suffix.lower() == ".obj":
        verts, faces = [], []
        for line in path.read_text(encoding="ascii").splitlines():
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
        return np.array(verts, dtype=float), np.array(faces, dtype=np.int64)
    raw = path.read_bytes()
    end = raw.index(b"end_header\n") + len(b"end_header\n")
    header = raw[:end].decode("ascii").splitlines()
    nv = nf = 0
    fmt = "ascii"
    for line in header:
        p = line.split()
        if p[:1] == ["format"]:
            fmt = p[1]
        elif p[:2] == ["element", "vertex"]:
            nv = int(p[2])
        elif p[:2] == ["element", "face"]:
            nf = int(p[2])
    body = raw[end:]
    if fmt == "binary_little_endian":
        verts = np.frombuffer(body, dtype="<f8", count=3 * nv).reshape(nv, 3)
        rec = np.frombuffer(body, dtype=[("n", "u1"), ("i", "<i4", (3,))], count=nf,
                            offset=24 * nv)
        return verts.astype(float), rec["i"].astype(np.int64)
    lines = body.decode("ascii").splitlines()
    verts = np.array([[float(x) for x in ln.split()[:3]] for ln in lines[:nv]])
    faces = np.array([[int(x) for x in ln.split()[1:4]] for ln in lines[nv:nv + nf]],
                     dtype=np.int64)
    return verts, faces


def export_mesh(chart, fmt, path, binary=True):
    """Write a chart as ``obj`` or ``ply``; returns ``(n_vertices, n_faces)``."""
    verts, faces = chart_mesh(chart)
    fmt = fmt.lower()
    if fmt == "obj":
        write_obj(path, verts, faces)
    elif fmt == "ply":
        write_ply(path, verts, faces, binary=binary)
    else:
        raise ValueError(f"unknown mesh format {fmt!r}")
    return len(verts), len(faces)


# -- chart archives --------------------------------------------------------
def save_chart(path, chart):
    np.savez(path, u=chart.u_grid, v=chart.v_grid, psi=chart.psi, normal=chart.normal,
             closed=np.array(bool(chart.closed)), n_periods=np.array(int(chart.n_periods)))


def load_chart(path):
    with np.load(path) as z:
        return OracleChart(z["u"], z["v"], z["psi"], z["normal"], bool(z["closed"]),
                           int(z["n_periods"]))


# -- tables and reports ------------------------------------------------------
def fmt_float(x, sig=SIG_DIGITS):
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    return f"{x:.{sig}g}"


def _plain(obj, sig):
    if isinstance(obj, dict):
        return {str(k): _plain(v, sig) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v, sig) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist(), sig)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(fmt_float(x, sig))
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if hasattr(obj, "value"):
        return obj.value
    return obj


def dumps_json(obj, sig=SIG_DIGITS):
    return json.dumps(_plain(obj, sig), sort_keys=True, indent=2) + "\n"


def write_json(path, obj, sig=SIG_DIGITS, sidecar=True):
    Path(path).write_text(dumps_json(obj, sig), encoding="utf-8")
    if sidecar:
        meta = {"written": _dt.datetime.now(_dt.timezone.utc).isoformat()}
        Path(str(path) + ".meta.json").write_text(json.dumps(meta) + "\n", encoding="utf-8")


def csv_text(header, rows, sig=SIG_DIGITS):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(x, sig) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def write_csv(path, header, rows, sig=SIG_DIGITS):
    Path(path).write_text(csv_text(header, rows, sig), encoding="utf-8")


def pack_floats(values):
    """Little-endian doubles, used to compare round-trips bit for bit."""
    return struct.pack(f"<{len(values)}d", *values)
