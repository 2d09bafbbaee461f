"""Field files: a JSON manifest plus one data file per field.

Manifest (``"format": 1``)::

    {"format": 1, "dim": m,
     "axes": [{"min": a, "max": b, "samples": s}, ...],
     "fields": {name: {"shape": [...], "path": "name.f64", "encoding": "raw",
                       "symmetric": [[i, j], ...]}},
     "metadata": {...}}

Data are ordered by grid point (lexicographic, axis 0 slowest) and, within
a point, by component in row-major order.  ``raw`` files hold little-endian
IEEE-754 doubles with no header; ``csv`` files hold one line per grid point
with components written to 17 significant digits.  Paths are relative to
the manifest's directory.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .errors import ManifestError
from .grid import GridChart, TensorField

__all__ = ["FORMAT_VERSION", "ENCODINGS", "write_fields", "read_manifest", "chart_from_manifest"]

FORMAT_VERSION = 1
ENCODINGS = ("raw", "csv")
_EXT = {"raw": ".f64", "csv": ".csv"}


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_fields(directory, fields, metadata=None, encoding="raw"):
    """Write TensorFields sharing one chart; returns the manifest path."""
    if encoding not in ENCODINGS:
        raise ManifestError("unknown encoding", encoding=encoding, known=list(ENCODINGS))
    if not fields:
        raise ManifestError("nothing to write")
    charts = {f.chart for f in fields.values()}
    if len(charts) != 1:
        raise ManifestError("all fields in one manifest must share a chart")
    chart = charts.pop()
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    entries = {}
    for name, fld in fields.items():
        rel = name + _EXT[encoding]
        flat = np.ascontiguousarray(fld.data.reshape(chart.npoints, -1) if fld.shape else fld.data.reshape(-1, 1))
        if encoding == "raw":
            (out / rel).write_bytes(flat.astype("<f8").tobytes(order="C"))
        else:
            np.savetxt(out / rel, flat, fmt="%.17g", delimiter=",")
        entries[name] = {"shape": list(fld.shape), "path": rel, "encoding": encoding}
        if fld.symmetric:
            entries[name]["symmetric"] = [list(p) for p in fld.symmetric]
    manifest = {
        "format": FORMAT_VERSION,
        "dim": chart.dim,
        "axes": [{"min": a, "max": b, "samples": s} for a, b, s in zip(chart.mins, chart.maxs, chart.samples)],
        "fields": entries,
        "metadata": _to_jsonable(metadata or {}),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def chart_from_manifest(manifest):
    try:
        axes = manifest["axes"]
        if int(manifest["dim"]) != len(axes):
            raise ManifestError("dim does not match the number of axes")
        return GridChart(tuple(a["min"] for a in axes), tuple(a["max"] for a in axes),
                         tuple(a["samples"] for a in axes))
    except (KeyError, TypeError) as exc:
        raise ManifestError("malformed axes in manifest", detail=str(exc)) from exc


def read_manifest(path, names=None):
    """Load ``(chart, {name: TensorField}, metadata)`` from a manifest file or its directory."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError("manifest is not valid JSON", path=str(path), detail=str(exc)) from exc
    if not isinstance(manifest, dict) or manifest.get("format") != FORMAT_VERSION:
        raise ManifestError("unsupported manifest format", path=str(path))
    chart = chart_from_manifest(manifest)
    entries = manifest.get("fields")
    if not isinstance(entries, dict):
        raise ManifestError("manifest has no fields table", path=str(path))
    wanted = entries if names is None else {n: entries[n] for n in names if n in entries}
    if names is not None:
        missing = [n for n in names if n not in entries]
        if missing:
            raise ManifestError("manifest lacks required fields", missing=missing, path=str(path))
    out = {}
    for name, entry in wanted.items():
        try:
            shape = tuple(int(s) for s in entry["shape"])
            rel = entry["path"]
            enc = entry.get("encoding", "raw")
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError("malformed field entry", field=name) from exc
        file = path.parent / rel
        ncomp = int(np.prod(shape)) if shape else 1
        if enc == "raw":
            size = os.path.getsize(file)
            expected = chart.npoints * ncomp * 8
            if size != expected:
                raise ManifestError("raw file length does not match the manifest",
                                    field=name, bytes=size, expected=expected)
            data = np.frombuffer(file.read_bytes(), dtype="<f8").astype(float)
        elif enc == "csv":
            try:
                data = np.loadtxt(file, delimiter=",", ndmin=2)
            except ValueError as exc:
                raise ManifestError("unreadable CSV field", field=name, detail=str(exc)) from exc
            if data.shape != (chart.npoints, ncomp):
                raise ManifestError("CSV rows/columns do not match the manifest",
                                    field=name, got=list(data.shape), expected=[chart.npoints, ncomp])
        else:
            raise ManifestError("unknown encoding", field=name, encoding=enc)
        sym = tuple(tuple(p) for p in entry.get("symmetric", ()))
        out[name] = TensorField(chart, data.reshape(chart.shape + shape), sym)
    return chart, out, manifest.get("metadata", {})
