"""File formats: distance/point/embedding CSV, sequence lists, JSON reports.

All floating-point text output uses 17 significant digits so that reading a
file back reproduces the exact double, which makes re-runs byte-comparable.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .covers import HierarchicalCover, hierarchy_from_json, hierarchy_to_json
from .errors import ValidationError
from .metric import PseudometricSpace, from_matrix, from_points_euclidean, from_sequences_hamming
from .optimize import Embedding


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_csv_rows(path) -> list[list[str]]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([c.strip() for c in line.split(",")])
    if not rows:
        raise ValidationError(f"{path}: empty file")
    return rows


def _all_floats(cells) -> bool:
    try:
        [float(c) for c in cells]
        return True
    except ValueError:
        return False


def read_distance_csv(path, strict: bool = False) -> PseudometricSpace:
    """Square matrix CSV; an optional first row of labels is auto-detected."""
    rows = _parse_csv_rows(path)
    labels = None
    if not _all_floats(rows[0]):
        labels = rows[0]
        rows = rows[1:]
    try:
        matrix = [[float(c) for c in row] for row in rows]
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric distance entry ({exc})") from exc
    return from_matrix(matrix, strict=strict, labels=labels)


def write_distance_csv(path, space: PseudometricSpace):
    with open(path, "w", encoding="utf-8") as fh:
        if space.labels is not None:
            fh.write(",".join(space.labels) + "\n")
        for row in space.d:
            fh.write(",".join(fmt(x) for x in row) + "\n")


def read_points_csv(path) -> PseudometricSpace:
    """One point per row; an optional leading label column is auto-detected."""
    rows = _parse_csv_rows(path)
    labels = None
    if rows and not _all_floats([r[0] for r in rows]):
        labels = [r[0] for r in rows]
        rows = [r[1:] for r in rows]
    try:
        pts = [[float(c) for c in row] for row in rows]
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric point entry ({exc})") from exc
    return from_points_euclidean(pts, labels=labels)


def read_sequences(path) -> PseudometricSpace:
    """One sequence per line, uppercase alphabet."""
    with open(path, "r", encoding="utf-8") as fh:
        seqs = [line.strip() for line in fh if line.strip()]
    return from_sequences_hamming(seqs, labels=seqs if len(seqs) <= 64 else None)


def read_space(path, kind: str = "dist") -> PseudometricSpace:
    if kind == "dist":
        return read_distance_csv(path)
    if kind == "points":
        return read_points_csv(path)
    if kind == "seqs":
        return read_sequences(path)
    raise ValidationError(f"unknown input kind {kind!r}")


def write_embedding_csv(path, embedding: Embedding):
    """One row per point: optional label column first, then m coordinates."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(embedding.n):
            cells = [] if embedding.labels is None else [embedding.labels[i]]
            cells += [fmt(x) for x in embedding.coords[i]]
            fh.write(",".join(cells) + "\n")


def read_embedding_csv(path) -> Embedding:
    rows = _parse_csv_rows(path)
    labels = None
    if rows and not _all_floats([r[0] for r in rows]):
        labels = tuple(r[0] for r in rows)
        rows = [r[1:] for r in rows]
    coords = np.array([[float(c) for c in row] for row in rows])
    return Embedding(coords, labels)


def write_trace_csv(path, trace):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,loss,step,grad_norm\n")
        for it, loss, step, gnorm in trace:
            fh.write(f"{it},{fmt(loss)},{fmt(step)},{fmt(gnorm)}\n")


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_hierarchy_json(path, h: HierarchicalCover):
    write_json(path, hierarchy_to_json(h))


def read_hierarchy_json(path) -> HierarchicalCover:
    try:
        return hierarchy_from_json(read_json(path))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def write_bench_csv(path, result):
    """Benchmark table: one row per pipeline with mean/std and raw accuracies."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("cluster,loss,m,mean_accuracy,std_accuracy,repetitions,ties,raw\n")
        for row in result.rows:
            raw = ";".join(fmt(a) for a in row.accuracies)
            fh.write(
                f"{row.pipeline.cluster},{row.pipeline.loss},{row.pipeline.m},"
                f"{fmt(row.mean)},{fmt(row.std)},{len(row.accuracies)},{row.ties_seen},{raw}\n"
            )


def ensure_parent(path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
