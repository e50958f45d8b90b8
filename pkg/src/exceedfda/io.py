"""CSV ingestion and atomic, locale-independent CSV output.

Functional data travel in long format: one row per (subject, time) pair
with columns subject_id, t, z. All numeric output uses 17 significant
digits so values round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import CsvFormatError
from .smoothing import RawTrajectory


def fmt(x) -> str:
    """Locale-independent full-precision float formatting."""
    return f"{float(x):.17g}"


def write_csv(path, header, rows) -> None:
    """Write rows atomically (temp file then rename), RFC-4180 with header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(header)
            w.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(obj, f, indent=1)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_float(text, line_no, column):
    try:
        return float(text)
    except ValueError:
        raise CsvFormatError(
            f"line {line_no}: column {column!r} has non-numeric value {text!r}"
        ) from None


def read_trajectories_csv(
    path, domain: tuple[float, float] | None = None
) -> list[RawTrajectory]:
    """Read long-format (subject_id, t, z) rows into per-subject trajectories.

    Subjects keep their order of first appearance; rows per subject are
    sorted by time. The domain defaults to [min t, max t] over the file.
    """
    by_subject: dict[str, list[tuple[float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("empty file; header required") from None
        header = [h.strip() for h in header]
        required = ["subject_id", "t", "z"]
        if [h for h in required if h not in header]:
            raise CsvFormatError(
                f"line 1: header must contain {required}, got {header}"
            )
        idx = {name: header.index(name) for name in required}
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                raise CsvFormatError(f"line {line_no}: expected {len(header)} fields")
            sid = row[idx["subject_id"]].strip()
            t = _parse_float(row[idx["t"]], line_no, "t")
            z = _parse_float(row[idx["z"]], line_no, "z")
            by_subject.setdefault(sid, []).append((t, z))
    if not by_subject:
        raise CsvFormatError("no data rows")
    if domain is None:
        all_t = [t for obs in by_subject.values() for t, _ in obs]
        domain = (min(all_t), max(all_t))
    out = []
    for sid, obs in by_subject.items():
        obs.sort(key=lambda p: p[0])
        t = np.array([p[0] for p in obs])
        z = np.array([p[1] for p in obs])
        try:
            out.append(RawTrajectory(sid, t, z, domain))
        except ValueError as exc:
            raise CsvFormatError(f"subject {sid!r}: {exc}") from exc
    return out


def read_covariates_csv(path, categorical: list[str] | None = None):
    """Read a covariate table keyed by subject_id.

    Categorical columns are one-hot encoded with the first level (in sorted
    order) dropped as reference. Returns (ids, matrix, column_names).
    """
    categorical = list(categorical or [])
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError("empty file; header required") from None
        if "subject_id" not in header:
            raise CsvFormatError("line 1: header must contain 'subject_id'")
        unknown = [c for c in categorical if c not in header]
        if unknown:
            raise CsvFormatError(f"categorical columns not in header: {unknown}")
        sid_i = header.index("subject_id")
        cov_cols = [h for h in header if h != "subject_id"]
        ids, raw = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                raise CsvFormatError(f"line {line_no}: expected {len(header)} fields")
            ids.append(row[sid_i].strip())
            rec = {}
            for col in cov_cols:
                cell = row[header.index(col)].strip()
                rec[col] = cell if col in categorical else _parse_float(
                    cell, line_no, col
                )
            raw.append(rec)
    if not ids:
        raise CsvFormatError("no data rows")
    columns, vectors = [], []
    for col in cov_cols:
        if col in categorical:
            levels = sorted({r[col] for r in raw})
            for level in levels[1:]:
                columns.append(f"{col}={level}")
                vectors.append([1.0 if r[col] == level else 0.0 for r in raw])
        else:
            columns.append(col)
            vectors.append([r[col] for r in raw])
    X = np.array(vectors, dtype=float).T
    return ids, X, columns


def save_model(path, model) -> None:
    """Serialize a fitted Frechet model to JSON (floats round-trip exactly)."""
    from .frechet import GlobalFrechetModel, LocalFrechetModel

    if isinstance(model, GlobalFrechetModel):
        obj = {"kind": "global", "X": model.X.tolist()}
    elif isinstance(model, LocalFrechetModel):
        obj = {
            "kind": "local",
            "X": model.xs.tolist(),
            "bandwidth": model.bandwidth,
            "kernel": model.kernel.family,
        }
    else:
        raise TypeError(f"not a Frechet model: {type(model).__name__}")
    obj.update(
        {
            "prob_grid": model.prob_grid.tolist(),
            "responses": model.responses.tolist(),
            "box": list(model.box),
            "threshold_grid_size": model.threshold_grid_size,
            "n_obs_per_subject": model.n_obs_per_subject,
        }
    )
    write_json(path, obj)


def load_model(path):
    from .frechet import GlobalFrechetModel, LocalFrechetModel
    from .kernels import KernelSpec

    with open(path, encoding="utf-8") as f:
        obj = json.load(f)
    common = dict(
        prob_grid=np.array(obj["prob_grid"], dtype=float),
        responses=np.array(obj["responses"], dtype=float),
        box=tuple(obj["box"]),
        threshold_grid_size=obj["threshold_grid_size"],
        n_obs_per_subject=obj["n_obs_per_subject"],
    )
    if obj["kind"] == "global":
        return GlobalFrechetModel(X=np.array(obj["X"], dtype=float), **common)
    if obj["kind"] == "local":
        return LocalFrechetModel(
            xs=np.array(obj["X"], dtype=float),
            bandwidth=obj["bandwidth"],
            kernel=KernelSpec(obj["kernel"]),
            **common,
        )
    raise CsvFormatError(f"unknown model kind {obj['kind']!r}")
