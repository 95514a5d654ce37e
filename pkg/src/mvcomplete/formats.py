"""Text file formats: coordinate views, dense CSV matrices, multi-label data."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datagen import sample_mask
from .errors import InvalidArgument, ParseError
from .loss import LossKind
from .model import MultiViewProblem, ViewData, validate_problem


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def load_coo(path) -> ViewData:
    """Read a view: header ``d n loss``, then ``row col value`` lines (0-based)."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    header_at = next((i for i, ln in enumerate(lines) if ln.strip()), None)
    if header_at is None:
        raise ParseError("missing header 'd n loss'", line=1)
    head = lines[header_at].split()
    if len(head) != 3:
        raise ParseError("header must be 'd n loss'", line=header_at + 1)
    try:
        d, n = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError("header dimensions must be integers", line=header_at + 1) from None
    if d < 1 or n < 1:
        raise ParseError("dimensions must be positive", line=header_at + 1)
    try:
        loss = LossKind(head[2])
    except ValueError:
        raise ParseError(f"unknown loss {head[2]!r}", line=header_at + 1) from None

    rows, cols, vals, seen = [], [], [], {}
    for i in range(header_at + 1, len(lines)):
        parts = lines[i].split()
        if not parts:
            continue
        lineno = i + 1
        if len(parts) != 3:
            raise ParseError("expected 'row col value'", line=lineno)
        try:
            r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError("malformed entry", line=lineno) from None
        if not (0 <= r < d and 0 <= c < n):
            raise ParseError(f"index ({r}, {c}) out of range for {d}x{n}", line=lineno)
        if (r, c) in seen:
            raise ParseError(f"duplicate entry ({r}, {c}), first on line {seen[(r, c)]}", line=lineno)
        if loss is LossKind.LOGISTIC and abs(v) != 1.0:
            raise ParseError(f"logistic target {v!r} not in {{-1, +1}}", line=lineno)
        seen[(r, c)] = lineno
        rows.append(r)
        cols.append(c)
        vals.append(v)
    view = ViewData(d, n, np.array(rows, dtype=np.intp), np.array(cols, dtype=np.intp),
                    np.array(vals, dtype=float), loss)
    issues = validate_problem(MultiViewProblem.from_views([view]))
    if issues:
        raise ParseError("; ".join(map(str, issues)))
    return view


def write_coo(view: ViewData, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{view.d} {view.n} {view.loss.value}\n")
        for r, c, v in zip(view.rows, view.cols, view.values):
            fh.write(f"{r} {c} {_fmt(v)}\n")


def load_dense_csv(path) -> np.ndarray:
    """Rectangular numeric CSV to a float matrix (``nan`` cells allowed)."""
    out, width = [], None
    with open(path, encoding="utf-8", newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"row {i} has {len(row)} cells, expected {width}", line=i + 1)
            try:
                out.append([float(cell) for cell in row])
            except ValueError:
                raise ParseError(f"row {i} has a non-numeric cell", line=i + 1) from None
    if not out:
        raise ParseError("empty matrix file")
    return np.array(out, dtype=float)


def write_dense_csv(matrix, path) -> None:
    """Write row by row at 17 significant digits (value-exact round trip)."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in matrix:
            fh.write(",".join(_fmt(x) for x in row))
            fh.write("\n")


def dense_to_view(y: np.ndarray, loss=LossKind.SQUARED) -> ViewData:
    """Observed entries are the finite cells of ``y``."""
    return ViewData.from_dense(np.nan_to_num(y), np.isfinite(y), loss)


@dataclass
class MultiLabelData:
    """Feature view (squared loss) plus label view (logistic), with held-out cells."""

    problem: MultiViewProblem
    features: np.ndarray
    labels: np.ndarray
    test_masks: list


def load_multilabel(features_path, labels_path, observed_fraction: float, seed=None) -> MultiLabelData:
    """Two-view problem from a ``d1 x n`` feature CSV and a ``d2 x n`` label CSV."""
    features = load_dense_csv(features_path)
    labels = load_dense_csv(labels_path)
    return multilabel_problem(features, labels, observed_fraction, seed)


def multilabel_problem(features, labels, observed_fraction: float, seed=None) -> MultiLabelData:
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if features.shape[1] != labels.shape[1]:
        raise InvalidArgument(f"features have n={features.shape[1]}, labels n={labels.shape[1]}")
    if np.all(np.isin(labels, (0.0, 1.0))):
        warnings.warn("labels given as 0/1; remapping to -1/+1", stacklevel=2)
        labels = 2.0 * labels - 1.0
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise InvalidArgument("labels must be binary (-1/+1 or 0/1)")
    rng = np.random.default_rng(seed)
    d1, n = features.shape
    d2 = labels.shape[0]
    m1 = sample_mask(d1, n, observed_fraction, rng)
    m2 = sample_mask(d2, n, observed_fraction, rng)
    problem = MultiViewProblem.from_views([
        ViewData.from_dense(features, m1, LossKind.SQUARED),
        ViewData.from_dense(labels, m2, LossKind.LOGISTIC),
    ])
    return MultiLabelData(problem, features, labels, [~m1, ~m2])


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def finite_or_none(x):
    return x if isinstance(x, (int, str)) or (isinstance(x, float) and math.isfinite(x)) else None
