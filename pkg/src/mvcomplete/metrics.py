"""Held-out evaluation metrics.

``test_error`` and ``label_error`` are reported in percent,
``reconstruction_error`` as a plain ratio.
"""
from __future__ import annotations

import numpy as np

from .errors import UndefinedMetric


def _as_mask(index_set, shape) -> np.ndarray:
    """Accept a boolean mask or a ``(rows, cols)`` pair."""
    if isinstance(index_set, np.ndarray) and index_set.dtype == bool:
        if index_set.shape != shape:
            raise ValueError(f"mask shape {index_set.shape} != {shape}")
        return index_set
    rows, cols = index_set
    mask = np.zeros(shape, dtype=bool)
    mask[np.asarray(rows, dtype=np.intp), np.asarray(cols, dtype=np.intp)] = True
    return mask


def _relative_residual(pred, truth, index_set) -> float:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    mask = _as_mask(index_set, truth.shape)
    if not mask.any():
        raise UndefinedMetric("empty evaluation set")
    denom = np.linalg.norm(truth[mask])
    if denom == 0:
        raise UndefinedMetric("truth is zero on the evaluation set")
    return float(np.linalg.norm(pred[mask] - truth[mask]) / denom)


def normalized_test_error(pred, truth, test_set) -> float:
    """``100 * ||P_T(pred - truth)||_F / ||P_T(truth)||_F``."""
    return 100.0 * _relative_residual(pred, truth, test_set)


def label_error_percent(pred, labels, test_set) -> float:
    """Percentage of held-out entries whose predicted sign is wrong; sign(0) = +1."""
    labels = np.asarray(labels, dtype=float)
    mask = _as_mask(test_set, labels.shape)
    if not mask.any():
        raise UndefinedMetric("empty evaluation set")
    guess = np.where(np.asarray(pred, dtype=float)[mask] >= 0, 1.0, -1.0)
    return 100.0 * float(np.mean(guess != labels[mask]))


def relative_reconstruction_error(pred, truth, missing_set) -> float:
    """``||P_M(pred - truth)||_F / ||P_M(truth)||_F`` on held-out feature cells."""
    return _relative_residual(pred, truth, missing_set)
