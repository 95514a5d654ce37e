"""Proximal maps, observation projection and matrix norms.

All functions are pure and operate on dense ``numpy`` arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

# singular values below this fraction of the largest are treated as zero
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``x = u @ diag(sigma) @ v.T`` with only nonzero directions kept."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.sigma.size)

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


def _check_finite(x: np.ndarray, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidArgument(f"{name} contains non-finite entries")
    return x


def svd_factors(x: np.ndarray) -> SvdFactors:
    """SVD with a fixed sign convention.

    The first entry of largest magnitude in each left singular vector is made
    nonnegative (the right vector is flipped with it), so repeated calls on
    the same input give identical factors.
    """
    x = _check_finite(x)
    d, n = x.shape
    if x.size == 0:
        return SvdFactors(np.zeros((d, 0)), np.zeros(0), np.zeros((n, 0)))
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    smax = s[0] if s.size else 0.0
    keep = s > RANK_RTOL * smax if smax > 0 else np.zeros(s.shape, dtype=bool)
    u, s, v = u[:, keep], s[keep], vt[keep].T
    if s.size:
        pivot = np.argmax(np.abs(u) > 0.5 * np.abs(u).max(axis=0), axis=0)
        signs = np.sign(u[pivot, np.arange(u.shape[1])])
        signs[signs == 0] = 1.0
        u = u * signs
        v = v * signs
    return SvdFactors(u, s, v)


def svt(x: np.ndarray, beta: float) -> np.ndarray:
    """Singular value thresholding: ``U (Sigma - beta)_+ V^T``.

    Exact prox of ``beta * ||.||_*``.
    """
    if beta < 0:
        raise InvalidArgument(f"beta must be nonnegative, got {beta}")
    x = _check_finite(x)
    if x.size == 0:
        return x.copy()
    if beta == 0:
        return x.copy()
    return svt_with_norm(x, beta)[0]


def svt_with_norm(x: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """``svt(x, beta)`` together with the nuclear norm of the result."""
    if beta < 0:
        raise InvalidArgument(f"beta must be nonnegative, got {beta}")
    x = _check_finite(x)
    if x.size == 0:
        return x.copy(), 0.0
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    s = np.maximum(s - beta, 0.0)
    k = int(np.count_nonzero(s))
    if k == 0:
        return np.zeros_like(x), 0.0
    return (u[:, :k] * s[:k]) @ vt[:k], float(s[:k].sum())


def soft_threshold(x, alpha: float):
    """Element-wise shrinkage ``sign(x) * max(|x| - alpha, 0)``."""
    if alpha < 0:
        raise InvalidArgument(f"alpha must be nonnegative, got {alpha}")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - alpha, 0.0)


def project_obs(x: np.ndarray, rows, cols) -> np.ndarray:
    """Keep ``x`` on the index set ``(rows, cols)``, zero elsewhere."""
    x = np.asarray(x, dtype=float)
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    d, n = x.shape
    if rows.size and (rows.min() < 0 or rows.max() >= d or cols.min() < 0 or cols.max() >= n):
        raise InvalidArgument("observation index out of range")
    out = np.zeros_like(x)
    out[rows, cols] = x[rows, cols]
    return out


def nuclear_norm(x: np.ndarray) -> float:
    x = _check_finite(x)
    if x.size == 0:
        return 0.0
    return float(np.linalg.svd(x, compute_uv=False).sum())


def l1_norm(x: np.ndarray) -> float:
    return float(np.abs(x).sum())


def fro_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def numerical_rank(x: np.ndarray) -> int:
    return svd_factors(x).rank
