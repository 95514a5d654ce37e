"""Per-entry losses and the closed-form / majorized Z-updates."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .errors import InvalidArgument

# slack on the majorization check, relative to the loss magnitude
_BOUND_RTOL = 1e-12
_MAX_BACKTRACKS = 100


class LossKind(str, enum.Enum):
    SQUARED = "squared"
    LOGISTIC = "logistic"

    @classmethod
    def parse(cls, value) -> "LossKind":
        try:
            return cls(value)
        except ValueError:
            raise InvalidArgument(f"unknown loss kind {value!r}") from None


def _check_binary(y) -> None:
    if not np.all(np.abs(np.asarray(y)) == 1.0):
        raise InvalidArgument("logistic loss requires targets in {-1, +1}")


def loss_value(kind, x, y):
    """Scalar (or element-wise) loss ``e(x, y)``."""
    kind = LossKind.parse(kind)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if kind is LossKind.SQUARED:
        out = 0.5 * (x - y) ** 2
    else:
        _check_binary(y)
        out = np.logaddexp(0.0, -x * y)
    return float(out) if out.ndim == 0 else out


def loss_grad(kind, x, y):
    """Derivative of the loss in its first argument."""
    kind = LossKind.parse(kind)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if kind is LossKind.SQUARED:
        out = x - y
    else:
        out = -y * expit(-y * x)
    return float(out) if out.ndim == 0 else out


def cumulative_loss(kind, x: np.ndarray, view) -> float:
    """Sum of the loss over the observed entries of ``view`` (unweighted)."""
    if view.nnz == 0:
        return 0.0
    return float(np.sum(loss_value(kind, x[view.rows, view.cols], view.values)))


def _check_mu(mu: float) -> None:
    if not mu > 0:
        raise InvalidArgument(f"mu must be positive, got {mu}")


def z_update_squared(m: np.ndarray, b: np.ndarray, mu: float, view) -> np.ndarray:
    """Exact minimizer of ``w E(Z; Y) + <B, Z> + mu/2 ||M - Z||^2``.

    Off the support ``z = m - b / mu``; on it
    ``z = (mu m - b + w y) / (w + mu)``, with ``w`` the view's loss weight.
    """
    _check_mu(mu)
    z = m - b / mu
    if view.nnz:
        r, c, w = view.rows, view.cols, view.weight
        z[r, c] = (mu * m[r, c] - b[r, c] + w * view.values) / (w + mu)
    return z


@dataclass(frozen=True)
class TauState:
    """Curvature of the quadratic majorizer of the logistic loss."""

    tau: float = 0.25
    growth: float = 2.0
    shrink: float = 0.8
    floor: float = 1e-8

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidArgument("tau must be positive")
        if not self.growth > 1:
            raise InvalidArgument("growth must exceed 1")
        if not 0 < self.shrink < 1:
            raise InvalidArgument("shrink must lie in (0, 1)")


def majorizer_target(zbar, y, tau: float):
    """``zbar - e'(zbar) / tau`` for the logistic loss."""
    return zbar - loss_grad(LossKind.LOGISTIC, zbar, y) / tau


def majorizer_value(z, zbar, y, tau: float):
    """Quadratic upper bound of the logistic loss expanded at ``zbar``."""
    dz = np.asarray(z, dtype=float) - zbar
    return (loss_value(LossKind.LOGISTIC, zbar, y)
            + loss_grad(LossKind.LOGISTIC, zbar, y) * dz
            + 0.5 * tau * dz ** 2)


def _bound_holds(z, zbar, y, tau) -> bool:
    lhs = loss_value(LossKind.LOGISTIC, z, y)
    rhs = majorizer_value(z, zbar, y, tau)
    return bool(np.all(lhs <= rhs + _BOUND_RTOL * (1.0 + np.abs(lhs))))


def z_update_logistic(m: np.ndarray, b: np.ndarray, mu: float, view,
                      zprev: np.ndarray, tau_state: TauState | None = None,
                      steps: int = 1) -> tuple[np.ndarray, TauState]:
    """Majorize-minimize update of ``Z`` for a logistic view.

    The loss on each observed entry is replaced by its quadratic majorizer
    at ``zprev`` and the resulting subproblem is solved exactly. If the bound
    fails at the candidate, ``tau`` grows and the step is recomputed; once
    accepted, ``tau`` shrinks for the next call.
    """
    _check_mu(mu)
    if tau_state is None:
        tau_state = TauState()
    z = m - b / mu
    if not view.nnz:
        return z, tau_state
    r, c, y, w = view.rows, view.cols, view.values, view.weight
    mr, br = m[r, c], b[r, c]
    zbar = np.asarray(zprev, dtype=float)[r, c]
    tau = tau_state.tau
    for _ in range(steps):
        for _ in range(_MAX_BACKTRACKS):
            ybar = majorizer_target(zbar, y, tau)
            zr = (w * tau * ybar - br + mu * mr) / (w * tau + mu)
            if tau >= 0.25 or _bound_holds(zr, zbar, y, tau):
                break
            tau *= tau_state.growth
        zbar = zr
        tau = max(tau * tau_state.shrink, tau_state.floor)
    z[r, c] = zr
    return z, replace(tau_state, tau=tau)
