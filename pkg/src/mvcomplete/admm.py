"""ADMM for the multi-view objective.

The prediction of each view ``P_k X0 + X_k + S_k`` is split off into an
auxiliary ``Z_k`` tied by the constraint ``Z_k = P_k X0 + X_k + S_k``. The
outer loop updates the multipliers ``B_k`` and grows the penalty ``mu``
geometrically; the inner loop sweeps ``X0``, then per view ``X_k``, ``S_k``
and ``Z_k``, each minimized exactly (``Z_k`` through a majorizer for
logistic views).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidArgument, NumericalFailure
from .loss import LossKind, TauState, cumulative_loss, z_update_logistic, z_update_squared
from .model import (LatentBlocks, ModelSpec, MultiViewProblem, SolveResult, assemble_prediction,
                    check_problem, concat_blocks, objective, regularizer, select_block)
from .prox import fro_norm, soft_threshold, svt


@dataclass(frozen=True)
class AdmmConfig:
    outer_iters: int = 30
    inner_iters: int = 10
    mu0: float = 0.01
    rho: float = 1.5
    primal_tol: float = 1e-6
    mu_max: float = 1e12
    mm_steps: int = 1
    tau0: float = 0.25
    # record the augmented Lagrangian around every block update
    track_lagrangian: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.outer_iters < 1 or self.inner_iters < 1 or self.mm_steps < 1:
            raise InvalidArgument("iteration counts must be positive")
        if not self.mu0 > 0:
            raise InvalidArgument("mu0 must be positive")
        if not self.rho > 1:
            raise InvalidArgument("rho must be > 1")


@dataclass
class SolverState:
    """ADMM variables: latent blocks, splitting copies ``z``, multipliers ``b``."""

    blocks: LatentBlocks
    z: list
    b: list
    mu: float
    tau: list = field(default_factory=list)

    @classmethod
    def zeros(cls, problem: MultiViewProblem, spec: ModelSpec, mu0: float,
              tau0: float = 0.25) -> "SolverState":
        n = problem.n
        return cls(
            blocks=LatentBlocks.zeros(problem, spec),
            z=[np.zeros((d, n)) for d in problem.dims],
            b=[np.zeros((d, n)) for d in problem.dims],
            mu=float(mu0),
            tau=[TauState(tau=tau0) for _ in problem.dims],
        )

    def copy(self) -> "SolverState":
        return SolverState(self.blocks.copy(), [z.copy() for z in self.z],
                           [b.copy() for b in self.b], self.mu, list(self.tau))


def _part(blocks_list, k, like):
    return blocks_list[k] if blocks_list is not None else np.zeros_like(like)


def residuals(state: SolverState, problem: MultiViewProblem, spec: ModelSpec) -> list[np.ndarray]:
    """``P_k X0 + X_k + S_k - Z_k`` for each view."""
    return [assemble_prediction(state.blocks, spec, k, problem.dims) - state.z[k]
            for k in range(problem.K)]


def primal_residual(state: SolverState, problem: MultiViewProblem, spec: ModelSpec) -> float:
    return max(fro_norm(r) / max(1.0, fro_norm(z))
               for r, z in zip(residuals(state, problem, spec), state.z))


def augmented_lagrangian(state: SolverState, problem: MultiViewProblem, spec: ModelSpec) -> float:
    total = regularizer(spec, state.blocks)
    for k, (view, r) in enumerate(zip(problem.views, residuals(state, problem, spec))):
        total += view.weight * cumulative_loss(view.loss, state.z[k], view)
        total -= float(np.sum(state.b[k] * r))
        total += 0.5 * state.mu * float(np.sum(r * r))
    return total


def update_x0(state: SolverState, problem: MultiViewProblem, spec: ModelSpec) -> np.ndarray:
    blk, mu = state.blocks, state.mu
    arg = concat_blocks([
        state.z[k] + state.b[k] / mu - _part(blk.xk, k, state.z[k]) - _part(blk.sk, k, state.z[k])
        for k in range(problem.K)
    ])
    return svt(arg, spec.lambda0 / mu)


def _shared_part(state, problem, spec, k):
    if spec.shared:
        return select_block(state.blocks.x0, k, problem.dims)
    return 0.0


def update_xk(state: SolverState, problem: MultiViewProblem, spec: ModelSpec, k: int) -> np.ndarray:
    blk, mu = state.blocks, state.mu
    arg = (state.z[k] + state.b[k] / mu - _shared_part(state, problem, spec, k)
           - _part(blk.sk, k, state.z[k]))
    return svt(arg, spec.lam(k) / mu)


def update_sk(state: SolverState, problem: MultiViewProblem, spec: ModelSpec, k: int) -> np.ndarray:
    blk, mu = state.blocks, state.mu
    arg = (state.z[k] + state.b[k] / mu - _shared_part(state, problem, spec, k)
           - _part(blk.xk, k, state.z[k]))
    return soft_threshold(arg, spec.alpha(k) / mu)


def update_zk(state: SolverState, problem: MultiViewProblem, spec: ModelSpec, k: int,
              mm_steps: int = 1) -> tuple[np.ndarray, TauState]:
    """Minimize the augmented Lagrangian over ``Z_k``; returns the new ``Z_k`` and tau."""
    view = problem.views[k]
    m = assemble_prediction(state.blocks, spec, k, problem.dims)
    if view.loss is LossKind.SQUARED:
        return z_update_squared(m, state.b[k], state.mu, view), state.tau[k]
    if view.loss is LossKind.LOGISTIC:
        return z_update_logistic(m, state.b[k], state.mu, view, state.z[k], state.tau[k], mm_steps)
    raise InvalidArgument(f"unknown loss kind {view.loss!r}")


def update_multipliers(state: SolverState, problem: MultiViewProblem, spec: ModelSpec,
                       rho: float, mu_max: float = 1e12) -> SolverState:
    """``B_k -= mu * residual_k`` then ``mu *= rho`` (capped at ``mu_max``)."""
    res = residuals(state, problem, spec)
    b = [bk - state.mu * r for bk, r in zip(state.b, res)]
    return replace(state, b=b, mu=min(state.mu * rho, mu_max))


def _inner_sweep(state, problem, spec, cfg, log):
    """One pass of the block updates, in place on ``state``."""
    def step(label, k, apply):
        if log is None:
            apply()
            return
        before = augmented_lagrangian(state, problem, spec)
        apply()
        log.append((label, k, before, augmented_lagrangian(state, problem, spec)))

    blk = state.blocks
    if spec.shared:
        step("x0", None, lambda: setattr(blk, "x0", update_x0(state, problem, spec)))
    for k in range(problem.K):
        if spec.specific:
            step("xk", k, lambda: blk.xk.__setitem__(k, update_xk(state, problem, spec, k)))
        if spec.robust:
            step("sk", k, lambda: blk.sk.__setitem__(k, update_sk(state, problem, spec, k)))

        def set_z():
            state.z[k], state.tau[k] = update_zk(state, problem, spec, k, cfg.mm_steps)
        step("zk", k, set_z)


def admm_solve(problem: MultiViewProblem, spec: ModelSpec,
               config: Optional[AdmmConfig] = None,
               init: Optional[SolverState] = None) -> SolveResult:
    """Run the outer/inner ADMM loops from zero (or ``init``)."""
    cfg = config or AdmmConfig()
    check_problem(problem)
    spec.check_views(problem.K)
    state = init.copy() if init is not None else SolverState.zeros(problem, spec, cfg.mu0, cfg.tau0)
    log = [] if cfg.track_lagrangian else None

    result = SolveResult(blocks=state.blocks, spec=spec, solver="admm")
    # the clock excludes objective evaluation, which only feeds the trace
    elapsed = 0.0
    for t in range(1, cfg.outer_iters + 1):
        tick = time.perf_counter()
        for _ in range(cfg.inner_iters):
            _inner_sweep(state, problem, spec, cfg, log)
        if not all(np.all(np.isfinite(a)) for a in state.blocks.arrays() + state.z):
            raise NumericalFailure(f"non-finite iterate at outer iteration {t}", iteration=t)
        res = primal_residual(state, problem, spec)
        elapsed += time.perf_counter() - tick
        result.objective_trace.append(objective(problem, spec, state.blocks))
        result.residual_trace.append(res)
        result.time_trace.append(elapsed)
        result.iterations = t
        if res <= cfg.primal_tol:
            result.converged = True
            break
        state = update_multipliers(state, problem, spec, cfg.rho, cfg.mu_max)

    result.blocks = state.blocks
    result.info = {"mu": state.mu, "tau": [ts.tau for ts in state.tau],
                   "state": state}
    if log is not None:
        result.info["lagrangian_log"] = log
    return result
