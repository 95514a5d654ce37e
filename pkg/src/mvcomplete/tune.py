"""Hyperparameter search: grid search with entry-level CV and Nelder-Mead.

Parameters are handled as dicts with keys ``lambda``, ``c`` and
``alpha_1 .. alpha_K``; which keys a model uses depends on its blocks.
The black-box search runs in log10 space for ``lambda`` and the alphas and
in linear space for ``c``.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .admm import AdmmConfig, admm_solve
from .apg import ApgConfig, apg_solve
from .errors import InvalidArgument
from .loss import loss_value
from .model import VARIANTS, ModelSpec, MultiViewProblem

log = logging.getLogger(__name__)

DECADE_RANGE = (1e-2, 1e-1, 1e0, 1e1, 1e2)
C_RANGE = tuple(round(0.1 * i, 1) for i in range(1, 10))


def reparam_lambdas(lam: float, c: float, K: int) -> tuple[float, list[float]]:
    """``lambda0 = lam / (1 - c)`` and ``lambda_k = lam / c``."""
    if not 0.0 < c < 1.0:
        raise InvalidArgument(f"c must lie strictly inside (0, 1), got {c}")
    return lam / (1.0 - c), [lam / c] * K


def param_names(model: str, K: int) -> list[str]:
    shared, specific, robust = VARIANTS[model.upper()]
    names = ["lambda"]
    if shared and specific:
        names.append("c")
    if robust:
        names += [f"alpha_{k + 1}" for k in range(K)]
    return names


def spec_from_params(model: str, params: dict, K: int) -> ModelSpec:
    """Model spec for ``params``; a lone nuclear block gets weight ``lambda``."""
    shared, specific, robust = VARIANTS[model.upper()]
    lam = params["lambda"]
    if shared and specific:
        lambda0, lambda_k = reparam_lambdas(lam, params["c"], K)
    else:
        lambda0, lambda_k = lam, [lam] * K
    alpha_k = [params[f"alpha_{k + 1}"] for k in range(K)] if robust else [0.0]
    return ModelSpec(shared, specific, robust, lambda0=lambda0, lambda_k=lambda_k, alpha_k=alpha_k)


@dataclass(frozen=True)
class ParamGrid:
    lambda_values: tuple = DECADE_RANGE
    alpha_values: tuple = DECADE_RANGE
    c_values: tuple = C_RANGE
    # one alpha shared by all views instead of a separate axis per view
    tie_alphas: bool = False

    def __post_init__(self):
        for name in ("lambda_values", "alpha_values", "c_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise InvalidArgument(f"{name} must be nonempty")
            object.__setattr__(self, name, vals)
        if any(v <= 0 for v in self.lambda_values + self.alpha_values):
            raise InvalidArgument("lambda and alpha values must be positive")
        if any(not 0 < c < 1 for c in self.c_values):
            raise InvalidArgument("c values must lie strictly inside (0, 1)")

    def cells(self, model: str, K: int) -> list[dict]:
        """Every parameter combination, in lexicographic grid order."""
        names = param_names(model, K)
        robust = any(n.startswith("alpha_") for n in names)
        if self.tie_alphas and robust:
            names = [n for n in names if not n.startswith("alpha_")] + ["alpha"]
        axes = [self.lambda_values if n == "lambda" else self.c_values if n == "c"
                else self.alpha_values for n in names]
        cells = [dict(zip(names, combo)) for combo in itertools.product(*axes)]
        if self.tie_alphas:
            for cell in cells:
                if "alpha" in cell:
                    a = cell.pop("alpha")
                    cell.update({f"alpha_{k + 1}": a for k in range(K)})
        return cells


def kfold_split(n: int, k: int, seed=None) -> list[np.ndarray]:
    """Shuffle ``range(n)`` into ``k`` disjoint folds whose sizes differ by at most one."""
    if k < 2:
        raise InvalidArgument("need at least two folds")
    if k > n:
        raise InvalidArgument(f"cannot split {n} entries into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def holdout_split(n: int, fraction: float, seed=None) -> list[np.ndarray]:
    """A single held-out fold with ``floor(fraction * n)`` entries."""
    if not 0 < fraction < 1:
        raise InvalidArgument("held-out fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(n)
    size = max(1, int(math.floor(fraction * n)))
    return [np.sort(perm[:size])]


def _view_offsets(problem: MultiViewProblem) -> np.ndarray:
    return np.concatenate([[0], np.cumsum([v.nnz for v in problem.views])])


def split_problem(problem: MultiViewProblem, fold: np.ndarray) -> tuple[MultiViewProblem, list]:
    """Remove the entries indexed by ``fold`` (over all views' entries pooled).

    Returns the reduced training problem and the held-out part of each view.
    """
    off = _view_offsets(problem)
    held = np.zeros(off[-1], dtype=bool)
    held[fold] = True
    train, test = [], []
    for k, v in enumerate(problem.views):
        h = held[off[k]:off[k + 1]]
        train.append(v.subset(~h))
        test.append(v.subset(h))
    return MultiViewProblem.from_views(train), test


def heldout_loss(predictions: Sequence[np.ndarray], heldout: Sequence) -> float:
    """Mean (weighted) loss over all held-out entries."""
    total, count = 0.0, 0
    for pred, v in zip(predictions, heldout):
        if v.nnz:
            total += v.weight * float(np.sum(loss_value(v.loss, pred[v.rows, v.cols], v.values)))
            count += v.nnz
    return total / count if count else math.inf


def heldout_error(predictions: Sequence[np.ndarray], heldout: Sequence) -> float:
    """Percent relative error over all held-out entries of all views pooled."""
    num = den = 0.0
    for pred, v in zip(predictions, heldout):
        if v.nnz:
            num += float(np.sum((pred[v.rows, v.cols] - v.values) ** 2))
            den += float(np.sum(v.values ** 2))
    return 100.0 * math.sqrt(num / den) if den > 0 else math.inf


Metric = Callable[[Sequence[np.ndarray], Sequence], float]


@dataclass
class CrossValidator:
    """Mean held-out metric of one model over fixed folds."""

    problem: MultiViewProblem
    model: str
    folds: list
    metric: Metric = heldout_loss
    solver: str = "admm"
    solver_config: object = None
    _splits: list = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self._splits = [split_problem(self.problem, f) for f in self.folds]

    def score(self, params: dict) -> float:
        spec = spec_from_params(self.model, params, self.problem.K)
        scores = []
        for train, test in self._splits:
            try:
                if self.solver == "apg":
                    res = apg_solve(train, spec, self.solver_config or ApgConfig())
                else:
                    res = admm_solve(train, spec, self.solver_config or AdmmConfig())
                s = self.metric(res.predictions(train), test)
            except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
                log.warning("solver failed for %s: %s", params, exc)
                return math.inf
            if not math.isfinite(s):
                return math.inf
            scores.append(s)
        return float(np.mean(scores))


@dataclass
class GridResult:
    best_params: dict
    best_score: float
    table: list

    def columns(self) -> list[str]:
        return list(self.table[0].keys()) if self.table else []


def grid_search(problem: MultiViewProblem, model: str, grid: ParamGrid, folds: list,
                metric: Metric = heldout_loss, solver: str = "admm",
                solver_config=None) -> GridResult:
    """Score every grid cell; ties go to the first cell in grid order."""
    cv = CrossValidator(problem, model, folds, metric, solver, solver_config)
    table, best, best_score = [], None, math.inf
    for params in grid.cells(model, problem.K):
        s = cv.score(params)
        table.append({**params, "score": s})
        if best is None or s < best_score:
            best, best_score = params, s
    return GridResult(best, best_score, table)


def to_search_space(params: dict, names: Sequence[str]) -> np.ndarray:
    return np.array([params[n] if n == "c" else math.log10(params[n]) for n in names])


def _snap(v: float) -> float:
    # 14 significant digits: grid values survive the log10 round trip exactly
    return float(f"{v:.14g}")


def from_search_space(x: Sequence[float], names: Sequence[str]) -> dict:
    return {n: _snap(float(v) if n == "c" else 10.0 ** float(v)) for n, v in zip(names, x)}


def default_bounds(names: Sequence[str], grid: Optional[ParamGrid] = None) -> list[tuple]:
    grid = grid or ParamGrid()
    out = []
    for n in names:
        if n == "c":
            out.append((min(grid.c_values), max(grid.c_values)))
        else:
            vals = grid.lambda_values if n == "lambda" else grid.alpha_values
            out.append((math.log10(min(vals)), math.log10(max(vals))))
    return out


@dataclass
class BlackBox:
    """Deterministic objective over a box, counting evaluations."""

    evaluate: Callable[[np.ndarray], float]
    budget: int
    bounds: list
    names: list = field(default_factory=list)
    log: list = field(default_factory=list)

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        xc = np.clip(x, lo, hi)
        clamped = bool(np.any(xc != x))
        value = float(self.evaluate(xc))
        self.log.append({"x": xc.tolist(), "score": value, "clamped": clamped})
        return value


def cv_objective(problem: MultiViewProblem, model: str, folds: list,
                 metric: Metric = heldout_loss, budget: int = 200,
                 bounds: Optional[list] = None, solver: str = "admm",
                 solver_config=None) -> BlackBox:
    """Cross-validated score as a black box over the log/linear search space."""
    names = param_names(model, problem.K)
    cv = CrossValidator(problem, model, folds, metric, solver, solver_config)
    box = BlackBox(lambda x: cv.score(from_search_space(x, names)), budget,
                   bounds or default_bounds(names), names)
    box.cv = cv
    return box


class _BudgetExhausted(Exception):
    pass


@dataclass
class GfoResult:
    best_x: np.ndarray
    best_score: float
    evaluations: list

    @property
    def n_evals(self) -> int:
        return len(self.evaluations)

    def best_so_far(self) -> list[float]:
        return list(np.minimum.accumulate([e["score"] for e in self.evaluations]))


def gfo_minimize(box, bounds: Optional[Sequence[tuple]] = None, seed=None,
                 x0: Optional[Sequence[float]] = None, budget: Optional[int] = None,
                 xatol: float = 1e-6, fatol: float = 1e-10) -> GfoResult:
    """Bounded Nelder-Mead with random restarts under a hard evaluation budget.

    ``box`` is a :class:`BlackBox` or a plain callable (then ``bounds`` and
    ``budget`` are required). The first start is ``x0`` or the box center;
    the first restart re-expands around the best point, later ones are uniform
    in the box.
    """
    bounds = list(bounds if bounds is not None else box.bounds)
    budget = int(budget if budget is not None else box.budget)
    dim = len(bounds)
    if budget < dim + 1:
        raise InvalidArgument(f"budget {budget} too small for {dim} dimensions")
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    rng = np.random.default_rng(seed)
    evaluations = []
    best = {"x": None, "score": math.inf}

    def f(x):
        if len(evaluations) >= budget:
            raise _BudgetExhausted
        x = np.clip(np.asarray(x, dtype=float), lo, hi)
        s = float(box(x))
        if math.isnan(s):
            s = math.inf
        evaluations.append({"x": x.tolist(), "score": s})
        if s < best["score"]:
            best["x"], best["score"] = x.copy(), s
        return s

    start = np.clip(np.asarray(x0, dtype=float), lo, hi) if x0 is not None else 0.5 * (lo + hi)
    width = hi - lo
    restarts = 0
    while len(evaluations) < budget:
        simplex = np.tile(start, (dim + 1, 1))
        for i in range(dim):
            step = 0.25 * width[i]
            simplex[i + 1, i] += step if start[i] + step <= hi[i] else -step
        try:
            minimize(f, start, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                     options={"initial_simplex": simplex, "xatol": xatol, "fatol": fatol,
                              "maxfev": budget - len(evaluations), "adaptive": dim > 2})
        except _BudgetExhausted:
            break
        if budget - len(evaluations) < dim + 1:
            break
        restarts += 1
        start = best["x"] if restarts == 1 else lo + rng.random(dim) * width
    return GfoResult(best["x"], best["score"], evaluations)
