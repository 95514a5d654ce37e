"""Experiment drivers: the synthetic model comparison and the solver race."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .admm import AdmmConfig, admm_solve
from .apg import ApgConfig, apg_solve
from .datagen import SynthSpec, gen_multilabel, gen_synthetic_problem
from .formats import multilabel_problem
from .metrics import normalized_test_error
from .model import ModelSpec, data_loss
from .tune import (GfoResult, GridResult, ParamGrid, cv_objective, default_bounds, gfo_minimize,
                   grid_search, heldout_error, heldout_loss, holdout_split, param_names,
                   spec_from_params)

MODELS = ("JLR", "JL0", "J0R", "J00", "I0R", "I00")

# finer than the decade grid; alphas tied across views to keep cell counts small
SYNTH_GRID = ParamGrid(lambda_values=(5, 7, 10, 14, 20, 28), alpha_values=(1.5, 2, 3, 5),
                       c_values=(0.3, 0.5, 0.7, 0.9), tie_alphas=True)


def pooled_test_error(predictions, truths, test_masks) -> float:
    """Percent test error over the held-out cells of all views together."""
    pred = np.concatenate([p[m] for p, m in zip(predictions, test_masks)])
    truth = np.concatenate([t[m] for t, m in zip(truths, test_masks)])
    return normalized_test_error(pred, truth, np.ones(pred.shape, dtype=bool))


@dataclass
class ComparisonConfig:
    models: Sequence[str] = MODELS
    seeds: Sequence[int] = tuple(range(10))
    n: int = 200
    dims: tuple = (100, 100)
    tune_seed: int = 1000
    holdout: float = 0.2
    grid: ParamGrid = SYNTH_GRID
    admm: AdmmConfig = field(default_factory=lambda: AdmmConfig(inner_iters=3))

    def synth(self, seed: int) -> SynthSpec:
        return SynthSpec(n=self.n, dims=self.dims, seed=seed)


@dataclass
class ModelSummary:
    model: str
    params: dict
    test_errors: list
    train_losses: list
    times: list

    @property
    def mean(self) -> float:
        return float(np.mean(self.test_errors))

    @property
    def std(self) -> float:
        return float(np.std(self.test_errors, ddof=1)) if len(self.test_errors) > 1 else 0.0

    @property
    def se(self) -> float:
        return self.std / math.sqrt(len(self.test_errors))

    def row(self) -> dict:
        return {"model": self.model, "test_error_mean": self.mean, "test_error_std": self.std,
                "test_error_se": self.se, "train_loss_mean": float(np.mean(self.train_losses)),
                "time_mean_s": float(np.mean(self.times)),
                **{f"param_{k}": v for k, v in self.params.items()}}


def tune_models(cfg: ComparisonConfig, log=print) -> dict:
    """Pick each model's parameters on a separate tuning instance by holdout."""
    data = gen_synthetic_problem(cfg.synth(cfg.tune_seed))
    n_entries = sum(v.nnz for v in data.problem.views)
    folds = holdout_split(n_entries, cfg.holdout, cfg.tune_seed)
    chosen = {}
    for model in cfg.models:
        t0 = time.perf_counter()
        res = grid_search(data.problem, model, cfg.grid, folds, heldout_error, "admm", cfg.admm)
        chosen[model] = res.best_params
        if log:
            log(f"tuned {model}: {res.best_params} cv={res.best_score:.3f} "
                f"({len(res.table)} cells, {time.perf_counter() - t0:.1f}s)")
    return chosen


def synthetic_comparison(cfg: Optional[ComparisonConfig] = None, params: Optional[dict] = None,
                         log=print) -> dict:
    """Mean/std test error of every model over ``cfg.seeds``.

    Each seed draws a fresh instance; models are trained on its observed cells
    and scored on the complement against the full ``Y``.
    """
    cfg = cfg or ComparisonConfig()
    params = params or tune_models(cfg, log)
    out = {m: ModelSummary(m, params[m], [], [], []) for m in cfg.models}
    for seed in cfg.seeds:
        data = gen_synthetic_problem(cfg.synth(seed))
        for model in cfg.models:
            spec = spec_from_params(model, params[model], data.problem.K)
            t0 = time.perf_counter()
            res = admm_solve(data.problem, spec, cfg.admm)
            elapsed = time.perf_counter() - t0
            preds = res.predictions(data.problem)
            s = out[model]
            s.test_errors.append(pooled_test_error(preds, data.y, data.test_masks))
            s.train_losses.append(data_loss(data.problem, preds))
            s.times.append(elapsed)
        if log:
            log(f"seed {seed}: " + " ".join(f"{m}={out[m].test_errors[-1]:.2f}" for m in cfg.models))
    return out


def model_ordering(summary: dict) -> dict:
    """Pairwise model orderings expected on the synthetic comparison."""
    jlr, jl0 = summary["JLR"], summary["JL0"]
    return {
        "JLR<JL0 or within 1 SE": jlr.mean < jl0.mean or abs(jlr.mean - jl0.mean) <= max(jlr.se, jl0.se),
        "JLR<J00": jlr.mean < summary["J00"].mean,
        "JLR<I00": jlr.mean < summary["I00"].mean,
        "JL0<I00": jl0.mean < summary["I00"].mean,
    }


def time_to_within(trace, times, target, rel=0.01) -> float:
    """First time at which ``trace`` is within ``rel`` (relative) of ``target``."""
    thresh = target + rel * abs(target)
    for t, v in zip(times, trace):
        if v <= thresh:
            return t
    return math.inf


# classic ADMM: one block sweep per multiplier update
RACE_ADMM = AdmmConfig(inner_iters=1, outer_iters=200)
RACE_PARAMS = {"lambda": 5.0, "c": 0.5, "alpha_1": 2.0, "alpha_2": 2.0}


@dataclass
class RaceResult:
    admm: object
    apg: object
    best: float
    admm_time: float
    apg_time: float

    @property
    def admm_faster(self) -> bool:
        return self.admm_time < self.apg_time


def solver_race(n: int = 100, dims=(50, 50), seed: int = 0, spec: Optional[ModelSpec] = None,
                admm_cfg: AdmmConfig = RACE_ADMM, apg_cfg: Optional[ApgConfig] = None,
                rel: float = 0.01) -> RaceResult:
    """Wall time for ADMM and APG to come within ``rel`` of the best objective found."""
    data = gen_synthetic_problem(SynthSpec(n=n, dims=dims, seed=seed))
    spec = spec or spec_from_params("JLR", RACE_PARAMS, len(dims))
    admm = admm_solve(data.problem, spec, admm_cfg)
    apg = apg_solve(data.problem, spec, apg_cfg or ApgConfig())
    best = min(min(admm.objective_trace), min(apg.objective_trace))
    return RaceResult(admm, apg, best,
                      time_to_within(admm.objective_trace, admm.time_trace, best, rel),
                      time_to_within(apg.objective_trace, apg.time_trace, best, rel))


@dataclass
class TuningCheck:
    grid: GridResult
    gfo: GfoResult
    grid_time: float
    gfo_time: float

    @property
    def gfo_within(self) -> float:
        """GFO best score relative to the grid winner (1.0 means a tie)."""
        return self.gfo.best_score / self.grid.best_score


def tuning_check(seed: int = 0, n: int = 60, d1: int = 20, d2: int = 6, fraction: float = 0.6,
                 grid: Optional[ParamGrid] = None, budget: int = 200,
                 admm: AdmmConfig = AdmmConfig(outer_iters=20, inner_iters=2)) -> TuningCheck:
    """Full JLR grid against budgeted GFO on a small multi-label instance.

    Both searches score candidates with the same held-out split and metric.
    """
    features, labels = gen_multilabel(n, d1, d2, seed=seed)
    problem = multilabel_problem(features, labels, fraction, seed).problem
    folds = holdout_split(sum(v.nnz for v in problem.views), 0.2, seed)
    grid = grid or ParamGrid()
    t0 = time.perf_counter()
    gres = grid_search(problem, "JLR", grid, folds, heldout_loss, "admm", admm)
    t1 = time.perf_counter()
    box = cv_objective(problem, "JLR", folds, heldout_loss, budget,
                       default_bounds(param_names("JLR", problem.K), grid), "admm", admm)
    fres = gfo_minimize(box, seed=seed)
    return TuningCheck(gres, fres, t1 - t0, time.perf_counter() - t1)
