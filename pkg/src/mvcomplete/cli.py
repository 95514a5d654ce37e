"""Command line: ``synth``, ``solve``, ``eval``, ``tune`` and ``bench``.

Every command writes its outputs plus a ``meta.json`` holding the full
argument set; ``--config meta.json`` replays a run with those arguments.
Failures print a JSON error record on stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .admm import AdmmConfig, admm_solve
from .apg import ApgConfig, apg_solve
from .datagen import SynthSpec, gen_synthetic_problem
from .experiments import RACE_ADMM, RACE_PARAMS, time_to_within
from .errors import InvalidArgument, NumericalFailure, ParseError, UndefinedMetric
from .formats import (dense_to_view, ensure_dir, load_coo, load_dense_csv, write_coo,
                      write_dense_csv)
from .loss import LossKind
from .metrics import label_error_percent, normalized_test_error, relative_reconstruction_error
from .model import VARIANTS, ModelSpec, MultiViewProblem, ViewData, check_problem
from .tune import (ParamGrid, cv_objective, default_bounds, from_search_space, gfo_minimize,
                   grid_search, heldout_error, heldout_loss, holdout_split, kfold_split,
                   param_names, reparam_lambdas)

log = logging.getLogger("mvcomplete")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_meta(out: Path, command: str, args: argparse.Namespace, extra=None):
    params = {k: v for k, v in vars(args).items() if k not in ("command", "config", "func")}
    meta = {"command": command, "args": params, "version": __version__}
    if extra:
        meta.update(extra)
    _write_json(meta, out / "meta.json")


def _write_table(rows: list, path):
    if not rows:
        Path(path).write_text("")
        return
    cols = list(rows[0].keys())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow(["" if row.get(c) is None else
                        format(row[c], ".17g") if isinstance(row[c], float) else row[c]
                        for c in cols])


# --- argument groups -------------------------------------------------------

def _add_model_args(p):
    p.add_argument("--model", default="JLR", choices=sorted(VARIANTS))
    p.add_argument("--lambda0", type=float, default=1.0)
    p.add_argument("--lambda-k", type=float, nargs="+", default=[1.0])
    p.add_argument("--alpha-k", type=float, nargs="+", default=[1.0])
    p.add_argument("--lam", type=float, default=None,
                   help="overall weight; with --c sets lambda0=lam/(1-c), lambda_k=lam/c")
    p.add_argument("--c", type=float, default=None)


def _add_solver_args(p):
    p.add_argument("--solver", default="admm", choices=["admm", "apg"])
    p.add_argument("--outer-iters", type=int, default=AdmmConfig.outer_iters)
    p.add_argument("--inner-iters", type=int, default=AdmmConfig.inner_iters)
    p.add_argument("--mu0", type=float, default=AdmmConfig.mu0)
    p.add_argument("--rho", type=float, default=AdmmConfig.rho)
    p.add_argument("--primal-tol", type=float, default=AdmmConfig.primal_tol)
    p.add_argument("--max-iters", type=int, default=ApgConfig.max_iters)
    p.add_argument("--apg-tol", type=float, default=ApgConfig.tol)


def _add_view_args(p):
    p.add_argument("--views", nargs="+", default=None, help="coordinate view files, in view order")
    p.add_argument("--dense-views", nargs="+", default=None,
                   help="dense CSV views; nan cells are unobserved")
    p.add_argument("--dense-loss", nargs="+", default=None, choices=[k.value for k in LossKind])


def _spec(args, K) -> ModelSpec:
    if args.lam is not None:
        if VARIANTS[args.model][:2] == (True, True):
            if args.c is None:
                raise InvalidArgument("--lam needs --c for models with shared and specific blocks")
            lambda0, lambda_k = reparam_lambdas(args.lam, args.c, K)
        else:
            lambda0, lambda_k = args.lam, [args.lam]
        spec = ModelSpec.variant(args.model, lambda0, lambda_k, args.alpha_k)
    else:
        spec = ModelSpec.variant(args.model, args.lambda0, args.lambda_k, args.alpha_k)
    spec.check_views(K)
    return spec


def _admm_cfg(args) -> AdmmConfig:
    return AdmmConfig(outer_iters=args.outer_iters, inner_iters=args.inner_iters, mu0=args.mu0,
                      rho=args.rho, primal_tol=args.primal_tol, seed=args.seed)


def _apg_cfg(args) -> ApgConfig:
    return ApgConfig(max_iters=args.max_iters, tol=args.apg_tol, seed=args.seed)


def _solve(problem, spec, args):
    if args.solver == "apg":
        return apg_solve(problem, spec, _apg_cfg(args))
    return admm_solve(problem, spec, _admm_cfg(args))


def _load_problem(args) -> MultiViewProblem:
    views = []
    for path in args.views or []:
        views.append(load_coo(path))
    if args.dense_views:
        losses = args.dense_loss or ["squared"] * len(args.dense_views)
        if len(losses) != len(args.dense_views):
            raise InvalidArgument("--dense-loss needs one entry per dense view")
        for path, loss in zip(args.dense_views, losses):
            views.append(dense_to_view(load_dense_csv(path), LossKind(loss)))
    if not views:
        raise InvalidArgument("no input views given (use --views or --dense-views)")
    problem = MultiViewProblem.from_views(views)
    check_problem(problem)
    return problem


# --- commands --------------------------------------------------------------

def cmd_synth(args) -> int:
    spec = SynthSpec(n=args.n, dims=tuple(args.dims), ranks=tuple(args.ranks) if args.ranks else None,
                     outlier_density=args.outlier_density, outlier_scale=args.outlier_scale,
                     noise_sd=args.noise_sd, observed_fraction=args.fraction, seed=args.seed)
    data = gen_synthetic_problem(spec)
    out = ensure_dir(args.out)
    K = data.problem.K
    for k in range(K):
        write_coo(data.problem.views[k], out / f"view{k + 1}.coo")
        write_coo(ViewData.from_dense(data.y[k], data.test_masks[k]), out / f"test{k + 1}.coo")
        write_dense_csv(data.y[k], out / f"y{k + 1}.csv")
        write_dense_csv(data.truth.xk[k], out / f"truth_x{k + 1}.csv")
        write_dense_csv(data.truth.sk[k], out / f"truth_s{k + 1}.csv")
    write_dense_csv(data.truth.x0, out / "truth_x0.csv")
    _write_meta(out, "synth", args, {"synth_spec": spec.to_dict()})
    return 0


def _write_solution(out: Path, problem, res):
    blk = res.blocks
    if blk.x0 is not None:
        write_dense_csv(blk.x0, out / "x0.csv")
    for k in range(problem.K):
        if blk.xk is not None:
            write_dense_csv(blk.xk[k], out / f"x{k + 1}.csv")
        if blk.sk is not None:
            write_dense_csv(blk.sk[k], out / f"s{k + 1}.csv")
    for k, pred in enumerate(res.predictions(problem)):
        write_dense_csv(pred, out / f"pred{k + 1}.csv")
    _write_table([{"iteration": i + 1, "objective": o, "residual": r}
                  for i, (o, r) in enumerate(zip(res.objective_trace, res.residual_trace))],
                 out / "trace.csv")
    _write_json({"time_s": res.time_trace}, out / "timing.json")


def cmd_solve(args) -> int:
    problem = _load_problem(args)
    spec = _spec(args, problem.K)
    res = _solve(problem, spec, args)
    out = ensure_dir(args.out)
    _write_solution(out, problem, res)
    _write_json({"solver": res.solver, "model": spec.to_dict(), "objective": res.objective,
                 "iterations": res.iterations, "converged": res.converged,
                 "final_residual": res.residual_trace[-1]}, out / "result.json")
    _write_meta(out, "solve", args)
    return 0


def cmd_eval(args) -> int:
    preds = [load_dense_csv(p) for p in args.pred]
    tests = [load_coo(p) for p in args.test]
    if len(preds) != len(tests):
        raise InvalidArgument("need one --test file per --pred file")
    report = {}
    for k, (pred, test) in enumerate(zip(preds, tests)):
        if pred.shape != test.shape:
            raise InvalidArgument(f"view {k + 1}: prediction {pred.shape} vs test {test.shape}")
        idx = (test.rows, test.cols)
        entry = {"n_test": test.nnz}
        truth = test.to_dense()
        if test.loss is LossKind.LOGISTIC:
            entry["label_error_pct"] = label_error_percent(pred, truth, idx)
        else:
            entry["test_error_pct"] = normalized_test_error(pred, truth, idx)
            entry["reconstruction_error_ratio"] = relative_reconstruction_error(pred, truth, idx)
        report[f"view{k + 1}"] = entry
    out = ensure_dir(args.out)
    _write_json(report, out / "metrics.json")
    _write_meta(out, "eval", args)
    return 0


_METRICS = {"loss": heldout_loss, "error": heldout_error}


def cmd_tune(args) -> int:
    problem = _load_problem(args)
    n_entries = sum(v.nnz for v in problem.views)
    if args.holdout is not None:
        folds = holdout_split(n_entries, args.holdout, args.seed)
    else:
        folds = kfold_split(n_entries, args.folds, args.seed)
    grid = ParamGrid(args.lambda_values, args.alpha_values, args.c_values)
    cfg = _admm_cfg(args) if args.solver == "admm" else _apg_cfg(args)
    metric = _METRICS[args.metric]
    out = ensure_dir(args.out)
    if args.mode == "grid":
        res = grid_search(problem, args.model, grid, folds, metric, args.solver, cfg)
        _write_table(res.table, out / "scores.csv")
        best = {"params": res.best_params, "score": res.best_score, "cells": len(res.table)}
    else:
        names = param_names(args.model, problem.K)
        box = cv_objective(problem, args.model, folds, metric, args.budget,
                           default_bounds(names, grid), args.solver, cfg)
        res = gfo_minimize(box, seed=args.seed)
        rows = [{**from_search_space(e["x"], names), "score": e["score"]} for e in res.evaluations]
        _write_table(rows, out / "scores.csv")
        best = {"params": from_search_space(res.best_x, names), "score": res.best_score,
                "evaluations": res.n_evals}
    _write_json(best, out / "best.json")
    _write_meta(out, "tune", args)
    return 0


def cmd_bench(args) -> int:
    data = gen_synthetic_problem(SynthSpec(n=args.n, dims=tuple(args.dims), seed=args.seed,
                                           observed_fraction=args.fraction))
    problem = data.problem
    spec = _spec(args, problem.K)
    admm = admm_solve(problem, spec, _admm_cfg(args))
    apg = apg_solve(problem, spec, _apg_cfg(args))
    best = min(min(admm.objective_trace), min(apg.objective_trace))
    rows = []
    for i in range(max(len(admm.objective_trace), len(apg.objective_trace))):
        row = {"iteration": i + 1}
        for name, r in (("admm", admm), ("apg", apg)):
            have = i < len(r.objective_trace)
            row[f"{name}_time_s"] = r.time_trace[i] if have else None
            row[f"{name}_objective"] = r.objective_trace[i] if have else None
        rows.append(row)
    out = ensure_dir(args.out)
    _write_table(rows, out / "bench.csv")
    t_admm = time_to_within(admm.objective_trace, admm.time_trace, best)
    t_apg = time_to_within(apg.objective_trace, apg.time_trace, best)
    _write_json({"best_objective": best,
                 "admm": {"final": admm.objective, "time_to_1pct_s": t_admm,
                          "total_s": admm.time_trace[-1], "iterations": admm.iterations},
                 "apg": {"final": apg.objective, "time_to_1pct_s": t_apg,
                         "total_s": apg.time_trace[-1], "iterations": apg.iterations},
                 "admm_faster": bool(t_admm < t_apg)}, out / "bench.json")
    _write_meta(out, "bench", args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mvcomplete", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def command(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", default=None, help="replay arguments from a meta.json")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=func)
        return p

    p = command("synth", cmd_synth, "generate a synthetic problem and its ground truth")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--dims", type=int, nargs="+", default=None)
    p.add_argument("--d1", type=int, default=100)
    p.add_argument("--d2", type=int, default=100)
    p.add_argument("--ranks", type=int, nargs="+", default=None)
    p.add_argument("--outlier-density", type=float, default=0.1)
    p.add_argument("--outlier-scale", type=float, default=None)
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--fraction", type=float, default=0.5)

    p = command("solve", cmd_solve, "fit a model")
    _add_view_args(p)
    _add_model_args(p)
    _add_solver_args(p)

    p = command("eval", cmd_eval, "held-out metrics of predictions")
    p.add_argument("--pred", nargs="+", required=True)
    p.add_argument("--test", nargs="+", required=True)

    p = command("tune", cmd_tune, "grid search or derivative-free tuning")
    _add_view_args(p)
    _add_model_args(p)
    _add_solver_args(p)
    p.add_argument("--mode", choices=["grid", "gfo"], default="grid")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--holdout", type=float, default=None, help="single held-out fraction instead of k folds")
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--metric", choices=sorted(_METRICS), default="loss")
    p.add_argument("--lambda-values", type=float, nargs="+", default=list(ParamGrid.lambda_values))
    p.add_argument("--alpha-values", type=float, nargs="+", default=list(ParamGrid.alpha_values))
    p.add_argument("--c-values", type=float, nargs="+", default=list(ParamGrid.c_values))

    p = command("bench", cmd_bench, "ADMM vs APG objective-versus-time on one instance")
    _add_model_args(p)
    _add_solver_args(p)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--dims", type=int, nargs="+", default=[50, 50])
    p.add_argument("--fraction", type=float, default=0.5)
    # one sweep per multiplier update; more inner sweeps make ADMM slower to reach 1%
    p.set_defaults(inner_iters=RACE_ADMM.inner_iters, outer_iters=RACE_ADMM.outer_iters,
                   lam=RACE_PARAMS["lambda"], c=RACE_PARAMS["c"], alpha_k=[RACE_PARAMS["alpha_1"]])
    return parser


def _replay_defaults(parser, argv):
    """Re-parse with the ``args`` of a meta.json as defaults."""
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    with open(args.config, encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("command") != args.command:
        raise UsageError(f"{args.config} records command {meta.get('command')!r}, not {args.command!r}")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    sub.set_defaults(**meta["args"])
    return parser.parse_args(argv)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = _replay_defaults(parser, argv)
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING))
        if args.command is None:
            raise UsageError("missing subcommand (synth, solve, eval, tune, bench)")
        if args.command == "synth" and args.dims is None:
            args.dims = [args.d1, args.d2]
        return args.func(args)
    except UsageError as exc:
        _error_record("usage", str(exc))
        return 2
    except (InvalidArgument, ParseError, UndefinedMetric, NumericalFailure, OSError) as exc:
        _error_record(type(exc).__name__, str(exc))
        return 1


def _error_record(kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
