import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvcomplete.admm import AdmmConfig
from mvcomplete.datagen import reference_problem
from mvcomplete import tune
from mvcomplete.errors import InvalidArgument, NumericalFailure
from mvcomplete.tune import (BlackBox, ParamGrid, cv_objective, from_search_space, gfo_minimize,
                             grid_search, heldout_loss, holdout_split, kfold_split, param_names,
                             reparam_lambdas, spec_from_params, split_problem, to_search_space)

FAST = AdmmConfig(outer_iters=10, inner_iters=2)


def test_reparam_examples():
    assert reparam_lambdas(1.0, 0.5, 2) == (2.0, [2.0, 2.0])
    l0, lk = reparam_lambdas(10.0, 0.2, 2)
    assert l0 == pytest.approx(12.5) and lk == [50.0, 50.0]
    assert reparam_lambdas(1.0, 0.999, 2)[0] > reparam_lambdas(1.0, 0.9, 2)[0]
    for c in (0.0, 1.0, 1.5):
        with pytest.raises(InvalidArgument):
            reparam_lambdas(1.0, c, 2)


def test_spec_from_params():
    spec = spec_from_params("JLR", {"lambda": 1.0, "c": 0.5, "alpha_1": 0.1, "alpha_2": 0.2}, 2)
    assert spec.lambda0 == 2.0 and spec.lambda_k == (2.0, 2.0) and spec.alpha_k == (0.1, 0.2)
    assert spec_from_params("I00", {"lambda": 3.0}, 2).lambda_k == (3.0, 3.0)
    assert param_names("J0R", 2) == ["lambda", "alpha_1", "alpha_2"]
    assert param_names("JL0", 3) == ["lambda", "c"]


def test_grid_cardinality():
    grid = ParamGrid()
    assert len(grid.cells("JLR", 2)) == 5 * 5 * 5 * 9 == 1125
    assert len(grid.cells("JL0", 2)) == 45
    assert len(grid.cells("I00", 2)) == 5
    assert len(ParamGrid(tie_alphas=True).cells("JLR", 2)) == 225
    cells = grid.cells("JLR", 2)
    assert cells[0] == {"lambda": 0.01, "c": 0.1, "alpha_1": 0.01, "alpha_2": 0.01}
    assert cells[1]["alpha_2"] == 0.1
    with pytest.raises(InvalidArgument):
        ParamGrid(c_values=(1.0,))


def test_kfold_examples():
    folds = kfold_split(10, 5, 0)
    assert [len(f) for f in folds] == [2] * 5
    assert sorted(np.concatenate(folds).tolist()) == list(range(10))
    again = kfold_split(10, 5, 0)
    assert all(np.array_equal(a, b) for a, b in zip(folds, again))
    with pytest.raises(InvalidArgument):
        kfold_split(3, 4, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 200), st.integers(2, 10), st.integers(0, 100))
def test_kfold_partition(n, k, seed):
    k = min(k, n)
    folds = kfold_split(n, k, seed)
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    allidx = np.concatenate(folds)
    assert len(allidx) == n and len(set(allidx.tolist())) == n


def test_split_problem_partitions_entries():
    problem = reference_problem(n=8, d=5)
    total = sum(v.nnz for v in problem.views)
    fold = holdout_split(total, 0.3, 1)[0]
    train, test = split_problem(problem, fold)
    assert sum(v.nnz for v in test) == len(fold)
    assert sum(v.nnz for v in train.views) + len(fold) == total
    for tr, te, full in zip(train.views, test, problem.views):
        assert not (tr.mask() & te.mask()).any()
        assert ((tr.mask() | te.mask()) == full.mask()).all()


def test_singleton_grid_and_table():
    problem = reference_problem(n=10, d=6)
    folds = kfold_split(sum(v.nnz for v in problem.views), 3, 0)
    grid = ParamGrid((1.0,), (0.5,), (0.5,))
    res = grid_search(problem, "JLR", grid, folds, heldout_loss, "admm", FAST)
    assert res.best_params == {"lambda": 1.0, "c": 0.5, "alpha_1": 0.5, "alpha_2": 0.5}
    assert len(res.table) == 1 and res.columns()[-1] == "score"

    grid = ParamGrid((0.1, 1.0, 10.0), (0.5,), (0.3, 0.7))
    res = grid_search(problem, "JL0", grid, folds, heldout_loss, "admm", FAST)
    assert len(res.table) == 6
    assert res.best_score == min(r["score"] for r in res.table)
    first = next(r for r in res.table if r["score"] == res.best_score)
    assert res.best_params == {k: v for k, v in first.items() if k != "score"}


def test_blackbox_reproduces_grid_score_and_clamps():
    problem = reference_problem(n=10, d=6)
    folds = holdout_split(sum(v.nnz for v in problem.views), 0.25, 0)
    grid = ParamGrid((0.3, 3.0), (0.3,), (0.5,))
    res = grid_search(problem, "JLR", grid, folds, heldout_loss, "admm", FAST)
    names = param_names("JLR", 2)
    box = cv_objective(problem, "JLR", folds, heldout_loss, 50, None, "admm", FAST)
    x = to_search_space(res.best_params, names)
    assert box(x) == res.best_score
    assert box(x) == box(x)
    assert box.log[-1]["clamped"] is False
    box(np.array([5.0, 0.5, 0.0, 0.0]))
    assert box.log[-1]["clamped"] is True and box.log[-1]["x"][0] == 2.0
    assert from_search_space(x, names) == pytest.approx(res.best_params)


def test_gfo_quadratic():
    box = BlackBox(lambda x: float((x[0] - 3.0) ** 2), 100, [(0.0, 10.0)])
    res = gfo_minimize(box, seed=0)
    assert abs(res.best_x[0] - 3.0) <= 1e-3
    assert res.n_evals <= 100 and len(box.log) == res.n_evals


def rosenbrock(x):
    return float((1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2)


def test_gfo_rosenbrock_against_grid_scan():
    bounds = [(-2.0, 2.0), (-1.0, 3.0)]
    res = gfo_minimize(rosenbrock, bounds=bounds, budget=500, seed=0)
    assert res.n_evals <= 500
    assert res.best_score <= 1e-2
    g = np.linspace(-2, 2, 401)
    h = np.linspace(-1, 3, 401)
    xx, yy = np.meshgrid(g, h)
    scan = np.min((1 - xx) ** 2 + 100 * (yy - xx ** 2) ** 2)
    assert res.best_score <= scan + 1e-2


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 60), st.integers(0, 1000))
def test_gfo_budget_and_monotone_log(budget, seed):
    rng = np.random.default_rng(seed)
    center = rng.uniform(-1, 1, size=2)
    f = lambda x: float(np.sum((x - center) ** 2) + 0.1 * np.sin(5 * x[0]))
    res = gfo_minimize(f, bounds=[(-2, 2), (-2, 2)], budget=budget, seed=seed)
    assert res.n_evals <= budget
    bsf = res.best_so_far()
    assert all(b2 <= b1 for b1, b2 in zip(bsf, bsf[1:]))
    assert res.best_score <= res.evaluations[0]["score"]
    assert res.best_score == bsf[-1]


def test_gfo_budget_too_small():
    with pytest.raises(InvalidArgument):
        gfo_minimize(rosenbrock, bounds=[(0, 1), (0, 1)], budget=2)


def test_solver_failure_scores_inf(monkeypatch):
    problem = reference_problem(n=8, d=5)
    folds = holdout_split(sum(v.nnz for v in problem.views), 0.25, 0)

    def broken(*args, **kwargs):
        raise NumericalFailure("diverged", iteration=3)

    monkeypatch.setattr(tune, "admm_solve", broken)
    grid = ParamGrid((1.0, 2.0), (0.5,), (0.5,))
    res = grid_search(problem, "JL0", grid, folds, heldout_loss, "admm", FAST)
    assert [r["score"] for r in res.table] == [math.inf, math.inf]
    assert res.best_params == {"lambda": 1.0, "c": 0.5}
