import numpy as np
import pytest

from mvcomplete.apg import ApgConfig, apg_solve, smooth_grad, smooth_value
from mvcomplete.datagen import reference_problem
from mvcomplete.errors import InvalidArgument
from mvcomplete.model import LatentBlocks, ModelSpec, MultiViewProblem, ViewData

SPEC = ModelSpec.variant("JLR", 2.0, 2.0, 0.5)


def mixed_problem(seed=0, d=(4, 3), n=5):
    rng = np.random.default_rng(seed)
    sq = ViewData.from_dense(rng.normal(size=(d[0], n)), rng.random((d[0], n)) < 0.7)
    lg = ViewData.from_dense(np.sign(rng.normal(size=(d[1], n))), rng.random((d[1], n)) < 0.7,
                             "logistic", weight=1.7)
    return MultiViewProblem.from_views([sq, lg])


def test_gradient_zero_at_perfect_fit():
    rng = np.random.default_rng(1)
    y = rng.normal(size=(3, 4))
    problem = MultiViewProblem.from_views([ViewData.from_dense(y, rng.random((3, 4)) < 0.5)])
    spec = ModelSpec.variant("I00")
    g = smooth_grad(problem, spec, LatentBlocks(xk=[y.copy()]))
    assert not g.xk[0].any()


def test_logistic_gradient_at_zero():
    rng = np.random.default_rng(2)
    labels = np.sign(rng.normal(size=(3, 4)))
    mask = rng.random((3, 4)) < 0.5
    problem = MultiViewProblem.from_views([ViewData.from_dense(labels, mask, "logistic")])
    spec = ModelSpec.variant("I0R")
    g = smooth_grad(problem, spec, LatentBlocks.zeros(problem, spec))
    np.testing.assert_allclose(g.xk[0], np.where(mask, -labels / 2, 0.0))
    np.testing.assert_array_equal(g.sk[0], g.xk[0])


def test_gradient_matches_finite_differences():
    problem = mixed_problem()
    rng = np.random.default_rng(3)
    blocks = LatentBlocks.zeros(problem, SPEC)
    blocks = LatentBlocks(rng.normal(size=blocks.x0.shape),
                          [rng.normal(size=x.shape) for x in blocks.xk],
                          [rng.normal(size=s.shape) for s in blocks.sk])
    g = smooth_grad(problem, SPEC, blocks)
    h = 1e-5
    for arr, garr in zip(blocks.arrays(), g.arrays()):
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            fp = smooth_value(problem, SPEC, blocks)
            arr[idx] = old - h
            fm = smooth_value(problem, SPEC, blocks)
            arr[idx] = old
            fd = (fp - fm) / (2 * h)
            assert abs(garr[idx] - fd) <= 1e-5 * max(abs(fd), 1e-2)


def test_huge_weights_give_zero_blocks():
    res = apg_solve(reference_problem(), ModelSpec.variant("JLR", 1e8, 1e8, 1e8))
    assert all(not a.any() for a in res.blocks.arrays())


@pytest.mark.parametrize("problem", [reference_problem(), mixed_problem(4, (6, 5), 8)],
                         ids=["squared", "mixed"])
def test_trace_monotone_and_bound_holds(problem):
    res = apg_solve(problem, SPEC, ApgConfig(max_iters=400))
    trace = np.array(res.objective_trace)
    assert np.all(np.diff(trace) <= 0)
    scale = max(1.0, abs(trace[0]))
    assert min(res.info["bound_slack"]) >= -1e-12 * scale
    assert len(res.time_trace) == res.iterations


def test_every_variant_runs():
    problem = reference_problem(n=10, d=6)
    for name in ("I00", "I0R", "J00", "J0R", "JL0", "JLR"):
        res = apg_solve(problem, ModelSpec.variant(name, 1.0, 1.0, 0.5), ApgConfig(max_iters=200))
        assert np.isfinite(res.objective)


def test_config_validation():
    with pytest.raises(InvalidArgument):
        ApgConfig(backtrack=1.0)
    with pytest.raises(InvalidArgument):
        ApgConfig(step=0.0)
