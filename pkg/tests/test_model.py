import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvcomplete.errors import InvalidArgument
from mvcomplete.model import (VARIANTS, LatentBlocks, ModelSpec, MultiViewProblem, ViewData,
                              assemble_prediction, concat_blocks, objective, select_block,
                              validate_problem)
from oracles import naive_loss, nuclear_norm_eig


def two_view_problem(rng, dims=(3, 4), n=5, losses=("squared", "squared")):
    views = []
    for d, loss in zip(dims, losses):
        mask = rng.random((d, n)) < 0.6
        y = rng.normal(size=(d, n)) if loss == "squared" else np.sign(rng.normal(size=(d, n)))
        views.append(ViewData.from_dense(y, mask, loss))
    return MultiViewProblem.from_views(views)


def random_blocks(rng, problem, spec):
    b = LatentBlocks.zeros(problem, spec)
    return LatentBlocks(*(None if a is None else
                          (rng.normal(size=a.shape) if isinstance(a, np.ndarray)
                           else [rng.normal(size=x.shape) for x in a])
                          for a in (b.x0, b.xk, b.sk)))


def test_select_and_concat():
    x0 = np.arange(15.0).reshape(5, 3)
    np.testing.assert_array_equal(select_block(x0, 0, [2, 3]), x0[:2])
    np.testing.assert_array_equal(select_block(x0, 1, [2, 3]), x0[2:])
    np.testing.assert_array_equal(concat_blocks([select_block(x0, k, [2, 3]) for k in (0, 1)]), x0)
    np.testing.assert_array_equal(concat_blocks([[[1, 2]], [[3, 4]]]), [[1, 2], [3, 4]])
    np.testing.assert_array_equal(concat_blocks([x0]), x0)
    with pytest.raises(InvalidArgument):
        select_block(x0, 0, [2, 2])
    with pytest.raises(InvalidArgument):
        concat_blocks([np.zeros((1, 2)), np.zeros((1, 3))])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=1, max_size=4), st.integers(1, 4))
def test_select_concat_round_trip(dims, n):
    rng = np.random.default_rng(sum(dims) + n)
    parts = [rng.normal(size=(d, n)) for d in dims]
    stacked = concat_blocks(parts)
    for k, p in enumerate(parts):
        np.testing.assert_array_equal(select_block(stacked, k, dims), p)


def test_variant_flags_and_names():
    assert VARIANTS["I0R"] == (False, True, True)
    assert VARIANTS["J0R"] == (True, False, True)
    for name in VARIANTS:
        assert ModelSpec.variant(name).name == name
    with pytest.raises(InvalidArgument):
        ModelSpec.variant("XYZ")
    with pytest.raises(InvalidArgument):
        ModelSpec(False, False, True)
    with pytest.raises(InvalidArgument):
        ModelSpec.variant("JLR", lambda0=-1)


def test_assemble_prediction():
    rng = np.random.default_rng(0)
    problem = two_view_problem(rng)
    full = random_blocks(rng, problem, ModelSpec.variant("JLR"))
    dims = problem.dims
    j00 = assemble_prediction(full, ModelSpec.variant("J00"), 1, dims)
    np.testing.assert_array_equal(j00, select_block(full.x0, 1, dims))
    np.testing.assert_array_equal(assemble_prediction(full, ModelSpec.variant("I00"), 0, dims),
                                  full.xk[0])
    full.x0[:] = 0
    np.testing.assert_array_equal(assemble_prediction(full, ModelSpec.variant("JLR"), 0, dims),
                                  full.xk[0] + full.sk[0])


def test_objective_at_zero():
    rng = np.random.default_rng(1)
    sq = two_view_problem(rng)
    spec = ModelSpec.variant("JLR")
    expected = sum(0.5 * float(np.sum(v.values ** 2)) for v in sq.views)
    assert objective(sq, spec, LatentBlocks.zeros(sq, spec)) == pytest.approx(expected)
    lg = two_view_problem(rng, losses=("logistic", "logistic"))
    n_obs = sum(v.nnz for v in lg.views)
    assert objective(lg, spec, LatentBlocks.zeros(lg, spec)) == pytest.approx(n_obs * math.log(2))


def test_objective_matches_term_by_term_oracle():
    rng = np.random.default_rng(2)
    problem = two_view_problem(rng, losses=("squared", "logistic"))
    spec = ModelSpec.variant("JLR", 0.7, (1.1, 0.4), (0.3, 0.9))
    blk = random_blocks(rng, problem, spec)
    ref = 0.7 * nuclear_norm_eig(blk.x0)
    ref += 1.1 * nuclear_norm_eig(blk.xk[0]) + 0.4 * nuclear_norm_eig(blk.xk[1])
    ref += 0.3 * np.abs(blk.sk[0]).sum() + 0.9 * np.abs(blk.sk[1]).sum()
    off = 0
    for k, v in enumerate(problem.views):
        pred = blk.x0[off:off + v.d] + blk.xk[k] + blk.sk[k]
        off += v.d
        ref += naive_loss(v.loss.value, pred, v.rows, v.cols, v.values)
    assert objective(problem, spec, blk) == pytest.approx(ref, rel=1e-10)


def test_objective_rejects_non_finite():
    rng = np.random.default_rng(3)
    problem = two_view_problem(rng)
    spec = ModelSpec.variant("I00")
    blk = LatentBlocks.zeros(problem, spec)
    blk.xk[0][0, 0] = np.inf
    with pytest.raises(InvalidArgument):
        objective(problem, spec, blk)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(sorted(VARIANTS)), st.floats(0, 1), st.integers(0, 10_000))
def test_objective_convex(name, t, seed):
    rng = np.random.default_rng(seed)
    problem = two_view_problem(rng, losses=("squared", "logistic"))
    spec = ModelSpec.variant(name, 0.5, 0.8, 0.3)
    a, b = random_blocks(rng, problem, spec), random_blocks(rng, problem, spec)
    mid = a.combine(b, t, 1 - t)
    lhs = objective(problem, spec, mid)
    rhs = t * objective(problem, spec, a) + (1 - t) * objective(problem, spec, b)
    assert lhs <= rhs + 1e-9 * max(1.0, abs(rhs))


def test_validate_problem():
    rng = np.random.default_rng(4)
    assert validate_problem(two_view_problem(rng)) == []

    dup = ViewData(2, 2, [0, 0], [0, 0], [1.0, 2.0])
    codes = [i.code for i in validate_problem(MultiViewProblem.from_views([dup]))]
    assert "duplicate-entry" in codes

    bad = ViewData(2, 2, [0], [0], [0.5], "logistic")
    codes = [i.code for i in validate_problem(MultiViewProblem.from_views([bad]))]
    assert "non-binary-target" in codes

    oob = ViewData(2, 2, [2], [0], [1.0])
    codes = [i.code for i in validate_problem(MultiViewProblem.from_views([oob]))]
    assert "index-out-of-range" in codes

    mismatch = MultiViewProblem((ViewData.from_triples(2, 2, []), ViewData.from_triples(2, 3, [])), 2)
    assert [i.code for i in validate_problem(mismatch)] == ["column-mismatch"]


def test_view_data_is_immutable():
    v = ViewData.from_triples(2, 2, [(0, 1, 3.0)])
    with pytest.raises(ValueError):
        v.values[0] = 1.0
    assert v.nnz == 1 and v.to_dense()[0, 1] == 3.0 and v.mask().sum() == 1
