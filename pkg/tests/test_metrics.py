import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvcomplete.errors import UndefinedMetric
from mvcomplete.metrics import (label_error_percent, normalized_test_error,
                                relative_reconstruction_error)

RNG = np.random.default_rng(0)
TRUTH = RNG.normal(size=(4, 6))
MASK = RNG.random((4, 6)) < 0.5


def test_test_error_examples():
    assert normalized_test_error(TRUTH, TRUTH, MASK) == 0.0
    assert normalized_test_error(np.zeros_like(TRUTH), TRUTH, MASK) == pytest.approx(100.0)
    assert normalized_test_error(2 * TRUTH, TRUTH, MASK) == pytest.approx(100.0)
    with pytest.raises(UndefinedMetric):
        normalized_test_error(TRUTH, np.zeros_like(TRUTH), MASK)
    with pytest.raises(UndefinedMetric):
        normalized_test_error(TRUTH, TRUTH, np.zeros_like(MASK))


def test_label_error_examples():
    labels = np.sign(TRUTH)
    assert label_error_percent(labels, labels, MASK) == 0.0
    assert label_error_percent(-labels, labels, MASK) == 100.0
    half = np.array([[1.0, 1.0, -1.0, -1.0]])
    assert label_error_percent(np.ones((1, 4)), half, np.ones((1, 4), dtype=bool)) == 50.0
    # ties go to +1
    assert label_error_percent(np.zeros((1, 2)), np.array([[1.0, -1.0]]), ([0, 0], [0, 1])) == 50.0
    with pytest.raises(UndefinedMetric):
        label_error_percent(labels, labels, ([], []))


def test_reconstruction_error():
    assert relative_reconstruction_error(TRUTH, TRUTH, MASK) == 0.0
    assert relative_reconstruction_error(np.zeros_like(TRUTH), TRUTH, MASK) == pytest.approx(1.0)
    pred = RNG.normal(size=TRUTH.shape)
    num = den = 0.0
    for i in range(4):
        for j in range(6):
            if MASK[i, j]:
                num += (pred[i, j] - TRUTH[i, j]) ** 2
                den += TRUTH[i, j] ** 2
    assert relative_reconstruction_error(pred, TRUTH, MASK) == pytest.approx(math.sqrt(num / den))


def test_index_pair_equals_mask():
    pred = RNG.normal(size=TRUTH.shape)
    rows, cols = np.nonzero(MASK)
    assert normalized_test_error(pred, TRUTH, (rows, cols)) == normalized_test_error(pred, TRUTH, MASK)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_invariant_to_entries_outside_set(seed):
    rng = np.random.default_rng(seed)
    truth = rng.normal(size=(5, 5))
    mask = rng.random((5, 5)) < 0.5
    mask[0, 0] = True
    pred = rng.normal(size=(5, 5))
    noisy_pred = np.where(mask, pred, rng.normal(scale=100, size=(5, 5)))
    noisy_truth = np.where(mask, truth, rng.normal(scale=100, size=(5, 5)))
    for metric in (normalized_test_error, relative_reconstruction_error):
        assert metric(noisy_pred, noisy_truth, mask) == metric(pred, truth, mask)
    labels = np.sign(truth)
    assert label_error_percent(noisy_pred, np.where(mask, labels, 1.0), mask) == \
        label_error_percent(pred, labels, mask)
