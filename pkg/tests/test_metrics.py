import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlgcn.metrics import micro_f1


def brute_force(pred, truth, mask):
    tp = fp = fn = 0
    for i in range(pred.shape[0]):
        if not mask[i]:
            continue
        for j in range(pred.shape[1]):
            if pred[i][j] == 1 and truth[i][j] == 1:
                tp += 1
            elif pred[i][j] == 1:
                fp += 1
            elif truth[i][j] == 1:
                fn += 1
    return tp, fp, fn


def test_perfect_and_empty():
    truth = np.array([[1, 0], [0, 1]])
    mask = np.array([True, True])
    assert micro_f1(truth, truth, mask).micro_f1 == 1.0
    assert micro_f1(np.zeros_like(truth), truth, mask).micro_f1 == 0.0


def test_worked_example():
    r = micro_f1(np.array([[1, 0], [1, 1]]), np.array([[1, 1], [1, 0]]), np.array([True, True]))
    assert (r.tp, r.fp, r.fn) == (2, 1, 1)
    assert r.micro_f1 == pytest.approx(2 / 3)
    assert r.percent == "66.67"


def test_vacuous_case_is_one():
    z = np.zeros((3, 2))
    assert micro_f1(z, z, np.ones(3, bool)).micro_f1 == 1.0


def test_empty_mask_rejected():
    with pytest.raises(ValueError):
        micro_f1(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros(2, bool))


def test_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n, c = int(rng.integers(1, 21)), int(rng.integers(1, 9))
        pred = (rng.random((n, c)) < rng.random()).astype(int)
        truth = (rng.random((n, c)) < rng.random()).astype(int)
        mask = rng.random(n) < 0.7
        mask[rng.integers(n)] = True
        r = micro_f1(pred, truth, mask)
        tp, fp, fn = brute_force(pred, truth, mask)
        assert (r.tp, r.fp, r.fn) == (tp, fp, fn)
        expected = 1.0 if tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)
        assert r.micro_f1 == expected


@settings(max_examples=100)
@given(st.integers(0, 100_000))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    n, c = int(rng.integers(1, 15)), int(rng.integers(1, 7))
    pred = rng.integers(0, 2, (n, c))
    truth = rng.integers(0, 2, (n, c))
    mask = rng.random(n) < 0.8
    mask[0] = True
    rows, cols = rng.permutation(n), rng.permutation(c)
    a = micro_f1(pred, truth, mask)
    b = micro_f1(pred[rows][:, cols], truth[rows][:, cols], mask[rows])
    assert a == b


@settings(max_examples=50)
@given(st.integers(0, 100_000))
def test_self_agreement(seed):
    rng = np.random.default_rng(seed)
    pred = rng.integers(0, 2, (6, 4))
    pred[0, 0] = 1
    assert micro_f1(pred, pred, np.ones(6, bool)).micro_f1 == 1.0
