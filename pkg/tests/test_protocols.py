import numpy as np
import pytest

from mlgcn.errors import DatasetError
from mlgcn.graph import SyntheticSpec, generate_synthetic
from mlgcn.protocols import (
    ABLATION,
    FIELDS,
    format_table,
    method_config,
    run_ablation,
    run_size_sweep,
    subsample_train,
)
from mlgcn.trainer import TrainConfig

CFG = TrainConfig(epochs=15, hidden_dim=8, seed=1)


@pytest.fixture(scope="module")
def graph():
    return generate_synthetic(SyntheticSpec(
        n=80, c=4, corr_pairs=((0, 1, 0.8), (2, 3, 0.8)), p_in=0.2, p_out=0.02,
        noise_dims=2, train_fraction=0.5, seed=4,
    ))


def test_method_grid():
    cfgs = {m: method_config(CFG, m) for m in ABLATION}
    assert (cfgs["MLP"].propagation, cfgs["MLP"].lambda1, cfgs["MLP"].lambda2) == ("identity", 0, 0)
    assert (cfgs["GCN"].lambda1, cfgs["GCN"].lambda2) == (0, 0)
    partly, full = cfgs["Partly ML-GCN"], cfgs["ML-GCN"]
    assert partly.lambda1 == 0.0 and full.lambda1 == 0.25
    assert partly.lambda2 == full.lambda2 == 0.25
    assert {k: v for k, v in partly.as_dict().items() if k != "lambda1"} == \
        {k: v for k, v in full.as_dict().items() if k != "lambda1"}


def test_ablation_rows(graph):
    rows = run_ablation(graph, CFG)
    assert [r["method"] for r in rows] == list(ABLATION)
    for r in rows:
        assert tuple(r) == FIELDS
        assert 0.0 <= r["micro_f1"] <= 1.0
    assert run_ablation(graph, CFG) == rows


def test_sweep_shape_and_reproducibility(graph):
    rows = run_size_sweep(graph, CFG, (0.1, 0.2, 0.3, 0.4))
    assert len(rows) == 8
    assert sorted({(r["method"], r["fraction"]) for r in rows}) == sorted(
        (m, f) for m in ("GCN", "ML-GCN") for f in (0.1, 0.2, 0.3, 0.4))
    assert run_size_sweep(graph, CFG, (0.1, 0.2, 0.3, 0.4)) == rows
    table = format_table(rows)
    assert "10%" in table and "40%" in table and "ML-GCN" in table


def test_full_fraction_matches_ablation(graph):
    sweep = run_size_sweep(graph, CFG, (1.0,))
    ablation = {r["method"]: r for r in run_ablation(graph, CFG)}
    for r in sweep:
        assert r == ablation[r["method"]]


def test_subsample_keeps_test_mask(graph):
    sub = subsample_train(graph, 0.25, seed=3)
    pool = graph.labeled_mask & ~graph.test_mask
    assert np.array_equal(sub.test_mask, graph.test_mask)
    assert sub.train_mask.sum() == round(0.25 * pool.sum())
    assert np.all(pool[sub.train_mask])


def test_subsample_too_small(graph):
    with pytest.raises(DatasetError, match="labeled class"):
        subsample_train(graph, 0.01, seed=0)
    with pytest.raises(ValueError):
        subsample_train(graph, 0.0, seed=0)
