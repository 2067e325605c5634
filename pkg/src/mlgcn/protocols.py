"""Experiment protocols: the four-way ablation and the training-size sweep."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import replace

import numpy as np

from .errors import DatasetError
from .graph import Graph
from .trainer import TrainConfig, train

ABLATION = {
    "MLP": dict(propagation="identity", lambda1=0.0, lambda2=0.0),
    "GCN": dict(propagation="normalized", lambda1=0.0, lambda2=0.0),
    "Partly ML-GCN": dict(propagation="normalized", lambda1=0.0),
    "ML-GCN": dict(propagation="normalized"),
}
SWEEP_METHODS = ("GCN", "ML-GCN")
DEFAULT_FRACTIONS = (0.1, 0.2, 0.3, 0.4)
FIELDS = ("method", "fraction", "seed", "micro_f1", "tp", "fp", "fn")


def method_config(base: TrainConfig, method: str) -> TrainConfig:
    """Config for ``method``; lambdas not overridden keep their base values."""
    return replace(base, **ABLATION[method])


def _row(method, fraction, cfg, g, result):
    m = result.report.test_metrics
    if m is None:
        raise DatasetError("graph has no test nodes to score")
    return {"method": method, "fraction": fraction, "seed": cfg.seed,
            "micro_f1": m.micro_f1, "tp": m.tp, "fp": m.fp, "fn": m.fn}


def run_ablation(g: Graph, base_cfg: TrainConfig, methods=tuple(ABLATION)) -> list:
    rows = []
    for method in methods:
        cfg = method_config(base_cfg, method)
        rows.append(_row(method, 1.0, cfg, g, train(g, cfg)))
    return rows


def subsample_train(g: Graph, fraction: float, seed: int) -> Graph:
    """Keep the test mask and draw ``fraction`` of the labeled non-test pool for training.

    ``fraction == 1.0`` returns ``g`` unchanged.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if fraction == 1.0:
        return g
    pool = np.flatnonzero(g.labeled_mask & ~g.test_mask)
    k = int(round(fraction * len(pool)))
    rng = np.random.default_rng([int(seed), int(round(fraction * 1_000_000))])
    chosen = np.sort(rng.choice(pool, size=k, replace=False)) if k else pool[:0]
    train_mask = np.zeros(g.n, dtype=bool)
    train_mask[chosen] = True
    present = np.count_nonzero(g.labels[train_mask].sum(axis=0))
    if present < 2:
        raise DatasetError(
            f"training fraction {fraction} leaves {present} labeled class(es); need at least 2"
        )
    return g.with_masks(train_mask, g.test_mask)


def run_size_sweep(g: Graph, base_cfg: TrainConfig, fractions=DEFAULT_FRACTIONS,
                   methods=SWEEP_METHODS) -> list:
    rows = []
    for fraction in fractions:
        sub = subsample_train(g, fraction, base_cfg.seed)
        for method in methods:
            cfg = method_config(base_cfg, method)
            rows.append(_row(method, fraction, cfg, sub, train(sub, cfg)))
    return rows


def summarize(rows) -> dict:
    """Mean micro-F1 keyed by ``(method, fraction)``."""
    acc = defaultdict(list)
    for r in rows:
        acc[(r["method"], r["fraction"])].append(r["micro_f1"])
    return {key: float(np.mean(vals)) for key, vals in acc.items()}


def format_table(rows) -> str:
    """Methods down, fractions across, mean micro-F1 in percent."""
    means = summarize(rows)
    methods = list(dict.fromkeys(r["method"] for r in rows))
    fractions = list(dict.fromkeys(r["fraction"] for r in rows))
    headers = ["Method"] + [f"{100 * f:g}%" for f in fractions]
    body = [
        [m] + [f"{100 * means[(m, f)]:.2f}" if (m, f) in means else "-" for f in fractions]
        for m in methods
    ]
    widths = [max(len(row[i]) for row in [headers] + body) for i in range(len(headers))]
    lines = []
    for row in [headers] + body:
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells))
    return "\n".join(lines)
