"""Micro-averaged F1 over pooled (node, class) cells."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class MetricReport:
    tp: int
    fp: int
    fn: int
    micro_f1: float

    @property
    def percent(self) -> str:
        return f"{100.0 * self.micro_f1:.2f}"

    def as_dict(self) -> dict:
        return asdict(self)


def micro_f1(pred: np.ndarray, truth: np.ndarray, mask: np.ndarray) -> MetricReport:
    """Pool TP/FP/FN over masked rows and return ``2tp / (2tp + fp + fn)``.

    With no positives in either matrix the score is 1.0 rather than undefined.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction is {pred.shape}, truth is {truth.shape}")
    if mask.shape != (pred.shape[0],):
        raise ShapeError(f"mask has shape {mask.shape}, expected ({pred.shape[0]},)")
    if not mask.any():
        raise ValueError("empty evaluation mask")
    p = pred[mask] != 0
    t = truth[mask] != 0
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    denom = 2 * tp + fp + fn
    return MetricReport(tp, fp, fn, 1.0 if denom == 0 else 2.0 * tp / denom)
