"""Joint training of the GCN and the label embedding.

The per-epoch objective is::

    L_sum = lambda1 * L_label_label + lambda2 * L_node_label + L_sigmoid

optimized full-batch with Adam over ``W0``, ``W1`` and the label matrix ``Z``.
A term whose weight is exactly zero is not evaluated at all (it is logged as
0.0), so a run with both weights at zero is a plain GCN.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import embed
from .errors import ConfigError, TrainingError
from .gcn import GcnParams, bce_logit_grad, bce_loss, gcn_backward, gcn_forward, init_params
from .graph import Graph, normalize_adjacency
from .metrics import MetricReport, micro_f1
from .optim import AdamState, adam_step
from .tensor import SparseMatrix

log = logging.getLogger(__name__)

PROPAGATIONS = ("normalized", "identity")
NUM_LAYERS = 2


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    hidden_dim: int = 64
    lr: float = 0.01
    lambda1: float = 0.25
    lambda2: float = 0.25
    negatives: int = 5
    seed: int = 0
    propagation: str = "normalized"
    threshold: float = 0.5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    layers: int = NUM_LAYERS

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.hidden_dim < 1:
            raise ConfigError("hidden_dim must be >= 1")
        if self.negatives < 0:
            raise ConfigError("negatives must be >= 0")
        if not self.lr > 0:
            raise ConfigError("lr must be positive")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold must lie in (0, 1)")
        if self.propagation not in PROPAGATIONS:
            raise ConfigError(f"propagation must be one of {PROPAGATIONS}")
        if self.layers != NUM_LAYERS:
            raise ConfigError(f"only {NUM_LAYERS}-layer models are supported")
        if not all(math.isfinite(x) for x in (self.lambda1, self.lambda2)):
            raise ConfigError("lambda1 and lambda2 must be finite")

    @property
    def K(self) -> int:
        return self.negatives

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    l_ll: float
    l_nl: float
    l_sigmoid: float
    l_sum: float
    h1_cosine_distance: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class LossReport:
    epochs: list = field(default_factory=list)
    train_metrics: MetricReport | None = None
    test_metrics: MetricReport | None = None


@dataclass
class TrainResult:
    params: GcnParams
    Z: np.ndarray
    report: LossReport


def propagation_operator(g: Graph, propagation: str) -> SparseMatrix:
    if propagation == "normalized":
        return normalize_adjacency(g)
    if propagation == "identity":
        return SparseMatrix.identity(g.n)
    raise ConfigError(f"unknown propagation {propagation!r}")


def mean_cosine_distance(H: np.ndarray) -> float:
    """Mean pairwise cosine distance between the nonzero rows of ``H``."""
    norms = np.linalg.norm(H, axis=1)
    U = H[norms > 0] / norms[norms > 0, None]
    m = len(U)
    if m < 2:
        return 0.0
    s = U.sum(axis=0)
    mean_cos = (s @ s - m) / (m * (m - 1))
    return float(1.0 - mean_cos)


class Objective:
    """Evaluates ``L_sum`` and its gradient for one graph and config.

    Negatives are passed in explicitly so a finite-difference check can hold
    them fixed.
    """

    def __init__(self, g: Graph, cfg: TrainConfig):
        self.g = g
        self.cfg = cfg
        self.a_hat = propagation_operator(g, cfg.propagation)
        self.uses_embedding = cfg.lambda1 != 0.0 or cfg.lambda2 != 0.0
        if self.uses_embedding:
            self.dist = embed.build_noise_distribution(g)
            self.pairs = embed.build_pair_sets(g)
        else:
            self.dist = self.pairs = None

    def draw_negatives(self, epoch: int):
        cfg = self.cfg
        nl = ll = None
        if cfg.lambda2 != 0.0:
            nl = embed.draw_node_label_negatives(self.pairs, self.dist, cfg.K, cfg.seed, epoch)
        if cfg.lambda1 != 0.0:
            ll = embed.draw_label_label_negatives(self.pairs, self.dist, cfg.K, cfg.seed, epoch)
        return nl, ll

    def evaluate(self, params: GcnParams, Z: np.ndarray, negatives):
        """Return ``(terms, cache, grads)``; ``grads`` maps W0/W1/Z to arrays."""
        g, cfg = self.g, self.cfg
        nl_neg, ll_neg = negatives
        cache = gcn_forward(g, self.a_hat, params)
        l_sig = bce_loss(cache.P, g.labels, g.train_mask)

        l_nl = l_ll = 0.0
        dH1 = None
        dZ = np.zeros_like(Z)
        if cfg.lambda2 != 0.0:
            l_nl, dH1_nl, dZ_nl = embed.node_label_loss(cache.H1, Z, self.pairs, nl_neg)
            dH1 = cfg.lambda2 * dH1_nl
            dZ += cfg.lambda2 * dZ_nl
        if cfg.lambda1 != 0.0:
            l_ll, dZ_ll = embed.label_label_loss(Z, self.pairs, ll_neg)
            dZ += cfg.lambda1 * dZ_ll

        l_sum = cfg.lambda1 * l_ll + cfg.lambda2 * l_nl + l_sig
        dZ2 = bce_logit_grad(cache.P, g.labels, g.train_mask)
        pg = gcn_backward(cache, params, dZ2, dH1)
        terms = {"l_ll": l_ll, "l_nl": l_nl, "l_sigmoid": l_sig, "l_sum": l_sum}
        return terms, cache, {"W0": pg.dW0, "W1": pg.dW1, "Z": dZ}

    def loss(self, params: GcnParams, Z: np.ndarray, negatives) -> float:
        return self.evaluate(params, Z, negatives)[0]["l_sum"]


def init_state(g: Graph, cfg: TrainConfig):
    rng = np.random.default_rng(cfg.seed)
    params = init_params(rng, g.d, cfg.hidden_dim, g.c)
    Z = embed.init_label_embedding(rng, g.c, cfg.hidden_dim)
    return params, Z


def train(g: Graph, cfg: TrainConfig) -> TrainResult:
    objective = Objective(g, cfg)
    params, Z = init_state(g, cfg)
    state = AdamState()
    report = LossReport()

    for epoch in range(1, cfg.epochs + 1):
        negatives = objective.draw_negatives(epoch)
        terms, cache, grads = objective.evaluate(params, Z, negatives)
        if not math.isfinite(terms["l_sum"]):
            raise TrainingError(f"non-finite L_sum at epoch {epoch}")
        report.epochs.append(
            EpochRecord(epoch=epoch, h1_cosine_distance=mean_cosine_distance(cache.H1), **terms)
        )
        values = {"W0": params.W0, "W1": params.W1, "Z": Z}
        try:
            values, state = adam_step(
                values, grads, state, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps
            )
        except TrainingError as exc:
            raise TrainingError(f"epoch {epoch}: {exc}") from None
        params = GcnParams(values["W0"], values["W1"])
        Z = values["Z"]
        if epoch == 1 or epoch % 50 == 0 or epoch == cfg.epochs:
            log.debug("epoch %d L_sum=%.6f", epoch, terms["l_sum"])

    pred = predict(g, params, cfg, objective.a_hat)
    report.train_metrics = micro_f1(pred, g.labels, g.train_mask)
    if g.test_mask.any():
        report.test_metrics = micro_f1(pred, g.labels, g.test_mask)
    return TrainResult(params, Z, report)


def predict(g: Graph, params: GcnParams, cfg: TrainConfig, a_hat: SparseMatrix | None = None):
    """0-1 predictions; the label matrix plays no part at inference."""
    if a_hat is None:
        a_hat = propagation_operator(g, cfg.propagation)
    P = gcn_forward(g, a_hat, params).P
    return (P > cfg.threshold).astype(np.float64)


@dataclass(frozen=True)
class GradcheckResult:
    max_rel_error: dict
    analytic: dict
    numeric: dict

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values())


def relative_error(analytic, numeric):
    return np.abs(analytic - numeric) / (np.abs(analytic) + np.abs(numeric) + 1e-8)


def gradcheck(g: Graph, cfg: TrainConfig, step: float = 1e-5, epoch: int = 1) -> GradcheckResult:
    """Compare analytic gradients of ``L_sum`` at initialization against
    central differences, with the negatives of ``epoch`` frozen."""
    objective = Objective(g, cfg)
    params, Z = init_state(g, cfg)
    negatives = objective.draw_negatives(epoch)
    _, _, analytic = objective.evaluate(params, Z, negatives)
    values = {"W0": params.W0, "W1": params.W1, "Z": Z}

    def loss_at(vals):
        return objective.loss(GcnParams(vals["W0"], vals["W1"]), vals["Z"], negatives)

    numeric = {}
    for name, base in values.items():
        est = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            shifted = dict(values)
            plus = base.copy()
            plus[idx] += step
            minus = base.copy()
            minus[idx] -= step
            shifted[name] = plus
            hi = loss_at(shifted)
            shifted[name] = minus
            lo = loss_at(shifted)
            est[idx] = (hi - lo) / (2.0 * step)
        numeric[name] = est
    errors = {
        name: float(relative_error(analytic[name], numeric[name]).max(initial=0.0))
        for name in values
    }
    return GradcheckResult(errors, analytic, numeric)
