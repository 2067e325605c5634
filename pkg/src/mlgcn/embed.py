"""Label embeddings and the negative-sampled node-label / label-label losses.

Each labeled training node ``i`` with label set ``Y_i`` contributes

* a node-label term, averaged over ``j in Y_i``::

      -log s(z_j . h_i) - sum_t log s(-z_t . h_i)

* when ``|Y_i| >= 2``, a label-label term averaged over ordered pairs
  ``(a, b)`` with ``a != b``::

      -log s(z_b . z_a) - sum_t log s(-z_t . z_a)

where ``s`` is the logistic function and the ``z_t`` are ``K`` negatives drawn
from the unigram^(3/4) noise distribution, redrawn whenever they hit the
positive label (and, for label-label pairs, the context label too). Node terms
are averaged over nodes.

Negatives come from an RNG stream keyed by ``(seed, epoch, kind, node, pair)``
so results do not depend on the order nodes are visited in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SamplerError, ShapeError
from .graph import Graph
from .tensor import log_sigmoid, sigmoid

NOISE_POWER = 0.75
_NODE_LABEL, _LABEL_LABEL = 0, 1


@dataclass(frozen=True)
class NoiseDistribution:
    probs: np.ndarray
    cumulative: np.ndarray

    @property
    def c(self) -> int:
        return len(self.probs)


def noise_from_counts(counts) -> NoiseDistribution:
    counts = np.asarray(counts, dtype=np.float64)
    if np.any(counts < 0):
        raise SamplerError("label counts must be nonnegative")
    if np.count_nonzero(counts) < 2:
        raise SamplerError(
            "noise distribution needs at least two label classes with positive count"
        )
    weights = counts**NOISE_POWER
    probs = weights / weights.sum()
    cumulative = np.cumsum(probs)
    cumulative[-1] = 1.0
    return NoiseDistribution(probs, cumulative)


def build_noise_distribution(g: Graph) -> NoiseDistribution:
    """Unigram^(3/4) distribution of label occurrences over training nodes."""
    return noise_from_counts(g.labels[g.train_mask].sum(axis=0))


def sample_negatives(
    dist: NoiseDistribution, forbidden, K: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``K`` labels by inverse transform, redrawing any that hit ``forbidden``.

    ``forbidden`` is a label id or a collection of them.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    banned = np.atleast_1d(np.asarray(forbidden, dtype=np.int64))
    if not np.delete(dist.probs, banned).sum() > 0.0:
        raise SamplerError(f"no label outside {banned.tolist()} has positive probability")
    last = dist.c - 1
    out = np.minimum(np.searchsorted(dist.cumulative, rng.random(K), side="right"), last)
    bad = np.isin(out, banned)
    while bad.any():
        redraw = np.minimum(
            np.searchsorted(dist.cumulative, rng.random(int(bad.sum())), side="right"), last
        )
        out[bad] = redraw
        bad = np.isin(out, banned)
    return out


@dataclass(frozen=True)
class PairSets:
    """Flattened node-label and label-label pairs with their averaging weights.

    ``nl_*`` arrays have one entry per (node, positive label); ``ll_*`` arrays
    one entry per ordered (context, target) label pair of a multi-label node.
    ``*_slot`` is the pair's index within its node, used to key the RNG.
    """

    nl_node: np.ndarray
    nl_label: np.ndarray
    nl_slot: np.ndarray
    nl_weight: np.ndarray
    ll_node: np.ndarray
    ll_context: np.ndarray
    ll_target: np.ndarray
    ll_slot: np.ndarray
    ll_weight: np.ndarray

    @property
    def n_node_label(self) -> int:
        return len(self.nl_node)

    @property
    def n_label_label(self) -> int:
        return len(self.ll_node)


def build_pair_sets(g: Graph) -> PairSets:
    nodes = np.flatnonzero(g.train_mask)
    if len(nodes) == 0:
        raise ValueError("no training nodes")
    label_sets = [np.flatnonzero(g.labels[i]) for i in nodes]
    multi = [len(ys) >= 2 for ys in label_sets]
    n_multi = sum(multi)

    nl = ([], [], [], [])
    ll = ([], [], [], [], [])
    for i, ys in zip(nodes, label_sets):
        for slot, y in enumerate(ys):
            nl[0].append(i)
            nl[1].append(y)
            nl[2].append(slot)
            nl[3].append(1.0 / (len(ys) * len(nodes)))
        if len(ys) < 2:
            continue
        n_pairs = len(ys) * (len(ys) - 1)
        slot = 0
        for a in ys:
            for b in ys:
                if a == b:
                    continue
                ll[0].append(i)
                ll[1].append(a)
                ll[2].append(b)
                ll[3].append(slot)
                ll[4].append(1.0 / (n_pairs * n_multi))
                slot += 1

    def ints(xs):
        return np.asarray(xs, dtype=np.int64)

    def floats(xs):
        return np.asarray(xs, dtype=np.float64)

    return PairSets(
        ints(nl[0]), ints(nl[1]), ints(nl[2]), floats(nl[3]),
        ints(ll[0]), ints(ll[1]), ints(ll[2]), ints(ll[3]), floats(ll[4]),
    )


def _pair_rng(seed, epoch, kind, node, slot):
    return np.random.default_rng([int(seed), int(epoch), kind, int(node), int(slot)])


def draw_node_label_negatives(pairs: PairSets, dist, K, seed, epoch) -> np.ndarray:
    """``(n_pairs, K)`` negatives for the node-label pairs; none equals the pair's label."""
    out = np.empty((pairs.n_node_label, K), dtype=np.int64)
    for p in range(pairs.n_node_label):
        rng = _pair_rng(seed, epoch, _NODE_LABEL, pairs.nl_node[p], pairs.nl_slot[p])
        out[p] = sample_negatives(dist, pairs.nl_label[p], K, rng)
    return out


def draw_label_label_negatives(pairs: PairSets, dist, K, seed, epoch) -> np.ndarray:
    """``(n_pairs, K)`` negatives for the label-label pairs.

    Negatives avoid both the target and the context label: a context drawn as
    its own negative adds ``-log s(-|z_a|^2)``, which is at least log 2 and only
    shrinks ``z_a``. If no other label has mass, only the target is excluded.
    """
    out = np.empty((pairs.n_label_label, K), dtype=np.int64)
    for p in range(pairs.n_label_label):
        rng = _pair_rng(seed, epoch, _LABEL_LABEL, pairs.ll_node[p], pairs.ll_slot[p])
        a, b = pairs.ll_context[p], pairs.ll_target[p]
        forbidden = (b, a) if np.delete(dist.probs, [a, b]).sum() > 0.0 else b
        out[p] = sample_negatives(dist, forbidden, K, rng)
    return out


def init_label_embedding(rng: np.random.Generator, c: int, dim: int) -> np.ndarray:
    bound = 0.5 / dim
    return rng.uniform(-bound, bound, size=(c, dim))


def _check_negatives(neg, n_pairs):
    if neg.ndim != 2 or neg.shape[0] != n_pairs:
        raise ShapeError(f"expected negatives of shape ({n_pairs}, K), got {neg.shape}")


def node_label_loss(H1: np.ndarray, Z: np.ndarray, pairs: PairSets, negatives: np.ndarray):
    """Return ``(loss, dH1, dZ)`` for fixed negatives."""
    if H1.shape[1] != Z.shape[1]:
        raise ShapeError(f"hidden dim {H1.shape[1]} != label embedding dim {Z.shape[1]}")
    _check_negatives(negatives, pairs.n_node_label)
    h = H1[pairs.nl_node]
    w = pairs.nl_weight
    pos = np.einsum("pd,pd->p", h, Z[pairs.nl_label])
    neg = np.einsum("pd,pkd->pk", h, Z[negatives])
    loss = -np.sum(w * log_sigmoid(pos)) - np.sum(w[:, None] * log_sigmoid(-neg))

    g_pos = -w * sigmoid(-pos)
    g_neg = w[:, None] * sigmoid(neg)
    dh = g_pos[:, None] * Z[pairs.nl_label] + np.einsum("pk,pkd->pd", g_neg, Z[negatives])
    dH1 = np.zeros_like(H1)
    np.add.at(dH1, pairs.nl_node, dh)
    dZ = np.zeros_like(Z)
    np.add.at(dZ, pairs.nl_label, g_pos[:, None] * h)
    np.add.at(dZ, negatives.ravel(), (g_neg[:, :, None] * h[:, None, :]).reshape(-1, Z.shape[1]))
    return float(loss), dH1, dZ


def label_label_loss(Z: np.ndarray, pairs: PairSets, negatives: np.ndarray):
    """Return ``(loss, dZ)`` for fixed negatives; zero when no node has two labels."""
    _check_negatives(negatives, pairs.n_label_label)
    dZ = np.zeros_like(Z)
    if pairs.n_label_label == 0:
        return 0.0, dZ
    za = Z[pairs.ll_context]
    zb = Z[pairs.ll_target]
    zt = Z[negatives]
    w = pairs.ll_weight
    pos = np.einsum("pd,pd->p", za, zb)
    neg = np.einsum("pd,pkd->pk", za, zt)
    loss = -np.sum(w * log_sigmoid(pos)) - np.sum(w[:, None] * log_sigmoid(-neg))

    g_pos = -w * sigmoid(-pos)
    g_neg = w[:, None] * sigmoid(neg)
    d_context = g_pos[:, None] * zb + np.einsum("pk,pkd->pd", g_neg, zt)
    np.add.at(dZ, pairs.ll_context, d_context)
    np.add.at(dZ, pairs.ll_target, g_pos[:, None] * za)
    np.add.at(dZ, negatives.ravel(), (g_neg[:, :, None] * za[:, None, :]).reshape(-1, Z.shape[1]))
    return float(loss), dZ
