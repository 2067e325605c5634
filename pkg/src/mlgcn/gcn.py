"""Two-layer graph convolution with a sigmoid multi-label head.

Forward::

    H1 = relu(A_hat @ X @ W0)
    Z2 = A_hat @ H1 @ W1
    P  = sigmoid(Z2)

The backward pass takes an extra gradient on ``H1`` so the embedding losses,
which read the hidden layer, can flow into ``W0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .graph import Graph
from .tensor import SparseMatrix, matmul, relu, relu_mask, sigmoid, spmm

PROB_CLAMP = 1e-12


@dataclass
class GcnParams:
    W0: np.ndarray
    W1: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.W0.shape[1]


@dataclass(frozen=True)
class ForwardCache:
    A_hat: SparseMatrix
    AX: np.ndarray
    Z1: np.ndarray
    H1: np.ndarray
    AH1: np.ndarray
    Z2: np.ndarray
    P: np.ndarray


@dataclass(frozen=True)
class ParamGrads:
    dW0: np.ndarray
    dW1: np.ndarray


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(rng: np.random.Generator, d: int, h: int, c: int) -> GcnParams:
    return GcnParams(glorot_uniform(rng, d, h), glorot_uniform(rng, h, c))


def _check_shapes(g: Graph, a_hat: SparseMatrix, params: GcnParams):
    if a_hat.shape != (g.n, g.n):
        raise ShapeError(f"propagation operator is {a_hat.shape}, graph has n={g.n}")
    if params.W0.shape[0] != g.d:
        raise ShapeError(f"W0 has {params.W0.shape[0]} rows, features have d={g.d}")
    if params.W1.shape != (params.W0.shape[1], g.c):
        raise ShapeError(f"W1 is {params.W1.shape}, expected ({params.W0.shape[1]}, {g.c})")


def gcn_forward(g: Graph, a_hat: SparseMatrix, params: GcnParams) -> ForwardCache:
    _check_shapes(g, a_hat, params)
    ax = spmm(a_hat, g.features)
    z1 = matmul(ax, params.W0)
    h1 = relu(z1)
    ah1 = spmm(a_hat, h1)
    z2 = matmul(ah1, params.W1)
    return ForwardCache(a_hat, ax, z1, h1, ah1, z2, sigmoid(z2))


def _mask_cells(mask, c):
    count = int(np.count_nonzero(mask)) * c
    if count == 0:
        raise ValueError("no training nodes")
    return count


def bce_loss(P: np.ndarray, Y: np.ndarray, mask: np.ndarray) -> float:
    """Mean binary cross-entropy over the masked (node, class) cells."""
    if P.shape != Y.shape:
        raise ShapeError(f"P is {P.shape} but Y is {Y.shape}")
    cells = _mask_cells(mask, P.shape[1])
    p = np.clip(P[mask], PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = Y[mask]
    return float(-np.sum(y * np.log(p) + (1.0 - y) * np.log1p(-p)) / cells)


def bce_logit_grad(P: np.ndarray, Y: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Gradient of :func:`bce_loss` with respect to the logits ``Z2``.

    Sigmoid and cross-entropy are fused, giving ``(P - Y) / cells`` on masked
    rows and zero elsewhere.
    """
    if P.shape != Y.shape:
        raise ShapeError(f"P is {P.shape} but Y is {Y.shape}")
    cells = _mask_cells(mask, P.shape[1])
    grad = np.zeros_like(P)
    grad[mask] = (P[mask] - Y[mask]) / cells
    return grad


def gcn_backward(
    cache: ForwardCache,
    params: GcnParams,
    dZ2: np.ndarray,
    dH1_injected: np.ndarray | None = None,
) -> ParamGrads:
    """Backpropagate a logit gradient (plus an optional hidden-layer gradient)."""
    if dZ2.shape != cache.Z2.shape:
        raise ShapeError(f"dZ2 is {dZ2.shape}, logits are {cache.Z2.shape}")
    dW1 = matmul(cache.AH1.T, dZ2)
    # A_hat is symmetric, so A_hat^T @ M == A_hat @ M
    dH1 = spmm(cache.A_hat, matmul(dZ2, params.W1.T))
    if dH1_injected is not None:
        if dH1_injected.shape != dH1.shape:
            raise ShapeError(f"injected gradient is {dH1_injected.shape}, H1 is {dH1.shape}")
        dH1 = dH1 + dH1_injected
    dZ1 = dH1 * relu_mask(cache.Z1)
    dW0 = matmul(cache.AX.T, dZ1)
    return ParamGrads(dW0, dW1)


def predict(g: Graph, a_hat: SparseMatrix, params: GcnParams, threshold: float = 0.5) -> np.ndarray:
    """Binary predictions; a cell is 1 only when its probability is strictly above ``threshold``."""
    P = gcn_forward(g, a_hat, params).P
    return (P > threshold).astype(np.float64)
