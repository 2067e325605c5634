"""Attributed multi-label graphs: data model, TSV dataset format, adjacency
normalization and a planted-correlation synthetic generator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DatasetError
from .tensor import SparseMatrix

DATASET_FILES = ("meta.tsv", "edges.tsv", "features.tsv", "labels.tsv", "split.tsv")
FEATURE_FLIP_RATE = 0.1


@dataclass(frozen=True, eq=False)
class Graph:
    adjacency: SparseMatrix
    features: np.ndarray
    labels: np.ndarray
    train_mask: np.ndarray
    test_mask: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.float64)
        train = np.asarray(self.train_mask, dtype=bool)
        test = np.asarray(self.test_mask, dtype=bool)
        n = self.adjacency.rows
        if self.adjacency.cols != n:
            raise DatasetError("adjacency must be square")
        if features.ndim != 2 or features.shape[0] != n:
            raise DatasetError(f"features must have {n} rows")
        if labels.ndim != 2 or labels.shape[0] != n:
            raise DatasetError(f"labels must have {n} rows")
        if train.shape != (n,) or test.shape != (n,):
            raise DatasetError("masks must have one entry per node")
        if not np.all(np.isfinite(features)):
            raise DatasetError("features must be finite")
        if not np.all((labels == 0.0) | (labels == 1.0)):
            raise DatasetError("labels must be 0-1")
        if np.any(train & test):
            raise DatasetError("train and test masks overlap")
        bare = np.flatnonzero(train & (labels.sum(axis=1) == 0))
        if len(bare):
            raise DatasetError(f"train node {bare[0]} has no labels")
        a = self.adjacency.csr
        if np.any(a.diagonal() != 0):
            raise DatasetError("adjacency stores a self-loop")
        if np.any(self.adjacency.values < 0):
            raise DatasetError("edge weights must be nonnegative")
        if (a != a.T).nnz:
            raise DatasetError("adjacency is not symmetric")
        for name, arr in (("features", features), ("labels", labels),
                          ("train_mask", train), ("test_mask", test)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.adjacency.rows

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def c(self) -> int:
        return self.labels.shape[1]

    @property
    def labeled_mask(self) -> np.ndarray:
        return self.labels.sum(axis=1) > 0

    def with_masks(self, train_mask, test_mask) -> Graph:
        return Graph(self.adjacency, self.features, self.labels, train_mask, test_mask)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.adjacency == other.adjacency
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.train_mask, other.train_mask)
            and np.array_equal(self.test_mask, other.test_mask)
        )

    __hash__ = None


def adjacency_from_edges(n: int, edges) -> SparseMatrix:
    """Build a symmetric adjacency from ``(u, v, weight)`` triples listed once."""
    edges = list(edges)
    if not edges:
        return SparseMatrix(n, n, np.zeros(n + 1, dtype=np.int64), [], [])
    u, v, w = (np.asarray(col) for col in zip(*edges))
    rows = np.concatenate([u, v]).astype(np.int64)
    cols = np.concatenate([v, u]).astype(np.int64)
    vals = np.concatenate([w, w]).astype(np.float64)
    return SparseMatrix.from_scipy(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))


def normalize_adjacency(g: Graph) -> SparseMatrix:
    """Return ``D^-1/2 (A + I) D^-1/2`` with ``D`` the degrees of ``A + I``."""
    a_tilde = g.adjacency.csr + sp.identity(g.n, format="csr")
    a_tilde = sp.csr_matrix(a_tilde)
    a_tilde.sort_indices()
    degree = np.asarray(a_tilde.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(degree)
    rows = np.repeat(np.arange(g.n), np.diff(a_tilde.indptr))
    # scale by the product d_i*d_j so (i,j) and (j,i) round identically
    vals = a_tilde.data * (inv_sqrt[rows] * inv_sqrt[a_tilde.indices])
    return SparseMatrix(g.n, g.n, a_tilde.indptr, a_tilde.indices, vals)


# ---------------------------------------------------------------------------
# on-disk format


def _lines(path: Path):
    if not path.is_file():
        raise DatasetError("missing file", path)
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line.split("\t")


def _int(text, path, lineno, what="integer"):
    try:
        return int(text.strip())
    except ValueError:
        raise DatasetError(f"non-numeric {what} {text!r}", path, lineno) from None


def _float(text, path, lineno):
    try:
        value = float(text.strip())
    except ValueError:
        raise DatasetError(f"non-numeric value {text!r}", path, lineno) from None
    if not math.isfinite(value):
        raise DatasetError(f"non-finite value {text!r}", path, lineno)
    return value


def _node(text, n, path, lineno):
    i = _int(text, path, lineno, "node id")
    if not 0 <= i < n:
        raise DatasetError(f"node id {i} out of range [0, {n})", path, lineno)
    return i


def load_dataset(path) -> Graph:
    root = Path(path)
    if not root.is_dir():
        raise DatasetError("dataset directory not found", root)

    meta_path = root / "meta.tsv"
    meta = list(_lines(meta_path))
    if len(meta) != 1 or len(meta[0][1]) != 3:
        raise DatasetError("expected a single line 'n<TAB>d<TAB>c'", meta_path)
    lineno, fields = meta[0]
    n, d, c = (_int(f, meta_path, lineno) for f in fields)
    if n < 1 or d < 0 or c < 1:
        raise DatasetError("n and c must be positive, d nonnegative", meta_path, lineno)

    edge_path = root / "edges.tsv"
    weights = {}
    for lineno, fields in _lines(edge_path):
        if len(fields) != 3:
            raise DatasetError("expected 'u<TAB>v<TAB>weight'", edge_path, lineno)
        u = _node(fields[0], n, edge_path, lineno)
        v = _node(fields[1], n, edge_path, lineno)
        w = _float(fields[2], edge_path, lineno)
        if u == v:
            raise DatasetError(f"self-loop on node {u}", edge_path, lineno)
        if w < 0:
            raise DatasetError(f"negative weight {w}", edge_path, lineno)
        key = (min(u, v), max(u, v))
        if key in weights and weights[key] != w:
            raise DatasetError(
                f"conflicting weights {weights[key]} and {w} for edge {key}", edge_path, lineno
            )
        weights[key] = w
    adjacency = adjacency_from_edges(
        n, [(u, v, w) for (u, v), w in sorted(weights.items()) if w != 0.0]
    )

    feat_path = root / "features.tsv"
    features = np.zeros((n, d))
    seen = set()
    for lineno, fields in _lines(feat_path):
        if len(fields) > 2:
            raise DatasetError("expected 'id<TAB>idx:val ...'", feat_path, lineno)
        i = _node(fields[0], n, feat_path, lineno)
        if i in seen:
            raise DatasetError(f"duplicate feature row for node {i}", feat_path, lineno)
        seen.add(i)
        for pair in (fields[1].split() if len(fields) == 2 else []):
            idx, sep, val = pair.partition(":")
            if not sep:
                raise DatasetError(f"expected idx:val, got {pair!r}", feat_path, lineno)
            j = _int(idx, feat_path, lineno, "feature index")
            if not 0 <= j < d:
                raise DatasetError(f"feature index {j} out of range [0, {d})", feat_path, lineno)
            features[i, j] = _float(val, feat_path, lineno)

    label_path = root / "labels.tsv"
    labels = np.zeros((n, c))
    seen = set()
    for lineno, fields in _lines(label_path):
        if len(fields) != 2:
            raise DatasetError("expected 'id<TAB>l1,l2,...'", label_path, lineno)
        i = _node(fields[0], n, label_path, lineno)
        if i in seen:
            raise DatasetError(f"duplicate label row for node {i}", label_path, lineno)
        seen.add(i)
        for tok in fields[1].split(","):
            if not tok.strip():
                continue
            y = _int(tok, label_path, lineno, "label id")
            if not 0 <= y < c:
                raise DatasetError(f"label id {y} out of range [0, {c})", label_path, lineno)
            labels[i, y] = 1.0

    split_path = root / "split.tsv"
    train = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    seen = set()
    for lineno, fields in _lines(split_path):
        if len(fields) != 2:
            raise DatasetError("expected 'id<TAB>train|test'", split_path, lineno)
        i = _node(fields[0], n, split_path, lineno)
        if i in seen:
            raise DatasetError(f"node {i} listed twice", split_path, lineno)
        seen.add(i)
        role = fields[1].strip()
        if role == "train":
            if labels[i].sum() == 0:
                raise DatasetError(f"train node {i} has zero labels", split_path, lineno)
            train[i] = True
        elif role == "test":
            test[i] = True
        else:
            raise DatasetError(f"split must be 'train' or 'test', got {role!r}", split_path, lineno)
    if not train.any():
        raise DatasetError("no training nodes", split_path)

    return Graph(adjacency, features, labels, train, test)


def _fmt(x: float) -> str:
    return repr(float(x))


def save_dataset(g: Graph, path) -> Path:
    """Write ``g`` in the directory format read by :func:`load_dataset`."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "meta.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{g.n}\t{g.d}\t{g.c}\n")
    upper = sp.triu(g.adjacency.csr, k=1, format="csr")
    upper.sort_indices()
    with open(root / "edges.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for u in range(g.n):
            for k in range(upper.indptr[u], upper.indptr[u + 1]):
                fh.write(f"{u}\t{upper.indices[k]}\t{_fmt(upper.data[k])}\n")
    with open(root / "features.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for i in range(g.n):
            nz = np.flatnonzero(g.features[i])
            if len(nz):
                fh.write(f"{i}\t" + " ".join(f"{j}:{_fmt(g.features[i, j])}" for j in nz) + "\n")
    with open(root / "labels.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for i in range(g.n):
            ys = np.flatnonzero(g.labels[i])
            if len(ys):
                fh.write(f"{i}\t" + ",".join(str(y) for y in ys) + "\n")
    with open(root / "split.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for i in range(g.n):
            if g.train_mask[i]:
                fh.write(f"{i}\ttrain\n")
            elif g.test_mask[i]:
                fh.write(f"{i}\ttest\n")
    return root


# ---------------------------------------------------------------------------
# synthetic benchmark


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    c: int
    corr_pairs: tuple = field(default_factory=tuple)
    p_in: float = 0.05
    p_out: float = 0.005
    noise_dims: int = 0
    train_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "corr_pairs", tuple((int(a), int(b), float(r)) for a, b, r in self.corr_pairs)
        )
        if self.n < 4:
            raise DatasetError("synthetic graphs need n >= 4")
        if self.c < 2:
            raise DatasetError("synthetic graphs need c >= 2")
        for name in ("p_in", "p_out", "train_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DatasetError(f"{name} must lie in [0, 1], got {value}")
        if not self.p_in > self.p_out:
            raise DatasetError("p_in must exceed p_out")
        if self.noise_dims < 0:
            raise DatasetError("noise_dims must be nonnegative")
        for a, b, rho in self.corr_pairs:
            if not (0 <= a < self.c and 0 <= b < self.c) or a == b:
                raise DatasetError(f"bad correlated pair ({a}, {b})")
            if not 0.0 <= rho <= 1.0:
                raise DatasetError(f"correlation {rho} outside [0, 1]")


def generate_synthetic(spec: SyntheticSpec) -> Graph:
    """Sample a planted-correlation graph.

    Every node draws a primary label uniformly; each ``(a, b, rho)`` pair gives
    nodes whose primary label is ``a`` the extra label ``b`` with probability
    ``rho``. Nodes sharing a label connect with probability ``p_in``, others
    with ``p_out``. Features are the label indicators with each bit flipped at
    rate 0.1, followed by ``noise_dims`` standard-normal columns.
    """
    rng = np.random.default_rng(spec.seed)
    n, c = spec.n, spec.c

    primary = rng.integers(c, size=n)
    labels = np.zeros((n, c))
    labels[np.arange(n), primary] = 1.0
    for a, b, rho in spec.corr_pairs:
        extra = (primary == a) & (rng.random(n) < rho)
        labels[extra, b] = 1.0

    iu, ju = np.triu_indices(n, k=1)
    share = (labels @ labels.T)[iu, ju] > 0
    prob = np.where(share, spec.p_in, spec.p_out)
    keep = rng.random(len(iu)) < prob
    adjacency = adjacency_from_edges(n, zip(iu[keep], ju[keep], np.ones(keep.sum())))

    flips = rng.random((n, c)) < FEATURE_FLIP_RATE
    indicators = np.where(flips, 1.0 - labels, labels)
    noise = rng.standard_normal((n, spec.noise_dims))
    features = np.hstack([indicators, noise])

    order = rng.permutation(n)
    train = np.zeros(n, dtype=bool)
    train[order[: int(round(spec.train_fraction * n))]] = True
    return Graph(adjacency, features, labels, train, ~train)

