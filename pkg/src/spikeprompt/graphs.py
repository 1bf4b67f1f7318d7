"""Graph data model, on-disk formats, synthetic generators, splits, and attacks.

Datasets are plain-text directories so fixtures stay diff-able:
``edges.tsv`` (two whitespace-separated node ids per line), ``features.csv``
(one comma-separated row per node), ``labels.csv`` (one integer per node).
All files are newline-terminated with no header rows.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .seeding import STREAM_PROJECTION, STREAM_SPLIT, stream_rng

EDGES_FILE = "edges.tsv"
FEATURES_FILE = "features.csv"
LABELS_FILE = "labels.csv"


@dataclass(frozen=True)
class Graph:
    """Undirected attributed graph with integer node labels.

    Edges are stored canonically as (u, v) with u < v, deduplicated and free of
    self-loops; every node has one feature row and one label in [0, C).
    Instances are immutable after construction and safe to share.
    """
    features: np.ndarray
    edges: tuple
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n = feats.shape[0]
        if labels.shape != (n,):
            raise ValueError(f"expected {n} labels, got {labels.shape}")
        if self.num_classes < 2:
            raise ValueError("graphs need at least 2 classes")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise ValueError("label out of range")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop ({u}, {v}) in edge list")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) references node id out of range [0, {n})")
            if u > v:
                raise ValueError(f"edge ({u}, {v}) not in canonical u < v order")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
        feats.flags.writeable = False
        labels.flags.writeable = False

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def num_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class FewShotSplit:
    """k labelled training nodes per class plus fixed validation/test id sets."""
    shots: int
    train_ids: tuple
    val_ids: tuple
    test_ids: tuple
    seed: int

    def __post_init__(self):
        tr, va, te = set(self.train_ids), set(self.val_ids), set(self.test_ids)
        if (tr & va) or (tr & te) or (va & te):
            raise ValueError("train/val/test id sets must be pairwise disjoint")


def _canonical_edges(pairs) -> tuple:
    """Drop self-loops, collapse duplicate undirected edges, sort."""
    dedup = {(min(u, v), max(u, v)) for u, v in pairs if u != v}
    return tuple(sorted(dedup))


def load_graph(dir_path: str) -> Graph:
    """Read a dataset directory and return a validated Graph.

    Self-loops are dropped and duplicate undirected edges collapsed; node ids
    must be 0-based and within the feature row count.
    """
    for name in (EDGES_FILE, FEATURES_FILE, LABELS_FILE):
        if not os.path.isfile(os.path.join(dir_path, name)):
            raise ValueError(f"missing required file: {name} in {dir_path}")

    rows = []
    width = None
    with open(os.path.join(dir_path, FEATURES_FILE)) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise ValueError(
                    f"ragged feature row at {FEATURES_FILE}:{line_no}: "
                    f"expected {width} values, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise ValueError(f"non-numeric feature at {FEATURES_FILE}:{line_no}") from None
    if not rows:
        raise ValueError(f"{FEATURES_FILE} is empty")
    features = np.array(rows, dtype=np.float64)
    n = features.shape[0]

    labels = []
    with open(os.path.join(dir_path, LABELS_FILE)) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                labels.append(int(line))
            except ValueError:
                raise ValueError(f"non-integer label at {LABELS_FILE}:{line_no}") from None
    if len(labels) != n:
        raise ValueError(f"expected {n} labels, got {len(labels)}")
    labels = np.array(labels, dtype=np.int64)
    if labels.min() < 0:
        raise ValueError("label out of range")
    num_classes = int(labels.max()) + 1

    pairs = []
    with open(os.path.join(dir_path, EDGES_FILE)) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"malformed edge at {EDGES_FILE}:{line_no}: {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ValueError(f"non-integer node id at {EDGES_FILE}:{line_no}") from None
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(
                    f"edge at {EDGES_FILE}:{line_no} references node id out of range "
                    f"(ids must be 0-based contiguous below {n})")
            pairs.append((u, v))

    return Graph(features, _canonical_edges(pairs), labels, num_classes)


def save_graph(g: Graph, dir_path: str):
    """Write a Graph as a dataset directory (inverse of load_graph)."""
    os.makedirs(dir_path, exist_ok=True)
    with open(os.path.join(dir_path, EDGES_FILE), "w") as fh:
        for u, v in g.edges:
            fh.write(f"{u}\t{v}\n")
    with open(os.path.join(dir_path, FEATURES_FILE), "w") as fh:
        for row in g.features:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    with open(os.path.join(dir_path, LABELS_FILE), "w") as fh:
        for lab in g.labels:
            fh.write(f"{int(lab)}\n")


def normalize_adjacency(g: Graph) -> np.ndarray:
    """Symmetrically normalized adjacency with self-loops:
    D^{-1/2} (A + I) D^{-1/2}, dense n x n.

    Isolated nodes get degree 1 from the added self-loop, so every diagonal
    entry is positive and rows sum to values in (0, 1].
    """
    n = g.n
    a = np.eye(n)
    for u, v in g.edges:
        a[u, v] = 1.0
        a[v, u] = 1.0
    deg = a.sum(axis=1)
    # dividing by sqrt(d_i * d_j) keeps the matrix exactly symmetric and exact
    # on regular graphs (sqrt of a perfect square)
    return a / np.sqrt(np.outer(deg, deg))


def generate_sbm(n_per_class: int, num_classes: int, p_in: float, p_out: float,
                 feature_noise: float, seed: int) -> Graph:
    """Stochastic block model with class-conditioned Gaussian features.

    Node features are the one-hot class mean (magnitude 1) plus additive
    Gaussian noise with the given stddev.  Deterministic for a fixed seed.
    """
    if n_per_class < 2:
        raise ValueError("n_per_class must be >= 2")
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    if not (0.0 <= p_out < p_in <= 1.0):
        raise ValueError("probabilities must satisfy 0 <= p_out < p_in <= 1")
    if feature_noise < 0:
        raise ValueError("feature_noise must be >= 0")
    rng = np.random.default_rng(int(seed))
    n = n_per_class * num_classes
    labels = np.repeat(np.arange(num_classes), n_per_class)

    probs = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    draws = rng.random((n, n))
    iu, ju = np.triu_indices(n, k=1)
    keep = draws[iu, ju] < probs[iu, ju]
    edges = tuple(zip(iu[keep].tolist(), ju[keep].tolist()))

    means = np.eye(num_classes)[labels]
    features = means + feature_noise * rng.standard_normal((n, num_classes))
    return Graph(features, edges, labels, num_classes)


def sample_few_shot(g: Graph, shots: int, val_per_class: int, seed: int) -> FewShotSplit:
    """Pick exactly `shots` train and `val_per_class` validation nodes per class;
    every remaining node becomes test.  Deterministic per seed."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if val_per_class < 0:
        raise ValueError("val_per_class must be >= 0")
    rng = stream_rng(STREAM_SPLIT, seed)
    train, val, test = [], [], []
    for c in range(g.num_classes):
        ids = np.flatnonzero(g.labels == c)
        if ids.size < shots + val_per_class:
            raise ValueError(
                f"class {c} has {ids.size} nodes, needs >= {shots + val_per_class} "
                f"for {shots}-shot with {val_per_class} validation nodes")
        perm = rng.permutation(ids)
        train.extend(perm[:shots].tolist())
        val.extend(perm[shots:shots + val_per_class].tolist())
        test.extend(perm[shots + val_per_class:].tolist())
    return FewShotSplit(shots, tuple(sorted(train)), tuple(sorted(val)),
                        tuple(sorted(test)), seed)


def random_edge_attack(g: Graph, rate: float, seed: int) -> Graph:
    """Insert floor(rate * |E|) random new undirected edges (no self-loops, no
    duplicates); features and labels are untouched.  Deterministic per seed."""
    if rate < 0:
        raise ValueError("attack rate must be >= 0")
    count = int(rate * g.num_edges)
    if count == 0:
        return g
    n = g.n
    existing = set(g.edges)
    total_pairs = n * (n - 1) // 2
    available = total_pairs - len(existing)
    if available == 0:
        raise ValueError("graph is already complete; cannot insert edges")
    if count > available:
        raise ValueError(f"cannot insert {count} edges: only {available} non-edges exist")
    iu, ju = np.triu_indices(n, k=1)
    mask = np.fromiter(((int(u), int(v)) not in existing for u, v in zip(iu, ju)),
                       dtype=bool, count=iu.size)
    candidates = np.flatnonzero(mask)
    rng = np.random.default_rng(int(seed))
    chosen = rng.choice(candidates, size=count, replace=False)
    new_edges = [(int(iu[i]), int(ju[i])) for i in chosen]
    return Graph(g.features, tuple(sorted(existing | set(new_edges))), g.labels,
                 g.num_classes)


def project_features(g: Graph, width: int) -> Graph:
    """Map features to a common input width with a fixed random projection.

    The projection matrix depends only on (d, width) through a dedicated RNG
    stream, so every variant and every run sees the identical map.  width <= 0
    leaves the graph unchanged.
    """
    if width is None or width <= 0 or width == g.d:
        return g
    rng = stream_rng(STREAM_PROJECTION, g.d, width)
    proj = rng.standard_normal((g.d, width)) / np.sqrt(g.d)
    return Graph(g.features @ proj, g.edges, g.labels, g.num_classes)
