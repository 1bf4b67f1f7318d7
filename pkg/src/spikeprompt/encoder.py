"""3-layer graph-convolution encoder, link-prediction pretraining, classifier head.

The encoder propagates with the normalized adjacency:
Z1 = relu(A X W1), Z2 = relu(A Z1 W2), Z3 = A Z2 W3 (no final nonlinearity).
Pretraining scores node-pair dot products against observed edges and sampled
non-edges, then freezes the weights; downstream tuning never touches them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, add, bce_with_logits, matmul, mul, relu, rowsum, select_rows
from .graphs import Graph, normalize_adjacency
from .optim import Adam
from .seeding import STREAM_ENCODER, STREAM_HEAD, STREAM_NEGATIVE, stream_rng


@dataclass
class EncoderModel:
    """Three weight matrices; once frozen, no optimizer may modify them."""
    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    input_dim: int
    hidden: int
    frozen: bool = False
    loss_history: list = field(default_factory=list, repr=False, compare=False)

    def checksum(self) -> str:
        h = hashlib.sha256()
        for w in (self.w1, self.w2, self.w3):
            h.update(np.ascontiguousarray(w).tobytes())
        return h.hexdigest()


def init_encoder(input_dim: int, hidden: int, seed: int) -> EncoderModel:
    rng = stream_rng(STREAM_ENCODER, seed)

    def layer(fan_in, fan_out):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, (fan_in, fan_out))

    return EncoderModel(layer(input_dim, hidden), layer(hidden, hidden),
                        layer(hidden, hidden), input_dim, hidden)


def _encode_layers(a_hat: Tensor, x: Tensor, w1: Tensor, w2: Tensor, w3: Tensor) -> Tensor:
    z = relu(matmul(matmul(a_hat, x), w1))
    z = relu(matmul(matmul(a_hat, z), w2))
    return matmul(matmul(a_hat, z), w3)


def encode(a_hat, x: Tensor, model: EncoderModel) -> Tensor:
    """Node embeddings (n x hidden) with the encoder weights held constant."""
    if x.cols != model.input_dim:
        raise ValueError(f"encoder expects {model.input_dim} input features, got {x.cols}")
    a = a_hat if isinstance(a_hat, Tensor) else Tensor(a_hat)
    return _encode_layers(a, x, Tensor(model.w1), Tensor(model.w2), Tensor(model.w3))


def _non_edge_pairs(g: Graph) -> np.ndarray:
    iu, ju = np.triu_indices(g.n, k=1)
    existing = set(g.edges)
    mask = np.fromiter(((int(u), int(v)) not in existing for u, v in zip(iu, ju)),
                       dtype=bool, count=iu.size)
    return np.stack([iu[mask], ju[mask]], axis=1)


def pretrain_edgepred(g: Graph, model: EncoderModel, epochs: int = 200,
                      neg_ratio: float = 1.0, seed: int = 0,
                      lr: float = 1e-3) -> EncoderModel:
    """Self-supervised pretraining: binary cross-entropy on sigmoid(z_u . z_v)
    with positives = existing edges and negatives sampled uniformly among
    non-edges at neg_ratio per positive.  Returns a frozen copy; deterministic
    per seed (two runs produce bitwise-equal weights)."""
    if model.frozen:
        raise ValueError("encoder is already frozen")
    if g.num_edges == 0:
        raise ValueError("pretraining needs at least one edge")
    a_hat = Tensor(normalize_adjacency(g))
    x = Tensor(g.features)
    ws = [Tensor(model.w1.copy(), requires_grad=True),
          Tensor(model.w2.copy(), requires_grad=True),
          Tensor(model.w3.copy(), requires_grad=True)]
    opt = Adam(ws, lr=lr)
    rng = stream_rng(STREAM_NEGATIVE, seed)
    pos = np.asarray(g.edges, dtype=np.int64)
    non_edges = _non_edge_pairs(g)
    n_neg = max(1, int(neg_ratio * g.num_edges))
    losses = []
    for _ in range(epochs):
        if non_edges.shape[0]:
            neg = non_edges[rng.integers(0, non_edges.shape[0], size=n_neg)]
        else:
            neg = np.empty((0, 2), dtype=np.int64)
        us = np.concatenate([pos[:, 0], neg[:, 0]])
        vs = np.concatenate([pos[:, 1], neg[:, 1]])
        y = np.concatenate([np.ones(pos.shape[0]), np.zeros(neg.shape[0])])
        z = _encode_layers(a_hat, x, *ws)
        scores = rowsum(mul(select_rows(z, us), select_rows(z, vs)))
        loss = bce_with_logits(scores, y)
        opt.zero_grad()
        loss.backward()
        opt.step()
        losses.append(loss.item())
    return EncoderModel(ws[0].values.copy(), ws[1].values.copy(), ws[2].values.copy(),
                        model.input_dim, model.hidden, frozen=True, loss_history=losses)


@dataclass
class ClassifierHead:
    """Linear head over embeddings; the only downstream-trainable piece besides prompts."""
    weights: Tensor
    bias: Tensor

    @property
    def num_classes(self) -> int:
        return self.weights.cols


def init_head(hidden: int, num_classes: int, seed: int) -> ClassifierHead:
    rng = stream_rng(STREAM_HEAD, seed)
    bound = 1.0 / np.sqrt(hidden)
    return ClassifierHead(Tensor(rng.uniform(-bound, bound, (hidden, num_classes)),
                                 requires_grad=True),
                          Tensor(np.zeros((1, num_classes)), requires_grad=True))


def classify(embeddings: Tensor, head: ClassifierHead) -> Tensor:
    """Logits = Z theta + bias."""
    return add(matmul(embeddings, head.weights), head.bias)


ENCODER_FORMAT = "encoder/1"


def save_encoder(model: EncoderModel, path: str):
    payload = {
        "format": ENCODER_FORMAT,
        "input_dim": model.input_dim,
        "hidden": model.hidden,
        "frozen": model.frozen,
        "w1": model.w1.tolist(),
        "w2": model.w2.tolist(),
        "w3": model.w3.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_encoder(path: str) -> EncoderModel:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != ENCODER_FORMAT:
        raise ValueError(f"unsupported encoder checkpoint format: {payload.get('format')!r}")
    return EncoderModel(np.array(payload["w1"]), np.array(payload["w2"]),
                        np.array(payload["w3"]), payload["input_dim"],
                        payload["hidden"], payload["frozen"])
