"""Dense 2-D tensors with reverse-mode gradients.

The compute graph is rebuilt on every forward pass (define-by-run), which keeps
unrolled spiking loops trivial: each op returns a new Tensor holding a closure
that routes the upstream gradient to its operands.  Fire steps are
non-differentiable; their backward rule is a rectangular surrogate window.
All values are float64.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested op."""


_GRAD_STACK = [True]


@contextlib.contextmanager
def no_grad():
    """Disable graph construction inside the block (forward values only)."""
    _GRAD_STACK.append(False)
    try:
        yield
    finally:
        _GRAD_STACK.pop()


def grad_enabled() -> bool:
    return _GRAD_STACK[-1]


class Tensor:
    """2-D float64 matrix with an optional gradient accumulation slot."""

    __slots__ = ("values", "grad", "requires_grad", "op", "_parents", "_backward")

    def __init__(self, values, requires_grad: bool = False, op: str = "leaf",
                 parents: tuple = (), backward=None):
        arr = np.atleast_2d(np.asarray(values, dtype=np.float64))
        if arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite values in tensor (op={op})")
        self.values = arr
        self.grad = None
        self.requires_grad = requires_grad
        self.op = op
        self._parents = parents
        self._backward = backward

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def item(self) -> float:
        if self.values.size != 1:
            raise ShapeError(f"item() needs a scalar tensor, got shape {self.shape}")
        return float(self.values[0, 0])

    def zero_grad(self):
        self.grad = None

    def backward(self, seed=None):
        """Propagate gradients to every reachable grad-requiring tensor.

        Without an explicit seed the output must be scalar (seeded with 1).
        Each node is visited exactly once, in reverse topological order.
        """
        if not self.requires_grad:
            raise ValueError("backward() on a tensor that does not require grad")
        if seed is None:
            if self.values.size != 1:
                raise ShapeError("backward() without a seed gradient requires a scalar output")
            seed = np.ones_like(self.values)
        _accumulate(self, np.asarray(seed, dtype=np.float64).reshape(self.values.shape))
        for node in reversed(_toposort(self)):
            if node._backward is not None:
                node._backward(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"


def _accumulate(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = np.zeros_like(t.values)
    t.grad += g


def _toposort(root: Tensor) -> list:
    """Post-order over the parent DAG; reversed, every consumer precedes its input."""
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def _tracking(*tensors: Tensor) -> bool:
    return grad_enabled() and any(t.requires_grad for t in tensors)


def _walk_ops(root: Tensor):
    seen, stack = set(), [root]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node.op
        stack.extend(node._parents)


FIRE_OPS = frozenset({"heaviside", "signed_heaviside"})


def has_fire_op(root: Tensor) -> bool:
    """True when a spike-fire step participates in the computation of `root`."""
    return any(op in FIRE_OPS for op in _walk_ops(root))


# ---------------------------------------------------------------------------
# ops

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.cols != b.rows:
        raise ShapeError(f"matmul: {a.shape} x {b.shape}")
    vals = a.values @ b.values
    if not _tracking(a, b):
        return Tensor(vals, op="matmul")

    def backward(g):
        if a.requires_grad:
            _accumulate(a, g @ b.values.T)
        if b.requires_grad:
            _accumulate(b, a.values.T @ g)

    return Tensor(vals, True, "matmul", (a, b), backward)


def matmul_t(a: Tensor, b: Tensor) -> Tensor:
    """a @ b.T without materialising a transpose op."""
    if a.cols != b.cols:
        raise ShapeError(f"matmul_t: {a.shape} x {b.shape}^T")
    vals = a.values @ b.values.T
    if not _tracking(a, b):
        return Tensor(vals, op="matmul_t")

    def backward(g):
        if a.requires_grad:
            _accumulate(a, g @ b.values)
        if b.requires_grad:
            _accumulate(b, g.T @ a.values)

    return Tensor(vals, True, "matmul_t", (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; b may also be a single row broadcast over a's rows."""
    row_broadcast = b.shape != a.shape
    if row_broadcast and not (b.rows == 1 and b.cols == a.cols):
        raise ShapeError(f"add: {a.shape} + {b.shape}")
    vals = a.values + b.values
    if not _tracking(a, b):
        return Tensor(vals, op="add")

    def backward(g):
        if a.requires_grad:
            _accumulate(a, g)
        if b.requires_grad:
            _accumulate(b, g.sum(axis=0, keepdims=True) if row_broadcast else g)

    return Tensor(vals, True, "add", (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"sub: {a.shape} - {b.shape}")
    vals = a.values - b.values
    if not _tracking(a, b):
        return Tensor(vals, op="sub")

    def backward(g):
        if a.requires_grad:
            _accumulate(a, g)
        if b.requires_grad:
            _accumulate(b, -g)

    return Tensor(vals, True, "sub", (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"mul: {a.shape} * {b.shape}")
    vals = a.values * b.values
    if not _tracking(a, b):
        return Tensor(vals, op="mul")

    def backward(g):
        if a.requires_grad:
            _accumulate(a, g * b.values)
        if b.requires_grad:
            _accumulate(b, g * a.values)

    return Tensor(vals, True, "mul", (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    vals = a.values * c
    if not _tracking(a):
        return Tensor(vals, op="scale")

    def backward(g):
        _accumulate(a, g * c)

    return Tensor(vals, True, "scale", (a,), backward)


def relu(a: Tensor) -> Tensor:
    vals = np.maximum(a.values, 0.0)
    if not _tracking(a):
        return Tensor(vals, op="relu")
    mask = a.values > 0.0

    def backward(g):
        _accumulate(a, g * mask)

    return Tensor(vals, True, "relu", (a,), backward)


def rowsum(a: Tensor) -> Tensor:
    vals = a.values.sum(axis=1, keepdims=True)
    if not _tracking(a):
        return Tensor(vals, op="rowsum")

    def backward(g):
        _accumulate(a, np.broadcast_to(g, a.shape).copy())

    return Tensor(vals, True, "rowsum", (a,), backward)


def sum_all(a: Tensor) -> Tensor:
    vals = np.array([[a.values.sum()]])
    if not _tracking(a):
        return Tensor(vals, op="sum_all")

    def backward(g):
        _accumulate(a, np.full(a.shape, g[0, 0]))

    return Tensor(vals, True, "sum_all", (a,), backward)


def select_rows(a: Tensor, ids) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64).reshape(-1)
    if ids.size and (ids.min() < 0 or ids.max() >= a.rows):
        raise ShapeError(f"select_rows: id out of range for {a.rows} rows")
    vals = a.values[ids]
    if not _tracking(a):
        return Tensor(vals, op="select_rows")

    def backward(g):
        full = np.zeros_like(a.values)
        np.add.at(full, ids, g)
        _accumulate(a, full)

    return Tensor(vals, True, "select_rows", (a,), backward)


def softmax_rows(a: Tensor) -> Tensor:
    shifted = a.values - a.values.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    vals = e / e.sum(axis=1, keepdims=True)
    if not _tracking(a):
        return Tensor(vals, op="softmax_rows")

    def backward(g):
        inner = (g * vals).sum(axis=1, keepdims=True)
        _accumulate(a, vals * (g - inner))

    return Tensor(vals, True, "softmax_rows", (a,), backward)


def cross_entropy(logits: Tensor, targets) -> Tensor:
    """Mean cross-entropy of integer targets against row logits (scalar output)."""
    t = np.asarray(targets, dtype=np.int64).reshape(-1)
    if t.shape[0] != logits.rows:
        raise ShapeError(f"cross_entropy: {logits.rows} rows, {t.shape[0]} targets")
    if t.size == 0:
        raise ShapeError("cross_entropy: empty target set")
    if t.min() < 0 or t.max() >= logits.cols:
        raise ValueError("cross_entropy: target class out of range")
    z = logits.values
    m = z.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(z - m).sum(axis=1))
    n = t.shape[0]
    vals = np.array([[float((lse - z[np.arange(n), t]).mean())]])
    if not _tracking(logits):
        return Tensor(vals, op="cross_entropy")

    def backward(g):
        p = np.exp(z - m)
        p /= p.sum(axis=1, keepdims=True)
        p[np.arange(n), t] -= 1.0
        _accumulate(logits, g[0, 0] * p / n)

    return Tensor(vals, True, "cross_entropy", (logits,), backward)


def bce_with_logits(scores: Tensor, targets) -> Tensor:
    """Mean binary cross-entropy on a column of logits against 0/1 targets."""
    y = np.asarray(targets, dtype=np.float64).reshape(-1, 1)
    if y.shape != scores.shape:
        raise ShapeError(f"bce_with_logits: {scores.shape} scores, {y.shape} targets")
    s = scores.values
    # max(s,0) - s*y + log1p(exp(-|s|)) is the overflow-safe form
    losses = np.maximum(s, 0.0) - s * y + np.log1p(np.exp(-np.abs(s)))
    vals = np.array([[float(losses.mean())]])
    if not _tracking(scores):
        return Tensor(vals, op="bce_with_logits")

    def backward(g):
        sig = 1.0 / (1.0 + np.exp(-s))
        _accumulate(scores, g[0, 0] * (sig - y) / y.size)

    return Tensor(vals, True, "bce_with_logits", (scores,), backward)


# ---------------------------------------------------------------------------
# fire steps

@dataclass(frozen=True)
class SurrogateSpec:
    """Rectangular surrogate window for gradients across fire steps.

    The backward derivative is 1/width wherever the pre-activation sits within
    width/2 of a firing threshold, and exactly zero outside.
    """
    kind: str = "rectangular"
    width: float = 1.0

    def __post_init__(self):
        if self.kind != "rectangular":
            raise ValueError(f"unknown surrogate kind: {self.kind}")
        if not self.width > 0:
            raise ValueError("surrogate width must be > 0")


def heaviside_ste(x: Tensor, threshold: float, s: SurrogateSpec) -> Tensor:
    """Step fire: 1 where x >= threshold else 0; surrogate gradient on backward."""
    threshold = float(threshold)
    if not np.isfinite(threshold):
        raise ValueError("fire threshold must be finite")
    vals = np.where(x.values >= threshold, 1.0, 0.0)
    if not _tracking(x):
        return Tensor(vals, op="heaviside")
    half = s.width / 2.0
    gain = 1.0 / s.width
    window = np.abs(x.values - threshold) < half

    def backward(g):
        _accumulate(x, g * window * gain)

    return Tensor(vals, True, "heaviside", (x,), backward)


def signed_heaviside_ste(x: Tensor, threshold: float, s: SurrogateSpec) -> Tensor:
    """Three-valued fire: +1 at x >= t, -1 at x <= -t, else 0; one surrogate
    window per threshold."""
    threshold = float(threshold)
    if not threshold > 0:
        raise ValueError("signed fire threshold must be > 0")
    vals = np.where(x.values >= threshold, 1.0, np.where(x.values <= -threshold, -1.0, 0.0))
    if not _tracking(x):
        return Tensor(vals, op="signed_heaviside")
    half = s.width / 2.0
    gain = 1.0 / s.width
    window = np.abs(np.abs(x.values) - threshold) < half

    def backward(g):
        _accumulate(x, g * window * gain)

    return Tensor(vals, True, "signed_heaviside", (x,), backward)


# ---------------------------------------------------------------------------
# finite-difference checking

@dataclass
class GradCheckReport:
    """Outcome of a central finite-difference check against reverse-mode grads."""
    max_rel_errors: tuple
    rtol: float
    skipped: bool = False
    note: str = ""

    @property
    def passed(self) -> bool:
        return (not self.skipped) and all(e <= self.rtol for e in self.max_rel_errors)


def check_gradients(f, params, eps: float = 1e-5, rtol: float = 1e-4) -> GradCheckReport:
    """Compare reverse-mode gradients of scalar f(*params) with central differences.

    Only meaningful on smooth paths: any fire op in the computation marks the
    report as skipped (the surrogate derivative is not the true derivative).
    """
    out = f(*params)
    if out.values.size != 1:
        raise ShapeError("check_gradients needs a scalar-valued computation")
    if has_fire_op(out):
        return GradCheckReport((), rtol, skipped=True,
                               note="surrogate path: finite-difference check skipped")
    for p in params:
        p.zero_grad()
    out.backward()
    analytic = [np.zeros_like(p.values) if p.grad is None else p.grad.copy() for p in params]

    max_errors = []
    with no_grad():
        for p, an in zip(params, analytic):
            worst = 0.0
            flat = p.values.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                plus = f(*params).item()
                flat[i] = orig - eps
                minus = f(*params).item()
                flat[i] = orig
                fd = (plus - minus) / (2.0 * eps)
                a = an.reshape(-1)[i]
                rel = abs(fd - a) / max(abs(fd), abs(a), 1e-8)
                worst = max(worst, rel)
            max_errors.append(worst)
    return GradCheckReport(tuple(max_errors), rtol)
