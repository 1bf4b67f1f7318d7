"""Integrate-and-fire chains that turn real-valued drives into quantized sparse outputs.

Each chain injects the same drive at every one of T sequential steps sharing a
single membrane accumulator (equivalent to one neuron unrolled T steps): the
membrane integrates the drive, fires when it crosses the threshold, soft-resets
by subtracting the threshold times the spike, and the T spike trains are
averaged.  Outputs therefore land exactly on the 1/T grid, and higher
thresholds or smaller T give sparser averages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (SurrogateSpec, Tensor, add, heaviside_ste, scale,
                       signed_heaviside_ste, sub)

IF_KIND = "if"
SIGNED_IF_KIND = "signed-if"


@dataclass(frozen=True)
class SpikingConfig:
    """Thresholds and horizon for both chains: mu gates the coefficient path,
    gamma gates the prompt path, horizon is the number of averaged steps."""
    mu: float = 0.1
    gamma: float = 0.1
    horizon: int = 4
    surrogate: SurrogateSpec = SurrogateSpec()

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be > 0")
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if int(self.horizon) < 1 or self.horizon != int(self.horizon):
            raise ValueError("horizon must be an integer >= 1")


def if_chain(alpha: Tensor, cfg: SpikingConfig) -> Tensor:
    """Average spike count of the step-fire chain driven by alpha, entrywise.

    Entries lie in {0, 1/T, ..., 1}; gradients pass through every fire step via
    the rectangular surrogate.
    """
    v = Tensor(np.zeros_like(alpha.values))
    acc = None
    for _ in range(cfg.horizon):
        v = add(v, alpha)
        h = heaviside_ste(v, cfg.mu, cfg.surrogate)
        v = sub(v, scale(h, cfg.mu))
        acc = h if acc is None else add(acc, h)
    return scale(acc, 1.0 / cfg.horizon)


def signed_if_chain(drive: Tensor, cfg: SpikingConfig) -> Tensor:
    """Average of the three-valued fire chain driven by `drive`, entrywise.

    Entries lie in {-1, ..., -1/T, 0, 1/T, ..., 1}.
    """
    u = Tensor(np.zeros_like(drive.values))
    acc = None
    for _ in range(cfg.horizon):
        u = add(u, drive)
        h = signed_heaviside_ste(u, cfg.gamma, cfg.surrogate)
        u = sub(u, scale(h, cfg.gamma))
        acc = h if acc is None else add(acc, h)
    return scale(acc, 1.0 / cfg.horizon)


def oracle_simulate(kind: str, drive: float, threshold: float, horizon: int):
    """Naive scalar reference loop for either chain: (spike train, average).

    No tensors, no gradients; this is the recurrence written out plainly, and
    it is the equivalence oracle for the tensor chains.
    """
    if kind not in (IF_KIND, SIGNED_IF_KIND):
        raise ValueError(f"unknown chain kind: {kind}")
    if kind == SIGNED_IF_KIND and not threshold > 0:
        raise ValueError("signed fire threshold must be > 0")
    v = 0.0
    train = []
    total = 0.0
    for _ in range(int(horizon)):
        v = v + drive
        if kind == IF_KIND:
            h = 1.0 if v >= threshold else 0.0
        else:
            h = 1.0 if v >= threshold else (-1.0 if v <= -threshold else 0.0)
        v = v - threshold * h
        train.append(h)
        total = total + h
    return train, total * (1.0 / int(horizon))


def sparsity(m, tol: float = 0.0) -> float:
    """Fraction of entries with |value| <= tol (default: exact zeros)."""
    vals = m.values if isinstance(m, Tensor) else np.asarray(m, dtype=np.float64)
    if vals.size == 0:
        return 1.0
    return float((np.abs(vals) <= tol).mean())
