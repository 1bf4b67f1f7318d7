"""Prompt generators: shared-vector, softmax-combination, and spiking variants.

Every variant produces per-node additive prompts P from K learnable atoms
(basis vectors) B and, except for the plain shared-vector case, a learnable
projection W that scores atoms per node.  The spiking variants sparsify the
atom scores through a step-fire chain and/or the prompts themselves through a
signed fire chain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .autodiff import SurrogateSpec, Tensor, add, matmul, matmul_t, softmax_rows
from .seeding import STREAM_PROMPT, stream_rng
from .spiking import SpikingConfig, if_chain, signed_if_chain, sparsity


class Variant(str, Enum):
    GPF = "gpf"
    GPF_PLUS = "gpf-plus"
    SPIKING = "spiking"            # spiking coefficients + spiking prompts
    SPIKING_S = "spiking-s"        # spiking coefficients only (dense prompts)
    SPIKING_P = "spiking-p"        # spiking prompts only (softmax coefficients)


SPIKING_VARIANTS = frozenset({Variant.SPIKING, Variant.SPIKING_S, Variant.SPIKING_P})


@dataclass
class PromptModel:
    """Trainable atoms B (K x d) and projection W (K x d) for one variant."""
    variant: Variant
    atoms: Tensor
    weights: Tensor
    cfg: SpikingConfig | None = None

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if self.atoms.shape != self.weights.shape:
            raise ValueError(f"atoms {self.atoms.shape} and weights {self.weights.shape} disagree")
        if self.variant is Variant.GPF and self.k != 1:
            raise ValueError("the shared-vector variant uses exactly one atom")
        if self.variant in SPIKING_VARIANTS and self.cfg is None:
            raise ValueError(f"variant {self.variant.value} needs a SpikingConfig")

    @property
    def k(self) -> int:
        return self.atoms.rows

    @property
    def dim(self) -> int:
        return self.atoms.cols

    def trainable(self) -> list:
        # the shared-vector variant has no per-node scoring, so W stays unused
        if self.variant is Variant.GPF:
            return [self.atoms]
        return [self.atoms, self.weights]


@dataclass
class PromptOutput:
    """One forward pass of a prompt generator.

    scores holds the pre-softmax atom scores (the quantity that is literally
    sparse for the spiking coefficient path), coefficients the row-normalized
    S, prompts the additive P, and prompted equals features + P.
    """
    scores: Tensor
    coefficients: Tensor
    prompts: Tensor
    prompted: Tensor


def init_prompt_model(variant, k: int, dim: int, seed: int,
                      cfg: SpikingConfig | None = None) -> PromptModel:
    """Uniform init scaled by 1/sqrt(d) keeps initial drives within typical
    firing-threshold magnitude, so early training is not silent."""
    variant = Variant(variant)
    if variant is Variant.GPF:
        k = 1
    if k < 1:
        raise ValueError("need at least one atom")
    rng = stream_rng(STREAM_PROMPT, seed)
    bound = 1.0 / np.sqrt(dim)
    atoms = Tensor(rng.uniform(-bound, bound, (k, dim)), requires_grad=True)
    weights = Tensor(rng.uniform(-bound, bound, (k, dim)), requires_grad=True)
    return PromptModel(variant, atoms, weights, cfg if variant in SPIKING_VARIANTS else None)


def gpf_prompt(x: Tensor, model: PromptModel) -> PromptOutput:
    """One shared prompt vector added to every node."""
    if model.variant is not Variant.GPF:
        raise ValueError(f"variant mismatch: expected gpf, got {model.variant.value}")
    n = x.rows
    ones = Tensor(np.ones((n, 1)))
    prompts = matmul(ones, model.atoms)
    return PromptOutput(scores=Tensor(np.zeros((n, 1))), coefficients=ones,
                        prompts=prompts, prompted=add(x, prompts))


def gpf_plus_prompt(x: Tensor, model: PromptModel) -> PromptOutput:
    """Per-node softmax combination of all atoms: S = softmax(X W^T), P = S B."""
    if model.variant is not Variant.GPF_PLUS:
        raise ValueError(f"variant mismatch: expected gpf-plus, got {model.variant.value}")
    scores = matmul_t(x, model.weights)
    coeffs = softmax_rows(scores)
    prompts = matmul(coeffs, model.atoms)
    return PromptOutput(scores, coeffs, prompts, add(x, prompts))


def spiking_prompt(x: Tensor, model: PromptModel) -> PromptOutput:
    """Spiking variants; differentiable end-to-end via surrogate fire gradients.

    spiking:   scores = if_chain(X W^T); S = softmax(scores); P = signed_if_chain(S B)
    spiking-s: same sparse S, dense P = S B
    spiking-p: softmax scores as gpf-plus, sparse P = signed_if_chain(S B)
    """
    if model.variant not in SPIKING_VARIANTS:
        raise ValueError(f"variant mismatch: expected a spiking variant, got {model.variant.value}")
    if model.cfg is None:
        raise ValueError("spiking variants need a SpikingConfig")
    raw = matmul_t(x, model.weights)
    if model.variant in (Variant.SPIKING, Variant.SPIKING_S):
        scores = if_chain(raw, model.cfg)
    else:
        scores = raw
    coeffs = softmax_rows(scores)
    drive = matmul(coeffs, model.atoms)
    if model.variant in (Variant.SPIKING, Variant.SPIKING_P):
        prompts = signed_if_chain(drive, model.cfg)
    else:
        prompts = drive
    return PromptOutput(scores, coeffs, prompts, add(x, prompts))


_DISPATCH = {
    Variant.GPF: gpf_prompt,
    Variant.GPF_PLUS: gpf_plus_prompt,
    Variant.SPIKING: spiking_prompt,
    Variant.SPIKING_S: spiking_prompt,
    Variant.SPIKING_P: spiking_prompt,
}


def apply_prompt(x: Tensor, model: PromptModel) -> PromptOutput:
    return _DISPATCH[model.variant](x, model)


@dataclass(frozen=True)
class SparsityReport:
    sparsity_s_pre_softmax: float
    sparsity_p: float
    atoms_active_per_node: float


def prompt_sparsity_report(out: PromptOutput) -> SparsityReport:
    """Sparsity of the pre-softmax scores and of P, plus the mean number of
    atoms per node carrying above-uniform coefficient mass (> 1/K)."""
    s = out.coefficients.values
    k = s.shape[1]
    active = float((s > 1.0 / k).sum(axis=1).mean())
    return SparsityReport(sparsity(out.scores), sparsity(out.prompts), active)


PROMPT_FORMAT = "prompt/1"


def save_prompt_model(model: PromptModel, path: str):
    payload = {
        "format": PROMPT_FORMAT,
        "variant": model.variant.value,
        "k": model.k,
        "dim": model.dim,
        "cfg": None if model.cfg is None else {
            "mu": model.cfg.mu,
            "gamma": model.cfg.gamma,
            "horizon": model.cfg.horizon,
            "surrogate_width": model.cfg.surrogate.width,
        },
        "atoms": model.atoms.values.tolist(),
        "weights": model.weights.values.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_prompt_model(path: str) -> PromptModel:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != PROMPT_FORMAT:
        raise ValueError(f"unsupported prompt checkpoint format: {payload.get('format')!r}")
    cfg = None
    if payload["cfg"] is not None:
        c = payload["cfg"]
        cfg = SpikingConfig(c["mu"], c["gamma"], c["horizon"],
                            SurrogateSpec(width=c["surrogate_width"]))
    return PromptModel(Variant(payload["variant"]),
                       Tensor(payload["atoms"], requires_grad=True),
                       Tensor(payload["weights"], requires_grad=True), cfg)
