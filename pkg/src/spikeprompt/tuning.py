"""Downstream tuning of prompts against a frozen encoder, plus the experiment
harness: hyperparameter sweeps, edge-attack robustness, shots curves, and
deterministic metrics files.

Training is full-graph: one adaptive-moment step per epoch on the few-shot
cross-entropy, model selection by best validation accuracy with patience-based
early stopping.  Every stochastic choice (split, inits, attack edges, negative
samples) derives from the run seed through a named RNG stream, so identical
(config, seeds) reproduce every emitted file byte for byte.  Wall-clock time is
kept on the in-memory record only, never written to files.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from .autodiff import SurrogateSpec, Tensor, cross_entropy, no_grad, select_rows
from .encoder import ClassifierHead, EncoderModel, classify, encode, init_head
from .graphs import (FewShotSplit, Graph, normalize_adjacency, random_edge_attack,
                     sample_few_shot)
from .optim import Adam
from .prompts import (SPIKING_VARIANTS, Variant, apply_prompt, init_prompt_model,
                      prompt_sparsity_report)
from .seeding import STREAM_ATTACK, derive_seed
from .spiking import SpikingConfig

PROBE = "probe"
TUNABLE_VARIANTS = tuple(v.value for v in Variant) + (PROBE,)

DEFAULT_THRESHOLD_GRID = (0.005, 0.05, 0.1, 0.2, 0.3)
DEFAULT_HORIZON_GRID = (1, 2, 4, 8)
DEFAULT_ATTACK_RATES = (0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class TuneConfig:
    variant: str = "spiking"
    shots: int = 5
    val_per_class: int = 5
    epochs: int = 300
    patience: int = 50
    lr: float = 1e-3
    weight_decay: float = 4e-6
    k_atoms: int = 10
    mu: float = 0.1
    gamma: float = 0.1
    horizon: int = 4
    surrogate_width: float = 1.0
    threshold_grid: tuple = DEFAULT_THRESHOLD_GRID
    horizon_grid: tuple = DEFAULT_HORIZON_GRID
    seeds: tuple = tuple(range(10))
    input_width: int = 100

    def __post_init__(self):
        if self.variant not in TUNABLE_VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {TUNABLE_VARIANTS}")
        if not self.lr > 0:
            raise ValueError("learning rate must be > 0")
        if self.shots < 1 or self.val_per_class < 0 or self.epochs < 0:
            raise ValueError("shots must be >= 1, val_per_class and epochs >= 0")
        if self.patience < 1 or self.k_atoms < 1:
            raise ValueError("patience and k_atoms must be >= 1")
        if not self.threshold_grid or not self.horizon_grid:
            raise ValueError("parameter grids must be non-empty")
        if len(set(self.seeds)) != len(self.seeds) or not self.seeds:
            raise ValueError("seeds must be non-empty and distinct")
        if any(s < 0 for s in self.seeds):
            raise ValueError("seeds must be non-negative")

    def spiking_config(self) -> SpikingConfig:
        return SpikingConfig(self.mu, self.gamma, self.horizon,
                             SurrogateSpec(width=self.surrogate_width))


@dataclass
class RunRecord:
    """Everything one tuning run produced; wall_seconds never reaches disk."""
    variant: str
    seed: int
    shots: int
    mu: float
    gamma: float
    horizon: int
    attack_rate: float
    epochs_run: int
    selected_epoch: int
    test_accuracy: float
    sparsity_s_pre_softmax: float
    sparsity_p: float
    train_losses: list
    train_accuracies: list
    val_losses: list
    val_accuracies: list
    test_accuracies: list
    config: dict
    wall_seconds: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("wall_seconds")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(**d, wall_seconds=0.0)

    @property
    def final_train_loss(self) -> float:
        return self.train_losses[-1]

    @property
    def best_val_accuracy(self) -> float:
        return self.val_accuracies[self.selected_epoch]


def _ce_value(logits: np.ndarray, labels: np.ndarray, ids) -> float:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        return 0.0
    z = logits[ids]
    m = z.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(z - m).sum(axis=1))
    return float((lse - z[np.arange(ids.size), labels[ids]]).mean())


def _accuracy(logits: np.ndarray, labels: np.ndarray, ids) -> float:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        return 0.0
    return float((logits[ids].argmax(axis=1) == labels[ids]).mean())


def _forward_logits(a_hat: Tensor, x: Tensor, model, enc: EncoderModel,
                    head: ClassifierHead):
    out = apply_prompt(x, model) if model is not None else None
    feats = out.prompted if out is not None else x
    return classify(encode(a_hat, feats, enc), head), out


def tune(g: Graph, enc: EncoderModel, cfg: TuneConfig, split: FewShotSplit,
         attack_rate: float = 0.0) -> RunRecord:
    """Optimize {atoms, projection, head} with the encoder frozen; report test
    accuracy at the best-validation epoch.  Raises if anything touches the
    encoder weights (checksum before/after) or the loss goes non-finite."""
    if not enc.frozen:
        raise ValueError("encoder must be frozen before tuning")
    if cfg.shots != split.shots:
        raise ValueError(f"config shots {cfg.shots} != split shots {split.shots}")
    checksum_before = enc.checksum()
    t0 = time.perf_counter()
    seed = split.seed

    a_hat = Tensor(normalize_adjacency(g))
    x = Tensor(g.features)
    labels = g.labels
    if cfg.variant == PROBE:
        model = None
    else:
        variant = Variant(cfg.variant)
        scfg = cfg.spiking_config() if variant in SPIKING_VARIANTS else None
        model = init_prompt_model(variant, cfg.k_atoms, g.d, seed, scfg)
    head = init_head(enc.hidden, g.num_classes, seed)
    params = (model.trainable() if model is not None else []) + [head.weights, head.bias]
    opt = Adam(params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    train_ids = np.asarray(split.train_ids, dtype=np.int64)

    train_losses, train_accs, val_losses, val_accs, test_accs = [], [], [], [], []

    def evaluate():
        with no_grad():
            logits_t, _ = _forward_logits(a_hat, x, model, enc, head)
        logits = logits_t.values
        train_losses.append(_ce_value(logits, labels, split.train_ids))
        train_accs.append(_accuracy(logits, labels, split.train_ids))
        val_losses.append(_ce_value(logits, labels, split.val_ids))
        val_accs.append(_accuracy(logits, labels, split.val_ids))
        test_accs.append(_accuracy(logits, labels, split.test_ids))

    evaluate()  # epoch 0: the untrained model is a selection candidate
    best_epoch = 0
    best_val = val_accs[0]
    best_params = [p.values.copy() for p in params]
    epochs_run = 0
    since_best = 0
    for epoch in range(1, cfg.epochs + 1):
        logits_t, _ = _forward_logits(a_hat, x, model, enc, head)
        loss = cross_entropy(select_rows(logits_t, train_ids), labels[train_ids])
        opt.zero_grad()
        loss.backward()
        opt.step()
        evaluate()
        epochs_run = epoch
        if val_accs[epoch] > best_val:
            best_val = val_accs[epoch]
            best_epoch = epoch
            best_params = [p.values.copy() for p in params]
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break

    for p, snap in zip(params, best_params):
        p.values = snap

    if model is not None:
        with no_grad():
            rep = prompt_sparsity_report(apply_prompt(x, model))
        sparsity_s, sparsity_p = rep.sparsity_s_pre_softmax, rep.sparsity_p
    else:
        sparsity_s, sparsity_p = 1.0, 1.0  # probe adds nothing: all-zero prompts

    if enc.checksum() != checksum_before:
        raise ValueError("frozen encoder was modified during tuning")

    return RunRecord(
        variant=cfg.variant, seed=seed, shots=cfg.shots, mu=cfg.mu, gamma=cfg.gamma,
        horizon=cfg.horizon, attack_rate=float(attack_rate), epochs_run=epochs_run,
        selected_epoch=best_epoch, test_accuracy=test_accs[best_epoch],
        sparsity_s_pre_softmax=sparsity_s, sparsity_p=sparsity_p,
        train_losses=train_losses, train_accuracies=train_accs,
        val_losses=val_losses, val_accuracies=val_accs, test_accuracies=test_accs,
        config=asdict(cfg), wall_seconds=time.perf_counter() - t0)


def tune_over_seeds(g: Graph, enc: EncoderModel, cfg: TuneConfig) -> list:
    """One tuning run per configured seed, each with its own few-shot split."""
    records = []
    for seed in cfg.seeds:
        split = sample_few_shot(g, cfg.shots, cfg.val_per_class, seed)
        records.append(tune(g, enc, cfg, split))
    return records


def sweep(g: Graph, enc: EncoderModel, base_cfg: TuneConfig) -> list:
    """Full Cartesian (threshold x horizon) grid, every cell over all seeds.

    The single threshold axis drives both firing thresholds (mu = gamma)."""
    records = []
    for thr in base_cfg.threshold_grid:
        for horizon in base_cfg.horizon_grid:
            cfg = replace(base_cfg, mu=thr, gamma=thr, horizon=horizon)
            records.extend(tune_over_seeds(g, enc, cfg))
    return records


def robustness(g: Graph, enc: EncoderModel, cfg: TuneConfig,
               rates=DEFAULT_ATTACK_RATES, variants=None) -> list:
    """Re-tune on edge-attacked copies of the graph, per rate and variant.

    The attacked graph for a (rate, seed) cell is shared by all variants; rates
    are processed in ascending order.
    """
    if any(r < 0 for r in rates):
        raise ValueError("attack rates must be >= 0")
    variants = list(variants) if variants else ["gpf", "gpf-plus", "spiking", PROBE]
    records = []
    for idx, rate in enumerate(sorted(rates)):
        for seed in cfg.seeds:
            attacked = random_edge_attack(g, rate, derive_seed(STREAM_ATTACK, seed, idx))
            split = sample_few_shot(attacked, cfg.shots, cfg.val_per_class, seed)
            for variant in variants:
                vcfg = replace(cfg, variant=variant)
                records.append(tune(attacked, enc, vcfg, split, attack_rate=rate))
    return records


def shots_experiment(g: Graph, enc: EncoderModel, cfg: TuneConfig,
                     shots_list=tuple(range(1, 11)), variants=None) -> list:
    """Accuracy as the number of labelled nodes per class grows."""
    if any(k < 1 for k in shots_list):
        raise ValueError("shot counts must be >= 1")
    variants = list(variants) if variants else [cfg.variant]
    records = []
    for k in sorted(shots_list):
        for variant in variants:
            kcfg = replace(cfg, shots=k, variant=variant)
            records.extend(tune_over_seeds(g, enc, kcfg))
    return records


# ---------------------------------------------------------------------------
# reporting

RUNS_CSV_COLUMNS = (
    "variant", "seed", "shots", "mu", "gamma", "horizon", "attack_rate",
    "epochs_run", "selected_epoch", "test_accuracy", "sparsity_s_pre_softmax",
    "sparsity_p", "final_train_loss", "best_val_accuracy")

HEATMAP_COLUMNS = ("threshold", "horizon", "sparsity_s_pre_softmax", "sparsity_p",
                   "test_accuracy")

SUMMARY_FORMAT = "summary/1"


def _fmt(x) -> str:
    """Numbers print with 6 significant digits; integers stay plain."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".6g")


def _round6(x) -> float:
    return float(format(float(x), ".6g"))


def _mean_std(values) -> tuple:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def _cell_key(r: RunRecord) -> str:
    return (f"variant={r.variant},shots={r.shots},mu={_fmt(r.mu)},"
            f"gamma={_fmt(r.gamma)},horizon={r.horizon},rate={_fmt(r.attack_rate)}")


def report(records, out_dir: str) -> dict:
    """Write runs.csv, summary.json, and sparsity_heatmap.csv under out_dir.

    Output bytes are a pure function of the records: rows keep record order,
    summary cells sort by key, and all numbers carry 6 significant digits.
    """
    if not records:
        raise ValueError("report needs at least one record")
    os.makedirs(out_dir, exist_ok=True)

    runs_path = os.path.join(out_dir, "runs.csv")
    with open(runs_path, "w") as fh:
        fh.write(",".join(RUNS_CSV_COLUMNS) + "\n")
        for r in records:
            row = (r.variant, r.seed, r.shots, _fmt(r.mu), _fmt(r.gamma), r.horizon,
                   _fmt(r.attack_rate), r.epochs_run, r.selected_epoch,
                   _fmt(r.test_accuracy), _fmt(r.sparsity_s_pre_softmax),
                   _fmt(r.sparsity_p), _fmt(r.final_train_loss),
                   _fmt(r.best_val_accuracy))
            fh.write(",".join(str(c) for c in row) + "\n")

    cells = {}
    for r in records:
        cells.setdefault(_cell_key(r), []).append(r)
    summary = {"format": SUMMARY_FORMAT, "cells": {}}
    for key in sorted(cells):
        group = cells[key]
        acc_mean, acc_std = _mean_std([r.test_accuracy for r in group])
        s_mean, _ = _mean_std([r.sparsity_s_pre_softmax for r in group])
        p_mean, _ = _mean_std([r.sparsity_p for r in group])
        summary["cells"][key] = {
            "n": len(group),
            "test_accuracy_mean": _round6(acc_mean),
            "test_accuracy_std": _round6(acc_std),
            "sparsity_s_pre_softmax_mean": _round6(s_mean),
            "sparsity_p_mean": _round6(p_mean),
        }
    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    heat = {}
    for r in records:
        if r.mu == r.gamma:
            heat.setdefault((r.mu, r.horizon), []).append(r)
    heatmap_path = os.path.join(out_dir, "sparsity_heatmap.csv")
    with open(heatmap_path, "w") as fh:
        fh.write(",".join(HEATMAP_COLUMNS) + "\n")
        for thr, horizon in sorted(heat):
            group = heat[(thr, horizon)]
            s_mean, _ = _mean_std([r.sparsity_s_pre_softmax for r in group])
            p_mean, _ = _mean_std([r.sparsity_p for r in group])
            a_mean, _ = _mean_std([r.test_accuracy for r in group])
            fh.write(",".join([_fmt(thr), str(horizon), _fmt(s_mean), _fmt(p_mean),
                               _fmt(a_mean)]) + "\n")

    return {"runs_csv": runs_path, "summary_json": summary_path,
            "sparsity_heatmap_csv": heatmap_path}


def save_records(records, out_dir: str) -> str:
    """Persist records as one JSON file each under out_dir/records."""
    rec_dir = os.path.join(out_dir, "records")
    os.makedirs(rec_dir, exist_ok=True)
    for i, r in enumerate(records):
        with open(os.path.join(rec_dir, f"run_{i:04d}.json"), "w") as fh:
            json.dump(r.to_dict(), fh, sort_keys=True)
            fh.write("\n")
    return rec_dir


def load_records(run_dir: str) -> list:
    """Read records saved by save_records (accepts the run dir or records dir)."""
    rec_dir = os.path.join(run_dir, "records")
    if not os.path.isdir(rec_dir):
        rec_dir = run_dir
    if not os.path.isdir(rec_dir):
        raise ValueError(f"no records directory under {run_dir}")
    names = sorted(n for n in os.listdir(rec_dir) if n.endswith(".json"))
    if not names:
        raise ValueError(f"no record files found in {rec_dir}")
    records = []
    for name in names:
        with open(os.path.join(rec_dir, name)) as fh:
            records.append(RunRecord.from_dict(json.load(fh)))
    return records
