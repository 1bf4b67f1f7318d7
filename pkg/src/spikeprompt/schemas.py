"""Pydantic request/response models for the HTTP service."""

from typing import Dict, List, Optional

from pydantic import BaseModel

from .tuning import DEFAULT_ATTACK_RATES, DEFAULT_HORIZON_GRID, DEFAULT_THRESHOLD_GRID


class HealthResponse(BaseModel):
    status: str
    service: str
    version: str


class SbmRequest(BaseModel):
    out_dir: str
    n_per_class: int = 50
    classes: int = 3
    p_in: float = 0.2
    p_out: float = 0.02
    feature_noise: float = 0.5
    seed: int = 0


class DatasetSummary(BaseModel):
    path: str
    nodes: int
    edges: int
    feature_dim: int
    classes: int


class PretrainRequest(BaseModel):
    data_dir: str
    out_path: str
    hidden: int = 256
    epochs: int = 200
    neg_ratio: float = 1.0
    lr: float = 1e-3
    seed: int = 0
    input_width: int = 100


class PretrainSummary(BaseModel):
    path: str
    input_dim: int
    hidden: int
    epochs: int
    final_loss: Optional[float] = None
    checksum: str


class TuneOptions(BaseModel):
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
    seeds: int = 10
    input_width: int = 100


class TuneRequest(TuneOptions):
    data_dir: str
    encoder_path: str
    out_dir: str


class RunSummary(BaseModel):
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
    wall_seconds: float


class ExperimentResponse(BaseModel):
    runs: List[RunSummary]
    mean_test_accuracy: float
    std_test_accuracy: float
    files: Dict[str, str]


class SweepRequest(TuneRequest):
    threshold_grid: List[float] = list(DEFAULT_THRESHOLD_GRID)
    horizon_grid: List[int] = list(DEFAULT_HORIZON_GRID)


class AttackRequest(TuneRequest):
    rates: List[float] = list(DEFAULT_ATTACK_RATES)
    variants: List[str] = ["gpf", "gpf-plus", "spiking", "probe"]


class ShotsRequest(TuneRequest):
    max_shots: int = 10
    shot_counts: Optional[List[int]] = None
    variants: Optional[List[str]] = None


class ReportRequest(BaseModel):
    run_dir: str
    out_dir: Optional[str] = None


class ReportResponse(BaseModel):
    files: Dict[str, str]
    records: int
