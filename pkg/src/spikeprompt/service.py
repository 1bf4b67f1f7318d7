"""HTTP service wrapping the core package.

Each endpoint runs synchronously, reads/writes the paths named in the request
on the server filesystem, and returns a JSON summary.  The CLI is a thin
client of this app.
"""

from __future__ import annotations

import os

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .encoder import init_encoder, load_encoder, pretrain_edgepred, save_encoder
from .graphs import generate_sbm, load_graph, project_features, save_graph
from .schemas import (AttackRequest, DatasetSummary, ExperimentResponse,
                      HealthResponse, PretrainRequest, PretrainSummary,
                      ReportRequest, ReportResponse, RunSummary, SbmRequest,
                      ShotsRequest, SweepRequest, TuneRequest)
from .tuning import (TuneConfig, load_records, report, robustness, save_records,
                     shots_experiment, sweep, tune_over_seeds)

app = FastAPI(title="spikeprompt service", version=__version__)


@app.exception_handler(ValueError)
def _value_error(request: Request, exc: ValueError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(FileNotFoundError)
def _not_found(request: Request, exc: FileNotFoundError):
    return JSONResponse(status_code=404, content={"detail": str(exc)})


@app.get("/health", response_model=HealthResponse)
def health():
    return HealthResponse(status="ok", service="spikeprompt", version=__version__)


@app.post("/datasets/sbm", response_model=DatasetSummary)
def make_sbm(req: SbmRequest):
    g = generate_sbm(req.n_per_class, req.classes, req.p_in, req.p_out,
                     req.feature_noise, req.seed)
    save_graph(g, req.out_dir)
    return DatasetSummary(path=req.out_dir, nodes=g.n, edges=g.num_edges,
                          feature_dim=g.d, classes=g.num_classes)


@app.post("/pretrain", response_model=PretrainSummary)
def pretrain(req: PretrainRequest):
    g = project_features(load_graph(req.data_dir), req.input_width)
    model = init_encoder(g.d, req.hidden, req.seed)
    frozen = pretrain_edgepred(g, model, epochs=req.epochs, neg_ratio=req.neg_ratio,
                               seed=req.seed, lr=req.lr)
    out_dir = os.path.dirname(req.out_path)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    save_encoder(frozen, req.out_path)
    final = frozen.loss_history[-1] if frozen.loss_history else None
    return PretrainSummary(path=req.out_path, input_dim=frozen.input_dim,
                           hidden=frozen.hidden, epochs=req.epochs,
                           final_loss=final, checksum=frozen.checksum())


def _tune_config(req) -> TuneConfig:
    kwargs = dict(
        variant=req.variant, shots=req.shots, val_per_class=req.val_per_class,
        epochs=req.epochs, patience=req.patience, lr=req.lr,
        weight_decay=req.weight_decay, k_atoms=req.k_atoms, mu=req.mu,
        gamma=req.gamma, horizon=req.horizon, surrogate_width=req.surrogate_width,
        seeds=tuple(range(req.seeds)), input_width=req.input_width)
    if isinstance(req, SweepRequest):
        kwargs["threshold_grid"] = tuple(req.threshold_grid)
        kwargs["horizon_grid"] = tuple(req.horizon_grid)
    return TuneConfig(**kwargs)


def _load_inputs(req):
    g = project_features(load_graph(req.data_dir), req.input_width)
    enc = load_encoder(req.encoder_path)
    if not enc.frozen:
        raise ValueError(f"encoder checkpoint {req.encoder_path} is not frozen")
    return g, enc


def _experiment_response(records, out_dir: str) -> ExperimentResponse:
    save_records(records, out_dir)
    files = report(records, out_dir)
    accs = np.array([r.test_accuracy for r in records])
    std = float(accs.std(ddof=1)) if accs.size > 1 else 0.0
    runs = [RunSummary(variant=r.variant, seed=r.seed, shots=r.shots, mu=r.mu,
                       gamma=r.gamma, horizon=r.horizon, attack_rate=r.attack_rate,
                       epochs_run=r.epochs_run, selected_epoch=r.selected_epoch,
                       test_accuracy=r.test_accuracy,
                       sparsity_s_pre_softmax=r.sparsity_s_pre_softmax,
                       sparsity_p=r.sparsity_p, wall_seconds=r.wall_seconds)
            for r in records]
    return ExperimentResponse(runs=runs, mean_test_accuracy=float(accs.mean()),
                              std_test_accuracy=std, files=files)


@app.post("/tune", response_model=ExperimentResponse)
def tune_endpoint(req: TuneRequest):
    g, enc = _load_inputs(req)
    records = tune_over_seeds(g, enc, _tune_config(req))
    return _experiment_response(records, req.out_dir)


@app.post("/sweep", response_model=ExperimentResponse)
def sweep_endpoint(req: SweepRequest):
    g, enc = _load_inputs(req)
    records = sweep(g, enc, _tune_config(req))
    return _experiment_response(records, req.out_dir)


@app.post("/attack", response_model=ExperimentResponse)
def attack_endpoint(req: AttackRequest):
    g, enc = _load_inputs(req)
    records = robustness(g, enc, _tune_config(req), rates=req.rates,
                         variants=req.variants)
    return _experiment_response(records, req.out_dir)


@app.post("/shots", response_model=ExperimentResponse)
def shots_endpoint(req: ShotsRequest):
    g, enc = _load_inputs(req)
    shot_counts = req.shot_counts or list(range(1, req.max_shots + 1))
    records = shots_experiment(g, enc, _tune_config(req), shots_list=shot_counts,
                               variants=req.variants)
    return _experiment_response(records, req.out_dir)


@app.post("/report", response_model=ReportResponse)
def report_endpoint(req: ReportRequest):
    records = load_records(req.run_dir)
    files = report(records, req.out_dir or req.run_dir)
    return ReportResponse(files=files, records=len(records))
