"""Sparse graph prompt tuning with integrate-and-fire spiking chains."""

__version__ = "0.1.0"

from .autodiff import SurrogateSpec, Tensor, check_gradients, no_grad
from .encoder import (ClassifierHead, EncoderModel, classify, encode, init_encoder,
                      init_head, load_encoder, pretrain_edgepred, save_encoder)
from .graphs import (FewShotSplit, Graph, generate_sbm, load_graph,
                     normalize_adjacency, project_features, random_edge_attack,
                     sample_few_shot, save_graph)
from .prompts import (PromptModel, PromptOutput, Variant, apply_prompt, gpf_plus_prompt,
                      gpf_prompt, init_prompt_model, load_prompt_model,
                      prompt_sparsity_report, save_prompt_model, spiking_prompt)
from .spiking import (SpikingConfig, if_chain, oracle_simulate, signed_if_chain,
                      sparsity)
from .tuning import (RunRecord, TuneConfig, load_records, report, robustness,
                     save_records, shots_experiment, sweep, tune, tune_over_seeds)

__all__ = [
    "SurrogateSpec", "Tensor", "check_gradients", "no_grad",
    "ClassifierHead", "EncoderModel", "classify", "encode", "init_encoder",
    "init_head", "load_encoder", "pretrain_edgepred", "save_encoder",
    "FewShotSplit", "Graph", "generate_sbm", "load_graph", "normalize_adjacency",
    "project_features", "random_edge_attack", "sample_few_shot", "save_graph",
    "PromptModel", "PromptOutput", "Variant", "apply_prompt", "gpf_plus_prompt",
    "gpf_prompt", "init_prompt_model", "load_prompt_model", "prompt_sparsity_report",
    "save_prompt_model", "spiking_prompt",
    "SpikingConfig", "if_chain", "oracle_simulate", "signed_if_chain", "sparsity",
    "RunRecord", "TuneConfig", "load_records", "report", "robustness",
    "save_records", "shots_experiment", "sweep", "tune", "tune_over_seeds",
]
