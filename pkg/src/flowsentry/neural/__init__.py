"""Feedforward network: kernels, model math, and the training loop."""

from .kernels import BACKEND, activate, available_backends
from .net import (
    DEFAULT_HIDDEN_DIMS,
    DEFAULT_HIDDEN_LAYERS,
    FLOW_INPUT_WIDTH,
    MlpModel,
    backward,
    batch_cross_entropy,
    cross_entropy,
    forward,
    forward_batch,
    init_model,
    flow_layer_dims,
)
from .train import (
    DEFAULT_SEED,
    AdamState,
    EpochStats,
    TrainConfig,
    TrainResult,
    adam_step,
    evaluate_arrays,
    train,
)

__all__ = [
    "BACKEND",
    "activate",
    "available_backends",
    "DEFAULT_HIDDEN_DIMS",
    "DEFAULT_HIDDEN_LAYERS",
    "FLOW_INPUT_WIDTH",
    "MlpModel",
    "backward",
    "batch_cross_entropy",
    "cross_entropy",
    "forward",
    "forward_batch",
    "init_model",
    "flow_layer_dims",
    "DEFAULT_SEED",
    "AdamState",
    "EpochStats",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "evaluate_arrays",
    "train",
]
