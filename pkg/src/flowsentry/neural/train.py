"""Mini-batch Adam training with a stratified cross-validation split.

The incoming training matrix is split 80:20 (by default) into fit and
cross-validation partitions; the fit partition is reshuffled every epoch.
Everything is driven by one seeded generator, so a (data, config) pair
always produces bitwise-identical weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import TrainingError
from ..sampling import stratified_partition
from . import kernels
from .net import (
    DEFAULT_HIDDEN_DIMS,
    MlpModel,
    _grads_from_forward,
    batch_cross_entropy,
    check_classes_present,
    forward_batch,
    forward_full,
    init_model,
)

DEFAULT_SEED = 2017


@dataclass
class AdamState:
    """Optimizer state: per-parameter first/second moment accumulators."""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], lr: float = 1e-4) -> "AdamState":
        return cls(
            lr=lr,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(
    state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]
) -> AdamState:
    """Apply one bias-corrected Adam update to every parameter, in place."""
    if len(params) != len(state.m):
        raise ValueError("parameter count does not match optimizer state")
    state.t += 1
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        kernels.adam_update_inplace(
            p.reshape(-1),
            np.ascontiguousarray(g, dtype=np.float64).reshape(-1),
            m.reshape(-1),
            v.reshape(-1),
            state.lr,
            state.beta1,
            state.beta2,
            state.epsilon,
            state.t,
        )
    return state


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    batch_size: int = 512
    seed: int = DEFAULT_SEED
    cv_fraction: float = 0.2
    hidden_dims: tuple[int, ...] = DEFAULT_HIDDEN_DIMS
    learning_rate: float = 1e-4

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.cv_fraction < 1.0:
            raise ValueError("cv_fraction must lie strictly between 0 and 1")
        if not self.hidden_dims or any(d < 1 for d in self.hidden_dims):
            raise ValueError("hidden_dims must be a non-empty tuple of positive widths")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    cv_loss: float
    cv_acc: float

    def as_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "train_acc": self.train_acc,
            "cv_loss": self.cv_loss,
            "cv_acc": self.cv_acc,
        }


@dataclass
class TrainResult:
    model: MlpModel
    history: list[EpochStats]
    fit_indices: np.ndarray
    cv_indices: np.ndarray


def evaluate_arrays(model: MlpModel, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """(mean loss, accuracy) of the model on a labeled matrix."""
    probs = forward_batch(model, x)
    loss = batch_cross_entropy(probs, y)
    acc = float((probs.argmax(axis=1) == y).mean())
    return loss, acc


def train(
    x: np.ndarray,
    y: np.ndarray,
    class_names: Sequence[str],
    config: TrainConfig,
    on_epoch: Callable[[EpochStats], None] | None = None,
) -> TrainResult:
    """Fit a softmax classifier on scaled features and class indices."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    if x.ndim != 2 or x.shape[0] == 0:
        raise TrainingError("training matrix must be non-empty")
    if y.shape != (x.shape[0],):
        raise TrainingError("one class index per training row required")
    n_classes = len(class_names)
    check_classes_present(y, n_classes, "training")

    rng = np.random.default_rng(config.seed)
    model = init_model(
        (x.shape[1], *config.hidden_dims, n_classes), class_names, seed=rng
    )
    fit_idx, cv_idx = stratified_partition(y.tolist(), 1.0 - config.cv_fraction, rng)
    if len(fit_idx) == 0 or len(cv_idx) == 0:
        raise TrainingError("cv split left a partition empty; need more data")
    check_classes_present(y[fit_idx], n_classes, "fit")

    x_fit, y_fit = x[fit_idx], y[fit_idx]
    x_cv, y_cv = x[cv_idx], y[cv_idx]

    params = model.parameters()
    adam = AdamState.for_params(params, lr=config.learning_rate)
    n_fit = x_fit.shape[0]
    history: list[EpochStats] = []

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n_fit)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n_fit, config.batch_size):
            batch = order[start : start + config.batch_size]
            xb = np.ascontiguousarray(x_fit[batch])
            yb = y_fit[batch]
            acts, preacts, probs = forward_full(model, xb)
            loss_sum += batch_cross_entropy(probs, yb) * len(batch)
            correct += int((probs.argmax(axis=1) == yb).sum())
            grads_w, grads_b = _grads_from_forward(model, acts, preacts, probs, yb)
            grads = []
            for gw, gb in zip(grads_w, grads_b):
                grads.append(gw)
                grads.append(gb)
            adam_step(adam, params, grads)
        cv_loss, cv_acc = evaluate_arrays(model, x_cv, y_cv)
        stats = EpochStats(
            epoch=epoch,
            train_loss=loss_sum / n_fit,
            train_acc=correct / n_fit,
            cv_loss=cv_loss,
            cv_acc=cv_acc,
        )
        history.append(stats)
        if on_epoch is not None:
            on_epoch(stats)

    return TrainResult(model=model, history=history, fit_indices=fit_idx, cv_indices=cv_idx)
