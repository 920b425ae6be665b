"""From-scratch feedforward classifier: ReLU hidden layers, softmax output.

The stock flow-record configuration is 78 inputs, seven hidden layers, and one
softmax unit per class, but the math is written for arbitrary layer sizes
so small nets can be gradient-checked cheaply.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError
from . import kernels

PROB_FLOOR = 1e-12

FLOW_INPUT_WIDTH = 78
DEFAULT_HIDDEN_LAYERS = 7
DEFAULT_HIDDEN_DIMS = (128,) * DEFAULT_HIDDEN_LAYERS


@dataclass
class MlpModel:
    """Layer dimensions, parameters, and the class order they predict."""

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]  # per layer, shape (out, in)
    biases: list[np.ndarray]  # per layer, shape (out,)
    class_names: tuple[str, ...]
    hidden_activation: str = "relu"
    output_activation: str = "softmax"

    def validate(self) -> None:
        dims = self.layer_dims
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ValueError(f"layer_dims must be >= 2 positive entries, got {dims}")
        if len(self.class_names) != dims[-1]:
            raise ValueError(
                f"output width {dims[-1]} != {len(self.class_names)} class names"
            )
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("one weight matrix and bias vector per layer required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ValueError(f"layer {i} parameter shapes do not match layer_dims")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {i} contains non-finite parameters")

    @property
    def n_inputs(self) -> int:
        return self.layer_dims[0]

    @property
    def n_classes(self) -> int:
        return self.layer_dims[-1]

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list, weights and biases interleaved per layer."""
        params: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            params.append(w)
            params.append(b)
        return params


def flow_layer_dims(n_classes: int, hidden_dims=DEFAULT_HIDDEN_DIMS) -> tuple[int, ...]:
    """Layer sizes for the stock flow-record architecture: 78 wide in, C out."""
    return (FLOW_INPUT_WIDTH, *hidden_dims, n_classes)


def init_model(
    layer_dims,
    class_names,
    seed: int | np.random.Generator,
) -> MlpModel:
    """He-initialized model: N(0, 2/fan_in) weights (suits ReLU), zero biases."""
    dims = tuple(int(d) for d in layer_dims)
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        std = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, std, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    model = MlpModel(
        layer_dims=dims,
        weights=weights,
        biases=biases,
        class_names=tuple(class_names),
    )
    model.validate()
    return model


def _floor_probs(p: np.ndarray) -> np.ndarray:
    """Clamp softmax output away from exact 0/1 and renormalize.

    Keeps every probability strictly inside (0, 1) even for extreme
    logits, where exp() underflows to exactly zero.
    """
    np.maximum(p, PROB_FLOOR, out=p)
    p /= p.sum(axis=1, keepdims=True)
    return p


def forward_full(
    model: MlpModel, x: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
    """Batch forward pass keeping intermediates for backprop.

    Returns (activations, preactivations, probabilities): activations[l]
    is the input to layer l, preactivations[l] the hidden layer's affine
    output before ReLU.
    """
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != model.n_inputs:
        raise ValueError(f"expected (n, {model.n_inputs}) input, got {a.shape}")
    acts = [a]
    preacts = []
    last = len(model.weights) - 1
    for l in range(last):
        z = kernels.affine(a, model.weights[l], model.biases[l])
        preacts.append(z)
        a = kernels.relu(z)
        acts.append(a)
    logits = kernels.affine(a, model.weights[last], model.biases[last])
    probs = _floor_probs(kernels.softmax(logits))
    return acts, preacts, probs


def forward_batch(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Probabilities for a batch of scaled feature rows."""
    return forward_full(model, x)[2]


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Probability vector for a single scaled feature vector."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D feature vector, got shape {arr.shape}")
    return forward_batch(model, arr[np.newaxis, :])[0]


def cross_entropy(probs: np.ndarray, target: np.ndarray) -> float:
    """-ln p[target] for one probability vector and a one-hot target."""
    p = np.asarray(probs, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: probs {p.shape} vs target {t.shape}")
    idx = int(np.argmax(t))
    return float(-np.log(max(p[idx], PROB_FLOOR)))


def batch_cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    """Mean -ln p[y] over a batch, with the same probability floor."""
    picked = probs[np.arange(probs.shape[0]), y]
    return float(-np.log(np.maximum(picked, PROB_FLOOR)).mean())


def _grads_from_forward(
    model: MlpModel,
    acts: list[np.ndarray],
    preacts: list[np.ndarray],
    probs: np.ndarray,
    y: np.ndarray,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Backprop of mean cross-entropy given a completed forward pass."""
    n = probs.shape[0]
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads_w: list[np.ndarray | None] = [None] * len(model.weights)
    grads_b: list[np.ndarray | None] = [None] * len(model.weights)
    for l in range(len(model.weights) - 1, -1, -1):
        gw, gb, da = kernels.affine_grads(delta, acts[l], model.weights[l], need_da=l > 0)
        grads_w[l] = gw
        grads_b[l] = gb
        if l > 0:
            delta = kernels.relu_backward_inplace(da, preacts[l - 1])
    return grads_w, grads_b


def backward(
    model: MlpModel, x: np.ndarray, y: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of mean cross-entropy over a batch.

    ``y`` holds target class indices. The softmax/cross-entropy pair is
    differentiated jointly: the output delta is (p - onehot) / batch_size.
    """
    y = np.asarray(y, dtype=np.intp)
    if y.ndim != 1 or y.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    acts, preacts, probs = forward_full(model, x)
    if y.shape[0] != probs.shape[0]:
        raise ValueError("one target index per input row required")
    return _grads_from_forward(model, acts, preacts, probs, y)


def check_classes_present(y: np.ndarray, n_classes: int, where: str) -> None:
    present = np.unique(y)
    missing = sorted(set(range(n_classes)) - set(int(i) for i in present))
    if missing:
        raise TrainingError(f"classes {missing} absent from the {where} partition")
