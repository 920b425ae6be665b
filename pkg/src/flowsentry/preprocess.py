"""Feature scaling and label encoding fitted on training data only.

Features are min-max scaled to [0, 1] using the training extrema; values
seen at inference outside that range are clamped so the model's input
domain never widens. Labels are one-hot encoded against a fixed class
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import LabelError


@dataclass(frozen=True)
class FeatureScaler:
    """Per-feature training extrema for min-max scaling."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=np.float64)
        maxs = np.asarray(self.maxs, dtype=np.float64)
        if mins.ndim != 1 or mins.shape != maxs.shape:
            raise ValueError("mins and maxs must be 1-D arrays of equal length")
        if not (np.isfinite(mins).all() and np.isfinite(maxs).all()):
            raise ValueError("scaler extrema must be finite")
        if np.any(mins > maxs):
            raise ValueError("every min must be <= its max")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)
        mins.setflags(write=False)
        maxs.setflags(write=False)

    @property
    def width(self) -> int:
        return self.mins.shape[0]


def fit_scaler(train: Dataset | np.ndarray) -> FeatureScaler:
    """Record the exact per-feature min and max of the training matrix."""
    x = train.features if isinstance(train, Dataset) else np.asarray(train, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("scaler needs a non-empty (n, width) matrix")
    return FeatureScaler(mins=x.min(axis=0), maxs=x.max(axis=0))


def transform(scaler: FeatureScaler, x: np.ndarray) -> np.ndarray:
    """Scale one feature vector or a batch of them into [0, 1].

    Out-of-range values clamp to the boundary; degenerate features
    (min == max in training) always map to 0.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[np.newaxis, :]
    if arr.shape[1] != scaler.width:
        raise ValueError(f"expected width {scaler.width}, got {arr.shape[1]}")
    span = scaler.maxs - scaler.mins
    out = np.zeros_like(arr)
    live = span > 0.0
    out[:, live] = (arr[:, live] - scaler.mins[live]) / span[live]
    np.clip(out, 0.0, 1.0, out=out)
    return out[0] if single else out


@dataclass(frozen=True)
class LabelCodec:
    """Bijection between class names and output indices 0..C-1."""

    class_names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class names must be distinct")
        if not self.class_names:
            raise ValueError("at least one class required")

    def __len__(self) -> int:
        return len(self.class_names)

    def index(self, name: str) -> int:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise LabelError(f"unknown label {name!r}; classes: {list(self.class_names)}") from None

    def name(self, index: int) -> str:
        if not 0 <= index < len(self.class_names):
            raise LabelError(f"class index {index} out of range 0..{len(self.class_names) - 1}")
        return self.class_names[index]

    def encode(self, name: str) -> np.ndarray:
        """One-hot vector with a single 1 at the class index."""
        vec = np.zeros(len(self.class_names), dtype=np.float64)
        vec[self.index(name)] = 1.0
        return vec

    def decode(self, vec: np.ndarray) -> str:
        arr = np.asarray(vec)
        if arr.shape != (len(self.class_names),):
            raise LabelError(f"expected length-{len(self.class_names)} vector, got {arr.shape}")
        return self.class_names[int(np.argmax(arr))]

    def indices_for(self, labels) -> np.ndarray:
        """Vector of class indices for a label sequence (all must be known)."""
        return np.asarray([self.index(label) for label in labels], dtype=np.intp)
