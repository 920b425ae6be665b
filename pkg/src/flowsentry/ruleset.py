"""Threshold ruleset mapping a probability vector to a three-way verdict.

A flow is Normal when the normal class reaches the confidence threshold,
a Known attack when any attack class does, and Novel when every class
falls short. With the threshold above 0.5, at most one class can reach it
(two would sum past 1), so the three outcomes are exhaustive and mutually
exclusive on the probability simplex.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .dataset import Dataset
from .errors import LabelError

DEFAULT_THRESHOLD = 0.80


class VerdictKind(str, Enum):
    NORMAL = "Normal"
    KNOWN = "Known"
    NOVEL = "Novel"


@dataclass(frozen=True)
class RuleConfig:
    threshold: float = DEFAULT_THRESHOLD
    normal_class: str = "Normal"

    def __post_init__(self):
        if not 0.5 < self.threshold <= 1.0:
            raise ValueError(
                f"threshold must lie in (0.5, 1], got {self.threshold}; values at or "
                "below 0.5 would let two classes fire at once"
            )


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    class_name: str | None
    probs: np.ndarray

    def __post_init__(self):
        if (self.kind is VerdictKind.KNOWN) != (self.class_name is not None):
            raise ValueError("class_name is present exactly when kind is Known")


def classify(cfg: RuleConfig, probs: np.ndarray, class_names: Sequence[str]) -> Verdict:
    """Apply the three threshold rules to one probability vector."""
    p = np.asarray(probs, dtype=np.float64)
    if p.shape != (len(class_names),):
        raise ValueError(f"expected {len(class_names)} probabilities, got shape {p.shape}")
    try:
        normal_idx = list(class_names).index(cfg.normal_class)
    except ValueError:
        raise LabelError(
            f"normal class {cfg.normal_class!r} not among {list(class_names)}"
        ) from None

    if p[normal_idx] >= cfg.threshold:
        return Verdict(VerdictKind.NORMAL, None, p)
    attack_best = -1
    for i in range(len(class_names)):
        if i != normal_idx and (attack_best < 0 or p[i] > p[attack_best]):
            attack_best = i
    if attack_best >= 0 and p[attack_best] >= cfg.threshold:
        return Verdict(VerdictKind.KNOWN, class_names[attack_best], p)
    return Verdict(VerdictKind.NOVEL, None, p)


@dataclass(frozen=True)
class ProbabilityProfile:
    """Per true class, the min/max predicted probability of each output class."""

    true_classes: tuple[str, ...]
    output_classes: tuple[str, ...]
    mins: np.ndarray  # (len(true_classes), len(output_classes))
    maxs: np.ndarray

    def range_for(self, true_class: str, output_class: str) -> tuple[float, float]:
        i = self.true_classes.index(true_class)
        j = self.output_classes.index(output_class)
        return float(self.mins[i, j]), float(self.maxs[i, j])

    def to_dict(self) -> dict:
        return {
            "output_classes": list(self.output_classes),
            "classes": {
                name: {
                    "min": [float(v) for v in self.mins[i]],
                    "max": [float(v) for v in self.maxs[i]],
                }
                for i, name in enumerate(self.true_classes)
            },
        }


def profile(
    predict: Callable[[np.ndarray], np.ndarray],
    ds: Dataset,
    output_classes: Sequence[str],
) -> ProbabilityProfile:
    """Probability ranges observed per true class over a labeled dataset.

    ``predict`` maps a raw feature vector to a probability vector over
    ``output_classes``; every record must carry a label from that list.
    """
    out_names = tuple(output_classes)
    index = {name: i for i, name in enumerate(out_names)}
    per_class: dict[str, list[np.ndarray]] = {}
    for record in ds:
        if record.label is None:
            raise LabelError("profile requires every record to be labeled")
        if record.label not in index:
            raise LabelError(f"label {record.label!r} not among output classes {out_names}")
        per_class.setdefault(record.label, []).append(predict(record.features))

    true_names = tuple(name for name in out_names if name in per_class)
    mins = np.empty((len(true_names), len(out_names)))
    maxs = np.empty((len(true_names), len(out_names)))
    for i, name in enumerate(true_names):
        stacked = np.vstack(per_class[name])
        mins[i] = stacked.min(axis=0)
        maxs[i] = stacked.max(axis=0)
    return ProbabilityProfile(
        true_classes=true_names, output_classes=out_names, mins=mins, maxs=maxs
    )
