"""Evaluation metrics for multi-class detection.

Two false-positive-rate flavors are reported side by side. ``fpr_paper``
divides false positives by predicted positives (FP / (TP + FP)), which is
the false discovery rate; it is kept under this name because published
CICIDS results are stated that way and we need to reproduce them.
``fpr_standard`` is the usual FP / (FP + TN). Ratios with an empty
denominator are None rather than 0 so callers can tell "perfect" from
"never happened".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class BinaryCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def recall(c: BinaryCounts) -> float | None:
    denom = c.tp + c.fn
    return c.tp / denom if denom else None


def precision(c: BinaryCounts) -> float | None:
    denom = c.tp + c.fp
    return c.tp / denom if denom else None


def fpr_paper(c: BinaryCounts) -> float | None:
    # FP over predicted positives, i.e. the false discovery rate.
    denom = c.tp + c.fp
    return c.fp / denom if denom else None


def fpr_standard(c: BinaryCounts) -> float | None:
    denom = c.fp + c.tn
    return c.fp / denom if denom else None


def f1(c: BinaryCounts) -> float | None:
    denom = 2 * c.tp + c.fp + c.fn
    return 2 * c.tp / denom if denom else None


@dataclass(frozen=True)
class ConfusionMatrix:
    class_names: tuple[str, ...]
    counts: np.ndarray  # (C, C), rows = true class, columns = predicted

    def __post_init__(self):
        c = len(self.class_names)
        if self.counts.shape != (c, c):
            raise ValueError(f"counts must be ({c}, {c}), got {self.counts.shape}")
        self.counts.setflags(write=False)

    def binary(self, class_name: str) -> BinaryCounts:
        """One-vs-rest counts for a single class."""
        i = self.class_names.index(class_name)
        m = self.counts
        tp = int(m[i, i])
        fn = int(m[i].sum() - tp)
        fp = int(m[:, i].sum() - tp)
        tn = int(m.sum() - tp - fn - fp)
        return BinaryCounts(tp=tp, fp=fp, fn=fn, tn=tn)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(
    true_labels: Sequence[str], pred_labels: Sequence[str], class_names: Sequence[str]
) -> ConfusionMatrix:
    if len(true_labels) != len(pred_labels):
        raise ValueError("true and predicted label sequences differ in length")
    names = tuple(class_names)
    index = {name: i for i, name in enumerate(names)}
    counts = np.zeros((len(names), len(names)), dtype=np.int64)
    for t, p in zip(true_labels, pred_labels):
        if t not in index:
            raise ValueError(f"true label {t!r} not among class names {names}")
        if p not in index:
            raise ValueError(f"predicted label {p!r} not among class names {names}")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(class_names=names, counts=counts)


@dataclass(frozen=True)
class ClassReport:
    class_name: str
    support: int
    precision: float | None
    recall: float | None
    f1: float | None
    paper_fpr: float | None
    standard_fpr: float | None

    def as_dict(self) -> dict:
        return {
            "class": self.class_name,
            "support": self.support,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "paper_fpr": self.paper_fpr,
            "standard_fpr": self.standard_fpr,
        }


@dataclass(frozen=True)
class EvalReport:
    confusion: ConfusionMatrix
    per_class: tuple[ClassReport, ...]
    accuracy: float | None

    def class_report(self, name: str) -> ClassReport:
        for r in self.per_class:
            if r.class_name == name:
                return r
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "classes": [r.as_dict() for r in self.per_class],
            "confusion": {
                "class_names": list(self.confusion.class_names),
                "counts": self.confusion.counts.tolist(),
            },
        }


def report(cm: ConfusionMatrix) -> EvalReport:
    """Per-class one-vs-rest metrics plus overall accuracy.

    Accuracy equals micro-averaged recall: summing the one-vs-rest TP over
    classes counts each correct prediction once, and summing TP+FN counts
    every sample once.
    """
    rows = []
    for i, name in enumerate(cm.class_names):
        c = cm.binary(name)
        rows.append(
            ClassReport(
                class_name=name,
                support=int(cm.counts[i].sum()),
                precision=precision(c),
                recall=recall(c),
                f1=f1(c),
                paper_fpr=fpr_paper(c),
                standard_fpr=fpr_standard(c),
            )
        )
    total = cm.total
    correct = int(np.trace(cm.counts))
    return EvalReport(
        confusion=cm,
        per_class=tuple(rows),
        accuracy=correct / total if total else None,
    )


@dataclass(frozen=True)
class NovelEvalResult:
    """How the verdict rules treat a class the model was never trained on.

    The positive event is a Novel flag: TP = unseen-class flows flagged,
    FN = unseen-class flows missed, FP = known-class flows wrongly
    flagged. ``recall`` and ``paper_fpr`` plug those counts into the two
    published formulas; ``known_novel_rate`` (flagged share of known
    flows) is the conventional rate, reported alongside.
    """

    novel_total: int
    novel_flagged: int
    known_total: int
    known_flagged: int

    @property
    def counts(self) -> BinaryCounts:
        return BinaryCounts(
            tp=self.novel_flagged,
            fn=self.novel_total - self.novel_flagged,
            fp=self.known_flagged,
            tn=self.known_total - self.known_flagged,
        )

    @property
    def recall(self) -> float | None:
        return recall(self.counts)

    @property
    def paper_fpr(self) -> float | None:
        return fpr_paper(self.counts)

    @property
    def known_novel_rate(self) -> float | None:
        return self.known_flagged / self.known_total if self.known_total else None

    def as_dict(self) -> dict:
        return {
            "novel_total": self.novel_total,
            "novel_flagged": self.novel_flagged,
            "known_total": self.known_total,
            "known_flagged": self.known_flagged,
            "recall": self.recall,
            "paper_fpr": self.paper_fpr,
            "known_novel_rate": self.known_novel_rate,
        }


def novel_eval(
    is_novel_true: Sequence[bool], is_novel_pred: Sequence[bool]
) -> NovelEvalResult:
    """Novel-flag accounting for a held-out class mixed with known flows."""
    if len(is_novel_true) != len(is_novel_pred):
        raise ValueError("truth and prediction sequences differ in length")
    novel_total = novel_flagged = known_total = known_flagged = 0
    for truth, pred in zip(is_novel_true, is_novel_pred):
        if truth:
            novel_total += 1
            novel_flagged += int(pred)
        else:
            known_total += 1
            known_flagged += int(pred)
    if novel_total == 0:
        raise ValueError("no unseen-class records in the evaluation set")
    return NovelEvalResult(
        novel_total=novel_total,
        novel_flagged=novel_flagged,
        known_total=known_total,
        known_flagged=known_flagged,
    )
