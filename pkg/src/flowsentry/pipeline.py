"""End-to-end fit, evaluate, and class-expanding retrain.

fit_pipeline owns the scaler-fit/train/bundle sequence so the CLI and the
service share one code path. retrain rebuilds the whole pipeline from
scratch on base data plus analyst-labeled quarantine flows; the output
layer is rebuilt at the new class count and the scaler is refit, so the
old bundle is never touched.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .bundle import PipelineBundle, TrainingProvenance, predict_proba_batch
from .dataset import Dataset, canonical_class_order, merge
from .errors import LabelError, RetrainError
from .metrics import EvalReport, confusion_matrix, report
from .neural.net import forward_batch
from .neural.train import EpochStats, TrainConfig, train
from .preprocess import LabelCodec, fit_scaler, transform
from .ruleset import RuleConfig

DEFAULT_MIN_NEW_SAMPLES = 10


@dataclass(frozen=True)
class FitResult:
    bundle: PipelineBundle
    history: tuple[EpochStats, ...]
    cv_report: EvalReport


def fit_pipeline(
    train_ds: Dataset,
    config: TrainConfig,
    rule: RuleConfig | None = None,
    on_epoch: Callable[[EpochStats], None] | None = None,
) -> FitResult:
    """Fit scaler and network on a labeled dataset, returning a fresh bundle.

    The dataset's own cross-validation carve-out happens inside train();
    the returned cv_report is measured on that held-out slice.
    """
    rule = rule or RuleConfig()
    if any(label is None for label in train_ds.labels):
        raise LabelError("training data must be fully labeled")
    class_names = canonical_class_order(train_ds.labels)
    if rule.normal_class not in class_names:
        raise LabelError(
            f"normal class {rule.normal_class!r} absent from training data"
        )
    codec = LabelCodec(class_names)
    scaler = fit_scaler(train_ds.features)
    x = transform(scaler, train_ds.features)
    y = np.asarray([codec.index(label) for label in train_ds.labels], dtype=np.int64)

    result = train(x, y, class_names, config, on_epoch=on_epoch)

    cv_idx = np.asarray(result.cv_indices, dtype=np.int64)
    probs = forward_batch(result.model, x[cv_idx])
    pred = [class_names[i] for i in probs.argmax(axis=1)]
    true = [train_ds.labels[i] for i in cv_idx]
    cv_report = report(confusion_matrix(true, pred, class_names))

    bundle = PipelineBundle(
        model=result.model,
        scaler=scaler,
        codec=codec,
        rule=rule,
        provenance=TrainingProvenance.now(
            dataset_digest=train_ds.source_digest or train_ds.content_digest(),
            seed=config.seed,
            epochs=config.epochs,
        ),
        feature_names=train_ds.feature_names or None,
    )
    return FitResult(bundle=bundle, history=tuple(result.history), cv_report=cv_report)


def evaluate_bundle(bundle: PipelineBundle, ds: Dataset) -> EvalReport:
    """Closed-set evaluation: argmax prediction against true labels."""
    unknown = sorted(
        {label for label in ds.labels if label is not None} - set(bundle.class_names)
    )
    if unknown:
        raise LabelError(
            f"data contains classes the bundle does not know: {unknown}"
        )
    if any(label is None for label in ds.labels):
        raise LabelError("evaluation data must be fully labeled")
    probs = predict_proba_batch(bundle, ds.features)
    pred = [bundle.class_names[i] for i in probs.argmax(axis=1)]
    return report(confusion_matrix(list(ds.labels), pred, bundle.class_names))


def retrain(
    bundle: PipelineBundle,
    base_train: Dataset,
    labeled_flows: Sequence[tuple[np.ndarray, str]],
    config: TrainConfig,
    min_new_samples: int = DEFAULT_MIN_NEW_SAMPLES,
    on_epoch: Callable[[EpochStats], None] | None = None,
) -> FitResult:
    """Retrain from scratch on base data plus analyst-labeled flows.

    Any label outside the current class list opens a new output class; a
    new class needs at least min_new_samples labeled flows before it may
    enter training, otherwise the whole retrain is refused.
    """
    known = set(bundle.class_names)
    new_counts: dict[str, int] = {}
    for _, label in labeled_flows:
        if label not in known:
            new_counts[label] = new_counts.get(label, 0) + 1
    short = {name: n for name, n in new_counts.items() if n < min_new_samples}
    if short:
        detail = ", ".join(f"{name}: {n}" for name, n in sorted(short.items()))
        raise RetrainError(
            f"new classes need at least {min_new_samples} labeled flows ({detail})"
        )

    base_order = canonical_class_order(base_train.labels)
    if set(base_order) - known:
        raise RetrainError(
            f"base data carries classes outside the bundle: {sorted(set(base_order) - known)}"
        )
    if labeled_flows:
        extra = np.vstack([np.asarray(f, dtype=np.float64) for f, _ in labeled_flows])
        merged = merge(base_train, extra, [label for _, label in labeled_flows])
    else:
        merged = base_train

    fit_config = replace(config, hidden_dims=tuple(bundle.model.layer_dims[1:-1]))
    try:
        return fit_pipeline(merged, fit_config, rule=bundle.rule, on_epoch=on_epoch)
    except RetrainError:
        raise
    except Exception as exc:
        raise RetrainError(f"retraining failed: {exc}") from exc
