"""Persisted pipeline: model weights, scaler, label codec, rule, provenance.

One self-describing JSON document. Numeric sections are base64 of the raw
little-endian float64 payload, so a save/load round-trip is bit-exact on
any host. The header carries enough structure (dims, class names,
format_version) for the loader to cross-check every section before it
builds a model.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Sequence

import numpy as np

from .errors import (
    BundleConsistencyError,
    BundleFormatError,
    BundleVersionError,
)
from .neural.net import MlpModel
from .preprocess import FeatureScaler, LabelCodec, transform
from .ruleset import RuleConfig, Verdict, classify

FORMAT_NAME = "flowsentry.bundle"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainingProvenance:
    dataset_digest: str
    seed: int
    epochs: int
    created_at: str  # ISO 8601, UTC

    @staticmethod
    def now(dataset_digest: str, seed: int, epochs: int) -> "TrainingProvenance":
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return TrainingProvenance(
            dataset_digest=dataset_digest, seed=seed, epochs=epochs, created_at=stamp
        )

    def as_dict(self) -> dict:
        return {
            "dataset_digest": self.dataset_digest,
            "seed": self.seed,
            "epochs": self.epochs,
            "created_at": self.created_at,
        }


@dataclass(frozen=True)
class PipelineBundle:
    model: MlpModel
    scaler: FeatureScaler
    codec: LabelCodec
    rule: RuleConfig
    provenance: TrainingProvenance
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        m = self.model
        m.validate()
        if self.scaler.mins.shape[0] != m.n_inputs:
            raise BundleConsistencyError(
                f"scaler width {self.scaler.mins.shape[0]} != model input {m.n_inputs}"
            )
        if tuple(self.codec.class_names) != tuple(m.class_names):
            raise BundleConsistencyError(
                f"codec classes {self.codec.class_names} != model classes {m.class_names}"
            )
        if self.rule.normal_class not in self.codec.class_names:
            raise BundleConsistencyError(
                f"rule normal class {self.rule.normal_class!r} missing from codec"
            )
        if self.feature_names is not None and len(self.feature_names) != m.n_inputs:
            raise BundleConsistencyError(
                f"{len(self.feature_names)} feature names for {m.n_inputs} inputs"
            )

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(self.model.class_names)


def _encode_f64(arr: np.ndarray) -> str:
    data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
    return base64.b64encode(data).decode("ascii")


def _decode_f64(text: str, shape: tuple[int, ...], what: str) -> np.ndarray:
    try:
        raw = base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as exc:
        raise BundleFormatError(f"{what}: invalid base64 payload") from exc
    expected = 8 * int(np.prod(shape, dtype=np.int64)) if shape else 8
    if len(raw) != expected:
        raise BundleConsistencyError(
            f"{what}: payload holds {len(raw)} bytes, header dims imply {expected}"
        )
    arr = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
    return arr


def _bundle_document(bundle: PipelineBundle) -> dict:
    m = bundle.model
    return {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "class_names": list(m.class_names),
        "layer_dims": list(m.layer_dims),
        "hidden_activation": m.hidden_activation,
        "output_activation": m.output_activation,
        "rule": {
            "threshold": bundle.rule.threshold,
            "normal_class": bundle.rule.normal_class,
        },
        "provenance": bundle.provenance.as_dict(),
        "feature_names": list(bundle.feature_names) if bundle.feature_names else None,
        "scaler": {
            "mins": _encode_f64(bundle.scaler.mins),
            "maxs": _encode_f64(bundle.scaler.maxs),
        },
        "weights": [_encode_f64(w) for w in m.weights],
        "biases": [_encode_f64(b) for b in m.biases],
    }


def save_bundle(bundle: PipelineBundle, path: str):
    """Write atomically: temp file in the target directory, then rename."""
    bundle.validate()
    doc = _bundle_document(bundle)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".bundle-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def content_digest(bundle: PipelineBundle) -> str:
    """sha256 over the bundle content, ignoring the creation timestamp.

    Two runs with the same data, seed, and config produce the same digest
    even though they were saved at different times.
    """
    doc = _bundle_document(bundle)
    doc["provenance"] = dict(doc["provenance"])
    doc["provenance"].pop("created_at", None)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _require(doc: dict, key: str, kind, what: str):
    if key not in doc:
        raise BundleFormatError(f"{what}: missing key {key!r}")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise BundleFormatError(
            f"{what}: key {key!r} has type {type(value).__name__}"
        )
    return value


def load_bundle(path: str) -> PipelineBundle:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise BundleFormatError(f"cannot read bundle file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise BundleFormatError(f"bundle is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise BundleFormatError("bundle document is not a JSON object")
    name = doc.get("format")
    if name != FORMAT_NAME:
        raise BundleFormatError(f"not a {FORMAT_NAME} document (format={name!r})")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise BundleVersionError(
            f"bundle format_version {version!r} unsupported (this build reads {FORMAT_VERSION})"
        )

    class_names = _require(doc, "class_names", list, "header")
    if not class_names or not all(isinstance(c, str) for c in class_names):
        raise BundleFormatError("header: class_names must be a non-empty string list")
    layer_dims = _require(doc, "layer_dims", list, "header")
    if len(layer_dims) < 2 or not all(isinstance(d, int) and d > 0 for d in layer_dims):
        raise BundleFormatError("header: layer_dims must be >=2 positive ints")
    if layer_dims[-1] != len(class_names):
        raise BundleConsistencyError(
            f"output width {layer_dims[-1]} != {len(class_names)} class names"
        )

    rule_doc = _require(doc, "rule", dict, "header")
    try:
        rule = RuleConfig(
            threshold=float(rule_doc["threshold"]),
            normal_class=str(rule_doc["normal_class"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleFormatError(f"header: bad rule section: {exc}") from exc

    prov_doc = _require(doc, "provenance", dict, "header")
    try:
        provenance = TrainingProvenance(
            dataset_digest=str(prov_doc["dataset_digest"]),
            seed=int(prov_doc["seed"]),
            epochs=int(prov_doc["epochs"]),
            created_at=str(prov_doc["created_at"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleFormatError(f"header: bad provenance section: {exc}") from exc

    feature_names = doc.get("feature_names")
    if feature_names is not None:
        if not isinstance(feature_names, list) or not all(
            isinstance(f, str) for f in feature_names
        ):
            raise BundleFormatError("header: feature_names must be a string list")
        feature_names = tuple(feature_names)

    scaler_doc = _require(doc, "scaler", dict, "scaler")
    width = layer_dims[0]
    mins = _decode_f64(_require(scaler_doc, "mins", str, "scaler"), (width,), "scaler mins")
    maxs = _decode_f64(_require(scaler_doc, "maxs", str, "scaler"), (width,), "scaler maxs")

    w_docs = _require(doc, "weights", list, "weights")
    b_docs = _require(doc, "biases", list, "biases")
    n_layers = len(layer_dims) - 1
    if len(w_docs) != n_layers or len(b_docs) != n_layers:
        raise BundleConsistencyError(
            f"{len(w_docs)} weight / {len(b_docs)} bias sections for {n_layers} layers"
        )
    weights = []
    biases = []
    for i in range(n_layers):
        fan_in, fan_out = layer_dims[i], layer_dims[i + 1]
        if not isinstance(w_docs[i], str) or not isinstance(b_docs[i], str):
            raise BundleFormatError(f"layer {i}: weight/bias sections must be strings")
        weights.append(_decode_f64(w_docs[i], (fan_out, fan_in), f"layer {i} weights"))
        biases.append(_decode_f64(b_docs[i], (fan_out,), f"layer {i} biases"))

    try:
        model = MlpModel(
            layer_dims=tuple(layer_dims),
            weights=weights,
            biases=biases,
            class_names=tuple(class_names),
            hidden_activation=str(doc.get("hidden_activation", "relu")),
            output_activation=str(doc.get("output_activation", "softmax")),
        )
        scaler = FeatureScaler(mins=mins, maxs=maxs)
        return PipelineBundle(
            model=model,
            scaler=scaler,
            codec=LabelCodec(tuple(class_names)),
            rule=rule,
            provenance=provenance,
            feature_names=feature_names,
        )
    except BundleConsistencyError:
        raise
    except ValueError as exc:
        raise BundleConsistencyError(str(exc)) from exc


def with_rule(bundle: PipelineBundle, rule: RuleConfig) -> PipelineBundle:
    return replace(bundle, rule=rule)


def predict_proba(bundle: PipelineBundle, features: np.ndarray) -> np.ndarray:
    """Probability vector for one raw (unscaled) feature vector."""
    from .neural.net import forward

    return forward(bundle.model, transform(bundle.scaler, features))


def predict_proba_batch(bundle: PipelineBundle, features: np.ndarray) -> np.ndarray:
    from .neural.net import forward_batch

    return forward_batch(bundle.model, transform(bundle.scaler, features))


@dataclass(frozen=True)
class ScoreError:
    index: int
    reason: str


@dataclass(frozen=True)
class ScoredFlow:
    index: int
    features: np.ndarray
    verdict: Verdict


def _coerce_flow(flow, width: int) -> np.ndarray:
    features = getattr(flow, "features", flow)
    arr = np.asarray(features, dtype=np.float64)
    if arr.shape != (width,):
        raise ValueError(f"expected {width} features, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("features contain NaN or infinity")
    return arr


def score(bundle: PipelineBundle, flows: Sequence) -> tuple[list[ScoredFlow], list[ScoreError]]:
    """Score a batch, continuing past malformed rows.

    Returns verdicts for the rows that parsed (original order, original
    indices) plus one error per row that did not.
    """
    width = bundle.model.n_inputs
    scored: list[ScoredFlow] = []
    errors: list[ScoreError] = []
    for i, flow in enumerate(flows):
        try:
            arr = _coerce_flow(flow, width)
        except (TypeError, ValueError) as exc:
            errors.append(ScoreError(index=i, reason=str(exc)))
            continue
        probs = predict_proba(bundle, arr)
        verdict = classify(bundle.rule, probs, bundle.class_names)
        scored.append(ScoredFlow(index=i, features=arr, verdict=verdict))
    return scored, errors
