"""CICIDS2017-style flow CSV ingestion, cleaning, and deterministic splits.

A flow record is a fixed-width vector of finite feature values plus an
optional class label. Ingestion drops rows containing NaN, infinite, or
unparseable values and reports how many fell into each bucket; the clean
rows are held column-major in one float64 matrix so downstream stages can
work on arrays instead of per-record objects.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import IngestError, SplitError
from .sampling import partition, per_group_sample, stratified_partition

DEFAULT_FEATURE_COUNT = 78
DEFAULT_LABEL_COLUMN = "Label"
NORMAL_CLASS = "Normal"

# Raw CICIDS2017 sub-labels collapse into the coarse category scheme used
# for training. Keys are normalized with _norm_key so the dataset's
# inconsistent dashes/encodings ("Web Attack - XSS", "Web Attack \x96 XSS")
# all match. Unlisted labels pass through unchanged.
DEFAULT_LABEL_MAP = {
    "benign": "Normal",
    "normal": "Normal",
    "dos hulk": "DoS",
    "dos goldeneye": "DoS",
    "dos slowloris": "DoS",
    "dos slowhttptest": "DoS",
    "ftp patator": "Patator",
    "ssh patator": "Patator",
    "portscan": "Portscan",
    "web attack brute force": "WebAttack",
    "web attack xss": "WebAttack",
    "web attack sql injection": "WebAttack",
    "ddos": "DDoS",
    "bot": "Bot",
    "infiltration": "Infiltration",
    "heartbleed": "Heartbleed",
}


def _norm_key(raw: str) -> str:
    return " ".join(re.findall(r"[a-z0-9]+", raw.lower()))


def normalize_label(raw: str, label_map: dict[str, str] | None = None) -> str:
    """Collapse whitespace and map a raw label onto its category name."""
    cleaned = " ".join(raw.split())
    mapping = DEFAULT_LABEL_MAP if label_map is None else label_map
    return mapping.get(_norm_key(cleaned), cleaned)


def load_label_map(path: str | Path) -> dict[str, str]:
    """Read a mapping file of ``raw_label=category`` lines.

    Blank lines and ``#`` comments are skipped. Keys are normalized the
    same way lookups are, so any dash/spacing variant of a raw label maps.
    """
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise IngestError(f"{path}:{lineno}: expected 'raw_label=category', got {line!r}")
        raw, category = stripped.split("=", 1)
        mapping[_norm_key(raw)] = category.strip()
    return mapping


@dataclass(frozen=True)
class FlowRecord:
    """One network flow: feature vector plus optional ground-truth label."""

    features: np.ndarray
    label: str | None = None


@dataclass(frozen=True)
class IngestReport:
    rows_read: int
    rows_kept: int
    dropped_nan: int
    dropped_inf: int
    dropped_malformed: int
    dropped_ragged: int

    @property
    def rows_dropped(self) -> int:
        return self.dropped_nan + self.dropped_inf + self.dropped_malformed + self.dropped_ragged


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    cv_fraction: float = 0.2
    seed: int = 2017
    stratified: bool = True

    def __post_init__(self):
        for name in ("train_fraction", "cv_fraction"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie strictly between 0 and 1, got {value}")


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of clean flow records.

    ``features`` is an (n, width) float64 matrix; ``labels`` holds one
    entry per row (None when unlabeled). ``class_names`` is the canonical
    output order: Normal first when present, then remaining classes in
    first-appearance order.
    """

    features: np.ndarray
    labels: tuple[str | None, ...]
    class_names: tuple[str, ...]
    feature_names: tuple[str, ...] = ()
    source_digest: str = ""

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if len(self.labels) != self.features.shape[0]:
            raise ValueError("one label entry per feature row required")
        self.features.setflags(write=False)
        present = {label for label in self.labels if label is not None}
        missing = present - set(self.class_names)
        if missing:
            raise ValueError(f"labels not in class_names: {sorted(missing)}")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def record(self, i: int) -> FlowRecord:
        return FlowRecord(features=self.features[i], label=self.labels[i])

    def __iter__(self) -> Iterator[FlowRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def class_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in self.class_names}
        for label in self.labels:
            if label is not None:
                counts[label] += 1
        return counts

    def select(self, indices: np.ndarray | Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(
            features=self.features[idx].copy(),
            labels=tuple(self.labels[i] for i in idx),
            class_names=self.class_names,
            feature_names=self.feature_names,
            source_digest=self.source_digest,
        )

    def content_digest(self) -> str:
        """Hash of the records themselves, independent of any source file."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features).tobytes())
        for label in self.labels:
            h.update(b"\x00" if label is None else label.encode("utf-8"))
            h.update(b"\x1e")
        return h.hexdigest()


def canonical_class_order(labels: Sequence[str | None]) -> tuple[str, ...]:
    """Distinct labels with Normal pulled to index 0, rest in first appearance."""
    seen: dict[str, None] = {}
    for label in labels:
        if label is not None and label not in seen:
            seen[label] = None
    ordered = list(seen)
    if NORMAL_CLASS in seen:
        ordered.remove(NORMAL_CLASS)
        ordered.insert(0, NORMAL_CLASS)
    return tuple(ordered)


def _classify_bad_row(cells: list[str]) -> str:
    """Name the drop bucket for a row known to contain a bad value.

    The first offending cell, scanning left to right, decides: textual or
    parsed NaN -> 'nan', infinite -> 'inf', unparseable -> 'malformed'.
    """
    for cell in cells:
        try:
            value = float(cell)
        except ValueError:
            return "malformed"
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf"
    raise AssertionError("row had no bad cell")


def ingest_csv(
    path: str | Path,
    schema: int = DEFAULT_FEATURE_COUNT,
    label_map: dict[str, str] | None = None,
    label_column: str = DEFAULT_LABEL_COLUMN,
    allow_empty: bool = False,
) -> tuple[Dataset, IngestReport]:
    """Read a header-bearing CSV of flow features, keeping only clean rows.

    The label column is located by name (case-insensitive); when absent the
    file is treated as unlabeled and every column is a feature. Rows with
    NaN, infinite, or unparseable values, or with the wrong number of
    columns, are dropped and counted per bucket. Zero clean rows is an
    error unless allow_empty is set (batch classification of an empty
    file is legitimately a no-op).
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    digest = hashlib.sha256(raw).hexdigest()

    text = raw.decode("utf-8", errors="replace")
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if not header:
        raise IngestError(f"{path}: missing header row")
    names = [h.strip() for h in header]

    label_idx: int | None = None
    for i, name in enumerate(names):
        if name.lower() == label_column.strip().lower():
            label_idx = i
            break
    feature_idx = [i for i in range(len(names)) if i != label_idx]
    if len(feature_idx) != schema:
        raise IngestError(
            f"{path}: expected {schema} feature columns"
            f"{' + ' + label_column if label_idx is not None else ''}, "
            f"found {len(feature_idx)}"
        )
    feature_names = tuple(names[i] for i in feature_idx)
    expected_width = len(names)

    rows_read = 0
    dropped = {"nan": 0, "inf": 0, "malformed": 0, "ragged": 0}
    rows: list[list[float]] = []
    labels: list[str | None] = []

    for row in reader:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # blank line, not a record
        rows_read += 1
        if len(row) != expected_width:
            dropped["ragged"] += 1
            continue
        cells = [row[i] for i in feature_idx]
        try:
            values = [float(c) for c in cells]
        except ValueError:
            dropped[_classify_bad_row(cells)] += 1
            continue
        bad = next((v for v in values if not math.isfinite(v)), None)
        if bad is not None:
            dropped[_classify_bad_row(cells)] += 1
            continue
        rows.append(values)
        labels.append(
            normalize_label(row[label_idx], label_map) if label_idx is not None else None
        )

    report = IngestReport(
        rows_read=rows_read,
        rows_kept=len(rows),
        dropped_nan=dropped["nan"],
        dropped_inf=dropped["inf"],
        dropped_malformed=dropped["malformed"],
        dropped_ragged=dropped["ragged"],
    )
    if not rows and not allow_empty:
        raise IngestError(f"{path}: no clean rows after dropping {report.rows_dropped}")

    features = (
        np.asarray(rows, dtype=np.float64)
        if rows
        else np.empty((0, schema), dtype=np.float64)
    )
    ds = Dataset(
        features=features,
        labels=tuple(labels),
        class_names=canonical_class_order(labels),
        feature_names=feature_names,
        source_digest=digest,
    )
    return ds, report


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition a dataset into train/test parts, stratified by label."""
    if len(ds) == 0:
        raise SplitError("cannot split an empty dataset")
    if spec.stratified:
        singletons = [name for name, count in ds.class_counts().items() if count == 1]
        if singletons:
            raise SplitError(
                f"stratified split impossible with singleton classes: {singletons}"
            )
        train_idx, test_idx = stratified_partition(ds.labels, spec.train_fraction, spec.seed)
    else:
        train_idx, test_idx = partition(len(ds), spec.train_fraction, spec.seed)
    return ds.select(train_idx), ds.select(test_idx)


def subsample(ds: Dataset, per_class_cap: int, seed: int) -> Dataset:
    """Keep at most ``per_class_cap`` records per class, chosen uniformly."""
    if len(ds) == 0:
        raise SplitError("cannot subsample an empty dataset")
    idx = per_group_sample(ds.labels, per_class_cap, seed)
    return ds.select(idx)


def merge(base: Dataset, extra_features: np.ndarray, extra_labels: Sequence[str]) -> Dataset:
    """Append labeled rows to a dataset, extending class_names as needed.

    New class names keep their first-appearance order after the existing
    ones; used when analyst-labeled quarantine flows join the training set.
    """
    extra = np.asarray(extra_features, dtype=np.float64)
    if extra.ndim != 2 or extra.shape[1] != base.n_features:
        raise ValueError(
            f"extra rows must be (n, {base.n_features}), got {extra.shape}"
        )
    class_names = list(base.class_names)
    for label in extra_labels:
        if label not in class_names:
            class_names.append(label)
    return Dataset(
        features=np.vstack([base.features, extra]),
        labels=tuple(base.labels) + tuple(extra_labels),
        class_names=tuple(class_names),
        feature_names=base.feature_names,
        source_digest=base.source_digest,
    )
