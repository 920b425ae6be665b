"""Quarantine for flows the ruleset could not attribute to any class.

Every Novel verdict lands here as a Pending item awaiting an analyst.
Items move Pending -> Labeled(name) or Pending -> Dismissed, never back.
State is an append-only JSONL event log replayed at startup, so a restart
loses nothing and there is no database to run.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum

import numpy as np

from .errors import QuarantineError, QuarantineStateError


class QuarantineStatus(str, Enum):
    PENDING = "pending"
    LABELED = "labeled"
    DISMISSED = "dismissed"


@dataclass(frozen=True)
class QuarantineItem:
    id: str
    features: np.ndarray
    probs: np.ndarray
    received_at: str
    status: QuarantineStatus
    label: str | None = None  # set exactly when status is LABELED

    def __post_init__(self):
        self.features.setflags(write=False)
        self.probs.setflags(write=False)
        if (self.status is QuarantineStatus.LABELED) != (self.label is not None):
            raise ValueError("label is present exactly when status is labeled")

    def summary(self) -> dict:
        out = {
            "id": self.id,
            "received_at": self.received_at,
            "probs": [float(p) for p in self.probs],
            "status": self.status.value,
        }
        if self.label is not None:
            out["class"] = self.label
        return out

    def detail(self) -> dict:
        out = self.summary()
        out["features"] = [float(v) for v in self.features]
        return out


class QuarantineStore:
    """Thread-safe item registry backed by an optional on-disk event log."""

    def __init__(self, log_path: str | None = None):
        self._lock = threading.RLock()
        self._items: dict[str, QuarantineItem] = {}
        self._order: list[str] = []
        self._log_path = log_path
        self._log_fh = None
        if log_path is not None:
            if os.path.exists(log_path):
                self._replay(log_path)
            self._log_fh = open(log_path, "a", encoding="utf-8")

    def close(self):
        with self._lock:
            if self._log_fh is not None:
                self._log_fh.close()
                self._log_fh = None

    def _append_event(self, event: dict):
        if self._log_fh is not None:
            self._log_fh.write(json.dumps(event, separators=(",", ":")) + "\n")
            self._log_fh.flush()

    def _replay(self, path: str):
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise QuarantineError(
                        f"{path}:{lineno}: corrupt quarantine log line"
                    ) from exc
                try:
                    self._apply(event)
                except (QuarantineError, KeyError, TypeError, ValueError) as exc:
                    raise QuarantineError(f"{path}:{lineno}: {exc}") from exc

    def _apply(self, event: dict):
        kind = event.get("event")
        if kind == "add":
            item = QuarantineItem(
                id=str(event["id"]),
                features=np.asarray(event["features"], dtype=np.float64),
                probs=np.asarray(event["probs"], dtype=np.float64),
                received_at=str(event["received_at"]),
                status=QuarantineStatus.PENDING,
            )
            if item.id in self._items:
                raise QuarantineError(f"duplicate quarantine id {item.id}")
            self._items[item.id] = item
            self._order.append(item.id)
        elif kind == "label":
            item = self._transition_target(str(event["id"]))
            self._items[item.id] = replace(
                item, status=QuarantineStatus.LABELED, label=str(event["class"])
            )
        elif kind == "dismiss":
            item = self._transition_target(str(event["id"]))
            self._items[item.id] = replace(item, status=QuarantineStatus.DISMISSED)
        else:
            raise QuarantineError(f"unknown quarantine event {kind!r}")

    def _transition_target(self, item_id: str) -> QuarantineItem:
        item = self._items.get(item_id)
        if item is None:
            raise QuarantineError(f"unknown quarantine id {item_id!r}")
        if item.status is not QuarantineStatus.PENDING:
            raise QuarantineStateError(
                f"item {item_id} is already {item.status.value}; transitions are final"
            )
        return item

    def add(self, features: np.ndarray, probs: np.ndarray) -> QuarantineItem:
        features = np.asarray(features, dtype=np.float64).copy()
        probs = np.asarray(probs, dtype=np.float64).copy()
        with self._lock:
            item = QuarantineItem(
                id=uuid.uuid4().hex,
                features=features,
                probs=probs,
                received_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
                status=QuarantineStatus.PENDING,
            )
            self._items[item.id] = item
            self._order.append(item.id)
            self._append_event(
                {
                    "event": "add",
                    "id": item.id,
                    "received_at": item.received_at,
                    "features": [float(v) for v in features],
                    "probs": [float(p) for p in probs],
                }
            )
            return item

    def get(self, item_id: str) -> QuarantineItem:
        with self._lock:
            item = self._items.get(item_id)
            if item is None:
                raise QuarantineError(f"unknown quarantine id {item_id!r}")
            return item

    def label(self, item_id: str, class_name: str) -> QuarantineItem:
        if not isinstance(class_name, str) or not class_name.strip():
            raise QuarantineError("class name must be a non-empty string")
        class_name = class_name.strip()
        with self._lock:
            item = self._transition_target(item_id)
            updated = replace(item, status=QuarantineStatus.LABELED, label=class_name)
            self._items[item_id] = updated
            self._append_event({"event": "label", "id": item_id, "class": class_name})
            return updated

    def dismiss(self, item_id: str) -> QuarantineItem:
        with self._lock:
            item = self._transition_target(item_id)
            updated = replace(item, status=QuarantineStatus.DISMISSED)
            self._items[item_id] = updated
            self._append_event({"event": "dismiss", "id": item_id})
            return updated

    def items(self, status: QuarantineStatus | None = None) -> list[QuarantineItem]:
        """Items in arrival order, optionally filtered by status."""
        with self._lock:
            out = [self._items[i] for i in self._order]
        if status is not None:
            out = [item for item in out if item.status is status]
        return out

    def labeled(self) -> list[QuarantineItem]:
        return self.items(QuarantineStatus.LABELED)

    def __len__(self) -> int:
        with self._lock:
            return len(self._order)
