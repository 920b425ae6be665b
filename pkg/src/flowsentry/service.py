"""HTTP service: score flows, manage quarantine, retrain on analyst labels.

The serving bundle is an immutable snapshot swapped atomically under a
lock; scoring grabs the current reference and never blocks on a retrain
in progress. At most one retrain job runs at a time, in a background
thread; on success it saves the new bundle, swaps it in, and records the
new cross-validation report for /v1/metrics. Failure leaves everything
as it was.

Request bodies are validated by hand against plain dicts (the label
payload key "class" is a Python keyword, which rules out the obvious
model classes anyway); errors come back as {"detail": reason} with
conventional status codes.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any

from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse

from .bundle import FORMAT_VERSION, PipelineBundle, save_bundle, score
from .dataset import Dataset
from .errors import QuarantineError, QuarantineStateError
from .metrics import EvalReport
from .neural.train import DEFAULT_SEED, TrainConfig
from .pipeline import DEFAULT_MIN_NEW_SAMPLES, evaluate_bundle, retrain
from .quarantine import QuarantineStatus, QuarantineStore
from .ruleset import VerdictKind

_STATUS_BY_NAME = {s.value: s for s in QuarantineStatus}


@dataclass
class RetrainJob:
    id: str
    state: str = "running"  # running | done | failed
    new_classes: list[str] = field(default_factory=list)
    error: str | None = None
    started_at: str = ""
    finished_at: str | None = None

    def as_dict(self) -> dict:
        out: dict[str, Any] = {
            "job_id": self.id,
            "state": self.state,
            "new_classes": list(self.new_classes),
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }
        if self.error is not None:
            out["error"] = self.error
        return out


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class ServiceState:
    """Everything the endpoints share; bundle access goes through swap()."""

    def __init__(
        self,
        bundle: PipelineBundle,
        store: QuarantineStore,
        base_train: Dataset | None = None,
        bundle_path: str | None = None,
        min_new_samples: int = DEFAULT_MIN_NEW_SAMPLES,
        default_epochs: int = 150,
        default_seed: int = DEFAULT_SEED,
        default_batch_size: int = 512,
    ):
        self._bundle = bundle
        self._swap_lock = threading.Lock()
        self.store = store
        self.base_train = base_train
        self.bundle_path = bundle_path
        self.min_new_samples = min_new_samples
        self.default_epochs = default_epochs
        self.default_seed = default_seed
        self.default_batch_size = default_batch_size
        self.jobs: dict[str, RetrainJob] = {}
        self._jobs_lock = threading.Lock()
        self._retrain_busy = False
        self._latest_eval: EvalReport | None = None
        self._eval_lock = threading.Lock()

    @property
    def bundle(self) -> PipelineBundle:
        with self._swap_lock:
            return self._bundle

    def swap_bundle(self, new_bundle: PipelineBundle):
        with self._swap_lock:
            self._bundle = new_bundle

    def set_latest_eval(self, rep: EvalReport):
        with self._eval_lock:
            self._latest_eval = rep

    def latest_eval(self) -> EvalReport | None:
        with self._eval_lock:
            return self._latest_eval

    def try_begin_retrain(self) -> bool:
        with self._jobs_lock:
            if self._retrain_busy:
                return False
            self._retrain_busy = True
            return True

    def end_retrain(self):
        with self._jobs_lock:
            self._retrain_busy = False


def _error(status: int, reason: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": reason})


def _verdict_payload(verdict) -> dict:
    out: dict[str, Any] = {
        "kind": verdict.kind.value,
        "probs": [float(p) for p in verdict.probs],
    }
    if verdict.class_name is not None:
        out["class"] = verdict.class_name
    return out


def _run_retrain(state: ServiceState, job: RetrainJob, config: TrainConfig):
    try:
        snapshot = state.bundle
        labeled = [
            (item.features, item.label)
            for item in state.store.labeled()
        ]
        result = retrain(
            snapshot,
            state.base_train,
            labeled,
            config,
            min_new_samples=state.min_new_samples,
        )
        if state.bundle_path:
            save_bundle(result.bundle, state.bundle_path)
        state.swap_bundle(result.bundle)
        state.set_latest_eval(result.cv_report)
        job.new_classes = [
            name for name in result.bundle.class_names if name not in snapshot.class_names
        ]
        job.state = "done"
    except Exception as exc:
        job.state = "failed"
        job.error = str(exc)
    finally:
        job.finished_at = _now()
        state.end_retrain()


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="flowsentry", docs_url=None, redoc_url=None)
    app.state.engine = state

    @app.post("/v1/classify")
    def classify_flows(payload: dict = Body(...)):
        flows = payload.get("flows")
        if not isinstance(flows, list):
            return _error(400, 'body must be {"flows": [[...numbers...], ...]}')
        bundle = state.bundle
        scored, errors = score(bundle, flows)
        verdicts = []
        for s in scored:
            verdicts.append(_verdict_payload(s.verdict))
            if s.verdict.kind is VerdictKind.NOVEL:
                state.store.add(s.features, s.verdict.probs)
        return {
            "verdicts": verdicts,
            "errors": [{"index": e.index, "reason": e.reason} for e in errors],
        }

    @app.get("/v1/quarantine")
    def list_quarantine(status: str | None = None):
        wanted = None
        if status is not None:
            wanted = _STATUS_BY_NAME.get(status.lower())
            if wanted is None:
                return _error(400, f"unknown status {status!r}")
        items = state.store.items(wanted)
        return {"items": [item.summary() for item in items]}

    @app.get("/v1/quarantine/{item_id}")
    def get_quarantine(item_id: str):
        try:
            return state.store.get(item_id).detail()
        except QuarantineError as exc:
            return _error(404, str(exc))

    @app.post("/v1/quarantine/{item_id}/label")
    def label_quarantine(item_id: str, payload: dict = Body(...)):
        name = payload.get("class")
        if not isinstance(name, str) or not name.strip():
            return _error(400, 'body must be {"class": "<non-empty name>"}')
        known = state.bundle.class_names
        try:
            item = state.store.label(item_id, name)
        except QuarantineStateError as exc:
            return _error(409, str(exc))
        except QuarantineError as exc:
            return _error(404, str(exc))
        out = item.detail()
        out["new_class"] = item.label not in known
        return out

    @app.post("/v1/quarantine/{item_id}/dismiss")
    def dismiss_quarantine(item_id: str):
        try:
            return state.store.dismiss(item_id).detail()
        except QuarantineStateError as exc:
            return _error(409, str(exc))
        except QuarantineError as exc:
            return _error(404, str(exc))

    @app.post("/v1/retrain")
    def start_retrain(payload: dict | None = Body(None)):
        payload = payload or {}
        if state.base_train is None:
            return _error(409, "service was started without training data; retrain unavailable")
        try:
            epochs = int(payload.get("epochs", state.default_epochs))
            seed = int(payload.get("seed", state.default_seed))
        except (TypeError, ValueError):
            return _error(400, "epochs and seed must be integers")
        try:
            config = TrainConfig(
                epochs=epochs,
                seed=seed,
                batch_size=state.default_batch_size,
            )
        except ValueError as exc:
            return _error(400, str(exc))
        if not state.try_begin_retrain():
            return _error(409, "a retrain job is already running")
        job = RetrainJob(id=uuid.uuid4().hex, started_at=_now())
        with state._jobs_lock:
            state.jobs[job.id] = job
        thread = threading.Thread(
            target=_run_retrain, args=(state, job, config), daemon=True
        )
        thread.start()
        return JSONResponse(status_code=202, content={"job_id": job.id})

    @app.get("/v1/retrain/{job_id}")
    def retrain_status(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            return _error(404, f"unknown retrain job {job_id!r}")
        return job.as_dict()

    @app.get("/v1/metrics")
    def metrics():
        rep = state.latest_eval()
        if rep is None and state.base_train is not None:
            try:
                rep = evaluate_bundle(state.bundle, state.base_train)
            except Exception as exc:
                return _error(409, f"evaluation against training data failed: {exc}")
            state.set_latest_eval(rep)
        if rep is None:
            return _error(404, "no evaluation available yet")
        return rep.as_dict()

    @app.get("/v1/model")
    def model_info():
        bundle = state.bundle
        return {
            "classes": list(bundle.class_names),
            "layer_dims": list(bundle.model.layer_dims),
            "threshold": bundle.rule.threshold,
            "format_version": FORMAT_VERSION,
            "provenance": bundle.provenance.as_dict(),
            # lets API-only clients name features and recompute scaled values
            "feature_names": list(bundle.feature_names) if bundle.feature_names else None,
            "scaler": {
                "mins": [float(v) for v in bundle.scaler.mins],
                "maxs": [float(v) for v in bundle.scaler.maxs],
            },
        }

    return app
