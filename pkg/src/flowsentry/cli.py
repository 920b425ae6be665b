"""Batch entry points: train, evaluate, classify, serve.

Every flag can also come from the environment with the FLOWSENTRY_ prefix
(FLOWSENTRY_SEED, FLOWSENTRY_EPOCHS, ...); an explicit flag wins. All
subcommands except serve are deterministic given inputs and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import signal
import socket
import sys

import numpy as np

from .bundle import (
    content_digest,
    load_bundle,
    predict_proba_batch,
    save_bundle,
    with_rule,
)
from .dataset import (
    DEFAULT_FEATURE_COUNT,
    Dataset,
    IngestReport,
    SplitSpec,
    ingest_csv,
    load_label_map,
    split,
    subsample,
)
from .errors import CliError, FlowsentryError
from .neural.net import DEFAULT_HIDDEN_DIMS
from .neural.train import DEFAULT_SEED, TrainConfig
from .pipeline import DEFAULT_MIN_NEW_SAMPLES, evaluate_bundle, fit_pipeline
from .ruleset import DEFAULT_THRESHOLD, RuleConfig, classify, profile

ENV_PREFIX = "FLOWSENTRY_"
DEFAULT_EPOCHS = 150
DEFAULT_BATCH_SIZE = 512
DEFAULT_LISTEN = "127.0.0.1:8787"


def _env_default(name: str, fallback, cast):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except (TypeError, ValueError):
        raise CliError(f"environment override {ENV_PREFIX}{name}={raw!r} is not valid")


def _parse_hidden_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise CliError(f"--hidden-dims must be comma-separated integers, got {text!r}")
    if not dims or any(d <= 0 for d in dims):
        raise CliError(f"--hidden-dims must be positive integers, got {text!r}")
    return dims


def _parse_listen(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise CliError(f"--listen must be host:port, got {text!r}")
    try:
        return host, int(port)
    except ValueError:
        raise CliError(f"--listen port must be an integer, got {port!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowsentry",
        description="Open-set network flow classification: train, evaluate, classify, serve.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common_data(p, required=True):
        p.add_argument(
            "--data",
            default=_env_default("DATA", None, str),
            required=required and os.environ.get(ENV_PREFIX + "DATA") is None,
            help="labeled flow CSV (78 feature columns + Label)",
        )
        p.add_argument(
            "--schema",
            type=int,
            default=_env_default("SCHEMA", DEFAULT_FEATURE_COUNT, int),
            help=f"expected feature column count (default {DEFAULT_FEATURE_COUNT})",
        )
        p.add_argument(
            "--label-map",
            default=_env_default("LABEL_MAP", None, str),
            help="optional raw_label=category mapping file",
        )

    t = sub.add_parser("train", help="fit scaler + network on a labeled CSV")
    common_data(t)
    t.add_argument("--bundle", default=_env_default("BUNDLE", None, str), required=os.environ.get(ENV_PREFIX + "BUNDLE") is None, help="output bundle path")
    t.add_argument("--out", default=_env_default("OUT", None, str), help="per-epoch history JSONL path")
    t.add_argument("--test-out", default=_env_default("TEST_OUT", None, str), help="write the held-out 30%% test slice to this CSV")
    t.add_argument("--seed", type=int, default=_env_default("SEED", DEFAULT_SEED, int))
    t.add_argument("--epochs", type=int, default=_env_default("EPOCHS", DEFAULT_EPOCHS, int))
    t.add_argument("--batch-size", type=int, default=_env_default("BATCH_SIZE", DEFAULT_BATCH_SIZE, int))
    t.add_argument("--threshold", type=float, default=_env_default("THRESHOLD", DEFAULT_THRESHOLD, float))
    t.add_argument("--cap", type=int, default=_env_default("CAP", None, int), help="per-class subsample cap before splitting")
    t.add_argument(
        "--hidden-dims",
        default=_env_default("HIDDEN_DIMS", None, str),
        help="comma-separated hidden layer widths (default "
        + ",".join(str(d) for d in DEFAULT_HIDDEN_DIMS)
        + ")",
    )
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="closed-set report + probability profile")
    common_data(e)
    e.add_argument("--bundle", default=_env_default("BUNDLE", None, str), required=os.environ.get(ENV_PREFIX + "BUNDLE") is None)
    e.add_argument("--out", default=_env_default("OUT", None, str), help="report JSON path")
    e.add_argument("--threshold", type=float, default=_env_default("THRESHOLD", None, float), help="override the bundle's verdict threshold")
    e.add_argument("--cap", type=int, default=_env_default("CAP", None, int))
    e.add_argument("--seed", type=int, default=_env_default("SEED", DEFAULT_SEED, int), help="seed for --cap subsampling")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("classify", help="verdict per clean row of a CSV")
    common_data(c)
    c.add_argument("--bundle", default=_env_default("BUNDLE", None, str), required=os.environ.get(ENV_PREFIX + "BUNDLE") is None)
    c.add_argument("--out", default=_env_default("OUT", None, str), help="verdict JSONL path (default stdout)")
    c.add_argument("--threshold", type=float, default=_env_default("THRESHOLD", None, float))
    c.set_defaults(func=cmd_classify)

    s = sub.add_parser("serve", help="run the HTTP API")
    s.add_argument("--bundle", default=_env_default("BUNDLE", None, str), required=os.environ.get(ENV_PREFIX + "BUNDLE") is None)
    s.add_argument("--listen", default=_env_default("LISTEN", DEFAULT_LISTEN, str), help=f"host:port (default {DEFAULT_LISTEN})")
    s.add_argument("--data", default=_env_default("DATA", None, str), help="training CSV kept for retraining and /v1/metrics")
    s.add_argument("--schema", type=int, default=_env_default("SCHEMA", DEFAULT_FEATURE_COUNT, int))
    s.add_argument("--label-map", default=_env_default("LABEL_MAP", None, str))
    s.add_argument("--quarantine-log", default=_env_default("QUARANTINE_LOG", None, str), help="append-only quarantine event log (JSONL)")
    s.add_argument("--threshold", type=float, default=_env_default("THRESHOLD", None, float))
    s.add_argument("--min-new-samples", type=int, default=_env_default("MIN_NEW_SAMPLES", DEFAULT_MIN_NEW_SAMPLES, int))
    s.add_argument("--seed", type=int, default=_env_default("SEED", DEFAULT_SEED, int), help="default retrain seed")
    s.add_argument("--epochs", type=int, default=_env_default("EPOCHS", DEFAULT_EPOCHS, int), help="default retrain epochs")
    s.add_argument("--batch-size", type=int, default=_env_default("BATCH_SIZE", DEFAULT_BATCH_SIZE, int))
    s.set_defaults(func=cmd_serve)

    return parser


def _load_data(args, allow_empty=False) -> tuple[Dataset, IngestReport]:
    label_map = load_label_map(args.label_map) if args.label_map else None
    ds, rep = ingest_csv(
        args.data, schema=args.schema, label_map=label_map, allow_empty=allow_empty
    )
    print(
        f"read {rep.rows_read} rows: kept {rep.rows_kept}, dropped {rep.rows_dropped}"
        f" (nan {rep.dropped_nan}, inf {rep.dropped_inf},"
        f" malformed {rep.dropped_malformed}, ragged {rep.dropped_ragged})",
        file=sys.stderr,
    )
    return ds, rep


def _write_dataset_csv(ds: Dataset, path: str):
    names = list(ds.feature_names) or [f"f{i}" for i in range(ds.n_features)]
    labeled = any(label is not None for label in ds.labels)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + (["Label"] if labeled else []))
        for i in range(len(ds)):
            # repr(float(...)) keeps the shortest exact round-trip form
            row = [repr(float(v)) for v in ds.features[i]]
            if labeled:
                row.append(ds.labels[i] or "")
            writer.writerow(row)


def cmd_train(args) -> int:
    ds, _ = _load_data(args)
    if args.cap is not None:
        ds = subsample(ds, args.cap, args.seed)
        print(f"per-class cap {args.cap}: {len(ds)} rows remain", file=sys.stderr)
    spec = SplitSpec(seed=args.seed)
    train_part, test_part = split(ds, spec)
    print(
        f"split {len(ds)} rows into {len(train_part)} train / {len(test_part)} test",
        file=sys.stderr,
    )

    hidden = _parse_hidden_dims(args.hidden_dims) if args.hidden_dims else DEFAULT_HIDDEN_DIMS
    config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        hidden_dims=hidden,
    )
    history_fh = open(args.out, "w", encoding="utf-8") if args.out else None
    try:
        def on_epoch(stats):
            print(
                f"epoch {stats.epoch:4d}/{config.epochs}"
                f"  train_loss={stats.train_loss:.6f} train_acc={stats.train_acc:.4f}"
                f"  cv_loss={stats.cv_loss:.6f} cv_acc={stats.cv_acc:.4f}"
            )
            if history_fh is not None:
                history_fh.write(json.dumps(stats.as_dict()) + "\n")
                history_fh.flush()

        result = fit_pipeline(
            train_part, config, rule=RuleConfig(threshold=args.threshold), on_epoch=on_epoch
        )
    finally:
        if history_fh is not None:
            history_fh.close()

    save_bundle(result.bundle, args.bundle)
    if args.test_out:
        _write_dataset_csv(test_part, args.test_out)
        print(f"held-out test rows written to {args.test_out}", file=sys.stderr)
    final = result.history[-1]
    print(
        f"done: cv_acc={final.cv_acc:.4f}, bundle={args.bundle},"
        f" digest={content_digest(result.bundle)}"
    )
    return 0


def _report_lines(rep) -> list[str]:
    lines = ["class            support  precision  recall    f1        paper_fpr  std_fpr"]

    def fmt(v):
        return "    -    " if v is None else f"{v:9.4f}"

    for row in rep.per_class:
        lines.append(
            f"{row.class_name:<16s} {row.support:7d}  {fmt(row.precision)}  {fmt(row.recall)}"
            f"  {fmt(row.f1)}  {fmt(row.paper_fpr)}  {fmt(row.standard_fpr)}"
        )
    acc = "-" if rep.accuracy is None else f"{rep.accuracy:.4f}"
    lines.append(f"accuracy: {acc}")
    return lines


def cmd_evaluate(args) -> int:
    bundle = load_bundle(args.bundle)
    if args.threshold is not None:
        bundle = with_rule(bundle, RuleConfig(threshold=args.threshold, normal_class=bundle.rule.normal_class))
    ds, _ = _load_data(args)
    if args.cap is not None:
        ds = subsample(ds, args.cap, args.seed)
    rep = evaluate_bundle(bundle, ds)

    def predict(x: np.ndarray) -> np.ndarray:
        return predict_proba_batch(bundle, x.reshape(1, -1))[0]

    prof = profile(predict, ds, bundle.class_names)
    for line in _report_lines(rep):
        print(line)
    if args.out:
        doc = {"report": rep.as_dict(), "profile": prof.to_dict()}
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        print(f"report written to {args.out}", file=sys.stderr)
    return 0


def cmd_classify(args) -> int:
    bundle = load_bundle(args.bundle)
    if args.threshold is not None:
        bundle = with_rule(bundle, RuleConfig(threshold=args.threshold, normal_class=bundle.rule.normal_class))
    ds, _ = _load_data(args, allow_empty=True)
    out_fh = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        if len(ds):
            probs = predict_proba_batch(bundle, ds.features)
            for i in range(len(ds)):
                verdict = classify(bundle.rule, probs[i], bundle.class_names)
                record = {
                    "kind": verdict.kind.value,
                    "class": verdict.class_name,
                    "probs": [float(p) for p in probs[i]],
                }
                out_fh.write(json.dumps(record) + "\n")
    finally:
        if out_fh is not sys.stdout:
            out_fh.close()
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .quarantine import QuarantineStore
    from .service import ServiceState, create_app

    bundle = load_bundle(args.bundle)
    if args.threshold is not None:
        bundle = with_rule(bundle, RuleConfig(threshold=args.threshold, normal_class=bundle.rule.normal_class))
    host, port = _parse_listen(args.listen)

    base_train = None
    if args.data:
        label_map = load_label_map(args.label_map) if args.label_map else None
        base_train, _ = ingest_csv(args.data, schema=args.schema, label_map=label_map)

    # Refuse a busy port before uvicorn swallows the error.
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((host, port))
    except OSError as exc:
        raise CliError(f"cannot listen on {host}:{port}: {exc}")
    finally:
        probe.close()

    store = QuarantineStore(args.quarantine_log)
    state = ServiceState(
        bundle,
        store,
        base_train=base_train,
        bundle_path=args.bundle,
        min_new_samples=args.min_new_samples,
        default_epochs=args.epochs,
        default_seed=args.seed,
        default_batch_size=args.batch_size,
    )
    app = create_app(state)
    server = uvicorn.Server(uvicorn.Config(app, host=host, port=port, log_level="warning"))

    # Own the termination signals: uvicorn re-raises them after its graceful
    # shutdown, which would kill the process mid-cleanup and spoil the exit
    # code. Setting should_exit covers both the first delivery and the replay.
    def handle_stop(signum, frame):
        server.should_exit = True

    previous = {
        sig: signal.signal(sig, handle_stop) for sig in (signal.SIGTERM, signal.SIGINT)
    }
    print(f"serving on http://{host}:{port} (classes: {', '.join(bundle.class_names)})")
    try:
        server.run()
    finally:
        for sig, handler in previous.items():
            signal.signal(sig, handler)
        store.close()
    return 0


def main(argv=None) -> int:
    try:
        parser = _build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FlowsentryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
