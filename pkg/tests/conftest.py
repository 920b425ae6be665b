"""Shared fixtures: synthetic blob problems and a trained mini-pipeline.

The expensive trained bundle is session-scoped; tests that mutate state
(quarantine, retrain) build their own service around it instead of
mutating shared pieces.
"""

import csv

import numpy as np
import pytest

from flowsentry.dataset import ingest_csv
from flowsentry.neural.train import TrainConfig
from flowsentry.pipeline import fit_pipeline
from flowsentry.ruleset import RuleConfig

CLASSES = ("Normal", "DoS", "Patator", "Portscan", "WebAttack")
WIDTH = 78


def blob_center(c: int, width: int = WIDTH) -> np.ndarray:
    center = np.zeros(width)
    center[c * 5 : (c + 1) * 5] = 4.0
    return center


def make_blobs(n_per: int, seed: int, scale: float = 0.6):
    """Well-separated Gaussian clusters, one per class, in flow-feature space."""
    rng = np.random.default_rng(seed)
    xs, labels = [], []
    for c, name in enumerate(CLASSES):
        xs.append(rng.normal(loc=blob_center(c), scale=scale, size=(n_per, WIDTH)))
        labels.extend([name] * n_per)
    x = np.vstack(xs)
    order = rng.permutation(len(labels))
    return x[order], [labels[i] for i in order]


def novel_cluster(n: int, seed: int, scale: float = 0.3) -> np.ndarray:
    """Flows from a class the blob model never saw.

    Centered on the midpoint of the first two training blobs, so the
    model's probability mass splits between them and stays under the
    verdict threshold.
    """
    center = (blob_center(0) + blob_center(1)) / 2.0
    return np.random.default_rng(seed).normal(loc=center, scale=scale, size=(n, WIDTH))


def write_flow_csv(path, features, labels=None, feature_names=None):
    names = feature_names or [f"f{i}" for i in range(features.shape[1])]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + (["Label"] if labels is not None else []))
        for i in range(features.shape[0]):
            row = [repr(float(v)) for v in features[i]]
            if labels is not None:
                row.append(labels[i])
            writer.writerow(row)
    return path


@pytest.fixture(scope="session")
def blob_csv(tmp_path_factory):
    x, labels = make_blobs(n_per=200, seed=11)
    path = tmp_path_factory.mktemp("data") / "blobs.csv"
    return str(write_flow_csv(path, x, labels))


@pytest.fixture(scope="session")
def blob_dataset(blob_csv):
    ds, _ = ingest_csv(blob_csv)
    return ds


@pytest.fixture(scope="session")
def blob_fit(blob_dataset):
    config = TrainConfig(epochs=300, batch_size=64, seed=2017, hidden_dims=(32, 32, 32))
    return fit_pipeline(blob_dataset, config, rule=RuleConfig())


@pytest.fixture(scope="session")
def blob_bundle(blob_fit):
    return blob_fit.bundle


@pytest.fixture(scope="session")
def blob_bundle_file(tmp_path_factory, blob_bundle):
    from flowsentry.bundle import save_bundle

    path = tmp_path_factory.mktemp("bundles") / "blobs.bundle"
    save_bundle(blob_bundle, str(path))
    return str(path)
