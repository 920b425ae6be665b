"""Seeded index sampling shared by dataset splits and the training loop.

All helpers are pure functions of (inputs, seed): the same call always
returns the same indices. Returned index arrays are sorted ascending so
selections preserve the original record order.
"""

from __future__ import annotations

from typing import Hashable, Sequence

import numpy as np


def _as_rng(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _take(n: int, fraction: float) -> int:
    # round-half-up; python round() would round halves to even
    return int(n * fraction + 0.5)


def partition(
    n: int, fraction: float, seed: int | np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Split range(n) into two disjoint sorted index arrays.

    The first part receives round(fraction * n) indices.
    """
    rng = _as_rng(seed)
    perm = rng.permutation(n)
    k = _take(n, fraction)
    return np.sort(perm[:k]), np.sort(perm[k:])


def stratified_partition(
    labels: Sequence[Hashable],
    fraction: float,
    seed: int | np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-stratum split: each label group contributes round(fraction * size)
    indices to the first part.

    Strata are processed in first-appearance order so results are
    deterministic for a fixed seed.
    """
    rng = _as_rng(seed)
    groups: dict[Hashable, list[int]] = {}
    for i, label in enumerate(labels):
        groups.setdefault(label, []).append(i)

    first: list[np.ndarray] = []
    second: list[np.ndarray] = []
    for members in groups.values():
        idx = np.asarray(members, dtype=np.intp)
        perm = rng.permutation(len(idx))
        k = _take(len(idx), fraction)
        first.append(idx[perm[:k]])
        second.append(idx[perm[k:]])

    a = np.sort(np.concatenate(first)) if first else np.empty(0, dtype=np.intp)
    b = np.sort(np.concatenate(second)) if second else np.empty(0, dtype=np.intp)
    return a, b


def per_group_sample(
    labels: Sequence[Hashable],
    cap: int,
    seed: int | np.random.Generator,
) -> np.ndarray:
    """Pick min(cap, group size) indices per label group, uniformly without
    replacement, returned as one sorted index array."""
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    rng = _as_rng(seed)
    groups: dict[Hashable, list[int]] = {}
    for i, label in enumerate(labels):
        groups.setdefault(label, []).append(i)

    picks: list[np.ndarray] = []
    for members in groups.values():
        idx = np.asarray(members, dtype=np.intp)
        if len(idx) <= cap:
            picks.append(idx)
        else:
            picks.append(idx[rng.choice(len(idx), size=cap, replace=False)])
    if not picks:
        return np.empty(0, dtype=np.intp)
    return np.sort(np.concatenate(picks))
