"""Timing comparison of the compiled and NumPy kernel backends.

Usage:
    python3 benchmarks/bench_kernels.py [--repeats N] [--epochs N] [--seed S]

Per-op timings cover every exported kernel at training-realistic shapes;
the end-to-end section trains the same network on the same data under
each backend and reports seconds per epoch. Backends are hot-swapped via
kernels.activate, so run this standalone, never concurrently with a
training run in the same process.
"""

import argparse
import statistics
import time

import numpy as np

from flowsentry.dataset import Dataset
from flowsentry.neural import kernels
from flowsentry.neural.train import TrainConfig
from flowsentry.pipeline import fit_pipeline

# (batch, fan_in, fan_out): small serving batch, training minibatch, wide layer
SHAPES = [(32, 78, 64), (512, 78, 64), (512, 64, 64), (2048, 128, 128)]


def time_call(fn, repeats: int) -> float:
    """Median wall time of fn() in seconds, after one warmup call."""
    fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def op_cases(rng, n, fin, fout):
    x = rng.normal(size=(n, fin))
    w = rng.normal(size=(fout, fin))
    b = rng.normal(size=fout)
    z = rng.normal(size=(n, fout))
    delta = rng.normal(size=(n, fout))
    # the optimizer works on flattened parameter vectors
    p = rng.normal(size=fout * fin)
    g = rng.normal(size=fout * fin)
    m = np.zeros_like(p)
    v = np.zeros_like(p)
    return {
        "affine": lambda: kernels.affine(x, w, b),
        "relu": lambda: kernels.relu(z),
        # the in-place ops tolerate repeat application; timing stays a
        # single pass over the buffers, so no per-call copies
        "relu_backward": lambda: kernels.relu_backward_inplace(delta, z),
        "softmax": lambda: kernels.softmax(z),
        "affine_grads": lambda: kernels.affine_grads(delta, x, w),
        "adam_update": lambda: kernels.adam_update_inplace(
            p, g, m, v, 1e-4, 0.9, 0.999, 1e-8, 3
        ),
    }


def bench_ops(backends, repeats, seed):
    print("per-op median wall time (microseconds)")
    header = f"{'op':<14} {'shape':<18}" + "".join(f" {name:>12}" for name in backends)
    if len(backends) == 2:
        header += f" {'speedup':>9}"
    print(header)
    rng = np.random.default_rng(seed)
    cases_by_shape = {shape: op_cases(rng, *shape) for shape in SHAPES}
    for shape in SHAPES:
        for op in cases_by_shape[shape]:
            row = f"{op:<14} {str(shape):<18}"
            times = []
            for name in backends:
                kernels.activate(name)
                t = time_call(cases_by_shape[shape][op], repeats)
                times.append(t)
                row += f" {t * 1e6:12.1f}"
            if len(times) == 2 and times[0] > 0:
                row += f" {times[1] / times[0]:8.2f}x"
            print(row)


def bench_epochs(backends, epochs, seed):
    print()
    print(f"end-to-end training, {epochs} epochs, 5000x78 synthetic flows")
    rng = np.random.default_rng(seed)
    n_per = 1000
    xs, labels = [], []
    for c in range(5):
        center = np.zeros(78)
        center[c * 5 : (c + 1) * 5] = 4.0
        xs.append(rng.normal(loc=center, scale=0.6, size=(n_per, 78)))
        labels.extend([f"class{c}" if c else "Normal"] * n_per)
    ds = Dataset(
        features=np.vstack(xs),
        labels=tuple(labels),
        class_names=tuple(dict.fromkeys(labels)),
    )
    config = TrainConfig(epochs=epochs, batch_size=128, seed=seed, hidden_dims=(64,) * 7)
    results = {}
    for name in backends:
        kernels.activate(name)
        t0 = time.perf_counter()
        fit = fit_pipeline(ds, config)
        dt = time.perf_counter() - t0
        results[name] = dt
        print(
            f"  {name:<8} {dt:7.2f}s total  {dt / epochs * 1e3:8.1f} ms/epoch"
            f"  (final train acc {fit.history[-1].train_acc:.4f})"
        )
    if len(results) == 2:
        a, b = (results[n] for n in backends)
        print(f"  speedup: {b / a:.2f}x ({backends[1]} time / {backends[0]} time)")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=200, help="timing samples per op")
    parser.add_argument("--epochs", type=int, default=30, help="training epochs to time")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    available = list(kernels.available_backends())
    backends = [n for n in ("cython", "numpy") if n in available]
    if backends == ["numpy"]:
        print("compiled backend not built; timing numpy alone")
    print(f"backends: {', '.join(backends)}")
    print()
    try:
        bench_ops(backends, args.repeats, args.seed)
        bench_epochs(backends, args.epochs, args.seed)
    finally:
        kernels.activate("auto")


if __name__ == "__main__":
    main()
