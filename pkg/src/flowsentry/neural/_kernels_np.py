"""Pure-NumPy implementation of the hot numeric kernels.

This is the fallback backend; `_kernels_cy` implements the same interface
in Cython. Both operate on C-contiguous float64 arrays and must stay
numerically interchangeable (see tests/test_kernels.py for the parity
contract).
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def affine(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """z = x @ w.T + b for x (n, fin), w (fout, fin), b (fout,)."""
    return x @ w.T + b


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def relu_backward_inplace(dz: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Zero the gradient wherever the unit was inactive (z <= 0)."""
    dz[z <= 0.0] = 0.0
    return dz


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting each row's max logit."""
    shifted = z - z.max(axis=1, keepdims=True)
    np.exp(shifted, out=shifted)
    shifted /= shifted.sum(axis=1, keepdims=True)
    return shifted


def affine_grads(
    delta: np.ndarray, a_prev: np.ndarray, w: np.ndarray, need_da: bool = True
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Gradients of an affine layer given the upstream delta (n, fout)."""
    gw = delta.T @ a_prev
    gb = delta.sum(axis=0)
    da = delta @ w if need_da else None
    return gw, gb, da


def adam_update_inplace(
    p: np.ndarray,
    g: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    t: int,
) -> None:
    """One bias-corrected Adam update, in place on p, m, v. t is 1-based."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)
