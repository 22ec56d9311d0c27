"""Pure-numpy kernels: the reference implementation of the hot training ops.

Matrix products are done with BLAS by the caller; these kernels cover
the elementwise stages (activation, dropout, softmax, loss, parameter
updates). The compiled backend mirrors this interface with fused
single-pass loops.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

LOSS_EPS = 1e-12


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0)


def relu_dropout(z: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """max(z, 0) * mask; mask entries are 0 or the inverted-dropout scale."""
    return np.maximum(z, 0) * mask


def relu_backward(d_out: np.ndarray, z: np.ndarray) -> np.ndarray:
    return d_out * (z > 0)


def relu_dropout_backward(d_out: np.ndarray, z: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return d_out * mask * (z > 0)


def apply_mask(a: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return a * mask


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by max subtraction."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    np.exp(shifted, out=shifted)
    shifted /= shifted.sum(axis=1, keepdims=True)
    return shifted


def nll_loss(probs: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-probability of the true classes, clamped at 1e-12."""
    p = probs[np.arange(probs.shape[0]), y]
    return float(np.mean(-np.log(np.maximum(p, LOSS_EPS))))


def softmax_xent_backward(probs: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of mean cross-entropy w.r.t. logits: (P - onehot(y)) / N."""
    n = probs.shape[0]
    d = probs / probs.dtype.type(n)
    d[np.arange(n), y] -= probs.dtype.type(1.0) / probs.dtype.type(n)
    return d


def sgd_step(w: np.ndarray, g: np.ndarray, lr: float) -> None:
    """In-place w -= lr * g on flat views."""
    w -= w.dtype.type(lr) * g


def adam_step(
    w: np.ndarray,
    g: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    step: int,
) -> None:
    """In-place Adam update with bias correction; ``step`` is 1-based."""
    dt = w.dtype.type
    b1, b2 = dt(beta1), dt(beta2)
    m *= b1
    m += (dt(1.0) - b1) * g
    v *= b2
    v += (dt(1.0) - b2) * g * g
    m_hat = m / dt(1.0 - beta1**step)
    v_hat = v / dt(1.0 - beta2**step)
    w -= dt(lr) * m_hat / (np.sqrt(v_hat) + dt(eps))
