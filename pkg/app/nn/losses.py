"""Losses returning (value, gradient w.r.t. the prediction)."""

import numpy as np

from app.exceptions import DimensionError

BCE_EPSILON = 1e-7


def binary_cross_entropy(y: np.ndarray, yhat: np.ndarray) -> tuple[float, np.ndarray]:
    """Summed multi-label cross entropy.

    L = -sum(y log yhat + (1 - y) log(1 - yhat)) with yhat clamped to
    [eps, 1 - eps]. Works on a single vector or a batch; a batch loss is the
    sum over every label of every row.
    """
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape:
        raise DimensionError(f"BCE shapes differ: y{y.shape} vs yhat{yhat.shape}")
    p = np.clip(yhat, BCE_EPSILON, 1.0 - BCE_EPSILON)
    loss = -float(np.sum(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
    grad = -y / p + (1.0 - y) / (1.0 - p)
    return loss, grad


def mean_squared_error(x: np.ndarray, xhat: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean of squared element differences and its gradient in xhat."""
    x = np.asarray(x, dtype=np.float64)
    xhat = np.asarray(xhat, dtype=np.float64)
    if x.shape != xhat.shape:
        raise DimensionError(f"MSE shapes differ: x{x.shape} vs xhat{xhat.shape}")
    diff = xhat - x
    n = max(diff.size, 1)
    return float(np.sum(diff * diff) / n), 2.0 * diff / n
