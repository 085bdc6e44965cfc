"""Element-wise activations and their derivatives."""

from typing import Callable

import numpy as np

from app.exceptions import ConfigurationError


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _linear(z: np.ndarray) -> np.ndarray:
    return z


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


# Derivatives take (pre-activation, activation) so each can use the cheaper one.
def _linear_grad(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.ones_like(z)


def _tanh_grad(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    return 1.0 - y * y


def _sigmoid_grad(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    return y * (1.0 - y)


def _relu_grad(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (z > 0).astype(np.float64)


ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    "linear": (_linear, _linear_grad),
    "tanh": (np.tanh, _tanh_grad),
    "sigmoid": (sigmoid, _sigmoid_grad),
    "relu": (_relu, _relu_grad),
}


def get_activation(name: str) -> tuple[Callable, Callable]:
    """Return (function, derivative) for an activation name."""
    if name not in ACTIVATIONS:
        raise ConfigurationError(
            f"Unknown activation: {name}. Valid: {list(ACTIVATIONS.keys())}"
        )
    return ACTIVATIONS[name]
