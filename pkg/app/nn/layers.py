"""Dense and LSTM layers with analytic backward passes.

Every forward returns its output together with a cache; the matching
backward consumes that cache, so forward passes never mutate the layer.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from app.exceptions import DimensionError
from .activations import get_activation, sigmoid


def _glorot_uniform(rng: np.random.Generator, n_out: int, n_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_out, n_in))


class DenseCache(NamedTuple):
    """Values kept from a dense forward pass."""

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    single: bool


@dataclass
class DenseLayer:
    """y = act(W x + b), weights shaped (out, in)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "linear"

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise DimensionError(
                f"Dense weights {self.weights.shape} and bias {self.bias.shape} do not match"
            )
        self._act, self._act_grad = get_activation(self.activation)

    @classmethod
    def initialize(
        cls, n_in: int, n_out: int, activation: str, rng: np.random.Generator
    ) -> "DenseLayer":
        return cls(
            weights=_glorot_uniform(rng, n_out, n_in),
            bias=np.zeros(n_out),
            activation=activation,
        )

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights.shape[0]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, DenseCache]:
        """Apply the layer to a vector or a batch of row vectors."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        x2 = x[None, :] if single else x
        if x2.ndim != 2 or x2.shape[1] != self.input_dim:
            raise DimensionError(
                f"Dense layer expects input dim {self.input_dim}, got shape {x.shape}"
            )
        z = x2 @ self.weights.T + self.bias
        y = self._act(z)
        return (y[0] if single else y), DenseCache(x2, z, y, single)

    def backward(
        self, cache: DenseCache, grad_out: np.ndarray
    ) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        """Return (dL/dx, {"weights": dL/dW, "bias": dL/db})."""
        grad_out = np.asarray(grad_out, dtype=np.float64)
        dy = grad_out[None, :] if cache.single else grad_out
        if dy.shape != cache.y.shape:
            raise DimensionError(
                f"Gradient shape {grad_out.shape} does not match output {cache.y.shape}"
            )
        dz = dy * self._act_grad(cache.z, cache.y)
        grads = {"weights": dz.T @ cache.x, "bias": dz.sum(axis=0)}
        dx = dz @ self.weights
        return (dx[0] if cache.single else dx), grads

    def parameters(self) -> dict[str, np.ndarray]:
        return {"weights": self.weights, "bias": self.bias}


def dense_forward(layer: DenseLayer, x: np.ndarray) -> tuple[np.ndarray, DenseCache]:
    """Forward pass of one dense layer, with the cache needed for backward."""
    return layer.forward(x)


class LstmCache(NamedTuple):
    """Values kept from one LSTM step."""

    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    tanh_c: np.ndarray


@dataclass
class LstmCell:
    """Single LSTM layer. Gate blocks are stacked in the order input, forget, output, candidate."""

    input_weights: np.ndarray  # (4h, in)
    recurrent_weights: np.ndarray  # (4h, h)
    bias: np.ndarray  # (4h,)

    def __post_init__(self) -> None:
        self.input_weights = np.asarray(self.input_weights, dtype=np.float64)
        self.recurrent_weights = np.asarray(self.recurrent_weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        four_h = self.recurrent_weights.shape[0]
        if (
            four_h % 4 != 0
            or self.recurrent_weights.shape != (four_h, four_h // 4)
            or self.input_weights.shape[0] != four_h
            or self.bias.shape != (four_h,)
        ):
            raise DimensionError(
                f"Inconsistent LSTM shapes: W{self.input_weights.shape} "
                f"U{self.recurrent_weights.shape} b{self.bias.shape}"
            )

    @classmethod
    def initialize(cls, n_in: int, hidden: int, rng: np.random.Generator) -> "LstmCell":
        """Per-gate Glorot bounds; forget-gate bias starts at 1."""
        input_weights = np.vstack([_glorot_uniform(rng, hidden, n_in) for _ in range(4)])
        recurrent_weights = np.vstack([_glorot_uniform(rng, hidden, hidden) for _ in range(4)])
        bias = np.zeros(4 * hidden)
        bias[hidden:2 * hidden] = 1.0
        return cls(input_weights, recurrent_weights, bias)

    @property
    def input_dim(self) -> int:
        return self.input_weights.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.recurrent_weights.shape[1]

    def zero_state(self, batch: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        shape = (self.hidden_size,) if batch is None else (batch, self.hidden_size)
        return np.zeros(shape), np.zeros(shape)

    def step(
        self, x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, LstmCache]:
        """One recurrence for a vector or a batch of rows."""
        x = np.asarray(x, dtype=np.float64)
        h_prev = np.asarray(h_prev, dtype=np.float64)
        c_prev = np.asarray(c_prev, dtype=np.float64)
        if x.shape[-1] != self.input_dim:
            raise DimensionError(f"LSTM expects input dim {self.input_dim}, got {x.shape}")
        if h_prev.shape[-1] != self.hidden_size or c_prev.shape != h_prev.shape:
            raise DimensionError(
                f"LSTM state shapes {h_prev.shape}/{c_prev.shape} do not match hidden size "
                f"{self.hidden_size}"
            )
        if x.shape[:-1] != h_prev.shape[:-1]:
            raise DimensionError(f"Batch mismatch between x {x.shape} and state {h_prev.shape}")

        n = self.hidden_size
        z = x @ self.input_weights.T + h_prev @ self.recurrent_weights.T + self.bias
        i = sigmoid(z[..., :n])
        f = sigmoid(z[..., n:2 * n])
        o = sigmoid(z[..., 2 * n:3 * n])
        g = np.tanh(z[..., 3 * n:])
        c = f * c_prev + i * g
        tanh_c = np.tanh(c)
        h = o * tanh_c
        return h, c, LstmCache(x, h_prev, c_prev, i, f, o, g, tanh_c)

    def step_backward(
        self, cache: LstmCache, dh: np.ndarray, dc_next: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict[str, np.ndarray]]:
        """Return (dx, dh_prev, dc_prev, parameter grads) for one step."""
        x, h_prev, c_prev, i, f, o, g, tanh_c = cache
        do = dh * tanh_c
        dc = dc_next + dh * o * (1.0 - tanh_c * tanh_c)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_prev = dc * f
        dz = np.concatenate(
            [di * i * (1.0 - i), df * f * (1.0 - f), do * o * (1.0 - o), dg * (1.0 - g * g)],
            axis=-1,
        )
        dz2 = np.atleast_2d(dz)
        grads = {
            "input_weights": dz2.T @ np.atleast_2d(x),
            "recurrent_weights": dz2.T @ np.atleast_2d(h_prev),
            "bias": dz2.sum(axis=0),
        }
        dx = dz @ self.input_weights
        dh_prev = dz @ self.recurrent_weights
        return dx, dh_prev, dc_prev, grads

    def forward_sequence(
        self,
        xs: np.ndarray,
        h0: np.ndarray | None = None,
        c0: np.ndarray | None = None,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[LstmCache]]:
        """Unroll over xs shaped (batch, time, in). Returns (hs, h_T, c_T, caches)."""
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim != 3:
            raise DimensionError(f"Sequence input must be (batch, time, in), got {xs.shape}")
        batch, steps, _ = xs.shape
        zero_h, zero_c = self.zero_state(batch)
        h = zero_h if h0 is None else h0
        c = zero_c if c0 is None else c0
        hs = np.empty((batch, steps, self.hidden_size))
        caches = []
        for t in range(steps):
            h, c, cache = self.step(xs[:, t, :], h, c)
            hs[:, t, :] = h
            caches.append(cache)
        return hs, h, c, caches

    def backward_sequence(
        self,
        caches: list[LstmCache],
        dhs: np.ndarray | None,
        dh_last: np.ndarray | None = None,
        dc_last: np.ndarray | None = None,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict[str, np.ndarray]]:
        """Backpropagation through time.

        dhs holds gradients on every emitted hidden state (or None), dh_last/dc_last
        gradients on the final state handed to another layer.
        Returns (dxs, dh0, dc0, parameter grads).
        """
        batch = caches[0].x.shape[0]
        steps = len(caches)
        dh_next = np.zeros((batch, self.hidden_size)) if dh_last is None else dh_last
        dc_next = np.zeros((batch, self.hidden_size)) if dc_last is None else dc_last
        dxs = np.empty((batch, steps, self.input_dim))
        grads = {name: np.zeros_like(value) for name, value in self.parameters().items()}
        for t in reversed(range(steps)):
            dh = dh_next if dhs is None else dhs[:, t, :] + dh_next
            dx, dh_next, dc_next, step_grads = self.step_backward(caches[t], dh, dc_next)
            dxs[:, t, :] = dx
            for name, value in step_grads.items():
                grads[name] += value
        return dxs, dh_next, dc_next, grads

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            "input_weights": self.input_weights,
            "recurrent_weights": self.recurrent_weights,
            "bias": self.bias,
        }


def lstm_step(
    cell: LstmCell, x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """One LSTM recurrence, returning (h, c)."""
    h, c, _ = cell.step(x, h_prev, c_prev)
    return h, c
