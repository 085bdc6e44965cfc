"""Adam optimizer as a pure function over (state, params, grads)."""

from dataclasses import dataclass, field

import numpy as np

from app.exceptions import DimensionError, NumericError

Params = dict[str, np.ndarray]


@dataclass
class AdamState:
    """Moment accumulators keyed by parameter name."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    step: int = 0
    first_moment: Params = field(default_factory=dict)
    second_moment: Params = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: Params, learning_rate: float = 1e-3, **kwargs) -> "AdamState":
        return cls(
            learning_rate=learning_rate,
            first_moment={name: np.zeros_like(value) for name, value in params.items()},
            second_moment={name: np.zeros_like(value) for name, value in params.items()},
            **kwargs,
        )


def adam_step(state: AdamState, params: Params, grads: Params) -> tuple[Params, AdamState]:
    """One bias-corrected Adam update.

    Neither the input state nor the input arrays are modified; the caller
    receives fresh parameter arrays and a fresh state.
    """
    for name, grad in grads.items():
        if name not in params:
            raise DimensionError(f"Gradient for unknown parameter {name}")
        if grad.shape != params[name].shape:
            raise DimensionError(
                f"Gradient shape {grad.shape} does not match parameter {name} {params[name].shape}"
            )
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"Non-finite gradient for parameter {name}")

    step = state.step + 1
    new_params: Params = {}
    first: Params = {}
    second: Params = {}
    for name, value in params.items():
        grad = grads.get(name)
        m_prev = state.first_moment.get(name, np.zeros_like(value))
        v_prev = state.second_moment.get(name, np.zeros_like(value))
        if grad is None:
            new_params[name] = value.copy()
            first[name], second[name] = m_prev.copy(), v_prev.copy()
            continue
        m = state.beta1 * m_prev + (1.0 - state.beta1) * grad
        v = state.beta2 * v_prev + (1.0 - state.beta2) * grad * grad
        m_hat = m / (1.0 - state.beta1**step)
        v_hat = v / (1.0 - state.beta2**step)
        new_params[name] = value - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
        first[name], second[name] = m, v

    new_state = AdamState(
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
        step=step,
        first_moment=first,
        second_moment=second,
    )
    return new_params, new_state
