"""Central finite-difference verification of analytic gradients."""

from typing import Callable

import numpy as np

from app.exceptions import NumericError

Params = dict[str, np.ndarray]
LossAndGrads = Callable[[Params], tuple[float, Params]]


def gradient_check(fn: LossAndGrads, params: Params, step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Args:
        fn: Maps a parameter dict to (scalar loss, gradient dict)
        params: Point at which to check; not modified
        step: Finite-difference step

    Returns:
        max over all entries of |ga - gfd| / max(1e-8, |ga| + |gfd|)
    """
    work = {name: np.array(value, dtype=np.float64, copy=True) for name, value in params.items()}
    loss, analytic = fn(work)
    if not np.isfinite(loss):
        raise NumericError("Non-finite loss at the checked point")

    worst = 0.0
    for name, value in work.items():
        grad = analytic.get(name, np.zeros_like(value))
        flat = value.reshape(-1)
        grad_flat = np.asarray(grad, dtype=np.float64).reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + step
            plus, _ = fn(work)
            flat[idx] = original - step
            minus, _ = fn(work)
            flat[idx] = original
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise NumericError(f"Non-finite loss while perturbing {name}[{idx}]")
            numeric = (plus - minus) / (2.0 * step)
            denom = max(1e-8, abs(grad_flat[idx]) + abs(numeric))
            worst = max(worst, abs(grad_flat[idx] - numeric) / denom)
    return worst
