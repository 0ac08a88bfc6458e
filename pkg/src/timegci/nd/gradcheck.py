"""Central finite differences, used as the independent oracle for backward()."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tape, Tensor, backward


def numerical_grad(fn: Callable[[], float], param: Tensor, h: float = 1e-5) -> np.ndarray:
    g = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    gflat = g.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + h
        fp = fn()
        flat[k] = orig - h
        fm = fn()
        flat[k] = orig
        gflat[k] = (fp - fm) / (2.0 * h)
    return g


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b|| / max(||a||, ||b||), with a floor so all-zero pairs compare as 0."""
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-10)
    return float(np.linalg.norm(a - b) / denom)


def check_gradients(loss_fn: Callable[[], Tensor], params: Sequence[Tensor], h: float = 1e-5) -> dict[str, float]:
    """Max relative error per parameter between backward() and finite differences.

    ``loss_fn`` builds the scalar loss from the current parameter values; it
    must be deterministic (freeze any noise outside of it).
    """
    with Tape() as tape:
        loss = loss_fn()
    grads = backward(tape, loss, wrt=params)

    def value() -> float:
        return float(loss_fn().data)

    report = {}
    for k, p in enumerate(params):
        num = numerical_grad(value, p, h)
        report[p.name or f"param{k}"] = relative_error(grads[p], num)
    return report
