from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .tensor import NonFiniteError, Tape, Tensor, backward


class Adam:
    """Adam with bias correction. Updates parameter buffers in place."""

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads: Mapping[Tensor, np.ndarray] | Sequence[np.ndarray], lr: float | None = None) -> None:
        if isinstance(grads, Mapping):
            gs = [grads.get(p) for p in self.params]
            gs = [np.zeros_like(p.data) if g is None else g for p, g in zip(self.params, gs)]
        else:
            gs = list(grads)
        if len(gs) != len(self.params):
            raise ValueError("one gradient per parameter required")
        for p, g in zip(self.params, gs):
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
            if not np.isfinite(g).all():
                raise NonFiniteError(f"non-finite gradient for {p!r}")
        lr = self.lr if lr is None else lr
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.step_count
        c2 = 1.0 - b2 ** self.step_count
        for p, g, m, v in zip(self.params, gs, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.data -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def minimize(self, loss_fn, lr: float | None = None) -> float:
        """Record ``loss_fn()``, backpropagate into this optimizer's parameters, take one step."""
        with Tape() as tape:
            loss = loss_fn()
        self.step(backward(tape, loss, wrt=self.params), lr)
        return float(loss.data)

    def state_dict(self) -> dict:
        return {
            "step": self.step_count,
            "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
            "m": [a.copy() for a in self.m],
            "v": [a.copy() for a in self.v],
        }

    def load_state_dict(self, state: dict) -> None:
        if len(state["m"]) != len(self.params):
            raise ValueError("optimizer state does not match parameter list")
        self.step_count = int(state["step"])
        self.lr, self.beta1, self.beta2, self.eps = (float(state[k]) for k in ("lr", "beta1", "beta2", "eps"))
        self.m = [np.array(a, dtype=np.float64) for a in state["m"]]
        self.v = [np.array(a, dtype=np.float64) for a in state["v"]]


def polyak_update(target: Sequence[Tensor], online: Sequence[Tensor], rate: float) -> None:
    """target <- (1 - rate) * target + rate * online, in place."""
    if not 0.0 < rate <= 1.0:
        raise ValueError("polyak rate must lie in (0, 1]")
    if len(target) != len(online):
        raise ValueError("parameter lists differ in length")
    for t, o in zip(target, online):
        if t.shape != o.shape:
            raise ValueError(f"shape mismatch {t.shape} vs {o.shape}")
        t.data *= 1.0 - rate
        t.data += rate * o.data
