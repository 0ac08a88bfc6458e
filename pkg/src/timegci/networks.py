"""Shared LSTM-encoder + MLP-head machinery for the policy, energy and critic nets.

Each network owns its encoder; histories are always re-encoded from raw
prefixes by the network that consumes them.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from . import nd
from .nd import LSTMParams, MLPParams, Tensor


@dataclass(frozen=True)
class HistoryState:
    """Encoder state after consuming x_1..x_{t-1}; ``t`` is the next step index.

    ``prefix`` keeps the raw inputs so another network (encoders are not
    shared) can recompute its own state for the same history; ``owner``
    identifies the encoder that produced ``hidden``.
    """

    hidden: np.ndarray
    cell: np.ndarray
    t: int = 1
    horizon: int | None = None
    prefix: np.ndarray | None = None
    owner: int = 0


def gather_states(hs: Tensor, cutoffs: np.ndarray) -> Tensor:
    """Pick slot ``cutoff - 1`` (the state encoding h_t) for every row of ``hs``."""
    cutoffs = np.asarray(cutoffs)
    return hs[np.arange(len(cutoffs)), cutoffs - 1]


class RecurrentNet:
    def __init__(self, D: int, head_in: int, head_out: int, rng: np.random.Generator,
                 hidden: int = 32, head_hidden=(32, 32)):
        self.D = D
        self.hidden = hidden
        self.encoder = LSTMParams.init(rng, D, hidden)
        self.head = MLPParams.init(rng, head_in, head_out, head_hidden)

    # -- parameters -----------------------------------------------------

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        names = ["encoder.w_x", "encoder.w_h", "encoder.b"]
        out = list(zip(names, self.encoder.tensors()))
        for k, (w, b) in enumerate(zip(self.head.weights, self.head.biases)):
            out += [(f"head.w{k}", w), (f"head.b{k}", b)]
        return out

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for k, p in self.named_parameters():
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != p.shape:
                raise ValueError(f"{k}: shape {arr.shape} does not match {p.shape}")
            p.data[...] = arr

    def clone(self):
        return copy.deepcopy(self)

    def frozen(self):
        """View sharing parameter buffers but recording no gradients."""
        view = copy.copy(self)
        view.encoder = LSTMParams(*(Tensor(t.data) for t in self.encoder.tensors()))
        view.head = MLPParams([Tensor(w.data) for w in self.head.weights],
                              [Tensor(b.data) for b in self.head.biases])
        return view

    # -- history encoding -------------------------------------------------

    def init_history(self, horizon: int | None = None) -> HistoryState:
        z = np.zeros(self.hidden)
        return HistoryState(z, z.copy(), 1, horizon, np.zeros((0, self.D)), id(self.encoder.w_x.data))

    def own_state(self, h: HistoryState) -> HistoryState:
        """``h`` re-encoded by this network's encoder (a no-op if it already is)."""
        if h.owner == id(self.encoder.w_x.data):
            return h
        if h.prefix is None:
            raise ValueError("history state carries no prefix to re-encode")
        out = self.init_history(h.horizon)
        for x in h.prefix:
            out = self.advance(out, x)
        return out

    def advance(self, h: HistoryState, x) -> HistoryState:
        if h.horizon is not None and h.t > h.horizon:
            raise ValueError(f"history already spans the full horizon T={h.horizon}")
        h = self.own_state(h)
        x = np.asarray(x, dtype=float)
        with nd.no_grad():
            hn, cn = nd.lstm_step(self.encoder, x, (h.hidden, h.cell))
        return HistoryState(hn.data, cn.data, h.t + 1, h.horizon, np.vstack([h.prefix, x[None]]), h.owner)

    def encode(self, trajs: np.ndarray, steps: int | None = None) -> Tensor:
        """Hidden states (B, steps + 1, H); slot t encodes the first t inputs."""
        trajs = np.asarray(trajs, dtype=np.float64)
        steps = trajs.shape[1] if steps is None else steps
        if steps == 0:
            return Tensor(np.zeros((trajs.shape[0], 1, self.hidden)))
        hs, _ = nd.lstm_sequence(self.encoder, trajs[:, :steps])
        return hs

    def history_hidden(self, trajs: np.ndarray, cutoffs: np.ndarray) -> Tensor:
        """Encoder output for h_t = (x_1, ..., x_{t-1}) with t = cutoffs (1-based)."""
        cutoffs = np.asarray(cutoffs)
        hs = self.encode(trajs, int(cutoffs.max()) - 1)
        return gather_states(hs, cutoffs)


class StateActionNet(RecurrentNet):
    """Scalar head on concat(encoder(h), x): shared by the energy and the critic."""

    def __init__(self, D: int, rng: np.random.Generator, hidden: int = 32, head_hidden=(32, 32)):
        super().__init__(D, hidden + D, 1, rng, hidden, head_hidden)

    def score_hidden(self, hidden, x) -> Tensor:
        hidden, x = nd.as_tensor(hidden), nd.as_tensor(x)
        if x.shape[-1] != self.D:
            raise ValueError(f"expected feature dim {self.D}, got {x.shape[-1]}")
        if hidden.shape[:-1] != x.shape[:-1]:
            hidden = nd.broadcast_to(hidden, x.shape[:-1] + hidden.shape[-1:])
        return nd.mlp_head(self.head, nd.concat([hidden, x], axis=-1))[..., 0]

    def score(self, h: HistoryState, x) -> Tensor:
        return self.score_hidden(self.own_state(h).hidden, np.asarray(x, dtype=float) if not isinstance(x, Tensor) else x)

    def score_at(self, trajs: np.ndarray, cutoffs: np.ndarray, actions) -> Tensor:
        """Batched score of (h_t, x) for each row; ``actions`` may carry extra leading sample dims."""
        return self.score_hidden(self.history_hidden(trajs, cutoffs), actions)

    def step_scores(self, trajs: np.ndarray) -> Tensor:
        """Teacher-forced scores of every transition (h_t, x_t), shape (B, T)."""
        trajs = np.asarray(trajs, dtype=np.float64)
        T = trajs.shape[1]
        hs = self.encode(trajs, T - 1)
        return nd.mlp_head(self.head, nd.concat([hs, trajs], axis=-1))[..., 0]

