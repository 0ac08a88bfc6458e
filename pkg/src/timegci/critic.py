"""Soft Q-function, bootstrapped soft state value and the Bellman residual loss.

Rewards are the learned transition energies f_phi(h, x); the horizon is finite
and undiscounted, so the value after the last step is exactly zero.
"""
from __future__ import annotations

import copy

import numpy as np

from . import nd
from .networks import HistoryState, StateActionNet
from .nd import Tensor
from .replay import TransitionBatch


class CriticNet(StateActionNet):
    pass


class TwinCritic:
    """Two independent critics; scores are the elementwise minimum."""

    def __init__(self, D: int, rng: np.random.Generator, hidden: int = 32, head_hidden=(32, 32)):
        self.D = D
        self.members = [CriticNet(D, rng, hidden, head_hidden), CriticNet(D, rng, hidden, head_hidden)]

    def named_parameters(self):
        return [(f"q{k + 1}.{n}", p) for k, m in enumerate(self.members) for n, p in m.named_parameters()]

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def state_dict(self):
        return {k: p.data.copy() for k, p in self.named_parameters()}

    def load_state_dict(self, state):
        for k, m in enumerate(self.members):
            pre = f"q{k + 1}."
            m.load_state_dict({n[len(pre):]: v for n, v in state.items() if n.startswith(pre)})

    def clone(self):
        return copy.deepcopy(self)

    def frozen(self):
        view = copy.copy(self)
        view.members = [m.frozen() for m in self.members]
        return view

    def score(self, h: HistoryState, x) -> Tensor:
        return nd.minimum(*(m.score(h, x) for m in self.members))

    def score_at(self, trajs, cutoffs, actions) -> Tensor:
        return nd.minimum(*(m.score_at(trajs, cutoffs, actions) for m in self.members))


def q_value(net, h: HistoryState, x) -> Tensor:
    return net.score(h, x)


def soft_state_value(target, policy, h: HistoryState, alpha: float, rng: np.random.Generator) -> float:
    """Single-sample Q_target(h', x') - alpha log pi(x'|h'); zero past the horizon."""
    if h.horizon is not None and h.t > h.horizon:
        return 0.0
    with nd.no_grad():
        x, lp = policy.sample_action(h, rng)
        return float(target.score(h, x).data) - alpha * lp


def soft_state_values(target, policy, trajs: np.ndarray, cutoffs: np.ndarray, alpha: float,
                      rng: np.random.Generator, n_samples: int = 1) -> np.ndarray:
    """Batched bootstrap V(h_t) for histories h_t = x_1..x_{t-1}; rows with t > T get 0.

    With ``n_samples`` = K the estimate averages K independent draws of x'.
    """
    trajs = np.asarray(trajs, dtype=np.float64)
    cutoffs = np.asarray(cutoffs)
    out = np.zeros(len(cutoffs))
    live = cutoffs <= trajs.shape[1]
    if not live.any():
        return out
    tr, ct = trajs[live], cutoffs[live]
    with nd.no_grad():
        x, lp = policy.sample_at(tr, ct, rng, n_samples)
        q = target.score_at(tr, ct, x).data
    out[live] = (q - alpha * lp).mean(axis=0)
    return out


def _members(net):
    return net.members if isinstance(net, TwinCritic) else [net]


def critic_targets(target, policy, energy, batch: TransitionBatch, alpha: float,
                   rng: np.random.Generator, n_samples: int = 1) -> np.ndarray:
    """f_phi(h_t, x_t) + V(h_{t+1}), with V = 0 on terminal transitions."""
    with nd.no_grad():
        f = energy.score_at(batch.trajectories, batch.cutoffs, batch.actions).data
    nxt = np.where(batch.terminal, batch.trajectories.shape[1] + 1, batch.cutoffs + 1)
    return f + soft_state_values(target, policy, batch.trajectories, nxt, alpha, rng, n_samples)


def critic_loss(net, target, policy, energy, batch: TransitionBatch, alpha: float,
                rng: np.random.Generator, n_samples: int = 1, targets: np.ndarray | None = None) -> Tensor:
    """Mean squared soft Bellman residual; a twin critic sums the residuals of its members."""
    if len(batch.cutoffs) == 0:
        raise ValueError("empty transition batch")
    if targets is None:
        targets = critic_targets(target, policy, energy, batch, alpha, rng, n_samples)
    loss = None
    for m in _members(net):
        q = m.score_at(batch.trajectories, batch.cutoffs, batch.actions)
        term = nd.square(q - targets).mean()
        loss = term if loss is None else loss + term
    return loss
