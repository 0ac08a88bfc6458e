"""Stepwise energy f_phi, trajectory energy F_phi and the structured classifier.

The classifier compares the unnormalized model exp(F_phi - log_Z) against the
policy density p_theta(tau); everything is kept in log space.
"""
from __future__ import annotations

import numpy as np

from . import nd
from .data import clip_interior
from .networks import HistoryState, StateActionNet
from .nd import Tensor

LN2 = float(np.log(2.0))


class EnergyNet(StateActionNet):
    def __init__(self, D: int, rng: np.random.Generator, hidden: int = 32, head_hidden=(32, 32)):
        super().__init__(D, rng, hidden, head_hidden)
        self.log_Z = Tensor(np.zeros(()), requires_grad=True, name="log_Z")

    def named_parameters(self):
        return super().named_parameters() + [("log_Z", self.log_Z)]

    def frozen(self):
        view = super().frozen()
        view.log_Z = Tensor(self.log_Z.data)
        return view


def _as_batch(trajs) -> tuple[np.ndarray, bool]:
    trajs = np.asarray(trajs, dtype=np.float64)
    if trajs.ndim == 2:
        return trajs[None], True
    if trajs.ndim != 3:
        raise ValueError(f"expected (T, D) or (B, T, D), got shape {trajs.shape}")
    return trajs, False


def transition_energy(net: EnergyNet, h: HistoryState, x) -> Tensor:
    return net.score(h, x)


def trajectory_energy(net: EnergyNet, trajs, T: int | None = None) -> Tensor:
    """F_phi(tau) = sum_t f_phi(h_t, x_t), teacher-forced through the energy's own encoder."""
    batch, single = _as_batch(trajs)
    if T is not None and batch.shape[1] != T:
        raise ValueError(f"trajectory length {batch.shape[1]} does not match T={T}")
    if batch.shape[-1] != net.D:
        raise ValueError(f"expected feature dim {net.D}, got {batch.shape[-1]}")
    F = net.step_scores(batch).sum(axis=-1)
    return F[0] if single else F


def quality_scores(net: EnergyNet, trajs) -> np.ndarray:
    """Per-trajectory F_phi(tau) - log_Z, an estimate of log p_s(tau)."""
    with nd.no_grad():
        return trajectory_energy(net, trajs).data - net.log_Z.data


def _check_interior(trajs: np.ndarray) -> None:
    if np.any(trajs <= 0.0) or np.any(trajs >= 1.0):
        raise ValueError("trajectories must lie strictly inside (0, 1); clip them first")


def classifier_log_odds(energy: EnergyNet, policy, trajs) -> Tensor:
    """F_phi(tau) - log_Z - log p_theta(tau). Gradients reach phi only."""
    batch, single = _as_batch(trajs)
    _check_interior(batch)
    with nd.no_grad():
        logp = policy.log_prob_trajectories(batch).data
    out = trajectory_energy(energy, batch) - energy.log_Z - logp
    return out[0] if single else out


def classifier_prob(energy: EnergyNet, policy, trajs) -> np.ndarray:
    with nd.no_grad():
        return nd.sigmoid(classifier_log_odds(energy, policy, trajs)).data


def logistic_loss(logits_real: Tensor, logits_fake: Tensor) -> Tensor:
    """-mean log sigma(l_real) - mean log sigma(-l_fake)."""
    return -nd.log_sigmoid(logits_real).mean() - nd.log_sigmoid(-logits_fake).mean()


def energy_loss(energy: EnergyNet, policy, real, fake) -> Tensor:
    real, fake = np.asarray(real, dtype=np.float64), np.asarray(fake, dtype=np.float64)
    if len(real) == 0 or len(fake) == 0:
        raise ValueError("energy_loss needs non-empty real and fake batches")
    return logistic_loss(classifier_log_odds(energy, policy, clip_interior(real)),
                         classifier_log_odds(energy, policy, clip_interior(fake)))
