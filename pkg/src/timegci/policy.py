"""Squashed-Gaussian transition policy over [0, 1]-scaled features.

z ~ N(mean(h), diag(std(h)^2)),  x = (tanh(z) + 1) / 2.
"""
from __future__ import annotations

import numpy as np

from . import nd
from .data import clip_interior
from .networks import HistoryState, RecurrentNet
from .nd import Tensor

LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0
_LOG2 = np.log(2.0)
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def squash(z):
    return 0.5 * (np.tanh(z) + 1.0)


def unsquash(x):
    return np.arctanh(2.0 * np.asarray(x) - 1.0)


def log_squash_jacobian(z) -> Tensor:
    """log |dx/dz| = log 2 - 2z - 2 softplus(-2z), per feature."""
    z = nd.as_tensor(z)
    return _LOG2 - 2.0 * z - 2.0 * nd.softplus(-2.0 * z)


def squashed_log_prob(z, mean, log_std) -> Tensor:
    """log density of x = squash(z) under the squashed Gaussian, summed over the last axis."""
    z = nd.as_tensor(z)
    u = (z - mean) * nd.exp(-nd.as_tensor(log_std))
    per = -0.5 * nd.square(u) - log_std - _HALF_LOG_2PI - log_squash_jacobian(z)
    return per.sum(axis=-1)


def _reparam_log_prob(eps: np.ndarray, z: Tensor, log_std: Tensor) -> Tensor:
    per = -0.5 * eps * eps - log_std - _HALF_LOG_2PI - log_squash_jacobian(z)
    return per.sum(axis=-1)


class PolicyNet(RecurrentNet):
    def __init__(self, D: int, rng: np.random.Generator, hidden: int = 32, head_hidden=(32, 32)):
        super().__init__(D, hidden, 2 * D, rng, hidden, head_hidden)

    def dist(self, hidden) -> tuple[Tensor, Tensor]:
        out = nd.mlp_head(self.head, hidden)
        D = self.D
        return out[..., :D], nd.clip(out[..., D:], LOG_STD_MIN, LOG_STD_MAX)

    # -- single history --------------------------------------------------

    def action_dist(self, h: HistoryState) -> tuple[Tensor, Tensor]:
        return self.dist(self.own_state(h).hidden)

    def sample_action(self, h: HistoryState, rng: np.random.Generator) -> tuple[np.ndarray, float]:
        with nd.no_grad():
            mean, log_std = self.action_dist(h)
            eps = rng.standard_normal(self.D)
            z = mean.data + np.exp(log_std.data) * eps
            lp = _reparam_log_prob(eps, Tensor(z), log_std)
        return squash(z), float(lp.data)

    def log_density(self, h: HistoryState, x) -> Tensor:
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0) or np.any(x >= 1.0):
            raise ValueError("x must lie strictly inside (0, 1) for the squashed density")
        mean, log_std = self.action_dist(h)
        return squashed_log_prob(unsquash(x), mean, log_std)

    def rollout(self, T: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """One open-loop trajectory (T, D) and its per-step log-probabilities."""
        if T < 1:
            raise ValueError("T must be >= 1")
        h = self.init_history(T)
        xs, lps = [], []
        for _ in range(T):
            x, lp = self.sample_action(h, rng)
            xs.append(x)
            lps.append(lp)
            h = self.advance(h, x)
        return np.array(xs), np.array(lps)

    # -- batched ----------------------------------------------------------

    def sample(self, n: int, T: int, rng: np.random.Generator, prefix: np.ndarray | None = None,
               deterministic: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Open-loop rollouts, batched over ``n``.

        With ``prefix`` (n, K, D) the encoder first consumes the given history and
        ``T`` further steps are sampled. Returns (n, T, D) samples and (n, T)
        log-probabilities.
        """
        if T < 1:
            raise ValueError("T must be >= 1")
        H = self.hidden
        h = np.zeros((n, H))
        c = np.zeros((n, H))
        xs = np.empty((n, T, self.D))
        lps = np.empty((n, T))
        with nd.no_grad():
            if prefix is not None and prefix.shape[1] > 0:
                hs, cs = nd.lstm_sequence(self.encoder, prefix)
                h, c = hs.data[:, -1], cs[:, -1]
            for t in range(T):
                mean, log_std = self.dist(h)
                eps = np.zeros((n, self.D)) if deterministic else rng.standard_normal((n, self.D))
                z = mean.data + np.exp(log_std.data) * eps
                lps[:, t] = _reparam_log_prob(eps, Tensor(z), log_std).data
                x = squash(z)
                xs[:, t] = x
                if t < T - 1:
                    hn, cn = nd.lstm_step(self.encoder, x, (h, c))
                    h, c = hn.data, cn.data
        return xs, lps

    def sample_at(self, trajs: np.ndarray, cutoffs: np.ndarray, rng: np.random.Generator,
                  n_samples: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """No-grad draws x ~ pi(.|h_t) for each (trajectory, cutoff) row: (K, B, D), (K, B)."""
        with nd.no_grad():
            mean, log_std = self.dist(self.history_hidden(trajs, cutoffs))
            eps = rng.standard_normal((n_samples,) + mean.shape)
            z = mean.data + np.exp(log_std.data) * eps
            lp = _reparam_log_prob(eps, Tensor(z), log_std).data
        return squash(z), lp

    def step_log_probs(self, trajs: np.ndarray) -> Tensor:
        """Teacher-forced log pi(x_t | h_t), shape (B, T). Inputs are clipped off {0, 1}."""
        trajs = clip_interior(np.asarray(trajs, dtype=np.float64))
        hs = self.encode(trajs, trajs.shape[1] - 1)
        mean, log_std = self.dist(hs)
        return squashed_log_prob(unsquash(trajs), mean, log_std)

    def log_prob_trajectories(self, trajs: np.ndarray) -> Tensor:
        return self.step_log_probs(trajs).sum(axis=-1)


def mle_loss(policy: PolicyNet, batch: np.ndarray) -> Tensor:
    """Negative mean per-step log-likelihood under teacher forcing."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 3 or batch.shape[0] == 0:
        raise ValueError("batch must be a non-empty (M, T, D) array")
    return -policy.step_log_probs(batch).mean()


def actor_loss(policy: PolicyNet, critic, trajectories: np.ndarray, cutoffs: np.ndarray,
               alpha: float, rng: np.random.Generator | None = None, n_samples: int = 1,
               noise: np.ndarray | None = None) -> Tensor:
    """Mean over histories of alpha * log pi(x|h) - Q(h, x) with reparameterized x ~ pi(.|h).

    ``critic`` must expose ``score_at(trajs, cutoffs, actions)``; it is used
    through a frozen view so no gradient reaches it. ``noise`` of shape
    (n_samples, B, D) overrides the draws from ``rng``.
    """
    trajectories = np.asarray(trajectories, dtype=np.float64)
    cutoffs = np.asarray(cutoffs)
    B = len(cutoffs)
    if B == 0:
        raise ValueError("empty history batch")
    if noise is None:
        noise = rng.standard_normal((n_samples, B, policy.D))
    hid = policy.history_hidden(trajectories, cutoffs)
    mean, log_std = policy.dist(hid)
    z = mean + nd.exp(log_std) * noise
    logp = _reparam_log_prob(noise, z, log_std)
    x = 0.5 * (nd.tanh(z) + 1.0)
    q_net = critic.frozen() if hasattr(critic, "frozen") else critic
    q = q_net.score_at(trajectories, cutoffs, x)
    return (alpha * logp - q).mean()
