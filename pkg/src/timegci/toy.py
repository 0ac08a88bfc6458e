"""Sources with closed-form densities, used as oracles.

``ToySource`` is a squashed-Gaussian AR(1) in the pre-squash coordinate:
z_1 ~ N(m0, s^2), z_t ~ N(a + b z_{t-1}, s^2), x_t = (tanh z_t + 1) / 2,
independently per feature. Its log-density is exact, so it can stand in for
the unknown data source p_s.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .policy import squash, unsquash

_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def _log_jac(z):
    return np.log(2.0) - 2.0 * z - 2.0 * np.logaddexp(0.0, -2.0 * z)


@dataclass(frozen=True)
class ToySource:
    T: int = 2
    D: int = 1
    m0: float = 0.3
    a: float = -0.2
    b: float = 0.8
    log_std: float = -0.5

    def shifted(self, delta: float) -> "ToySource":
        """Same dynamics with every conditional mean moved by ``delta``."""
        return replace(self, m0=self.m0 + delta, a=self.a + delta)

    def _means(self, z: np.ndarray) -> np.ndarray:
        mu = np.empty_like(z)
        mu[:, 0] = self.m0
        mu[:, 1:] = self.a + self.b * z[:, :-1]
        return mu

    def step_log_probs(self, trajs, latent: bool = False) -> np.ndarray:
        """Per-step log density of x, or of the pre-squash z when ``latent``."""
        trajs = np.asarray(trajs, dtype=np.float64)
        z = unsquash(trajs)
        u = (z - self._means(z)) / np.exp(self.log_std)
        per = -0.5 * u * u - self.log_std - _HALF_LOG_2PI
        if not latent:
            per = per - _log_jac(z)
        return per.sum(axis=-1)

    def log_prob(self, trajs, latent: bool = False) -> np.ndarray:
        return self.step_log_probs(trajs, latent).sum(axis=-1)

    def sample(self, n: int, T: int | None = None, rng: np.random.Generator | None = None,
               prefix=None) -> tuple[np.ndarray, np.ndarray]:
        T = self.T if T is None else T
        z = np.empty((n, T, self.D))
        eps = rng.standard_normal((n, T, self.D))
        s = np.exp(self.log_std)
        prev = None
        for t in range(T):
            mu = self.m0 if prev is None else self.a + self.b * prev
            z[:, t] = mu + s * eps[:, t]
            prev = z[:, t]
        x = squash(z)
        # keep draws off the float boundary so densities stay finite
        x = np.clip(x, 1e-12, 1 - 1e-12)
        return x, self.step_log_probs(x)


class SineSimulator:
    """Noise-free sinusoids x = (sin(f t + phi) + 1) / 2 with known continuation."""

    def __init__(self, T: int = 24, D: int = 5, freq_range=(0.0, 0.1), phase_range=(0.0, 0.1)):
        self.T, self.D = T, D
        self.freq_range, self.phase_range = freq_range, phase_range

    def draw_params(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        f = rng.uniform(*self.freq_range, size=(n, self.D))
        ph = rng.uniform(*self.phase_range, size=(n, self.D))
        return f, ph

    @staticmethod
    def values(freq: np.ndarray, phase: np.ndarray, steps: np.ndarray) -> np.ndarray:
        """(n, len(steps), D) values at integer steps (0-based)."""
        steps = np.asarray(steps, dtype=np.float64)
        return 0.5 * (np.sin(freq[:, None, :] * steps[None, :, None] + phase[:, None, :]) + 1.0)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        f, ph = self.draw_params(n, rng)
        return self.values(f, ph, np.arange(self.T))
