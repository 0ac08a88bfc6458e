"""FIFO trajectory buffer with whole-trajectory, history and transition sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class HistoryBatch:
    trajectories: np.ndarray  # (m, T, D) source trajectories
    cutoffs: np.ndarray       # (m,) t in 1..T; the history is x_1..x_{t-1}

    @property
    def prefixes(self) -> list[np.ndarray]:
        return [tr[: t - 1] for tr, t in zip(self.trajectories, self.cutoffs)]


@dataclass
class TransitionBatch:
    trajectories: np.ndarray
    cutoffs: np.ndarray
    actions: np.ndarray   # (m, D), x_t of the source trajectory
    terminal: np.ndarray  # (m,) bool, t == T

    @property
    def prefixes(self) -> list[np.ndarray]:
        return [tr[: t - 1] for tr, t in zip(self.trajectories, self.cutoffs)]


class ReplayBuffer:
    def __init__(self, capacity: int, T: int, D: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity, self.T, self.D = capacity, T, D
        self._store = np.empty((capacity, T, D))
        self._cursor = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, traj) -> None:
        traj = np.asarray(traj, dtype=np.float64)
        if traj.shape != (self.T, self.D):
            raise ValueError(f"trajectory shape {traj.shape} does not match {(self.T, self.D)}")
        self._store[self._cursor] = traj
        self._cursor = (self._cursor + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def push_many(self, trajs) -> None:
        for tr in np.asarray(trajs, dtype=np.float64):
            self.push(tr)

    def contents(self) -> np.ndarray:
        """Stored trajectories, oldest first."""
        if self._size < self.capacity:
            return self._store[: self._size].copy()
        return np.roll(self._store, -self._cursor, axis=0).copy()

    def _stored(self, idx: np.ndarray) -> np.ndarray:
        # index 0 is the oldest entry
        start = 0 if self._size < self.capacity else self._cursor
        return self._store[(start + idx) % self.capacity]

    def sample_trajectories(self, m: int, rng: np.random.Generator) -> np.ndarray:
        if m > self._size:
            raise ValueError(f"cannot draw {m} trajectories from a buffer of {self._size}")
        return self._stored(rng.choice(self._size, size=m, replace=False))

    def _draw(self, m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        if self._size == 0:
            raise ValueError("replay buffer is empty")
        trajs = self._stored(rng.integers(0, self._size, size=m))
        cutoffs = rng.integers(1, self.T + 1, size=m)
        return trajs, cutoffs

    def sample_histories(self, m: int, rng: np.random.Generator) -> HistoryBatch:
        return HistoryBatch(*self._draw(m, rng))

    def sample_transitions(self, m: int, rng: np.random.Generator) -> TransitionBatch:
        trajs, cutoffs = self._draw(m, rng)
        actions = trajs[np.arange(m), cutoffs - 1]
        return TransitionBatch(trajs, cutoffs, actions, cutoffs == self.T)

    def state_dict(self) -> dict:
        return {"capacity": self.capacity, "T": self.T, "D": self.D, "contents": self.contents()}

    @classmethod
    def from_state_dict(cls, state: dict) -> "ReplayBuffer":
        buf = cls(int(state["capacity"]), int(state["T"]), int(state["D"]))
        buf.push_many(state["contents"])
        return buf
