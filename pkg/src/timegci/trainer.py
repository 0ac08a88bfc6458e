"""Training loops: MLE pretraining, energy and critic pretraining, the joint
actor / energy / critic iteration, and the teacher-forcing baseline.

All state lives in a ``Trainer`` so a run can be checkpointed and resumed
bit-exactly at any step.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import struct
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import nd
from .critic import CriticNet, TwinCritic, critic_loss, critic_targets
from .data import Normalizer, clip_interior
from .energy import EnergyNet, classifier_log_odds, energy_loss
from .evaluation import predictive_score
from .nd import NonFiniteError
from .policy import PolicyNet, actor_loss, mle_loss
from .replay import ReplayBuffer

CHECKPOINT_VERSION = 1
METRIC_FIELDS = ["step", "loss_actor", "loss_energy", "loss_critic", "loss_mle", "val_predictive_score"]


class TrainingDiverged(RuntimeError):
    """A loss became non-finite or exceeded the divergence guard."""


@dataclass
class TrainConfig:
    # Appendix C values
    M: int = 64
    lr_energy: float = 1e-4
    lr_policy: float = 1e-4
    lr_critic: float = 1e-3
    lr_discrim: float = 1e-3  # black-box discriminator rate, only meaningful for baselines
    alpha: float = 0.2
    polyak_rate: float = 0.005
    buffer_capacity: int = 10000
    pretrain_policy_steps: int = 2000
    pretrain_energy_steps: int = 4000
    pretrain_critic_steps: int = 20000
    max_joint_steps: int = 50000
    early_stop_interval: int = 1000
    hidden: int = 32
    head_hidden: int = 32
    head_layers: int = 2
    # not fixed by the paper
    kappa: float = 0.1
    rollouts_per_iter: int = 16
    gradient_steps_per_iter: int = 1
    critic_updates_per_actor_update: int = 4
    seed: int = 0
    early_stop_patience: int = 5
    val_fraction: float = 0.2
    val_rollouts: int = 1000
    val_predictor_steps: int = 1000
    initial_buffer_rollouts: int = 1000
    actor_samples: int = 1
    critic_bootstrap_samples: int = 1
    twin_q: bool = False
    fresh_fake_samples: bool = False
    debug_isolation: bool = False
    divergence_threshold: float = 1e6

    def validate(self) -> "TrainConfig":
        for name in ("lr_energy", "lr_policy", "lr_critic", "lr_discrim"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not 0 < self.polyak_rate <= 1:
            raise ValueError("polyak_rate must lie in (0, 1]")
        if self.alpha < 0 or self.kappa < 0:
            raise ValueError("alpha and kappa must be non-negative")
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must lie in (0, 1)")
        for name in ("rollouts_per_iter", "gradient_steps_per_iter", "critic_updates_per_actor_update",
                     "buffer_capacity", "early_stop_interval", "hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        return self

    @property
    def head_sizes(self) -> tuple[int, ...]:
        return (self.head_hidden,) * self.head_layers

    # flat key = value text, one field per line
    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))

    @classmethod
    def from_mapping(cls, values: dict) -> "TrainConfig":
        kinds = {f.name: f.type for f in fields(cls)}
        out = {}
        for k, v in values.items():
            if k not in kinds:
                raise ValueError(f"unknown config key {k!r}")
            out[k] = _coerce(k, v, kinds[k])
        return cls(**out).validate()

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        return cls.from_mapping(read_flat_config(text))

    def replace(self, **kw) -> "TrainConfig":
        return dataclasses.replace(self, **kw).validate()


def read_flat_config(text: str) -> dict[str, str]:
    """Raw ``key = value`` pairs; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        values[k] = v
    return values


def _coerce(key, value, kind):
    if not isinstance(value, str):
        return value
    kind = kind if isinstance(kind, str) else kind.__name__
    try:
        if kind == "bool":
            low = value.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return low in ("true", "1", "yes")
        if kind == "int":
            return int(value)
        return float(value)
    except ValueError:
        raise ValueError(f"config key {key!r}: cannot parse {value!r} as {kind}") from None


# ---------------------------------------------------------------- checkpoint files

def save_checkpoint(path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    """Version byte, 8-byte header length, JSON header, then an npz payload."""
    header = json.dumps(meta, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(struct.pack("<BQ", CHECKPOINT_VERSION, len(header)))
        fh.write(header)
        fh.write(buf.getvalue())
    os.replace(tmp, path)


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        head = fh.read(9)
        if len(head) < 9:
            raise ValueError(f"{path}: truncated checkpoint")
        version, n = struct.unpack("<BQ", head)
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})")
        meta = json.loads(fh.read(n).decode("utf-8"))
        with np.load(io.BytesIO(fh.read())) as z:
            arrays = {k: z[k] for k in z.files}
    return meta, arrays


def _opt_arrays(prefix: str, opt: nd.Adam) -> tuple[dict, dict]:
    st = opt.state_dict()
    arrays = {f"{prefix}/m/{k}": a for k, a in enumerate(st["m"])}
    arrays.update({f"{prefix}/v/{k}": a for k, a in enumerate(st["v"])})
    meta = {k: st[k] for k in ("step", "lr", "beta1", "beta2", "eps")}
    return meta, arrays


def _load_opt(opt: nd.Adam, prefix: str, meta: dict, arrays: dict) -> None:
    n = len(opt.params)
    opt.load_state_dict({**meta, "m": [arrays[f"{prefix}/m/{k}"] for k in range(n)],
                         "v": [arrays[f"{prefix}/v/{k}"] for k in range(n)]})


def _fingerprint(x: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(x).tobytes()).hexdigest()[:16]


# ---------------------------------------------------------------- trainer

STAGES = ("pretrain_policy", "pretrain_energy", "pretrain_critic", "joint", "done")


class Trainer:
    """One training run. ``method`` is "timegci" or "tforcing".

    ``train`` and ``val`` are normalized (n, T, D) arrays; ``normalizer`` maps
    them back to the data scale, where validation scores are computed.
    """

    def __init__(self, cfg: TrainConfig, train: np.ndarray, val: np.ndarray | None = None,
                 normalizer: Normalizer | None = None, method: str = "timegci", metrics_path=None,
                 best_path=None, last_path=None, log=None):
        if method not in ("timegci", "tforcing"):
            raise ValueError(f"unknown method {method!r}")
        self.cfg = cfg.validate()
        self.method = method
        self.train = np.asarray(train, dtype=np.float64)
        self.val = None if val is None else np.asarray(val, dtype=np.float64)
        self.normalizer = normalizer
        self.metrics_path = metrics_path
        self.best_path = best_path
        self.last_path = last_path
        self.log = log or (lambda msg: None)
        n, self.T, self.D = self.train.shape
        if n < cfg.M:
            raise ValueError(f"need at least M={cfg.M} training trajectories, got {n}")
        self.rng = np.random.default_rng(cfg.seed)
        init = np.random.default_rng([cfg.seed, 1])
        kw = dict(hidden=cfg.hidden, head_hidden=cfg.head_sizes)
        self.policy = PolicyNet(self.D, init, **kw)
        self.opt_policy = nd.Adam(self.policy.parameters(), lr=cfg.lr_policy)
        self.uses_energy = method == "timegci" and not math.isinf(cfg.kappa)
        self.energy = self.critic = self.target = self.buffer = None
        if self.uses_energy:
            self.energy = EnergyNet(self.D, init, **kw)
            self.critic = TwinCritic(self.D, init, **kw) if cfg.twin_q else CriticNet(self.D, init, **kw)
            self.target = self.critic.clone()
            self.opt_energy = nd.Adam(self.energy.parameters(), lr=cfg.lr_energy)
            self.opt_critic = nd.Adam(self.critic.parameters(), lr=cfg.lr_critic)
        if method == "timegci":
            self.buffer = ReplayBuffer(cfg.buffer_capacity, self.T, self.D)
        self.stage = "pretrain_policy"
        self.stage_step = 0
        self.joint_step = 0
        self.history: list[dict] = []
        self.best_score = math.inf
        self.best_step = -1
        self.best_state: dict | None = None
        self.evals_since_best = 0
        self.stopped_early = False
        self._acc: dict[str, list[float]] = {}

    # -- bookkeeping --------------------------------------------------------

    def _record(self, name: str, value: float) -> None:
        self._acc.setdefault(name, []).append(value)

    def _minimize(self, name: str, opt: nd.Adam, loss_fn, guard: bool = False) -> float:
        try:
            value = opt.minimize(loss_fn)
        except NonFiniteError as exc:
            raise TrainingDiverged(f"{name} loss is not finite at {self.stage} step {self.stage_step}") from exc
        if not math.isfinite(value):
            raise TrainingDiverged(f"{name} loss is not finite at {self.stage} step {self.stage_step}")
        if guard and value > self.cfg.divergence_threshold:
            raise TrainingDiverged(f"{name} loss {value:.3g} exceeds the divergence guard at {self.stage} "
                                   f"step {self.stage_step}")
        self._record(name, value)
        return value

    def _real_batch(self) -> np.ndarray:
        return self.train[self.rng.choice(len(self.train), size=self.cfg.M, replace=False)]

    def _fake_batch(self) -> np.ndarray:
        if self.cfg.fresh_fake_samples or self.stage == "pretrain_energy":
            return self.policy.sample(self.cfg.M, self.T, self.rng)[0]
        return self.buffer.sample_trajectories(self.cfg.M, self.rng)

    # -- single updates -------------------------------------------------------

    def mle_step(self) -> float:
        batch = self._real_batch()
        return self._minimize("mle", self.opt_policy, lambda: mle_loss(self.policy, batch))

    def energy_step(self) -> float:
        real, fake = self._real_batch(), self._fake_batch()
        return self._minimize("energy", self.opt_energy, lambda: energy_loss(self.energy, self.policy, real, fake))

    def critic_step(self) -> float:
        cfg = self.cfg
        b = self.buffer.sample_transitions(cfg.M, self.rng)
        tg = critic_targets(self.target, self.policy, self.energy, b, cfg.alpha, self.rng,
                            cfg.critic_bootstrap_samples)
        loss = self._minimize("critic", self.opt_critic,
                              lambda: critic_loss(self.critic, self.target, self.policy, self.energy, b,
                                                  cfg.alpha, self.rng, targets=tg), guard=True)
        nd.polyak_update(self.target.parameters(), self.critic.parameters(), cfg.polyak_rate)
        return loss

    def policy_step(self) -> float:
        """Actor loss plus kappa times the MLE loss, one Adam step on theta."""
        cfg = self.cfg
        real = self._real_batch()
        if not self.uses_energy:
            return self._minimize("mle", self.opt_policy, lambda: mle_loss(self.policy, real))
        hb = self.buffer.sample_histories(cfg.M, self.rng)
        noise = self.rng.standard_normal((cfg.actor_samples, cfg.M, self.D))
        parts = {}

        def objective():
            a = actor_loss(self.policy, self.critic, hb.trajectories, hb.cutoffs, cfg.alpha, noise=noise)
            m = mle_loss(self.policy, real)
            parts["actor"], parts["mle"] = float(a.data), float(m.data)
            return a + cfg.kappa * m

        value = self._minimize("policy", self.opt_policy, objective)
        self._record("actor", parts["actor"])
        self._record("mle", parts["mle"])
        return value

    def rollouts(self) -> None:
        trajs, _ = self.policy.sample(self.cfg.rollouts_per_iter, self.T, self.rng)
        self.buffer.push_many(trajs)

    # -- stages ----------------------------------------------------------------

    def _stage_length(self, stage: str) -> int:
        cfg = self.cfg
        if stage == "pretrain_policy":
            return cfg.pretrain_policy_steps
        if stage == "pretrain_energy":
            return cfg.pretrain_energy_steps if self.uses_energy else 0
        if stage == "pretrain_critic":
            return cfg.pretrain_critic_steps if self.uses_energy else 0
        if stage == "joint":
            # the budget counts gradient-step triplets, not iterations
            return -(-cfg.max_joint_steps // cfg.gradient_steps_per_iter)
        return 0

    def _enter_next_stage(self) -> None:
        self.stage = STAGES[STAGES.index(self.stage) + 1]
        self.stage_step = 0
        self._acc = {}
        if self.stage == "pretrain_critic" and self.uses_energy:
            n = min(self.cfg.initial_buffer_rollouts, self.cfg.buffer_capacity)
            self.buffer.push_many(self.policy.sample(max(n, self.cfg.M), self.T, self.rng)[0])
        if self.stage == "joint" and self.buffer is not None and len(self.buffer) < self.cfg.M:
            self.buffer.push_many(self.policy.sample(self.cfg.M, self.T, self.rng)[0])
        self.log(f"stage -> {self.stage}")

    def step(self) -> None:
        """Advance the run by one unit of work in the current stage."""
        while self.stage != "done" and self.stage_step >= self._stage_length(self.stage):
            self._enter_next_stage()
        if self.stage == "done":
            return
        if self.stage == "pretrain_policy":
            self.mle_step()
        elif self.stage == "pretrain_energy":
            self.energy_step()
        elif self.stage == "pretrain_critic":
            self.critic_step()
        else:
            self.joint_iteration()
        self.stage_step += 1

    def joint_iteration(self) -> None:
        cfg = self.cfg
        if self.buffer is not None:
            self.rollouts()
        check = cfg.debug_isolation and self.joint_step % 100 == 0
        for _ in range(cfg.gradient_steps_per_iter):
            if not self.uses_energy:
                self.policy_step()
                continue
            with _isolation(check, self, {"policy"}):
                self.policy_step()
            with _isolation(check, self, {"energy"}):
                self.energy_step()
            with _isolation(check, self, {"critic", "target"}):
                for _ in range(cfg.critic_updates_per_actor_update):
                    self.critic_step()
        self.joint_step += 1
        if self.joint_step % cfg.early_stop_interval == 0:
            self._evaluate_and_checkpoint()

    def run(self, max_units: int | None = None) -> "Trainer":
        done = 0
        while self.stage != "done" and not self.stopped_early:
            self.step()
            done += 1
            if max_units is not None and done >= max_units:
                break
        if self.stage == "done" or self.stopped_early:
            self.stage = "done"
        return self

    # -- validation, early stopping ---------------------------------------------

    def validation_score(self, step: int | None = None) -> float:
        if self.val is None:
            return math.nan
        cfg = self.cfg
        rng = np.random.default_rng([cfg.seed, 7, self.joint_step if step is None else step])
        syn, _ = self.policy.sample(cfg.val_rollouts, self.T, rng)
        real = self.val
        if self.normalizer is not None:
            syn, real = self.normalizer.invert(syn), self.normalizer.invert(real)
        return predictive_score(syn, real, 1, seed=cfg.seed, steps=cfg.val_predictor_steps)

    def _evaluate_and_checkpoint(self) -> None:
        score = self.validation_score()
        means = {k: float(np.mean(v)) for k, v in self._acc.items()}
        row = {"step": self.joint_step, "loss_actor": means.get("actor", math.nan),
               "loss_energy": means.get("energy", math.nan), "loss_critic": means.get("critic", math.nan),
               "loss_mle": means.get("mle", math.nan), "val_predictive_score": score}
        self._acc = {}
        self.history.append(row)
        if self.metrics_path is not None:
            new = not Path(self.metrics_path).exists()
            with open(self.metrics_path, "a", newline="", encoding="utf-8") as fh:
                w = csv.DictWriter(fh, fieldnames=METRIC_FIELDS)
                if new:
                    w.writeheader()
                w.writerow(row)
        self.log(" ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
        if score < self.best_score or self.best_state is None:
            self.best_score, self.best_step = score, self.joint_step
            self.best_state = self.model_state()
            self.evals_since_best = 0
            if self.best_path is not None:
                self.save(self.best_path)
        else:
            self.evals_since_best += 1
            if 0 < self.cfg.early_stop_patience <= self.evals_since_best:
                self.stopped_early = True
                self.log(f"early stop at step {self.joint_step}; best step {self.best_step}")
        if self.last_path is not None:
            self.save(self.last_path)

    # -- state -------------------------------------------------------------------

    def _nets(self) -> dict:
        nets = {"policy": self.policy}
        if self.uses_energy:
            nets.update(energy=self.energy, critic=self.critic, target=self.target)
        return nets

    def model_state(self) -> dict[str, np.ndarray]:
        out = {}
        for name, net in self._nets().items():
            out.update({f"{name}/{k}": v for k, v in net.state_dict().items()})
        return out

    def load_model_state(self, arrays: dict[str, np.ndarray]) -> None:
        for name, net in self._nets().items():
            pre = f"{name}/"
            net.load_state_dict({k[len(pre):]: v for k, v in arrays.items() if k.startswith(pre)})

    def use_best(self) -> "Trainer":
        if self.best_state is not None:
            self.load_model_state(self.best_state)
        return self

    def checkpoint(self) -> tuple[dict, dict]:
        arrays = {f"model/{k}": v for k, v in self.model_state().items()}
        if self.best_state is not None:
            arrays.update({f"best/{k}": v for k, v in self.best_state.items()})
        opts = {"policy": self.opt_policy}
        if self.uses_energy:
            opts.update(energy=self.opt_energy, critic=self.opt_critic)
        opt_meta = {}
        for name, opt in opts.items():
            m, a = _opt_arrays(f"opt/{name}", opt)
            opt_meta[name] = m
            arrays.update(a)
        if self.buffer is not None:
            arrays["buffer"] = self.buffer.contents()
        meta = {
            "method": self.method, "config": dataclasses.asdict(self.cfg), "T": self.T, "D": self.D,
            "stage": self.stage, "stage_step": self.stage_step, "joint_step": self.joint_step,
            "rng": self.rng.bit_generator.state, "optimizers": opt_meta, "history": self.history,
            "best_score": None if math.isinf(self.best_score) else self.best_score, "best_step": self.best_step,
            "evals_since_best": self.evals_since_best, "stopped_early": self.stopped_early,
            "normalizer": None if self.normalizer is None else self.normalizer.to_dict(),
            "data_fingerprint": _fingerprint(self.train),
            "acc": self._acc, "version": __import__("timegci").__version__,
        }
        return meta, arrays

    def save(self, path) -> None:
        save_checkpoint(path, *self.checkpoint())

    @classmethod
    def resume(cls, path, train: np.ndarray, val: np.ndarray | None = None, **kw) -> "Trainer":
        meta, arrays = load_checkpoint(path)
        cfg = TrainConfig.from_mapping(meta["config"])
        norm = Normalizer.from_dict(meta["normalizer"]) if meta["normalizer"] else None
        tr = cls(cfg, train, val, norm, meta["method"], **kw)
        if _fingerprint(tr.train) != meta["data_fingerprint"]:
            raise ValueError("training data differ from the data this checkpoint was trained on")
        tr.load_model_state({k[6:]: v for k, v in arrays.items() if k.startswith("model/")})
        best = {k[5:]: v for k, v in arrays.items() if k.startswith("best/")}
        tr.best_state = best or None
        for name, om in meta["optimizers"].items():
            _load_opt(getattr(tr, f"opt_{name}"), f"opt/{name}", om, arrays)
        if tr.buffer is not None and "buffer" in arrays:
            tr.buffer = ReplayBuffer(cfg.buffer_capacity, tr.T, tr.D)
            tr.buffer.push_many(arrays["buffer"])
        tr.rng.bit_generator.state = meta["rng"]
        tr.stage, tr.stage_step, tr.joint_step = meta["stage"], meta["stage_step"], meta["joint_step"]
        tr.history = meta["history"]
        tr.best_score = math.inf if meta["best_score"] is None else meta["best_score"]
        tr.best_step, tr.evals_since_best = meta["best_step"], meta["evals_since_best"]
        tr.stopped_early = meta["stopped_early"]
        tr._acc = {k: list(v) for k, v in meta["acc"].items()}
        return tr


def load_policy(path) -> tuple[PolicyNet, dict, EnergyNet | None]:
    """Best (else current) policy and energy from a checkpoint, plus its metadata."""
    meta, arrays = load_checkpoint(path)
    cfg = TrainConfig.from_mapping(meta["config"])
    pre = "best/" if any(k.startswith("best/") for k in arrays) else "model/"
    kw = dict(hidden=cfg.hidden, head_hidden=cfg.head_sizes)
    rng = np.random.default_rng(0)
    policy = PolicyNet(meta["D"], rng, **kw)
    policy.load_state_dict({k[len(pre) + 7:]: v for k, v in arrays.items() if k.startswith(pre + "policy/")})
    energy = None
    if any(k.startswith(pre + "energy/") for k in arrays):
        energy = EnergyNet(meta["D"], rng, **kw)
        energy.load_state_dict({k[len(pre) + 7:]: v for k, v in arrays.items() if k.startswith(pre + "energy/")})
    return policy, meta, energy


class _isolation:
    """Debug check that an update touched only the named parameter groups."""

    def __init__(self, active: bool, trainer: Trainer, allowed: set[str]):
        self.active, self.trainer, self.allowed = active, trainer, allowed

    def __enter__(self):
        if self.active:
            self.before = self.trainer.model_state()

    def __exit__(self, *exc):
        if not self.active or exc[0] is not None:
            return
        after = self.trainer.model_state()
        for k, v in self.before.items():
            group = k.split("/", 1)[0]
            if group not in self.allowed and not np.array_equal(v, after[k]):
                raise AssertionError(f"update for {sorted(self.allowed)} modified {k}")


# ---------------------------------------------------------------- functional entry points

def split_train_val(data: np.ndarray, frac: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.random.default_rng([seed, 3]).permutation(len(data))
    n_val = max(1, int(round(frac * len(data))))
    return data[idx[n_val:]], data[idx[:n_val]]


def pretrain_policy(cfg: TrainConfig, data: np.ndarray) -> PolicyNet:
    tr = Trainer(cfg.replace(pretrain_energy_steps=0, pretrain_critic_steps=0, max_joint_steps=0), data)
    for _ in range(cfg.pretrain_policy_steps):
        tr.step()
    return tr.policy


def pretrain_energy(cfg: TrainConfig, data: np.ndarray, policy: PolicyNet) -> EnergyNet:
    tr = Trainer(cfg, data)
    tr.policy.load_state_dict(policy.state_dict())
    tr.stage = "pretrain_energy"
    for _ in range(cfg.pretrain_energy_steps):
        tr.step()
    return tr.energy


def pretrain_critic(cfg: TrainConfig, data: np.ndarray, policy: PolicyNet, energy: EnergyNet):
    tr = Trainer(cfg, data)
    tr.policy.load_state_dict(policy.state_dict())
    tr.energy.load_state_dict(energy.state_dict())
    tr.stage, tr.stage_step = "pretrain_energy", cfg.pretrain_energy_steps
    for _ in range(cfg.pretrain_critic_steps):
        tr.step()
    return tr.critic, tr.target


def train_joint(cfg: TrainConfig, train: np.ndarray, val: np.ndarray, normalizer=None, **kw) -> Trainer:
    return Trainer(cfg, train, val, normalizer, "timegci", **kw).run().use_best()


def train_tforcing(cfg: TrainConfig, train: np.ndarray, val: np.ndarray, normalizer=None, **kw) -> Trainer:
    """Teacher forcing: MLE for the same step budget (pretraining plus joint steps)."""
    return Trainer(cfg, train, val, normalizer, "tforcing", **kw).run().use_best()


def classifier_accuracy(energy: EnergyNet, policy: PolicyNet, real: np.ndarray, fake: np.ndarray) -> float:
    with nd.no_grad():
        lr_ = classifier_log_odds(energy, policy, clip_interior(real)).data
        lf = classifier_log_odds(energy, policy, clip_interior(fake)).data
    return float(((lr_ > 0).sum() + (lf <= 0).sum()) / (len(lr_) + len(lf)))
