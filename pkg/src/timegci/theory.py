"""Self-contained property suites on toy constructions with known answers.

nce      the energy loss, trained against a fixed noise policy, recovers log p_s
gradeq   with p_theta equal to the normalized energy model, the energy-loss
         gradient equals -(T/2) times the moment difference of grad F
eqd      expected quality difference is zero for the source itself and
         positive for a shifted copy
perturb  forecast error after a noise kick grows with the kick size
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from . import nd
from .energy import EnergyNet, energy_loss, quality_scores
from .evaluation import expected_quality_difference, perturbation_forecast_mse
from .nd import Tensor
from .policy import PolicyNet, squash
from .toy import SineSimulator, ToySource


@dataclass
class SuiteResult:
    suite: str
    passed: bool
    details: dict = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def __post_init__(self):
        self.passed = bool(self.passed)

    def report(self) -> str:
        head = f"[{'PASS' if self.passed else 'FAIL'}] {self.suite} ({self.seconds:.1f}s)"
        return "\n".join([head] + [f"  {ln}" for ln in self.lines])


# ---------------------------------------------------------------- NCE optimality

def constant_policy(D: int, mean: float, log_std: float, hidden: int = 4) -> PolicyNet:
    """A policy ignoring its history: every step is squash(N(mean, exp(log_std)^2))."""
    pol = PolicyNet(D, np.random.default_rng(0), hidden=hidden, head_hidden=())
    for w in pol.head.weights:
        w.data[:] = 0.0
    pol.head.biases[-1].data[:] = np.r_[np.full(D, mean), np.full(D, log_std)]
    return pol


def innovation_grid(src: ToySource, n: int = 30, width: float = 2.0) -> np.ndarray:
    """(n*n, 2, 1) trajectories whose two standardized innovations span [-width, width]."""
    e = np.linspace(-width, width, n)
    e1, e2 = (a.ravel() for a in np.meshgrid(e, e, indexing="ij"))
    sd = np.exp(src.log_std)
    z1 = src.m0 + sd * e1
    z2 = src.a + src.b * z1 + sd * e2
    return squash(np.stack([z1, z2], axis=1))[:, :, None]


def box_grid(src: ToySource, n: int = 30, width: float = 2.0) -> np.ndarray:
    """Axis-aligned grid over +-width marginal standard deviations of each pre-squash step."""
    sd = np.exp(src.log_std)
    m2, s2 = src.a + src.b * src.m0, sd * np.sqrt(1 + src.b ** 2)
    z1 = np.linspace(src.m0 - width * sd, src.m0 + width * sd, n)
    z2 = np.linspace(m2 - width * s2, m2 + width * s2, n)
    a, b = (x.ravel() for x in np.meshgrid(z1, z2, indexing="ij"))
    return squash(np.stack([a, b], axis=1))[:, :, None]


def _fit_line(truth, est):
    slope, icpt = np.polyfit(truth, est, 1)
    return float(np.corrcoef(truth, est)[0, 1] ** 2), float(slope), float(icpt)


def nce_suite(seed: int = 0, steps: int = 8000, batch: int = 1024, n_grid: int = 30,
              width: float = 2.0, log=None) -> SuiteResult:
    """Fit the energy against a fixed noise policy; F - log_Z should track log p_s."""
    t0 = time.time()
    src = ToySource(T=2, D=1)
    # noise roughly moment-matched to the source's pre-squash marginals
    noise = constant_policy(1, 0.15, float(np.log(0.9)))
    energy = EnergyNet(1, np.random.default_rng([seed, 2]), hidden=16, head_hidden=(32, 32))
    opt = nd.Adam(energy.parameters(), lr=3e-3)
    rng = np.random.default_rng([seed, 1])
    for i in range(steps):
        if i == steps // 2:
            opt.lr = 1e-3
        if i == (13 * steps) // 16:
            opt.lr = 3e-4
        real, _ = src.sample(batch, rng=rng)
        fake, _ = noise.sample(batch, 2, rng)
        loss = opt.minimize(lambda: energy_loss(energy, noise, real, fake))
        if log is not None and i % 1000 == 0:
            log(f"nce step {i} loss {loss:.4f}")
    grid = innovation_grid(src, n_grid, width)
    r2, slope, icpt = _fit_line(src.log_prob(grid), quality_scores(energy, grid))
    box = box_grid(src, n_grid, width)
    r2_box, slope_box, _ = _fit_line(src.log_prob(box), quality_scores(energy, box))
    passed = r2 >= 0.95 and 0.9 <= slope <= 1.1
    details = dict(r2=r2, slope=slope, intercept=icpt, r2_box=r2_box, slope_box=slope_box,
                   final_loss=loss, steps=steps)
    lines = [f"innovation grid {n_grid}x{n_grid} at +-{width} sd: r2 = {r2:.4f} (>= 0.95), "
             f"slope = {slope:.4f} (in [0.9, 1.1]), intercept = {icpt:.3f}",
             f"axis-aligned box grid (informational): r2 = {r2_box:.4f}, slope = {slope_box:.4f}"]
    return SuiteResult("nce", passed, details, lines, time.time() - t0)


# ---------------------------------------------------------------- gradient equality

class TruncatedExponentialPolicy:
    """One-step density proportional to exp(w . x + b) on the unit cube."""

    def __init__(self, w: np.ndarray, b: float):
        self.w = np.asarray(w, dtype=np.float64)
        self.b = float(b)
        self.log_Z = self.b + float(np.sum(np.log(np.expm1(self.w) / self.w)))

    def log_prob_trajectories(self, trajs) -> Tensor:
        trajs = np.asarray(trajs, dtype=np.float64)
        return Tensor((trajs @ self.w + self.b).sum(axis=-1) - self.log_Z)

    def sample(self, n: int, T: int, rng: np.random.Generator):
        u = rng.uniform(size=(n, T, len(self.w)))
        return np.log1p(u * np.expm1(self.w)) / self.w, None

    def mean(self) -> np.ndarray:
        w = self.w
        return 1.0 / (1.0 - np.exp(-w)) - 1.0 / w


def linear_energy(w: np.ndarray, b: float, hidden: int = 4) -> EnergyNet:
    """Energy whose one-step score is w . x + b (the empty history contributes nothing)."""
    D = len(w)
    net = EnergyNet(D, np.random.default_rng(0), hidden=hidden, head_hidden=())
    W = net.head.weights[0].data
    W[:] = 0.0
    W[-D:, 0] = w
    net.head.biases[0].data[:] = b
    return net


def gradeq_suite(seed: int = 0, n: int = 100_000, chunks: int = 100) -> SuiteResult:
    """One step, p_theta equal to the normalized energy model.

    The energy-loss gradient is estimated by Monte Carlo (batch means over
    ``chunks`` equal slices give the standard errors) and compared with the
    exact moment difference -(T/2) (E_s grad F - E_theta grad F).
    """
    t0 = time.time()
    w, b = np.array([1.5, -0.8]), 0.2
    policy = TruncatedExponentialPolicy(w, b)
    energy = linear_energy(w, b)
    energy.log_Z.data[...] = policy.log_Z
    src = ToySource(T=1, D=2)
    rng = np.random.default_rng(seed)
    real, _ = src.sample(n, rng=rng)
    fake, _ = policy.sample(n, 1, rng)
    params = energy.parameters()
    names = [f"{k}[{i}]" for k, p in energy.named_parameters() for i in range(p.data.size)]
    size = n // chunks
    rows = []
    for k in range(chunks):
        sl = slice(k * size, (k + 1) * size)
        with nd.Tape() as tape:
            loss = energy_loss(energy, policy, real[sl], fake[sl])
        g = nd.backward(tape, loss, wrt=params)
        rows.append(np.concatenate([np.ravel(g[p]) for p in params]))
    rows = np.array(rows)
    est = rows.mean(axis=0)
    se = rows.std(axis=0, ddof=1) / np.sqrt(chunks)

    # E_s[x] under the squashed Gaussian, by quadrature
    sd = np.exp(src.log_std)
    m_s = integrate.quad(lambda z: squash(z) * stats.norm.pdf(z, src.m0, sd), -np.inf, np.inf)[0]
    T = 1
    exact = np.zeros_like(est)
    W_idx = [i for i, nm in enumerate(names) if nm.startswith("head.w0")][-len(w):]
    exact[W_idx] = -(T / 2) * (m_s - policy.mean())
    # grad F w.r.t. the bias is 1 under both distributions, so its moment difference is 0

    dev = np.abs(est - exact)
    z = np.where(se > 0, dev / np.where(se > 0, se, 1.0), np.where(dev == 0, 0.0, np.inf))
    passed = bool(np.all(z <= 3.0))
    lines = [f"{n} samples, {chunks} batch means; max |MC - exact| / SE = {z.max():.3f} (<= 3)"]
    for i in W_idx:
        lines.append(f"{names[i]}: MC {est[i]:+.6f} +- {se[i]:.6f}, exact {exact[i]:+.6f}")
    details = dict(max_z=float(z.max()), estimate=est.tolist(), se=se.tolist(), exact=exact.tolist(),
                   names=names)
    return SuiteResult("gradeq", passed, details, lines, time.time() - t0)


# ---------------------------------------------------------------- expected quality difference

def eqd_suite(seed: int = 0, n_mc: int = 10_000, shift: float = 0.5, T: int = 8) -> SuiteResult:
    """Identity policy scores 0; a mean-shifted copy scores above 0.

    F_s is the source's log density in its pre-squash coordinate. There a
    mean shift keeps the entropy fixed, so the difference equals
    KL(p_theta || p_s) > 0. The data-space value is reported as well; its
    squash Jacobian rewards mass near the boundary and can flip the sign.
    """
    t0 = time.time()
    src = ToySource(T=T, D=2)
    bad = src.shifted(shift)
    same = expected_quality_difference(src, src, n_mc, np.random.default_rng([seed, 1]), latent=True)
    moved = expected_quality_difference(src, bad, n_mc, np.random.default_rng([seed, 2]), latent=True)
    twice = expected_quality_difference(src, bad, 2 * n_mc, np.random.default_rng([seed, 3]), latent=True)
    data_space = expected_quality_difference(src, bad, n_mc, np.random.default_rng([seed, 2]))
    ratio = moved.se / twice.se
    ok_same = abs(same.value) <= 3 * same.se
    ok_moved = moved.value > 3 * moved.se
    ok_clt = abs(ratio / np.sqrt(2) - 1) <= 0.2
    lines = [f"identity policy: {same.value:+.4f} +- {same.se:.4f} (|.| <= 3 SE: {ok_same})",
             f"mean shifted by {shift}: {moved.value:+.4f} +- {moved.se:.4f} (> 3 SE: {ok_moved})",
             f"SE ratio n vs 2n: {ratio:.3f} (sqrt 2 within 20%: {ok_clt})",
             f"data-space F_s, shifted (informational): {data_space.value:+.4f} +- {data_space.se:.4f}"]
    details = dict(identity=same.__dict__, shifted=moved.__dict__, se_ratio=ratio,
                   shifted_data_space=data_space.__dict__)
    return SuiteResult("eqd", ok_same and ok_moved and ok_clt, details, lines, time.time() - t0)


# ---------------------------------------------------------------- perturbation harness

class PersistenceModel:
    """Forecasts by repeating the last observed value."""

    def sample(self, n, T, rng, prefix=None, deterministic=False):
        last = np.asarray(prefix)[:, -1]
        return np.repeat(last[:, None], T, axis=1), np.zeros((n, T))


def perturb_suite(seed: int = 0, episodes: int = 1000, sigma: float = 0.1) -> SuiteResult:
    """Harness checks with a persistence forecaster.

    Its error at step K + t is (x_K + noise - x_{K+t}), so the MSE must grow
    with the noise scale for every horizon; reruns must be identical.
    """
    t0 = time.time()
    sim = SineSimulator()
    grid = perturbation_forecast_mse(PersistenceModel(), sim, sigma=sigma, episodes=episodes, seed=seed)
    again = perturbation_forecast_mse(PersistenceModel(), sim, sigma=sigma, episodes=episodes, seed=seed)
    scales = sorted({c for c, _ in grid})
    horizons = sorted({t for _, t in grid})
    mono = True
    for t in horizons:
        for c0, c1 in zip(scales, scales[1:]):
            a, b = grid[(c0, t)], grid[(c1, t)]
            if b.mse < a.mse - 2 * np.hypot(a.se, b.se):
                mono = False
    same = all(grid[k].mse == again[k].mse for k in grid)
    lines = ["persistence MSE by noise scale (rows) and horizon (columns):"]
    for c in scales:
        lines.append(f"c={c}: " + " ".join(f"{grid[(c, t)].mse:.4f}" for t in horizons))
    lines.append(f"non-decreasing in c within 2 SE: {mono}; deterministic under seed: {same}")
    details = {f"{c},{t}": grid[(c, t)].__dict__ for c, t in grid}
    return SuiteResult("perturb", mono and same, details, lines, time.time() - t0)


SUITES = {"nce": nce_suite, "gradeq": gradeq_suite, "eqd": eqd_suite, "perturb": perturb_suite}


def run_suite(name: str, **kw) -> SuiteResult:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](**kw)
