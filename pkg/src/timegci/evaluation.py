"""Sample-quality metrics: TSTR predictive scores, cross-correlation score,
expected quality difference on a known source, and the perturbation ablation.
"""
from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import nd
from .data import Dataset
from .nd import LSTMParams, Tensor

HORIZONS = (1, 3, 5)


def _values(ds) -> np.ndarray:
    return ds.values if isinstance(ds, Dataset) else np.asarray(ds, dtype=np.float64)


# ---------------------------------------------------------------- TSTR

class _Predictor:
    """One recurrent layer plus a sigmoid readout, as in the TimeGAN post-hoc predictor."""

    def __init__(self, d_in: int, hidden: int, rng: np.random.Generator):
        self.rnn = LSTMParams.init(rng, d_in, hidden)
        bound = 1.0 / np.sqrt(hidden)
        self.w = Tensor(rng.uniform(-bound, bound, size=(hidden, 1)), requires_grad=True)
        self.b = Tensor(np.zeros(1), requires_grad=True)

    def params(self):
        return self.rnn.tensors() + [self.w, self.b]

    def __call__(self, xs) -> Tensor:
        hs, _ = nd.lstm_sequence(self.rnn, xs)
        return nd.sigmoid(nd.affine(hs[:, 1:], self.w, self.b))[..., 0]


def _tstr_pairs(x: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Inputs: all but the last feature up to step T-k. Target: last feature k steps later."""
    D = x.shape[-1]
    inp = x[:, :-k, : D - 1] if D > 1 else x[:, :-k]
    return inp, x[:, k:, D - 1]


def predictive_score(synthetic, real_test, horizon: int = 1, seed: int = 0, steps: int = 5000,
                     batch_size: int = 128, lr: float = 1e-3) -> float:
    """Train on synthetic, test on real: MAE of a k-step-ahead recurrent predictor.

    Follows the TimeGAN convention: the predictor reads the first D-1 features
    and regresses the last one, directly ``horizon`` steps ahead.
    """
    syn, real = _values(synthetic), _values(real_test)
    if syn.shape[1:] != real.shape[1:]:
        raise ValueError(f"shape mismatch: synthetic {syn.shape[1:]} vs real {real.shape[1:]}")
    T, D = syn.shape[1:]
    if horizon >= T or horizon < 1:
        raise ValueError(f"horizon must lie in [1, T-1], got {horizon} with T={T}")
    rng = np.random.default_rng(seed)
    d_in = max(D - 1, 1)
    model = _Predictor(d_in, max(1, D // 2), rng)
    opt = nd.Adam(model.params(), lr=lr)
    X, Y = _tstr_pairs(syn, horizon)
    n = len(X)
    for _ in range(steps):
        idx = rng.permutation(n)[:batch_size]
        xb, yb = X[idx], Y[idx]
        opt.minimize(lambda: nd.absolute(model(xb) - yb).mean())
    Xr, Yr = _tstr_pairs(real, horizon)
    with nd.no_grad():
        pred = model(Xr).data
    return float(np.abs(pred - Yr).mean())


# ---------------------------------------------------------------- cross-correlation

def _corr_matrices(x: np.ndarray) -> tuple[np.ndarray, int]:
    """Per-step Pearson matrices (T, D, D) across samples; degenerate entries are 0."""
    c = x - x.mean(axis=0)
    cov = np.einsum("ntd,nte->tde", c, c)
    var = np.einsum("tdd->td", cov)
    denom = np.sqrt(var[:, :, None] * var[:, None, :])
    bad = denom < 1e-12
    out = np.where(bad, 0.0, cov / np.where(bad, 1.0, denom))
    n_zero = int((var < 1e-12).sum())
    return out, n_zero


def xcorr_details(real, synthetic) -> dict:
    a, b = _values(real), _values(synthetic)
    if a.shape[1:] != b.shape[1:]:
        raise ValueError(f"shape mismatch: {a.shape[1:]} vs {b.shape[1:]}")
    if min(len(a), len(b)) < 30:
        raise ValueError("xcorr_score needs at least 30 samples in each set")
    ca, za = _corr_matrices(a)
    cb, zb = _corr_matrices(b)
    per_t = np.abs(ca - cb).sum(axis=(1, 2))
    return {"score": float(per_t.mean()), "per_t": per_t,
            "zero_variance_real": za, "zero_variance_synthetic": zb}


def xcorr_score(real, synthetic) -> float:
    """Mean over t of sum_{ij} |C_real(t) - C_synth(t)|."""
    return xcorr_details(real, synthetic)["score"]


# ---------------------------------------------------------------- toy-source diagnostic

@dataclass
class MCEstimate:
    value: float
    se: float
    n: int


def expected_quality_difference(source, policy, n_mc: int = 10_000, rng: np.random.Generator | None = None,
                                T: int | None = None, latent: bool = False) -> MCEstimate:
    """E_{p_s} F_s - E_{p_theta} F_s with F_s = log p_s, from independent samples of each side.

    With ``latent`` the source density is taken in its pre-squash coordinate,
    where F_s carries no Jacobian term and a mean shift changes only the KL part.
    """
    if n_mc < 1000:
        raise ValueError("n_mc must be at least 1000")
    rng = np.random.default_rng(0) if rng is None else rng
    T = source.T if T is None else T
    real, _ = source.sample(n_mc, T, rng)
    fake, _ = policy.sample(n_mc, T, rng)
    fa = source.log_prob(np.clip(real, 1e-12, 1 - 1e-12), latent=latent)
    fb = source.log_prob(np.clip(fake, 1e-12, 1 - 1e-12), latent=latent)
    se = np.sqrt(fa.var(ddof=1) / n_mc + fb.var(ddof=1) / n_mc)
    return MCEstimate(float(fa.mean() - fb.mean()), float(se), n_mc)


# ---------------------------------------------------------------- perturbation ablation

class DataScaleModel:
    """Wraps a policy trained on normalized data so it samples on the data scale."""

    def __init__(self, policy, normalizer):
        self.policy, self.normalizer = policy, normalizer

    def sample(self, n, T, rng, prefix=None, deterministic=False):
        if prefix is not None:
            prefix = np.clip(self.normalizer.apply(np.asarray(prefix, dtype=np.float64)), 1e-6, 1 - 1e-6)
        x, lp = self.policy.sample(n, T, rng, prefix=prefix, deterministic=deterministic)
        return self.normalizer.invert(x), lp


@dataclass
class PerturbCell:
    mse: float
    se: float


def perturbation_forecast_mse(model, simulator, sigma: float = 0.1, scales=(1, 2, 3, 4, 5),
                              horizons=(1, 2, 3, 4, 5), episodes: int = 1000, seed: int = 0,
                              n_samples: int = 1) -> dict[tuple[int, int], PerturbCell]:
    """MSE of open-loop t-step forecasts after a noise kick at a random step K.

    For each episode a fresh simulator path is drawn, step K (1-based,
    uniform over the steps that leave room for the horizon) receives
    N(0, (c sigma)^2) noise per feature, and the model samples t further
    steps from the perturbed prefix x_1..x_K. The error is taken against the
    simulator's unperturbed value at step K + t.
    """
    T = simulator.T
    out = {}
    for c in scales:
        for t in horizons:
            if t >= T:
                raise ValueError(f"horizon {t} leaves no room in T={T}")
            rng = np.random.default_rng([seed, c, t])
            f, ph = simulator.draw_params(episodes, rng)
            K = rng.integers(1, T - t + 1, size=episodes)
            clean = simulator.values(f, ph, np.arange(T))
            noisy = clean.copy()
            noisy[np.arange(episodes), K - 1] += rng.normal(0.0, c * sigma, size=(episodes, simulator.D))
            noisy = np.clip(noisy, 1e-6, 1 - 1e-6)
            err = np.empty(episodes)
            for k in np.unique(K):
                rows = np.flatnonzero(K == k)
                pref = np.repeat(noisy[rows, :k], n_samples, axis=0)
                samp, _ = model.sample(len(pref), t, rng, prefix=pref)
                pred = samp[:, -1].reshape(len(rows), n_samples, -1).mean(axis=1)
                truth = clean[rows, k - 1 + t]
                err[rows] = ((pred - truth) ** 2).mean(axis=-1)
            out[(c, t)] = PerturbCell(float(err.mean()), float(err.std(ddof=1) / np.sqrt(episodes)))
    return out


# ---------------------------------------------------------------- reports

@dataclass
class EvalReport:
    method: str
    dataset: str
    predictive_score_1: float
    predictive_score_3: float
    predictive_score_5: float
    xcorr_score: float
    seed: int = 0
    runtime_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        return d


def evaluate(synthetic, real_test, method: str = "", dataset: str = "", seed: int = 0,
             steps: int = 5000, horizons=HORIZONS) -> EvalReport:
    t0 = time.time()
    scores = {k: predictive_score(synthetic, real_test, k, seed=seed, steps=steps) for k in horizons}
    xc = xcorr_details(real_test, synthetic)
    return EvalReport(method, dataset, scores.get(1, np.nan), scores.get(3, np.nan), scores.get(5, np.nan),
                      xc["score"], seed, time.time() - t0,
                      {"zero_variance_real": xc["zero_variance_real"],
                       "zero_variance_synthetic": xc["zero_variance_synthetic"]})


def write_reports_csv(reports: list[EvalReport], path) -> None:
    rows = [r.row() for r in reports]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def format_table(reports: list[EvalReport]) -> str:
    """Metric-by-method table with mean +- std over seeds, one block per dataset."""
    metrics = [("Predictive Score", "predictive_score_1"), ("+3 Steps Ahead", "predictive_score_3"),
               ("+5 Steps Ahead", "predictive_score_5"), ("x-Corr. Score", "xcorr_score")]
    methods = list(dict.fromkeys(r.method for r in reports))
    lines = []
    for ds in dict.fromkeys(r.dataset for r in reports):
        lines.append(f"[{ds}]")
        lines.append(f"{'metric':<18}" + "".join(f"{m:>20}" for m in methods))
        for label, key in metrics:
            cells = []
            for m in methods:
                vals = np.array([getattr(r, key) for r in reports if r.method == m and r.dataset == ds])
                sd = vals.std(ddof=1) if len(vals) > 1 else 0.0
                cells.append(f"{vals.mean():.3f} +- {sd:.3f}".rjust(20))
            lines.append(f"{label:<18}" + "".join(cells))
    return "\n".join(lines)
