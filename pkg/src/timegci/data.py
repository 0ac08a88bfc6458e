"""Datasets of fixed-length trajectories: Sines generation, CSV I/O, min-max scaling, summary stats."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

BOUNDARY_EPS = 1e-6


@dataclass
class Dataset:
    """``values`` has shape (n, T, D)."""

    values: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3 or min(self.values.shape) < 1:
            raise ValueError(f"dataset values must be (n, T, D) with n, T, D >= 1, got {self.values.shape}")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]

    @property
    def D(self) -> int:
        return self.values.shape[2]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, idx) -> np.ndarray:
        return self.values[idx]

    def subset(self, idx, name: str | None = None) -> "Dataset":
        return Dataset(self.values[idx], name or self.name)

    def split(self, frac: float, rng: np.random.Generator) -> tuple["Dataset", "Dataset"]:
        """Random split into (1 - frac, frac) parts."""
        perm = rng.permutation(self.n)
        k = int(round(self.n * frac))
        return self.subset(np.sort(perm[k:])), self.subset(np.sort(perm[:k]))


def generate_sines(n: int, T: int = 24, D: int = 5, seed: int = 0,
                   freq_range=(0.0, 0.1), phase_range=(0.0, 0.1)) -> Dataset:
    """Sinusoids with per-feature random frequency and phase, rescaled by (sin + 1) / 2."""
    if min(n, T, D) < 1:
        raise ValueError("n, T and D must all be >= 1")
    rng = np.random.default_rng(seed)
    freq = rng.uniform(*freq_range, size=(n, 1, D))
    phase = rng.uniform(*phase_range, size=(n, 1, D))
    t = np.arange(T, dtype=np.float64)[None, :, None]
    return Dataset((np.sin(freq * t + phase) + 1.0) / 2.0, name="sines")


# ---------------------------------------------------------------- CSV

def write_csv(ds: Dataset, path, feature_names=None) -> None:
    names = list(feature_names) if feature_names else [f"f{i + 1}" for i in range(ds.D)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["series_id", "t", *names])
        for i, traj in enumerate(ds.values):
            for t, row in enumerate(traj):
                w.writerow([i, t, *(repr(float(v)) for v in row)])


def load_csv(path, T: int, overlap: bool = False, name: str | None = None) -> Dataset:
    """Slice each series of a ``series_id,t,<features...>`` CSV into length-T windows.

    Windows are consecutive and non-overlapping unless ``overlap`` is set, in
    which case every start offset is used.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[0] != "series_id" or header[1] != "t":
            raise ValueError(f"{path}: header must be 'series_id,t,<f1>,...', got {header}")
        series: dict[str, list[list[float]]] = {}
        order: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
            values = []
            for col, cell in zip(header[2:], row[2:]):
                try:
                    v = float(cell)
                except ValueError:
                    raise ValueError(f"{path}: row {lineno}, column {col!r}: non-numeric value {cell!r}") from None
                if not np.isfinite(v):
                    raise ValueError(f"{path}: row {lineno}, column {col!r}: missing or non-finite value")
                values.append(v)
            sid = row[0]
            if sid not in series:
                series[sid] = []
                order.append(sid)
            series[sid].append(values)
    if not order:
        raise ValueError(f"{path}: no data rows")
    windows = []
    for sid in order:
        arr = np.asarray(series[sid])
        if len(arr) < T:
            raise ValueError(f"{path}: series {sid!r} has {len(arr)} rows, shorter than T={T}")
        step = 1 if overlap else T
        for start in range(0, len(arr) - T + 1, step):
            windows.append(arr[start:start + T])
    return Dataset(np.stack(windows), name=name or path.stem)


# ---------------------------------------------------------------- normalization

@dataclass
class Normalizer:
    """Per-feature min-max scaling onto [0, 1]; constant features map to 0.5."""

    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    @property
    def fitted(self) -> bool:
        return self.lo is not None

    def _require(self):
        if not self.fitted:
            raise RuntimeError("normalizer has not been fitted")

    def apply(self, x: np.ndarray) -> np.ndarray:
        self._require()
        span = self.hi - self.lo
        flat = span <= 0
        out = (x - self.lo) / np.where(flat, 1.0, span)
        return np.where(flat, 0.5, out)

    def invert(self, x: np.ndarray) -> np.ndarray:
        self._require()
        span = self.hi - self.lo
        return np.where(span <= 0, self.lo, x * span + self.lo)

    def to_dict(self) -> dict:
        self._require()
        return {"min": self.lo.tolist(), "max": self.hi.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(np.asarray(d["min"], dtype=float), np.asarray(d["max"], dtype=float))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "Normalizer":
        return cls.from_dict(json.loads(Path(path).read_text()))


def fit_normalizer(ds: Dataset) -> Normalizer:
    flat = ds.values.reshape(-1, ds.D)
    return Normalizer(flat.min(axis=0), flat.max(axis=0))


def normalize(ds: Dataset, norm: Normalizer) -> Dataset:
    return Dataset(norm.apply(ds.values), ds.name)


def denormalize(ds: Dataset, norm: Normalizer) -> Dataset:
    return Dataset(norm.invert(ds.values), ds.name)


def clip_interior(x: np.ndarray, eps: float = BOUNDARY_EPS) -> np.ndarray:
    """Pull values off {0, 1} so the squashed-Gaussian density is defined."""
    return np.clip(x, eps, 1.0 - eps)


# ---------------------------------------------------------------- statistics

@dataclass
class DatasetStats:
    D: int
    T: int
    n: int
    lags: dict[int, float]
    skipped: dict[int, int] = field(default_factory=dict)
    method: str = "series"

    def as_dict(self) -> dict:
        out = {"n": self.n, "D": self.D, "T": self.T, "method": self.method}
        for k, v in self.lags.items():
            out[f"autocorr_lag{k}"] = v
            out[f"skipped_lag{k}"] = self.skipped.get(k, 0)
        return out

    def report(self) -> str:
        return "\n".join(f"{k}: {v}" for k, v in self.as_dict().items()) + "\n"


def _abs_corr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """|Pearson r| along axis 0; NaN where either side has no variance."""
    ac = a - a.mean(axis=0)
    bc = b - b.mean(axis=0)
    den = np.sqrt((ac * ac).sum(axis=0) * (bc * bc).sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 1e-12, np.abs((ac * bc).sum(axis=0)) / np.where(den > 1e-12, den, 1.0), np.nan)


def dataset_stats(ds: Dataset, lags=(1, 3, 5), method: str = "series") -> DatasetStats:
    """Mean absolute autocorrelation at each lag.

    ``method="series"`` (default) is the usual sample ACF of each series about
    its own mean, normalised by the full-length sum of squares, averaged in
    absolute value over series and features. ``method="cross_sectional"``
    correlates x_t with x_{t+k} across the sample dimension for every valid t
    and averages |r| over t and features.
    Slices with no variance are skipped and counted.
    """
    if ds.T <= max(lags):
        raise ValueError(f"T={ds.T} too short for lag {max(lags)}")
    x = ds.values
    out, skipped = {}, {}
    if method == "series":
        xc = x - x.mean(axis=1, keepdims=True)
        den = (xc * xc).sum(axis=1)  # (n, D)
        ok = den > 1e-12
        for k in lags:
            num = (xc[:, :-k] * xc[:, k:]).sum(axis=1)
            acf = np.abs(num[ok] / den[ok])
            out[k] = float(acf.mean()) if acf.size else float("nan")
            skipped[k] = int((~ok).sum())
    elif method == "cross_sectional":
        for k in lags:
            r = _abs_corr(x[:, :-k], x[:, k:])  # (T-k, D)
            valid = ~np.isnan(r)
            out[k] = float(r[valid].mean()) if valid.any() else float("nan")
            skipped[k] = int((~valid).sum())
    else:
        raise ValueError(f"unknown method {method!r}")
    return DatasetStats(D=ds.D, T=ds.T, n=ds.n, lags=out, skipped=skipped, method=method)
