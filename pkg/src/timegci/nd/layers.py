"""Layer primitives: affine/MLP heads and the LSTM cell."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .tensor import Tensor, _make, affine, as_tensor, elu

try:
    from . import _lstm_jit as _jit
except ImportError:  # numba missing: fall back to the numpy recurrence
    _jit = None

LSTM_BACKEND = "jit"


def uniform_init(rng: np.random.Generator, fan_in: int, shape, name=None) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)


def zeros_param(shape, name=None) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


@dataclass
class LSTMParams:
    """Gate order along the last axis is (input, forget, cell, output)."""

    w_x: Tensor
    w_h: Tensor
    b: Tensor

    @property
    def input_dim(self) -> int:
        return self.w_x.shape[0]

    @property
    def hidden(self) -> int:
        return self.w_h.shape[0]

    def tensors(self) -> list[Tensor]:
        return [self.w_x, self.w_h, self.b]

    @classmethod
    def init(cls, rng: np.random.Generator, input_dim: int, hidden: int = 32, forget_bias: float = 1.0):
        fan_in = input_dim + hidden
        b = np.zeros(4 * hidden)
        b[hidden:2 * hidden] = forget_bias
        return cls(
            uniform_init(rng, fan_in, (input_dim, 4 * hidden), "lstm.w_x"),
            uniform_init(rng, fan_in, (hidden, 4 * hidden), "lstm.w_h"),
            Tensor(b, requires_grad=True, name="lstm.b"),
        )


def _gates(z: np.ndarray, H: int):
    i = expit(z[..., :H])
    f = expit(z[..., H:2 * H])
    g = np.tanh(z[..., 2 * H:3 * H])
    o = expit(z[..., 3 * H:])
    return i, f, g, o


def _check_input(p: LSTMParams, x: np.ndarray):
    if x.shape[-1] != p.input_dim:
        raise ValueError(f"LSTM expects input dim {p.input_dim}, got {x.shape[-1]}")


def lstm_step(p: LSTMParams, x, state: tuple) -> tuple[Tensor, Tensor]:
    """One LSTM recurrence. ``x`` is (D,) or (B, D); state is (hidden, cell)."""
    x = as_tensor(x)
    h, c = (as_tensor(s) for s in state)
    _check_input(p, x.data)
    H = p.hidden
    if h.shape[-1] != H or c.shape[-1] != H:
        raise ValueError(f"state must have hidden size {H}")
    wx, wh = p.w_x.data, p.w_h.data
    z = x.data @ wx + h.data @ wh + p.b.data
    i, f, g, o = _gates(z, H)
    c_new = f * c.data + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    out = np.concatenate([h_new, c_new], axis=-1)

    def vjp(gout):
        dh = gout[..., :H]
        dc = gout[..., H:] + dh * o * (1.0 - tc * tc)
        dz = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c.data * f * (1.0 - f),
            dc * i * (1.0 - g * g),
            dh * tc * o * (1.0 - o),
        ], axis=-1)
        dz2 = dz.reshape(-1, 4 * H)
        return (
            dz @ wx.T,
            dz @ wh.T,
            dc * f,
            x.data.reshape(-1, wx.shape[0]).T @ dz2,
            h.data.reshape(-1, H).T @ dz2,
            dz2.sum(axis=0),
        )

    both = _make(out, (x, h, c, p.w_x, p.w_h, p.b), vjp)
    return both[..., :H], both[..., H:]


def lstm_sequence(p: LSTMParams, xs, h0: np.ndarray | None = None, c0: np.ndarray | None = None,
                  backend: str | None = None):
    """Run the cell over ``xs`` of shape (B, T, D) as a single tape node.

    Returns ``(hs, cs)``: ``hs`` is a Tensor (B, T+1, H) whose slot ``t`` holds
    the hidden state after consuming ``t`` inputs (slot 0 is ``h0``), and
    ``cs`` is the matching numpy array of cell states. Gradients flow to the
    weights and to ``xs``; the initial state is treated as data.

    ``backend`` is "jit" (compiled recurrence) or "numpy"; the default is
    the module-level ``LSTM_BACKEND``.
    """
    xs = as_tensor(xs)
    X = xs.data
    if X.ndim != 3:
        raise ValueError(f"xs must be (B, T, D), got {X.shape}")
    _check_input(p, X)
    backend = backend or LSTM_BACKEND
    if backend == "jit" and _jit is not None:
        return _lstm_sequence_jit(p, xs, h0, c0)
    return _lstm_sequence_numpy(p, xs, h0, c0)


def _lstm_sequence_jit(p: LSTMParams, xs: Tensor, h0, c0):
    X = xs.data
    B, T, _ = X.shape
    H = p.hidden
    wx, wh = p.w_x.data, p.w_h.data
    zx = np.ascontiguousarray((X @ wx + p.b.data).transpose(1, 0, 2))
    h0 = np.zeros((B, H)) if h0 is None else np.broadcast_to(h0, (B, H)).astype(np.float64)
    c0 = np.zeros((B, H)) if c0 is None else np.broadcast_to(c0, (B, H)).astype(np.float64)
    hs_t, cs_t, acts = _jit.forward(zx, np.ascontiguousarray(wh), h0, c0)
    hs = hs_t.transpose(1, 0, 2)
    cs = cs_t.transpose(1, 0, 2)

    def vjp(ghs):
        dz = _jit.backward(np.ascontiguousarray(ghs.transpose(1, 0, 2)), acts, cs_t, np.ascontiguousarray(wh.T))
        dz2 = dz.reshape(-1, 4 * H)
        gx = (dz @ wx.T).transpose(1, 0, 2) if xs.requires_grad else None
        gwx = X.transpose(1, 0, 2).reshape(-1, X.shape[-1]).T @ dz2
        gwh = hs_t[:T].reshape(-1, H).T @ dz2
        return gx, gwx, gwh, dz2.sum(axis=0)

    return _make(hs, (xs, p.w_x, p.w_h, p.b), vjp), cs


def _lstm_sequence_numpy(p: LSTMParams, xs: Tensor, h0, c0):
    X = xs.data
    B, T, _ = X.shape
    H = p.hidden
    wx, wh, b = p.w_x.data, p.w_h.data, p.b.data
    hs = np.zeros((B, T + 1, H))
    cs = np.zeros((B, T + 1, H))
    if h0 is not None:
        hs[:, 0] = h0
    if c0 is not None:
        cs[:, 0] = c0
    zx = X @ wx + b
    I = np.empty((B, T, H)); F = np.empty((B, T, H)); G = np.empty((B, T, H)); O = np.empty((B, T, H))
    TC = np.empty((B, T, H))
    for t in range(T):
        z = zx[:, t] + hs[:, t] @ wh
        i, f, g, o = _gates(z, H)
        c_new = f * cs[:, t] + i * g
        tc = np.tanh(c_new)
        cs[:, t + 1] = c_new
        hs[:, t + 1] = o * tc
        I[:, t], F[:, t], G[:, t], O[:, t], TC[:, t] = i, f, g, o, tc

    def vjp(ghs):
        DZ = np.empty((B, T, 4 * H))
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            i, f, g, o, tc = I[:, t], F[:, t], G[:, t], O[:, t], TC[:, t]
            dh = ghs[:, t + 1] + dh_next
            dc = dc_next + dh * o * (1.0 - tc * tc)
            dz = DZ[:, t]
            dz[:, :H] = dc * g * i * (1.0 - i)
            dz[:, H:2 * H] = dc * cs[:, t] * f * (1.0 - f)
            dz[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
            dz[:, 3 * H:] = dh * tc * o * (1.0 - o)
            dh_next = dz @ wh.T
            dc_next = dc * f
        dz2 = DZ.reshape(-1, 4 * H)
        gx = DZ @ wx.T if xs.requires_grad else None
        gwx = X.reshape(-1, X.shape[-1]).T @ dz2
        gwh = hs[:, :T].reshape(-1, H).T @ dz2
        return gx, gwx, gwh, dz2.sum(axis=0)

    return _make(hs, (xs, p.w_x, p.w_h, p.b), vjp), cs


@dataclass
class MLPParams:
    """Affine layers; ELU between them, linear output."""

    weights: list[Tensor]
    biases: list[Tensor]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    def tensors(self) -> list[Tensor]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @classmethod
    def init(cls, rng: np.random.Generator, input_dim: int, output_dim: int, hidden=(32, 32)):
        dims = [input_dim, *hidden, output_dim]
        ws, bs = [], []
        for k, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
            ws.append(uniform_init(rng, a, (a, b), f"mlp.w{k}"))
            bs.append(zeros_param((b,), f"mlp.b{k}"))
        return cls(ws, bs)


def mlp_head(p: MLPParams, x) -> Tensor:
    x = as_tensor(x)
    if x.shape[-1] != p.input_dim:
        raise ValueError(f"head expects input dim {p.input_dim}, got {x.shape[-1]}")
    n = len(p.weights)
    for k, (w, b) in enumerate(zip(p.weights, p.biases)):
        x = affine(x, w, b)
        if k < n - 1:
            x = elu(x)
    return x
