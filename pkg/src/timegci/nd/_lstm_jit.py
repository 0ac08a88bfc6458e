"""Compiled LSTM recurrences. Same math as the numpy loops in layers.py.

Arrays are time-major inside the kernels so each step touches contiguous
memory. The numpy path stays the reference; tests compare the two.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, fastmath={"nsz", "arcp", "contract", "afn", "reassoc"})  # keeps inf semantics for exp overflow
def forward(zx, wh, h0, c0):
    """zx: (T, B, 4H) input projections incl. bias. Returns hs, cs (T+1, B, H) and acts (T, B, 5H)."""
    T, B, H4 = zx.shape
    H = H4 // 4
    hs = np.empty((T + 1, B, H))
    cs = np.empty((T + 1, B, H))
    hs[0] = h0
    cs[0] = c0
    acts = np.empty((T, B, 5 * H))  # i, f, g, o, tanh(c)
    for t in range(T):
        z = zx[t] + hs[t] @ wh
        a = acts[t]
        for b in range(B):
            for k in range(2 * H):
                a[b, k] = 1.0 / (1.0 + math.exp(-z[b, k]))
            for k in range(2 * H, 3 * H):
                a[b, k] = 2.0 / (1.0 + math.exp(-2.0 * z[b, k])) - 1.0
            for k in range(3 * H, 4 * H):
                a[b, k] = 1.0 / (1.0 + math.exp(-z[b, k]))
            for k in range(H):
                c = a[b, H + k] * cs[t, b, k] + a[b, k] * a[b, 2 * H + k]
                cs[t + 1, b, k] = c
            for k in range(H):
                a[b, 4 * H + k] = 2.0 / (1.0 + math.exp(-2.0 * cs[t + 1, b, k])) - 1.0
            for k in range(H):
                hs[t + 1, b, k] = a[b, 3 * H + k] * a[b, 4 * H + k]
    return hs, cs, acts


@njit(cache=True)
def backward(ghs, acts, cs, whT):
    """ghs: (T+1, B, H) upstream gradient on hidden states. Returns dz (T, B, 4H)."""
    T, B, H5 = acts.shape
    H = H5 // 5
    dz = np.empty((T, B, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        for b in range(B):
            a = acts[t, b]
            for k in range(H):
                i = a[k]
                f = a[H + k]
                g = a[2 * H + k]
                o = a[3 * H + k]
                tc = a[4 * H + k]
                dh = ghs[t + 1, b, k] + dh_next[b, k]
                dc = dc_next[b, k] + dh * o * (1.0 - tc * tc)
                dz[t, b, k] = dc * g * i * (1.0 - i)
                dz[t, b, H + k] = dc * cs[t, b, k] * f * (1.0 - f)
                dz[t, b, 2 * H + k] = dc * i * (1.0 - g * g)
                dz[t, b, 3 * H + k] = dh * tc * o * (1.0 - o)
                dc_next[b, k] = dc * f
        dh_next = dz[t] @ whT
    return dz
