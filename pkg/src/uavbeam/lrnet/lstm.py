"""A single LSTM layer: parameters, one-step forward and its exact backward.

Gate blocks are stacked in the order [input; forget; candidate; output] along
the first axis of ``w_input``, ``w_hidden`` and ``bias``. Inputs are batched
row-wise: x is (B, D), h and c are (B, H).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import DimensionError


def sigmoid(x):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


@dataclass
class LstmLayerParams:
    w_input: np.ndarray  # (4H, D)
    w_hidden: np.ndarray  # (4H, H)
    bias: np.ndarray  # (4H,)

    def __post_init__(self):
        h4, d = self.w_input.shape
        if h4 % 4 or self.w_hidden.shape != (h4, h4 // 4) or self.bias.shape != (h4,):
            raise DimensionError(
                f"inconsistent LSTM shapes {self.w_input.shape}, {self.w_hidden.shape}, {self.bias.shape}")

    @property
    def hidden_size(self) -> int:
        return self.w_hidden.shape[1]

    @property
    def input_size(self) -> int:
        return self.w_input.shape[1]

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LstmLayerParams":
        return cls(np.zeros((4 * hidden_size, input_size)),
                   np.zeros((4 * hidden_size, hidden_size)),
                   np.zeros(4 * hidden_size))


class CellCache(NamedTuple):
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    tanh_c: np.ndarray


def _gates(z, c_prev, H):
    i = sigmoid(z[:, :H])
    f = sigmoid(z[:, H:2 * H])
    g = np.tanh(z[:, 2 * H:3 * H])
    o = sigmoid(z[:, 3 * H:])
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    return i, f, g, o, c, tanh_c


def _dz(dh, dc, cache: CellCache):
    """Gradient w.r.t. the gate pre-activations; also returns the total dc."""
    i, f, g, o, tanh_c = cache.i, cache.f, cache.g, cache.o, cache.tanh_c
    do = dh * tanh_c
    dc = dc + dh * o * (1.0 - tanh_c * tanh_c)
    dz = np.concatenate([
        dc * g * i * (1.0 - i),
        dc * cache.c_prev * f * (1.0 - f),
        dc * i * (1.0 - g * g),
        do * o * (1.0 - o),
    ], axis=1)
    return dz, dc


def lstm_cell_forward(x, h_prev, c_prev, p: LstmLayerParams):
    """One time step. Accepts unbatched vectors or (B, .) batches.

    Returns ``(h, c, cache)``.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    x, h_prev, c_prev = np.atleast_2d(x, h_prev, c_prev)
    H = p.hidden_size
    if x.shape[1] != p.input_size or h_prev.shape[1] != H or c_prev.shape[1] != H:
        raise DimensionError(
            f"cell got x{x.shape}, h{h_prev.shape}, c{c_prev.shape} for D={p.input_size}, H={H}")
    z = x @ p.w_input.T + h_prev @ p.w_hidden.T + p.bias
    i, f, g, o, c, tanh_c = _gates(z, c_prev, H)
    h = o * tanh_c
    cache = CellCache(x, h_prev, c_prev, i, f, g, o, tanh_c)
    if squeeze:
        return h[0], c[0], cache
    return h, c, cache


def lstm_cell_backward(dh, dc, cache: CellCache, p: LstmLayerParams, grads: LstmLayerParams):
    """Backprop one step; accumulates parameter gradients into ``grads``.

    ``dh`` and ``dc`` are the total upstream gradients w.r.t. this step's
    h and c. Returns ``(dx, dh_prev, dc_prev)``.
    """
    dz, dc = _dz(dh, dc, cache)
    grads.w_input += dz.T @ cache.x
    grads.w_hidden += dz.T @ cache.h_prev
    grads.bias += dz.sum(axis=0)
    return dz @ p.w_input, dz @ p.w_hidden, dc * cache.f


def lstm_layer_forward(xs, p: LstmLayerParams):
    """Run a layer over a time-major (L, B, D) sequence from zero state.

    Same arithmetic as repeated ``lstm_cell_forward`` calls, with the input
    projection hoisted out of the time loop. Returns ``(hs (L, B, H), caches)``.
    """
    L, B, D = xs.shape
    if D != p.input_size:
        raise DimensionError(f"layer expects input size {p.input_size}, got {D}")
    H = p.hidden_size
    zx = (xs.reshape(L * B, D) @ p.w_input.T).reshape(L, B, 4 * H)
    zx += p.bias
    hs = np.empty((L, B, H))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    caches = []
    for t in range(L):
        z = zx[t]
        z += h @ p.w_hidden.T
        i, f, g, o, c_new, tanh_c = _gates(z, c, H)
        caches.append(CellCache(xs[t], h, c, i, f, g, o, tanh_c))
        c = c_new
        h = hs[t]
        np.multiply(o, tanh_c, out=h)
    return hs, caches


def lstm_layer_backward(dhs, caches, p: LstmLayerParams, grads: LstmLayerParams):
    """BPTT through a whole layer given dLoss/dh_t for every step, (L, B, H).

    Accumulates into ``grads`` and returns dLoss/dx as (L, B, D).
    """
    L, B, H = dhs.shape
    dzs = np.empty((L, B, 4 * H))
    dh = np.zeros((B, H))
    dc = np.zeros((B, H))
    for t in reversed(range(L)):
        dz, dc_t = _dz(dhs[t] + dh, dc, caches[t])
        dzs[t] = dz
        dh = dz @ p.w_hidden
        dc = dc_t * caches[t].f
    flat = dzs.reshape(L * B, 4 * H)
    xs = np.stack([k.x for k in caches]).reshape(L * B, -1)
    hp = np.stack([k.h_prev for k in caches]).reshape(L * B, H)
    grads.w_input += flat.T @ xs
    grads.w_hidden += flat.T @ hp
    grads.bias += flat.sum(axis=0)
    return (flat @ p.w_input).reshape(L, B, -1)
