"""Central finite-difference check of the BPTT gradients.

``grad_check`` compares ``backward`` against (J(w + eps*e_j) - J(w - eps*e_j)) / 2eps
for every parameter j. Evaluating the two losses separately and subtracting
leaves float64 rounding of about ulp(J)/eps in each numeric entry, which
swamps gradients below ~1e-5. So the default oracle propagates the
*difference* between the perturbed and the base forward pass directly, using
cancellation-free identities such as

    sigmoid(a + d) - sigmoid(a) = sigmoid(a) * sigmoid(-(a + d)) * expm1(d)
    tanh(a + d) - tanh(a)       = sinh(d) / (cosh(a + d) * cosh(a))

The quantity computed is still the exact finite difference of the forward
map; no derivative formula is involved. All perturbations run as rows of one
batched pass, in chunks. ``naive_numeric_gradients`` keeps the textbook
two-evaluation version for cross-checking the oracle itself.
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainError
from .lstm import sigmoid
from .model import LrnetModel, PARAM_NAMES, backward, forward, mse_loss

_CHUNK = 256
_LAYER = {"layer1": 1, "layer2": 2}
_KIND = {"w_input": 0, "w_hidden": 1, "bias": 2}


def naive_numeric_gradients(model: LrnetModel, inputs, labels, epsilon: float = 1e-5) -> dict[str, np.ndarray]:
    """Two full forward passes per parameter; perturbs ``model`` in place and restores it."""
    out = {}
    for name, arr in model.parameters().items():
        g = np.empty_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + epsilon
            plus = mse_loss(forward(model, inputs)[0], labels)
            flat[j] = orig - epsilon
            minus = mse_loss(forward(model, inputs)[0], labels)
            flat[j] = orig
            gflat[j] = (plus - minus) / (2.0 * epsilon)
        out[name] = g
    return out


# Offsets d are passed explicitly; recovering them as (a + d) - a would round
# them to ulp(a) and reintroduce the cancellation this module exists to avoid.
# With E = expm1(d):
#   sigmoid(a + d) - sigmoid(a) = sigmoid(a) * E / (1 + e^a * (1 + E))
#   tanh(a + d) - tanh(a)       = sinh(d) / (cosh(a + d) * cosh(a))
# where sinh(d), cosh(d) and cosh(a + d) are rebuilt from E and cached
# cosh(a), sinh(a), so each offset costs one transcendental call.
def _sigmoid_diff(sig_a, exp_a, E):
    return sig_a * E / (1.0 + exp_a * (1.0 + E))


def _tanh_diff(cosh_a, sinh_a, E):
    ed = 1.0 + E
    inv = 1.0 / ed
    sinh_d = 0.5 * E * (1.0 + inv)
    cosh_d = 0.5 * (ed + inv)
    return sinh_d / ((cosh_a * cosh_d + sinh_a * sinh_d) * cosh_a)


class _Step:
    """Cached unperturbed values of one LSTM step."""

    def __init__(self, z, c_prev):
        H = z.shape[-1] // 4
        self.H = H
        with np.errstate(over="ignore"):
            self.sig = sigmoid(z)
            self.exp = np.exp(z)
            self.cosh_z = np.cosh(z)
        self.sinh_z = np.sinh(z)
        self.g = np.tanh(z[2 * H:3 * H])
        self.c_prev = c_prev
        self.c = self.sig[H:2 * H] * c_prev + self.sig[:H] * self.g
        self.tanh_c = np.tanh(self.c)
        self.cosh_c = np.cosh(self.c)
        self.sinh_c = np.sinh(self.c)
        self.h = self.sig[3 * H:] * self.tanh_c


class _Base:
    """Unperturbed per-step quantities for one example."""

    def __init__(self, model: LrnetModel, x):
        self.x = x
        self.steps1, self.steps2 = [], []
        h1n, h2n = model.sizes
        h1 = np.zeros(h1n); c1 = np.zeros(h1n); h2 = np.zeros(h2n); c2 = np.zeros(h2n)
        self.h1, self.h2 = [h1], [h2]
        for t in range(model.window_l):
            z1 = model.layer1.w_input @ x[t] + model.layer1.w_hidden @ h1 + model.layer1.bias
            st1 = _Step(z1, c1)
            h1, c1 = st1.h, st1.c
            z2 = model.layer2.w_input @ h1 + model.layer2.w_hidden @ h2 + model.layer2.bias
            st2 = _Step(z2, c2)
            h2, c2 = st2.h, st2.c
            self.steps1.append(st1); self.steps2.append(st2)
            self.h1.append(h1); self.h2.append(h2)
        self.pred = model.fc_weight @ h2 + model.fc_bias


def _cell_diff(st: _Step, dz, dc_prev):
    """Exact (h, c) differences of one LSTM step given offsets of z and c_prev."""
    H = st.H
    E = np.expm1(dz)
    if2, g2, o2 = slice(0, 2 * H), slice(2 * H, 3 * H), slice(3 * H, 4 * H)
    with np.errstate(over="ignore", invalid="ignore"):
        dif = _sigmoid_diff(st.sig[if2], st.exp[if2], E[:, if2])
        do = _sigmoid_diff(st.sig[o2], st.exp[o2], E[:, o2])
    di, df = dif[:, :H], dif[:, H:]
    dg = _tanh_diff(st.cosh_z[g2], st.sinh_z[g2], E[:, g2])
    i, f, o = st.sig[:H], st.sig[H:2 * H], st.sig[3 * H:]
    dc = df * (st.c_prev + dc_prev) + f * dc_prev + di * (st.g + dg) + i * dg
    dtc = _tanh_diff(st.cosh_c, st.sinh_c, np.expm1(dc))
    dh = do * (st.tanh_c + dtc) + o * dtc
    return dh, dc


def _pred_diffs(model: LrnetModel, base: _Base, layer, kind, row, col, step):
    """Exact pred(w + step_p * e_p) - pred(w) for a batch of single-entry perturbations."""
    P = len(step)
    rows = np.arange(P)
    h1n, h2n = model.sizes
    L = model.window_l
    dh1 = np.zeros((P, h1n)); dc1 = np.zeros((P, h1n))
    dh2 = np.zeros((P, h2n)); dc2 = np.zeros((P, h2n))
    # clipped row/column indices keep the unselected np.where branches in bounds
    c1 = np.minimum(col, h1n - 1)
    c2 = np.minimum(col, h2n - 1)
    in1 = layer == 1
    in2 = layer == 2
    run_layer1 = bool(in1.any())
    run_layer2 = run_layer1 or bool(in2.any())
    for t in range(L):
        if run_layer1:
            dz1 = dh1 @ model.layer1.w_hidden.T
            src = np.where(kind == 0, base.x[t][np.minimum(col, 1)],
                           np.where(kind == 1, base.h1[t][c1] + dh1[rows, c1], 1.0))
            dz1[rows, np.where(in1, row, 0)] += np.where(in1, step * src, 0.0)
            dh1, dc1 = _cell_diff(base.steps1[t], dz1, dc1)
        if run_layer2:
            dz2 = dh2 @ model.layer2.w_hidden.T
            if run_layer1:
                dz2 += dh1 @ model.layer2.w_input.T
            src = np.where(kind == 0, base.h1[t + 1][c1] + dh1[rows, c1],
                           np.where(kind == 1, base.h2[t][c2] + dh2[rows, c2], 1.0))
            dz2[rows, np.where(in2, row, 0)] += np.where(in2, step * src, 0.0)
            dh2, dc2 = _cell_diff(base.steps2[t], dz2, dc2)
    dpred = dh2 @ model.fc_weight.T
    in3 = layer == 3
    src = np.where(kind == 0, base.h2[L][c2] + dh2[rows, c2], 1.0)
    dpred[rows, np.where(in3, row, 0)] += np.where(in3, step * src, 0.0)
    return dpred


def _index_table(model: LrnetModel):
    layer, kind, row, col, where = [], [], [], [], []
    for name in PARAM_NAMES:
        arr = model.parameters()[name]
        if name.startswith("fc"):
            lay, knd = 3, (0 if name == "fc_weight" else 2)
        else:
            prefix, tensor = name.split(".")
            lay, knd = _LAYER[prefix], _KIND[tensor]
        r, c = np.unravel_index(np.arange(arr.size), arr.shape if arr.ndim == 2 else (arr.size, 1))
        layer.append(np.full(arr.size, lay)); kind.append(np.full(arr.size, knd))
        row.append(r); col.append(c)
        where.append((name, arr.shape, arr.size))
    return (np.concatenate(layer), np.concatenate(kind), np.concatenate(row),
            np.concatenate(col), where)


def numeric_gradients(model: LrnetModel, inputs, labels, epsilon: float = 1e-5,
                      chunk: int = _CHUNK) -> dict[str, np.ndarray]:
    """Central-difference gradients of ``mse_loss`` via exact forward differences."""
    x = np.asarray(inputs, dtype=float)
    y = np.asarray(labels, dtype=float)
    if x.ndim == 2:
        x, y = x[None], y[None]
    layer, kind, row, col, where = _index_table(model)
    n = len(layer)
    total = np.zeros(n)
    for b in range(len(x)):
        base = _Base(model, x[b])
        resid = base.pred - y[b]
        for s in range(0, n, chunk):
            sl = slice(s, min(s + chunk, n))
            args = layer[sl], kind[sl], row[sl], col[sl]
            m = sl.stop - sl.start
            dp = _pred_diffs(model, base, *args, np.full(m, epsilon))
            dm = _pred_diffs(model, base, *args, np.full(m, -epsilon))
            # J+ - J- for this example, written without cancellation of J itself
            total[sl] += 0.5 * np.sum((dp - dm) * (2.0 * resid + dp + dm), axis=1)
    total /= 2.0 * epsilon * len(x)
    out, start = {}, 0
    for name, shape, size in where:
        out[name] = total[start:start + size].reshape(shape)
        start += size
    return out


def relative_errors(analytic: dict, numeric: dict) -> dict[str, float]:
    errs = {}
    for name, ga in analytic.items():
        gn = numeric[name]
        denom = np.maximum(np.maximum(np.abs(ga), np.abs(gn)), 1e-12)
        errs[name] = float(np.max(np.abs(ga - gn) / denom)) if ga.size else 0.0
    return errs


def grad_check(model: LrnetModel, example, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and numeric gradients.

    ``example`` is an ``(inputs, labels)`` pair of normalized arrays, shaped
    (L, 2)/(2,) or batched (B, L, 2)/(B, 2).
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    inputs, labels = example
    _, cache = forward(model, inputs)
    analytic = backward(model, cache, labels)
    numeric = numeric_gradients(model, inputs, labels, epsilon)
    return max(relative_errors(analytic, numeric).values())
