"""The two-layer LSTM location predictor.

Windows are fed as displacements from their newest location (the anchor),
and the network predicts the next displacement from that anchor. This keeps
inputs bounded along arbitrarily long episodes and makes every prediction
exactly translation-equivariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError, DomainError
from ..numerics import RandomSource, uniform_array
from ..scenario import Location, TrajectoryWindow, relative_angle
from .lstm import LstmLayerParams, lstm_layer_backward, lstm_layer_forward

HIDDEN1 = 50
HIDDEN2 = 100
OUTPUT = 2
PARAM_NAMES = (
    "layer1.w_input", "layer1.w_hidden", "layer1.bias",
    "layer2.w_input", "layer2.w_hidden", "layer2.bias",
    "fc_weight", "fc_bias",
)


@dataclass(frozen=True)
class NormalizationSpec:
    mode: str = "anchored-displacement"
    anchor_rule: str = "last-column"


@dataclass
class LrnetModel:
    layer1: LstmLayerParams
    layer2: LstmLayerParams
    fc_weight: np.ndarray  # (2, H2)
    fc_bias: np.ndarray  # (2,)
    window_l: int = 20
    norm_spec: NormalizationSpec = field(default_factory=NormalizationSpec)
    seed: int | None = None

    def __post_init__(self):
        if self.layer1.input_size != OUTPUT:
            raise DimensionError(f"layer-1 input size must be 2, got {self.layer1.input_size}")
        if self.layer2.input_size != self.layer1.hidden_size:
            raise DimensionError("layer-2 input size must equal layer-1 hidden size")
        if self.fc_weight.shape != (OUTPUT, self.layer2.hidden_size) or self.fc_bias.shape != (OUTPUT,):
            raise DimensionError(f"bad FC shapes {self.fc_weight.shape}, {self.fc_bias.shape}")

    @property
    def sizes(self) -> tuple[int, int]:
        return self.layer1.hidden_size, self.layer2.hidden_size

    def parameters(self) -> dict[str, np.ndarray]:
        """Name -> live parameter array, in a fixed order."""
        return {
            "layer1.w_input": self.layer1.w_input,
            "layer1.w_hidden": self.layer1.w_hidden,
            "layer1.bias": self.layer1.bias,
            "layer2.w_input": self.layer2.w_input,
            "layer2.w_hidden": self.layer2.w_hidden,
            "layer2.bias": self.layer2.bias,
            "fc_weight": self.fc_weight,
            "fc_bias": self.fc_bias,
        }

    def copy(self) -> "LrnetModel":
        return LrnetModel(
            LstmLayerParams(self.layer1.w_input.copy(), self.layer1.w_hidden.copy(), self.layer1.bias.copy()),
            LstmLayerParams(self.layer2.w_input.copy(), self.layer2.w_hidden.copy(), self.layer2.bias.copy()),
            self.fc_weight.copy(), self.fc_bias.copy(), self.window_l, self.norm_spec, self.seed,
        )

    def zeros_like(self) -> "LrnetModel":
        z = self.copy()
        for arr in z.parameters().values():
            arr[...] = 0.0
        return z

    def predict(self, window: TrajectoryWindow) -> np.ndarray:
        return np.asarray(predict_location(self, window))


def zero_model(window_l: int = 20, h1: int = HIDDEN1, h2: int = HIDDEN2) -> LrnetModel:
    return LrnetModel(LstmLayerParams.zeros(OUTPUT, h1), LstmLayerParams.zeros(h1, h2),
                      np.zeros((OUTPUT, h2)), np.zeros(OUTPUT), window_l)


def init_model(seed: int, window_l: int = 20, h1: int = HIDDEN1, h2: int = HIDDEN2) -> LrnetModel:
    """Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero except forget gate = 1."""
    rng = RandomSource(seed)
    model = zero_model(window_l, h1, h2)
    model.seed = seed
    for name, arr in model.parameters().items():
        if arr.ndim == 2:
            lim = 1.0 / np.sqrt(arr.shape[1])
            arr[...] = uniform_array(rng, -lim, lim, arr.size).reshape(arr.shape)
    model.layer1.bias[h1:2 * h1] = 1.0
    model.layer2.bias[h2:2 * h2] = 1.0
    return model


def normalize(window: TrajectoryWindow, spec: NormalizationSpec | None = None):
    """Return (displacements (L, 2), anchor) with the anchor at the newest column."""
    cols = np.asarray(window.columns if isinstance(window, TrajectoryWindow) else window, dtype=float)
    anchor = cols[-1].copy()
    return cols - anchor, anchor


def forward(model: LrnetModel, inputs):
    """Run the stack over normalized input(s) of shape (L, 2) or (B, L, 2).

    Returns ``(pred, cache)``; ``pred`` is (2,) or (B, 2) in normalized units.
    """
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3 or x.shape[1] != model.window_l or x.shape[2] != OUTPUT:
        raise DimensionError(f"expected (B, {model.window_l}, 2) inputs, got {np.shape(inputs)}")
    B = x.shape[0]
    hs1, caches1 = lstm_layer_forward(np.ascontiguousarray(x.transpose(1, 0, 2)), model.layer1)
    hs2, caches2 = lstm_layer_forward(hs1, model.layer2)
    h2 = hs2[-1]
    pred = h2 @ model.fc_weight.T + model.fc_bias
    cache = {"caches1": caches1, "caches2": caches2, "h_last": h2, "pred": pred, "batch": B}
    return (pred[0] if single else pred), cache


def mse_loss(preds, labels) -> float:
    """(1 / 2n) * sum of squared Euclidean residual norms."""
    p = np.atleast_2d(np.asarray(preds, dtype=float))
    y = np.atleast_2d(np.asarray(labels, dtype=float))
    if p.shape != y.shape:
        raise DimensionError(f"preds {p.shape} vs labels {y.shape}")
    if len(p) == 0:
        raise DomainError("empty batch")
    return float(np.sum((y - p) ** 2) / (2 * len(p)))


def backward(model: LrnetModel, cache, labels) -> dict[str, np.ndarray]:
    """Exact gradient of ``mse_loss(pred, labels)`` for the cached forward pass."""
    pred = cache["pred"]
    labels = np.atleast_2d(np.asarray(labels, dtype=float))
    if labels.shape != pred.shape:
        raise DimensionError(f"labels {labels.shape} do not match cached batch {pred.shape}")
    if len(cache["caches1"]) != model.window_l:
        raise DimensionError("cache does not come from a forward pass of this model")
    g = model.zeros_like()
    dpred = (pred - labels) / cache["batch"]
    g.fc_weight[...] = dpred.T @ cache["h_last"]
    g.fc_bias[...] = dpred.sum(axis=0)

    B = cache["batch"]
    dhs2 = np.zeros((model.window_l, B, model.sizes[1]))
    dhs2[-1] = dpred @ model.fc_weight
    dhs1 = lstm_layer_backward(dhs2, cache["caches2"], model.layer2, g.layer2)
    lstm_layer_backward(dhs1, cache["caches1"], model.layer1, g.layer1)
    return g.parameters()


def predict_location(model, window: TrajectoryWindow) -> Location:
    disp, anchor = normalize(window, getattr(model, "norm_spec", None))
    pred, _ = forward(model, disp)
    return Location(float(anchor[0] + pred[0]), float(anchor[1] + pred[1]))


def predict_locations(model: LrnetModel, windows: np.ndarray) -> np.ndarray:
    """Batched ``predict_location`` over raw (B, L, 2) windows."""
    w = np.asarray(windows, dtype=float)
    anchors = w[:, -1, :]
    pred, _ = forward(model, w - anchors[:, None, :])
    return anchors + pred


def predict_angle(model, window: TrajectoryWindow, ue) -> float:
    return relative_angle(_predict(model, window), ue)


def predict_multi_step(model, window: TrajectoryWindow, steps: int) -> list[Location]:
    """Predict ``steps`` slots ahead, feeding each prediction back as the newest column."""
    if steps < 1:
        raise DomainError("steps must be >= 1")
    out = []
    w = window
    for _ in range(steps):
        u = _predict(model, w)
        out.append(Location(float(u[0]), float(u[1])))
        w = w.advanced(u)
    return out


def _predict(model, window):
    # anything exposing .predict(window) can stand in for a trained network
    if isinstance(model, LrnetModel):
        return predict_location(model, window)
    return model.predict(window)
