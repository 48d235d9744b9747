"""Dataset construction and mini-batch Adam training."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DomainError, SchemaError, TrainingDivergenceError
from ..numerics import RandomSource, derive_seed
from ..scenario import Location, ScenarioConfig, generate_trajectory
from .model import LrnetModel, backward, forward, mse_loss

log = logging.getLogger(__name__)

# Training trajectories use child streams [0, EPISODE_STREAM_BASE); evaluation
# episodes use streams from EPISODE_STREAM_BASE up, so the two never overlap.
EPISODE_STREAM_BASE = 1 << 32


@dataclass(frozen=True)
class TrainConfig:
    n_examples: int = 9000
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip_norm: float = 5.0
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        bad = [n for n in ("n_examples", "epochs", "batch_size", "adam_eps", "grad_clip_norm")
               if not getattr(self, n) > 0]
        if self.learning_rate < 0:
            bad.append("learning_rate")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            bad.append("adam_beta1/adam_beta2")
        if not 0 < self.validation_fraction <= 0.5:
            bad.append("validation_fraction")
        if bad:
            raise ConfigError("invalid training parameters: " + ", ".join(bad))

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise SchemaError("unknown train keys: " + ", ".join(unknown))
        try:
            return cls(**doc)
        except TypeError as exc:
            raise SchemaError(str(exc)) from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class TrainingExample:
    input: np.ndarray  # (L, 2) displacements from the anchor
    label: np.ndarray  # (2,) u_k - anchor
    anchor: Location

    @property
    def target(self) -> np.ndarray:
        return np.asarray(self.anchor) + self.label


@dataclass
class Dataset:
    inputs: np.ndarray  # (n, L, 2)
    labels: np.ndarray  # (n, 2)
    anchors: np.ndarray  # (n, 2)
    seed: int | None = None

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, i) -> TrainingExample:
        a = self.anchors[i]
        return TrainingExample(self.inputs[i], self.labels[i], Location(float(a[0]), float(a[1])))

    def subset(self, idx) -> "Dataset":
        return Dataset(self.inputs[idx], self.labels[idx], self.anchors[idx], self.seed)

    @property
    def targets(self) -> np.ndarray:
        return self.anchors + self.labels


def windows_from_positions(positions: np.ndarray, l: int):
    """All (window, target) pairs of a trajectory: windows (K-L, L, 2), targets (K-L, 2)."""
    k = len(positions)
    idx = np.arange(l, k)[:, None] + np.arange(-l, 0)[None, :]
    return positions[idx], positions[l:]


def build_dataset(cfg: ScenarioConfig, n_trajectories: int, seed: int) -> Dataset:
    """Sliding-window examples from ``n_trajectories`` fresh trajectories."""
    if n_trajectories < 1:
        raise DomainError("n_trajectories must be >= 1")
    cfg.check_windowed()
    l = cfg.window_l
    inputs, labels, anchors = [], [], []
    for i in range(n_trajectories):
        traj = generate_trajectory(cfg, seed=derive_seed(seed, i))
        win, tgt = windows_from_positions(traj.positions, l)
        anchor = win[:, -1, :]
        inputs.append(win - anchor[:, None, :])
        labels.append(tgt - anchor)
        anchors.append(anchor)
    return Dataset(np.concatenate(inputs), np.concatenate(labels), np.concatenate(anchors), seed)


def trajectories_for(n_examples: int, cfg: ScenarioConfig) -> int:
    return max(1, math.ceil(n_examples / (cfg.k_slots - cfg.window_l)))


@dataclass
class OptimizerState:
    first_moment: dict
    second_moment: dict
    step_count: int = 0

    @classmethod
    def for_params(cls, params: dict) -> "OptimizerState":
        return cls({k: np.zeros_like(v) for k, v in params.items()},
                   {k: np.zeros_like(v) for k, v in params.items()})


def _params(model) -> dict:
    return model.parameters() if hasattr(model, "parameters") else model


def clip_gradients(grads: dict, max_norm: float) -> dict:
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}


def adam_step(model, gradients: dict, state: OptimizerState, cfg: TrainConfig):
    """One Adam update in place on ``model`` (an LrnetModel or a name->array dict)."""
    params = _params(model)
    if params.keys() != gradients.keys():
        raise DomainError("gradient names do not match parameters")
    grads = clip_gradients(gradients, cfg.grad_clip_norm)
    state.step_count += 1
    t = state.step_count
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    for name, p in params.items():
        g = grads[name]
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= cfg.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + cfg.adam_eps)
    return model, state


def evaluate_loss(model: LrnetModel, inputs, labels, batch: int = 1024) -> float:
    if len(labels) == 0:
        raise DomainError("empty evaluation set")
    total = 0.0
    for s in range(0, len(labels), batch):
        pred, _ = forward(model, inputs[s:s + batch])
        total += float(np.sum((labels[s:s + batch] - pred) ** 2))
    return total / (2 * len(labels))


def split(dataset: Dataset, fraction: float) -> tuple[Dataset, Dataset]:
    """Hold out the trailing ``fraction`` of examples (the last trajectories) for validation."""
    n_val = max(1, int(round(fraction * len(dataset))))
    if n_val >= len(dataset):
        raise DomainError("dataset too small for a validation split")
    cut = len(dataset) - n_val
    return dataset.subset(slice(0, cut)), dataset.subset(slice(cut, None))


def train(model: LrnetModel, dataset: Dataset, cfg: TrainConfig, progress=None):
    """Mini-batch Adam; returns (best-validation model, history).

    ``history`` is a list of per-epoch dicts; entry 0 holds the losses of the
    untrained model. The input model is not modified.
    """
    if len(dataset) == 0:
        raise DomainError("empty dataset")
    train_set, val_set = split(dataset, cfg.validation_fraction)
    model = model.copy()
    model.seed = cfg.seed
    state = OptimizerState.for_params(model.parameters())
    rng = RandomSource(derive_seed(cfg.seed, 0x5348))

    def record(epoch):
        tl = evaluate_loss(model, train_set.inputs, train_set.labels)
        vl = evaluate_loss(model, val_set.inputs, val_set.labels)
        if not (math.isfinite(tl) and math.isfinite(vl)):
            raise TrainingDivergenceError(epoch)
        history.append({"epoch": epoch, "train_loss": tl, "val_loss": vl})
        if progress:
            progress(history[-1])
        return vl

    history: list[dict] = []
    best_val = record(0)
    best = model.copy()
    n = len(train_set)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for s in range(0, n, cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            pred, cache = forward(model, train_set.inputs[idx])
            if not np.all(np.isfinite(pred)):
                raise TrainingDivergenceError(epoch)
            grads = backward(model, cache, train_set.labels[idx])
            adam_step(model, grads, state, cfg)
        vl = record(epoch)
        if vl < best_val:
            best_val = vl
            best = model.copy()
        log.debug("epoch %d train %.6g val %.6g", epoch, history[-1]["train_loss"], vl)
    return best, history


def train_default(cfg: ScenarioConfig, tcfg: TrainConfig, progress=None):
    """Build the training set from ``tcfg`` and train a freshly initialised model."""
    from .model import init_model

    data = build_dataset(cfg, trajectories_for(tcfg.n_examples, cfg), tcfg.seed)
    model = init_model(derive_seed(tcfg.seed, 0x494E4954), cfg.window_l)
    trained, history = train(model, data, tcfg, progress)
    trained.seed = tcfg.seed
    return trained, history, data


def persistence_mse(dataset: Dataset) -> float:
    """MSE (same 1/2n convention) of predicting u_k = u_{k-1}."""
    return mse_loss(np.zeros_like(dataset.labels), dataset.labels)
