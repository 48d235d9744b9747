"""Episode simulation under the genie, LRNet and Kalman receive-beam schemes."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from . import kalman
from .channel import ChannelState, beam_gain, rate, snr, steering
from .errors import ConfigError, DomainError
from .lrnet.model import predict_multi_step
from .lrnet.train import EPISODE_STREAM_BASE
from .numerics import derive_seed
from .scenario import Location, ScenarioConfig, Trajectory, TrajectoryWindow, generate_trajectory, relative_angle

SCHEMES = ("genie", "lrnet", "kalman")


@dataclass(frozen=True)
class SchemeResult:
    pred: Location
    theta_hat: float
    beam_gain: float
    snr: float
    rate: float


@dataclass(frozen=True)
class EpisodeRecord:
    k: int
    true: Location
    theta: float
    range_m: float
    warmup: bool
    schemes: dict
    blackout: bool = False

    def error(self, scheme: str) -> float:
        p = self.schemes[scheme].pred
        return math.hypot(p.x - self.true.x, p.y - self.true.y)


@dataclass(frozen=True)
class SchemeSummary:
    mean_rate: float
    rate_std: float
    mean_error_m: float
    median_error_m: float
    max_error_m: float
    rate_ratio: float


@dataclass(frozen=True)
class SummaryMetrics:
    schemes: dict
    n_slots: int
    n_scored: int
    metadata: dict = field(default_factory=dict)


class OraclePredictor:
    """Stand-in predictor that returns the true location of the target slot."""

    def __init__(self, trajectory: Trajectory):
        self.positions = trajectory.positions

    def predict(self, window: TrajectoryWindow) -> np.ndarray:
        return np.array(self.positions[window.target_index])


def episode_seed(seed: int, episode: int) -> int:
    """Trajectory seed of evaluation episode ``episode``; disjoint from training streams."""
    return derive_seed(seed, EPISODE_STREAM_BASE + episode)


def episode_trajectory(cfg: ScenarioConfig, seed: int) -> Trajectory:
    cfg.check_windowed()
    return generate_trajectory(cfg, seed=seed)


def _evaluate(cfg: ScenarioConfig, state: ChannelState, u_true, pred) -> SchemeResult:
    theta_hat = relative_angle(pred, cfg.ue_pos)
    w = steering(theta_hat, cfg.n_rx)
    s = snr(state, w, cfg.p_t, cfg.sigma2)
    return SchemeResult(Location(float(pred[0]), float(pred[1])), theta_hat,
                        beam_gain(theta_hat, state.theta, cfg.n_rx), s, rate(s))


def _genie(cfg, state, u) -> SchemeResult:
    s = cfg.p_t * state.path_gain ** 2 / cfg.sigma2
    return SchemeResult(Location(*u), state.theta, 1.0, s, rate(s))


def _run(model, cfg: ScenarioConfig, traj: Trajectory, blackout: frozenset, kalman_mode: str,
         q: float, r: float) -> list[EpisodeRecord]:
    L = cfg.window_l
    pos = traj.positions
    K = len(pos)
    # reported[j]: whether u_j reached the UE (it is sent during slot j + 1)
    reported = np.array([(j + 1) not in blackout for j in range(K)])
    filled = np.array(pos, dtype=float)  # UE-side history; gaps hold LRNet's own predictions
    tracker = kalman.KalmanTracker(cfg.delta_t, q, r) if kalman_mode == "continuous" else None
    if kalman_mode not in ("two-point", "continuous"):
        raise ConfigError(f"unknown kalman mode {kalman_mode!r}")
    records = []
    for k in range(K):
        u = Location(float(pos[k, 0]), float(pos[k, 1]))
        state = ChannelState.from_geometry(u, cfg.ue_pos, cfg)
        genie = _genie(cfg, state, u)
        if tracker is not None and k >= 1:
            if reported[k - 1]:
                tracker.observe(pos[k - 1])
            else:
                tracker.skip()
        if k < L:
            records.append(EpisodeRecord(k, u, state.theta, state.range, True,
                                         {"genie": genie, "lrnet": genie, "kalman": genie}))
            continue
        last = k - 1
        while not reported[last]:
            last -= 1
        w = TrajectoryWindow(filled[last - L + 1:last + 1].copy(), last + 1)
        u_lr = np.asarray(predict_multi_step(model, w, k - last)[-1])
        if not reported[k]:
            filled[k] = u_lr
        if tracker is not None:
            u_kf = tracker.predict()
        else:
            prev = last - 1
            while not reported[prev]:
                prev -= 1
            s0 = kalman.init_two_point(pos[prev], pos[last], (last - prev) * cfg.delta_t, q, r)
            for _ in range(k - last):
                s0 = kalman.kf_predict(s0, cfg.delta_t, q)
            u_kf = s0.position
        records.append(EpisodeRecord(
            k, u, state.theta, state.range, False,
            {"genie": genie, "lrnet": _evaluate(cfg, state, u, u_lr),
             "kalman": _evaluate(cfg, state, u, u_kf)},
            blackout=k in blackout,
        ))
    return records


def run_episode(model, cfg: ScenarioConfig, episode_seed: int, kalman_mode: str = "two-point",
                q: float = kalman.DEFAULT_Q, r: float = kalman.DEFAULT_R) -> list[EpisodeRecord]:
    """Simulate one fresh trajectory; slots before ``window_l`` use genie alignment for all schemes.

    ``model`` is an LrnetModel or any object with ``predict(window)``.
    """
    _check_model(model, cfg)
    traj = episode_trajectory(cfg, episode_seed)
    return _run(model, cfg, traj, frozenset(), kalman_mode, q, r)


def run_failover_episode(model, cfg: ScenarioConfig, episode_seed: int, blackout,
                         kalman_mode: str = "two-point", q: float = kalman.DEFAULT_Q,
                         r: float = kalman.DEFAULT_R) -> list[EpisodeRecord]:
    """Like ``run_episode`` but u_{k-1} never reaches the UE for every slot k in ``blackout``.

    LRNet rolls its own predictions forward across the gap; Kalman extrapolates
    from the last two locations it did receive.
    """
    _check_model(model, cfg)
    blackout = frozenset(int(k) for k in blackout)
    L, K = cfg.window_l, cfg.k_slots
    if blackout and (min(blackout) < L + 1 or max(blackout) >= K):
        raise ConfigError(f"blackout slots must lie in [{L + 1}, {K - 1}]")
    if set(range(L + 1, K)) <= blackout:
        raise ConfigError("blackout covers the entire episode")
    traj = episode_trajectory(cfg, episode_seed)
    return _run(model, cfg, traj, blackout, kalman_mode, q, r)


def _check_model(model, cfg):
    wl = getattr(model, "window_l", cfg.window_l)
    if wl != cfg.window_l:
        raise ConfigError(f"model window length {wl} != scenario window_l {cfg.window_l}")


def summarize(records, metadata: dict | None = None) -> SummaryMetrics:
    """Per-scheme rate and location-error aggregates.

    Rate statistics cover every slot; std-dev uses the population (1/n)
    convention. Location errors cover post-warm-up slots only.
    """
    records = list(records)
    if not records:
        raise DomainError("no records to summarize")
    scored = [rec for rec in records if not rec.warmup]
    out = {}
    for name in SCHEMES:
        rates = [rec.schemes[name].rate for rec in records]
        ratios = [rec.schemes[name].rate / rec.schemes["genie"].rate if rec.schemes["genie"].rate > 0 else 1.0
                  for rec in records]
        errs = [rec.error(name) for rec in scored] or [0.0]
        out[name] = SchemeSummary(
            mean_rate=statistics.fmean(rates),
            rate_std=statistics.pstdev(rates),
            mean_error_m=statistics.fmean(errs),
            median_error_m=statistics.median(errs),
            max_error_m=max(errs),
            rate_ratio=statistics.fmean(ratios),
        )
    return SummaryMetrics(out, len(records), len(scored), dict(metadata or {}))
