"""Scenario configuration, UAV motion model and sliding windows."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DegenerateGeometryError, DimensionError, SchemaError
from .numerics import RandomSource, gaussian2, uniform

MIN_RANGE_M = 0.5


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


class Location(NamedTuple):
    x: float
    y: float


class Velocity(NamedTuple):
    amplitude: float  # meters per slot
    heading: float  # radians


@dataclass(frozen=True)
class ScenarioConfig:
    """Link, motion and episode parameters (SI units; speeds in m/slot)."""

    m_tx: int = 16
    n_rx: int = 8
    f_c: float = 30e9
    c_prop: float = 3.0e8
    p_t: float = dbm_to_watt(20.0)
    sigma2: float = dbm_to_watt(-90.0)
    delta_t: float = 0.02
    k_slots: int = 200
    window_l: int = 20
    ue_pos: Location = Location(0.0, 0.0)
    speed_lo: float = 0.4
    speed_hi: float = 0.7
    heading_lo: float = -math.pi / 6
    heading_hi: float = math.pi / 6
    sigma_v: float = 0.01
    uav_start: Location = Location(15.0, 15.0)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ue_pos", Location(*map(float, self.ue_pos)))
        object.__setattr__(self, "uav_start", Location(*map(float, self.uav_start)))
        self.validate()

    def validate(self) -> None:
        bad = []
        for name in ("m_tx", "n_rx"):
            if getattr(self, name) < 1:
                bad.append(name)
        for name in ("f_c", "c_prop", "p_t", "sigma2", "delta_t"):
            if not getattr(self, name) > 0:
                bad.append(name)
        if not 0 <= self.speed_lo <= self.speed_hi:
            bad.append("speed_lo/speed_hi")
        if not -math.pi <= self.heading_lo <= self.heading_hi <= math.pi:
            bad.append("heading_lo/heading_hi")
        if not self.sigma_v >= 0:
            bad.append("sigma_v")
        if self.window_l < 2:
            bad.append("window_l")
        if self.k_slots < 1:
            bad.append("k_slots")
        if bad:
            raise ConfigError("invalid scenario parameters: " + ", ".join(bad))

    def check_windowed(self) -> None:
        if self.k_slots <= self.window_l:
            raise ConfigError(f"k_slots={self.k_slots} must exceed window_l={self.window_l}")

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["ue_pos"] = list(self.ue_pos)
        d["uav_start"] = list(self.uav_start)
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise SchemaError("unknown scenario keys: " + ", ".join(unknown))
        for key in ("ue_pos", "uav_start"):
            if key in doc:
                v = doc[key]
                if not (isinstance(v, (list, tuple)) and len(v) == 2):
                    raise SchemaError(f"{key} must be a 2-element list")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise SchemaError(str(exc)) from exc

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def speed_range_mps(self) -> tuple[float, float]:
        return self.speed_lo / self.delta_t, self.speed_hi / self.delta_t


@dataclass(frozen=True)
class Trajectory:
    positions: np.ndarray  # (k_slots, 2), meters
    config_hash: str = ""

    def __len__(self):
        return len(self.positions)

    @property
    def locations(self) -> list[Location]:
        return [Location(float(x), float(y)) for x, y in self.positions]


@dataclass(frozen=True)
class TrajectoryWindow:
    """The L most recent locations before ``target_index``, oldest first.

    Stored as an (L, 2) array, one row per slot.
    """

    columns: np.ndarray
    target_index: int = -1

    def __len__(self):
        return len(self.columns)

    def shifted(self, offset) -> "TrajectoryWindow":
        return TrajectoryWindow(self.columns + np.asarray(offset, dtype=float), self.target_index)

    def advanced(self, new_location) -> "TrajectoryWindow":
        """Drop the oldest column and append ``new_location``."""
        cols = np.vstack([self.columns[1:], np.asarray(new_location, dtype=float)[None, :]])
        return TrajectoryWindow(cols, self.target_index + 1)


def step(u_prev, rng: RandomSource, cfg: ScenarioConfig) -> Location:
    """Advance one slot. Draw order: amplitude, heading, then the 2-D disturbance."""
    alpha = uniform(rng, cfg.speed_lo, cfg.speed_hi)
    beta = uniform(rng, cfg.heading_lo, cfg.heading_hi)
    lx, ly = gaussian2(rng, cfg.sigma_v)
    return apply_motion(u_prev, Velocity(alpha, beta), (lx, ly))


def apply_motion(u_prev, v: Velocity, disturbance=(0.0, 0.0)) -> Location:
    return Location(
        u_prev[0] + v.amplitude * math.cos(v.heading) + disturbance[0],
        u_prev[1] + v.amplitude * math.sin(v.heading) + disturbance[1],
    )


def generate_trajectory(cfg: ScenarioConfig, seed: int | None = None) -> Trajectory:
    """Iterate ``step`` from ``cfg.uav_start`` for ``cfg.k_slots`` slots.

    ``seed`` overrides ``cfg.seed``. Raises DegenerateGeometryError if the UAV
    comes within MIN_RANGE_M of the UE.
    """
    rng = RandomSource(cfg.seed if seed is None else seed)
    pos = np.empty((cfg.k_slots, 2))
    u = cfg.uav_start
    for k in range(cfg.k_slots):
        if k > 0:
            u = step(u, rng, cfg)
        if math.hypot(u[0] - cfg.ue_pos[0], u[1] - cfg.ue_pos[1]) < MIN_RANGE_M:
            raise DegenerateGeometryError(f"UAV within {MIN_RANGE_M} m of the UE at slot {k}")
        pos[k] = u
    pos.setflags(write=False)
    h = cfg.config_hash() if seed is None else f"{cfg.config_hash()}:{seed}"
    return Trajectory(pos, h)


def relative_angle(u, ue) -> float:
    """Angle in [0, pi] of the UAV seen from the UE, measured from the +x axis."""
    dx = u[0] - ue[0]
    dy = u[1] - ue[1]
    d = math.hypot(dx, dy)
    if d == 0.0:
        raise DegenerateGeometryError("UAV and UE locations coincide")
    return math.acos(min(1.0, max(-1.0, dx / d)))


def window(traj: Trajectory, k: int, l: int) -> TrajectoryWindow:
    if k < l:
        raise DimensionError(f"slot {k} has fewer than {l} past locations")
    if k >= len(traj):
        raise DimensionError(f"slot {k} beyond trajectory of length {len(traj)}")
    return TrajectoryWindow(np.array(traj.positions[k - l:k]), k)


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        doc = json.load(fh)
    doc.pop("train", None)
    return ScenarioConfig.from_dict(doc)
