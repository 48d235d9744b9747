"""Constant-velocity Kalman baseline.

State is [x, y, vx, vy] in meters and m/s. Process noise is the discrete
white-acceleration model scaled by ``q`` (m^2/s^3); measurements observe
position with variance ``r`` (m^2) per axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UavBeamError
from .scenario import Location

DEFAULT_Q = 1.0
DEFAULT_R = 1e-4

_H = np.array([[1.0, 0.0, 0.0, 0.0],
               [0.0, 1.0, 0.0, 0.0]])


class NumericalError(UavBeamError, ArithmeticError):
    exit_code = 3


@dataclass(frozen=True)
class KalmanState:
    state: np.ndarray  # (4,)
    covariance: np.ndarray  # (4, 4)

    @property
    def position(self) -> Location:
        return Location(float(self.state[0]), float(self.state[1]))

    @property
    def velocity(self) -> np.ndarray:
        return self.state[2:].copy()


def transition(delta_t: float) -> np.ndarray:
    F = np.eye(4)
    F[0, 2] = F[1, 3] = delta_t
    return F


def process_noise(delta_t: float, q: float) -> np.ndarray:
    dt = delta_t
    blk = np.array([[dt ** 4 / 4, dt ** 3 / 2],
                    [dt ** 3 / 2, dt ** 2]]) * q
    Q = np.zeros((4, 4))
    Q[np.ix_([0, 2], [0, 2])] = blk
    Q[np.ix_([1, 3], [1, 3])] = blk
    return Q


def init_two_point(u_a, u_b, delta_t: float, q: float = DEFAULT_Q, r: float = DEFAULT_R) -> KalmanState:
    """Position from the newer point, velocity from the finite difference.

    Each position sample carries variance r, so the velocity variance is
    2r/dt^2 and the position/velocity covariance is r/dt. ``q`` is unused
    here and accepted for call-site symmetry with ``kf_predict``.
    """
    if not delta_t > 0:
        raise DomainError("delta_t must be positive")
    ua = np.asarray(u_a, dtype=float)
    ub = np.asarray(u_b, dtype=float)
    x = np.concatenate([ub, (ub - ua) / delta_t])
    P = np.zeros((4, 4))
    for p, v in ((0, 2), (1, 3)):
        P[p, p] = r
        P[v, v] = 2.0 * r / delta_t ** 2
        P[p, v] = P[v, p] = r / delta_t
    return KalmanState(x, P)


def kf_predict(s: KalmanState, delta_t: float, q: float = DEFAULT_Q) -> KalmanState:
    F = transition(delta_t)
    P = F @ s.covariance @ F.T + process_noise(delta_t, q)
    return KalmanState(F @ s.state, 0.5 * (P + P.T))


def kf_update(s: KalmanState, z, r: float = DEFAULT_R) -> KalmanState:
    """Position-measurement update in Joseph form (keeps P symmetric PSD)."""
    z = np.asarray(z, dtype=float)
    P = s.covariance
    S = _H @ P @ _H.T + r * np.eye(2)
    if np.linalg.cond(S) > 1e15:
        raise NumericalError("singular innovation covariance")
    K = np.linalg.solve(S, _H @ P).T
    x = s.state + K @ (z - _H @ s.state)
    A = np.eye(4) - K @ _H
    P = A @ P @ A.T + r * (K @ K.T)
    return KalmanState(x, 0.5 * (P + P.T))


def baseline_predict(history, delta_t: float, steps: int = 1, q: float = DEFAULT_Q,
                     r: float = DEFAULT_R) -> Location:
    """Two-point Kalman prediction ``steps`` slots past the newer of the two locations."""
    if len(history) < 2:
        raise DomainError("need the two most recent locations")
    s = init_two_point(history[-2], history[-1], delta_t, q, r)
    for _ in range(steps):
        s = kf_predict(s, delta_t, q)
    return s.position


class KalmanTracker:
    """Long-running filter over every reported location (alternative to per-slot re-init)."""

    def __init__(self, delta_t: float, q: float = DEFAULT_Q, r: float = DEFAULT_R):
        self.delta_t, self.q, self.r = delta_t, q, r
        self.state: KalmanState | None = None
        self._first = None
        self._pending = 0  # slots predicted forward since the last update

    def observe(self, u) -> None:
        """Feed the location of the slot after the last observed/skipped one."""
        if self.state is None:
            if self._first is None:
                self._first = np.asarray(u, dtype=float)
            else:
                self.state = init_two_point(self._first, u, self.delta_t, self.q, self.r)
            self._pending = 0
            return
        s = self.state
        for _ in range(self._pending + 1):
            s = kf_predict(s, self.delta_t, self.q)
        self.state = kf_update(s, u, self.r)
        self._pending = 0

    def skip(self) -> None:
        """Record a slot whose location never arrived."""
        self._pending += 1

    def predict(self, steps: int = 1) -> Location:
        if self.state is None:
            raise DomainError("tracker needs two observations")
        s = self.state
        for _ in range(self._pending + steps):
            s = kf_predict(s, self.delta_t, self.q)
        return s.position
