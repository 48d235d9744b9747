"""Line-of-sight ULA channel, beamformers, SNR and rate.

Half-wavelength element spacing is assumed throughout, so the per-element
phase step is pi*cos(theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, DomainError
from .numerics import RandomSource, gaussian2, inner_product
from .scenario import ScenarioConfig, relative_angle


def steering(theta: float, n: int) -> np.ndarray:
    """Unit-norm ULA response, element i = exp(-j*pi*i*cos(theta)) / sqrt(n)."""
    if n < 1:
        raise DomainError(f"array length must be >= 1, got {n}")
    phase = -math.pi * math.cos(theta) * np.arange(n)
    return np.exp(1j * phase) / math.sqrt(n)


def path_gain(u, ue, cfg: ScenarioConfig) -> float:
    d = math.hypot(u[0] - ue[0], u[1] - ue[1])
    if d == 0.0:
        raise DegenerateGeometryError("UAV and UE locations coincide")
    return cfg.c_prop / (4.0 * math.pi * cfg.f_c * d)


@dataclass(frozen=True)
class ChannelState:
    path_gain: float
    theta: float
    range: float

    @classmethod
    def from_geometry(cls, u, ue, cfg: ScenarioConfig) -> "ChannelState":
        return cls(path_gain(u, ue, cfg), relative_angle(u, ue), math.hypot(u[0] - ue[0], u[1] - ue[1]))


@dataclass(frozen=True)
class BeamPair:
    tx_beam: np.ndarray  # f_k, length M
    rx_beam: np.ndarray  # w_k, length N


@dataclass(frozen=True)
class RxSample:
    value: complex
    tx_symbol: complex
    noise_power: float


def channel_matrix(state: ChannelState, m_tx: int, n_rx: int) -> np.ndarray:
    """Dense rank-1 N x M channel h * b(theta) a(theta)^H."""
    a = steering(state.theta, m_tx)
    b = steering(state.theta, n_rx)
    return state.path_gain * np.outer(b, a.conj())


def receive_sample(state: ChannelState, beams: BeamPair, s: complex, rng: RandomSource,
                   sigma2: float) -> RxSample:
    """w^H H f s plus circularly-symmetric noise of total variance sigma2."""
    m = len(beams.tx_beam)
    n = len(beams.rx_beam)
    H = channel_matrix(state, m, n)
    clean = inner_product(beams.rx_beam, H @ beams.tx_beam) * s
    nr, ni = gaussian2(rng, math.sqrt(sigma2 / 2.0))
    return RxSample(clean + complex(nr, ni), s, sigma2)


def snr(state: ChannelState, rx_beam: np.ndarray, p_t: float, sigma2: float) -> float:
    """Receive SNR with the transmit beam matched to the true angle."""
    b = steering(state.theta, len(rx_beam))
    return p_t * abs(state.path_gain * inner_product(rx_beam, b)) ** 2 / sigma2


def snr_full(state: ChannelState, beams: BeamPair, p_t: float, sigma2: float) -> float:
    """SNR from the explicit chain w^H b a^H f (no matched-beam reduction)."""
    a = steering(state.theta, len(beams.tx_beam))
    b = steering(state.theta, len(beams.rx_beam))
    g = state.path_gain * inner_product(beams.rx_beam, b) * inner_product(a, beams.tx_beam)
    return p_t * abs(g) ** 2 / sigma2


def rate(snr_value: float) -> float:
    if snr_value < 0:
        raise DomainError(f"negative SNR {snr_value}")
    return math.log2(1.0 + snr_value)


def beam_gain(theta_hat: float, theta: float, n: int) -> float:
    """|b(theta_hat)^H b(theta)|^2, the N-element Dirichlet kernel in cos-space."""
    if n < 1:
        raise DomainError(f"array length must be >= 1, got {n}")
    delta = math.cos(theta) - math.cos(theta_hat)
    s = np.exp(1j * math.pi * delta * np.arange(n)).sum() / n
    return min(1.0, abs(s) ** 2)
