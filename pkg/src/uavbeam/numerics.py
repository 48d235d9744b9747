"""Vector helpers and the seeded random source everything else draws from.

The uniform stream comes from numpy's PCG64 bit generator (64-bit state,
``Generator.random`` gives 53-bit doubles on [0, 1)). Gaussian variates are
produced here with the Box-Muller transform, always consuming exactly two
uniforms per *pair* of normals, so the number of uniforms drawn for a given
sequence of calls is fixed and documented.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError, DomainError

PRNG_NAME = "numpy-PCG64/box-muller"


def inner_product(x, y) -> complex:
    """Return sum(conj(x_i) * y_i)."""
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"inner product of shapes {x.shape} and {y.shape}")
    return complex(np.vdot(x, y))


def derive_seed(parent_seed: int, stream_index: int) -> int:
    """Child seed for an independent stream: a hash of (parent, index)."""
    ss = np.random.SeedSequence([int(parent_seed) & 0xFFFFFFFFFFFFFFFF, int(stream_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class RandomSource:
    """Single-owner seeded random stream.

    Scalar and array draws share one stream: ``uniforms(n)`` yields the same
    values as ``n`` successive ``uniform(0, 1)`` calls.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def child(self, stream_index: int) -> "RandomSource":
        return RandomSource(derive_seed(self.seed, stream_index))

    def next_double(self) -> float:
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        return self._gen.random(n)

    def uniform(self, lo: float, hi: float) -> float:
        return uniform(self, lo, hi)

    def gaussian2(self, sigma: float) -> tuple[float, float]:
        return gaussian2(self, sigma)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of range(n) driven by this stream."""
        idx = np.arange(n)
        u = self.uniforms(max(n - 1, 0))
        for i in range(n - 1, 0, -1):
            j = int(u[n - 1 - i] * (i + 1))
            idx[i], idx[j] = idx[j], idx[i]
        return idx


def uniform(rng: RandomSource, lo: float, hi: float) -> float:
    if lo > hi:
        raise DomainError(f"uniform bounds reversed: lo={lo} > hi={hi}")
    if lo == hi:
        # still consume one draw so stream alignment does not depend on bounds
        rng.next_double()
        return float(lo)
    v = lo + (hi - lo) * rng.next_double()
    # rounding can land exactly on hi for wide/odd intervals
    return v if v < hi else math.nextafter(hi, lo)


def _box_muller(u1, u2, sigma):
    r = sigma * np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 is in (0, 1]
    phase = 2.0 * np.pi * u2
    return r * np.cos(phase), r * np.sin(phase)


def gaussian2(rng: RandomSource, sigma: float) -> tuple[float, float]:
    """Two independent N(0, sigma^2) values from two uniforms."""
    if sigma < 0:
        raise DomainError(f"negative sigma {sigma}")
    u1 = rng.next_double()
    u2 = rng.next_double()
    if sigma == 0:
        return 0.0, 0.0
    z0, z1 = _box_muller(u1, u2, sigma)
    return float(z0), float(z1)


def uniform_array(rng: RandomSource, lo: float, hi: float, n: int) -> np.ndarray:
    """Vectorised ``uniform``; same stream consumption as n scalar calls."""
    if lo > hi:
        raise DomainError(f"uniform bounds reversed: lo={lo} > hi={hi}")
    u = rng.uniforms(n)
    if lo == hi:
        return np.full(n, float(lo))
    v = lo + (hi - lo) * u
    return np.where(v < hi, v, np.nextafter(hi, lo))


def gaussian_array(rng: RandomSource, sigma: float, n_pairs: int) -> np.ndarray:
    """``n_pairs`` successive ``gaussian2`` draws as an (n_pairs, 2) array."""
    if sigma < 0:
        raise DomainError(f"negative sigma {sigma}")
    u = rng.uniforms(2 * n_pairs).reshape(n_pairs, 2)
    if sigma == 0:
        return np.zeros((n_pairs, 2))
    z0, z1 = _box_muller(u[:, 0], u[:, 1], sigma)
    return np.stack([z0, z1], axis=1)
