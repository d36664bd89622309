"""Reproducible random streams.

Every realization draws from a counter-based SplitMix64 stream so that the
same ensemble can be regenerated bit-for-bit in any language:

* realization seed: ``derive_seed(master, i) = mix64(master ^ mix64(i + GOLDEN))``
* stream output ``k`` (k = 0, 1, ...): ``mix64(seed + (k + 1) * GOLDEN mod 2**64)``
* uniform in (0, 1]: ``((out >> 11) + 1) * 2**-53``
* complex Gaussian (E|a|^2 = 1): Box-Muller on two consecutive uniforms
  ``u1, u2``: ``sqrt(-log u1) * exp(2 pi i u2)``
* uniform phase: ``exp(2 pi i u)`` from one uniform

with ``mix64(z)``: ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
z *= 0x94D049BB133111EB; z ^= z >> 31`` (all mod 2**64).
"""
from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Seed of realization ``index`` under ``master``."""
    return mix64((master & _MASK) ^ mix64(index + GOLDEN))


def _mix64_array(z):
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_M1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


class Stream:
    """Counter-based SplitMix64 stream; draws advance an internal counter."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        self.counter = 0

    def raw(self, n: int) -> np.ndarray:
        k = np.arange(self.counter + 1, self.counter + 1 + n, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + k * np.uint64(GOLDEN)
            return _mix64_array(z)

    def uniform(self, n: int) -> np.ndarray:
        out = self.raw(n)
        return ((out >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53

    def complex_gaussian(self, n: int) -> np.ndarray:
        u = self.uniform(2 * n)
        u1, u2 = u[0::2], u[1::2]
        return np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)

    def uniform_phase(self, n: int) -> np.ndarray:
        return np.exp(2j * np.pi * self.uniform(n))

    def draw(self, law: str, n: int) -> np.ndarray:
        if law == "gaussian":
            return self.complex_gaussian(n)
        if law == "uniform_phase":
            return self.uniform_phase(n)
        raise ValueError(f"unknown coefficient law {law!r}")
