"""3-vector / 3x3 kernels: the hat map, Rodrigues closed forms for
``exp`` and ``phi1`` of skew matrices, and independent series oracles.

``hat(b)`` is the skew matrix with ``hat(b) @ v == cross(v, b)``.  A skew
matrix ``t * hat(b)`` is handled through its :class:`SkewAngle`
decomposition ``angle * hat(axis)`` with a unit axis, never by inverting
it (3x3 skew matrices are singular).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend

__all__ = [
    "SkewAngle", "hat", "axial", "decompose", "rodrigues_exp", "rodrigues_phi1",
    "series_exp_oracle", "series_phi1_oracle",
]

# terms of the scaled Taylor series in the oracles; at norm <= 1/2 the
# remainder is below 1e-22
_ORACLE_TERMS = 20


@dataclass(frozen=True)
class SkewAngle:
    """``angle * hat(axis)`` with ``angle >= 0`` and a unit axis."""

    axis: tuple
    angle: float

    def __post_init__(self):
        axis = tuple(float(c) for c in self.axis)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "angle", float(self.angle))
        if not self.angle >= 0.0:
            raise ValueError(f"angle must be non-negative, got {self.angle!r}")
        if self.angle > 0.0 and abs(math.sqrt(sum(c * c for c in axis)) - 1.0) > 1e-14:
            raise ValueError("axis must be a unit vector when angle > 0")

    def matrix(self) -> np.ndarray:
        return self.angle * hat(self.axis)


def hat(b) -> np.ndarray:
    b1, b2, b3 = (float(c) for c in b)
    return np.array([[0.0, b3, -b2], [-b3, 0.0, b1], [b2, -b1, 0.0]])


def axial(m) -> np.ndarray:
    """Inverse of :func:`hat` on the skew part of ``m``."""
    m = np.asarray(m, dtype=float)
    return 0.5 * np.array([m[1, 2] - m[2, 1], m[2, 0] - m[0, 2], m[0, 1] - m[1, 0]])


def decompose(b, t: float) -> SkewAngle:
    """Split ``t * hat(b)`` into angle ``|t| |b|`` and a signed unit axis."""
    axis, angle = _backend.default.decompose(tuple(float(c) for c in b), float(t))
    return SkewAngle(axis, angle)


def rodrigues_exp(s: SkewAngle) -> np.ndarray:
    """``I + sin(a) K + (1 - cos(a)) K^2`` for ``K = hat(axis)``."""
    return np.array(_backend.default.rodrigues_exp(s.axis, s.angle)).reshape(3, 3)


def rodrigues_phi1(s: SkewAngle) -> np.ndarray:
    """``phi1(aK) = I + (1 - cos a)/a K + (a - sin a)/a K^2``.

    Below ``a = 1e-4`` both coefficients come from 4-term Taylor series.
    """
    return np.array(_backend.default.rodrigues_phi1(s.axis, s.angle)).reshape(3, 3)


def _scaled(a):
    a = np.asarray(a, dtype=float)
    norm = np.abs(a).sum(axis=1).max()
    s = 0 if norm <= 0.5 else int(math.ceil(math.log2(norm / 0.5)))
    return a / 2.0 ** s, s


def _taylor(b, offset):
    # sum_k b^k / (k + offset)!
    out = np.eye(3) / math.factorial(offset)
    term = np.eye(3)
    for k in range(1, _ORACLE_TERMS + 1):
        term = term @ b
        out = out + term / math.factorial(k + offset)
    return out


def series_exp_oracle(a) -> np.ndarray:
    """``exp(a)`` by scaling and squaring a truncated Taylor series."""
    b, s = _scaled(a)
    e = _taylor(b, 0)
    for _ in range(s):
        e = e @ e
    return e


def series_phi1_oracle(a) -> np.ndarray:
    """``phi1(a) = sum a^k/(k+1)!`` on the scaled matrix, then doubled back.

    Doubling uses ``phi1(2a) = phi1(a) (exp(a) + I) / 2``; the plain series
    cancels catastrophically for norms of order 50.
    """
    b, s = _scaled(a)
    e = _taylor(b, 0)
    p = _taylor(b, 1)
    eye = np.eye(3)
    for _ in range(s):
        p = 0.5 * p @ (e + eye)
        e = e @ e
    return p
