"""The cube-root nonlinearity ``A(p, q) = (p^2 q)^(1/3)`` and its regularization.

All functions broadcast over numpy arrays and return floats for scalar input.
The monotone pieces satisfy

    -A(p, q)  = A+(|p|, -q)  + A-(-|p|, -q)
    -Ad(p, q) = Ad+(|p|, -q) + Ad-(-|p|, -q)

with ``A+``, ``Ad+`` nonnegative and ``A-``, ``Ad-`` nonpositive, each
nondecreasing in both arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RegularizationParams:
    """Slope caps: ``K`` in the gradient argument, ``L`` in the curvature argument."""

    K: float
    L: float

    def __post_init__(self):
        if not (self.K > 0 and self.L > 0):
            raise ValueError(f"K and L must be positive, got K={self.K}, L={self.L}")
        # small slack for K = h^(-1/3), L = h^(-4/3), where K*sqrt(L) = h^(-1) rounds
        if self.K * math.sqrt(self.L) < 1.0 - 1e-12:
            raise ValueError(f"need K*sqrt(L) >= 1, got {self.K * math.sqrt(self.L)}")

    @classmethod
    def model_1d(cls, h: float) -> "RegularizationParams":
        return cls(h ** (-1 / 3), h ** (-4 / 3))

    @classmethod
    def default_2d(cls, h: float, c_K: float = 20.0, c_L: float = 20.0) -> "RegularizationParams":
        return cls(c_K * h ** (-1 / 9), c_L * h ** (-4 / 9))


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def A(p, q):
    """Real cube root of ``p^2 q``: even in ``p``, odd in ``q``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return _out(np.cbrt(p * p * q))


def A_plus(p, q):
    return _out(np.cbrt(np.square(np.maximum(p, 0.0)) * np.maximum(q, 0.0)))


def A_minus(p, q):
    return _out(np.cbrt(np.square(np.minimum(p, 0.0)) * np.minimum(q, 0.0)))


def A_delta(p, q, params: RegularizationParams):
    """``sgn(q) * min(|A(p,q)|, K|p|, L|q|)`` with ``sgn(0) = 0``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mag = np.minimum(np.abs(np.cbrt(p * p * q)), np.minimum(params.K * np.abs(p), params.L * np.abs(q)))
    return _out(np.sign(q) * mag)


def A_delta_plus(p, q, params: RegularizationParams):
    return A_delta(np.maximum(p, 0.0), np.maximum(q, 0.0), params)


def A_delta_minus(p, q, params: RegularizationParams):
    return A_delta(np.minimum(p, 0.0), np.minimum(q, 0.0), params)


def regularization_error_bound(p, q, params: RegularizationParams):
    """Upper bound on ``|A_delta - A|``, valid when ``K sqrt(L) >= 1``."""
    p = np.abs(np.asarray(p, dtype=float))
    q = np.abs(np.asarray(q, dtype=float))
    return _out(np.maximum(4 * q / (27 * params.K**2), 2 * p / (3 * np.sqrt(3 * params.L))))
