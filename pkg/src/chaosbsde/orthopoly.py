"""Hermite and Charlier polynomials in the chaos-basis normalization.

The continuous (Brownian) factor uses the Hermite family K_m defined by the
generating function

    exp(x*t - t**2 / 2) = sum_m K_m(x) * t**m,

so K_m equals the probabilists' Hermite polynomial He_m divided by m!, and
sqrt(m!) * K_m(X) is orthonormal when X is standard normal. Substituting
K_m = He_m/m! into He_{m+1}(x) = x*He_m(x) - m*He_{m-1}(x) and dividing by
(m+1)! gives the recurrence actually implemented:

    K_0(x) = 1,  K_1(x) = x,  K_{m+1}(x) = (x*K_m(x) - K_{m-1}(x)) / (m+1).

A useful byproduct of this normalization is K_m'(x) = K_{m-1}(x).

The discrete (Poisson) factor uses the Charlier family C_m(., t), t >= 0:

    C_0 = 1,  C_1(x, t) = x - t,
    C_{m+1}(x, t) = (x - m - t) * C_m(x, t) - m * t * C_{m-1}(x, t),

and C_m(X, t) / sqrt(m! * t**m) is orthonormal when X is Poisson(t).

Degrees are capped at MAX_DEGREE = 60: beyond that the factorial weights
over/underflow float64 long before the values are of any statistical use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["PolyTable", "hermite_upto", "charlier_upto", "MAX_DEGREE"]

MAX_DEGREE = 60


@dataclass(frozen=True, eq=False)
class PolyTable:
    """Values of one polynomial family at one point, degrees 0..m_max.

    ``table[m]`` is the degree-m value; ``table.values`` is the full vector.
    """

    values: np.ndarray

    def __getitem__(self, m: int) -> float:
        return float(self.values[m])

    def __len__(self) -> int:
        return len(self.values)

    @property
    def max_degree(self) -> int:
        return len(self.values) - 1


def _check_degree(m_max: int) -> None:
    if not isinstance(m_max, int) or isinstance(m_max, bool):
        raise TypeError(f"m_max must be an int, got {type(m_max).__name__}")
    if m_max < 0:
        raise ValueError(f"m_max must be >= 0, got {m_max}")
    if m_max > MAX_DEGREE:
        raise ValueError(f"m_max = {m_max} exceeds the degree cap {MAX_DEGREE}")


def hermite_batch(m_max: int, x: np.ndarray) -> np.ndarray:
    """Hermite values K_0..K_{m_max} at every entry of x.

    Returns an array of shape (m_max+1,) + x.shape.
    """
    _check_degree(m_max)
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((m_max + 1,) + x.shape, dtype=np.float64)
    out[0] = 1.0
    if m_max >= 1:
        out[1] = x
    for m in range(1, m_max):
        out[m + 1] = (x * out[m] - out[m - 1]) / (m + 1)
    return out


def charlier_batch(m_max: int, x: np.ndarray, t: float) -> np.ndarray:
    """Charlier values C_0..C_{m_max}(x, t) at every entry of x.

    Returns an array of shape (m_max+1,) + x.shape.
    """
    _check_degree(m_max)
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"t must be finite and >= 0, got {t!r}")
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((m_max + 1,) + x.shape, dtype=np.float64)
    out[0] = 1.0
    if m_max >= 1:
        out[1] = x - t
    for m in range(1, m_max):
        out[m + 1] = (x - m - t) * out[m] - (m * t) * out[m - 1]
    return out


def hermite_upto(m_max: int, x: float) -> PolyTable:
    """Table of K_0(x)..K_{m_max}(x) at a scalar point.

    Examples: hermite_upto(1, 3.5) has values [1, 3.5];
    hermite_upto(2, 3) is [1, 3, 4] since K_2(3) = (9 - 1)/2;
    hermite_upto(3, 2) is [1, 2, 1.5, 1/3] since K_3(2) = (8 - 6)/6.
    """
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    return PolyTable(hermite_batch(m_max, np.float64(x)))


def charlier_upto(m_max: int, x: float, t: float) -> PolyTable:
    """Table of C_0(x, t)..C_{m_max}(x, t) at a scalar point.

    Examples: charlier_upto(1, 4, 1) has values [1, 3];
    charlier_upto(2, 3, 1) is [1, 2, 1] and charlier_upto(2, 2, 1) is
    [1, 1, -1] by the three-term recurrence.
    """
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    return PolyTable(charlier_batch(m_max, np.float64(x), t))
