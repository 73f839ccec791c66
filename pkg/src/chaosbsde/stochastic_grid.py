"""Regular time grid and reproducible batches of driving-noise increments.

The solver discretizes [0, T] into N intervals of width h = T/N and works
exclusively with standardized increments per interval: G[m, i] is the i-th
Brownian increment of sample path m divided by sqrt(h) (standard normal),
and Q[m, i] is the i-th Poisson interval count (mean kappa*h). Everything
downstream (basis evaluation, coefficient estimation, the Picard solver)
consumes these two arrays; raw paths are never materialized.

Reproducibility contract: ``sample_paths(spec, M, seed)`` returns identical
arrays for identical arguments on every run and platform, independent of any
thread count used elsewhere in the library. Generation uses the
counter-based Philox bit generator in a single fixed-order pass, so there is
no state shared with other streams to perturb.

Typical use::

    spec = GridSpec(T=1.0, N=20, kappa=1.0)
    paths = sample_paths(spec, M=100_000, seed=7)
    paths.G.shape   # (100000, 20)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["GridSpec", "PathBatch", "sample_paths", "MAX_POISSON_MEAN"]

# Largest supported per-interval jump mean. Above this the pmf head
# exp(-mean) underflows float64 and table inversion loses exactness.
MAX_POISSON_MEAN = 600.0

# Truncate the inversion table once the remaining tail mass is below this.
_TAIL_EPS = 1e-17


@dataclass(frozen=True)
class GridSpec:
    """Regular grid on [0, T] with N intervals and jump intensity kappa.

    Attributes
    ----------
    T : float
        Terminal time, strictly positive and finite.
    N : int
        Number of intervals, at least 1.
    kappa : float
        Intensity of the driving Poisson process, strictly positive.
    """

    T: float
    N: int
    kappa: float

    def __post_init__(self) -> None:
        if not isinstance(self.N, int) or isinstance(self.N, bool):
            raise TypeError(f"N must be an int, got {type(self.N).__name__}")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        for name in ("T", "kappa"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise TypeError(f"{name} must be a real number")
            if not math.isfinite(v) or v <= 0.0:
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")

    @property
    def h(self) -> float:
        """Interval width T/N."""
        return self.T / self.N

    @property
    def jump_mean(self) -> float:
        """Per-interval jump mean kappa*h."""
        return self.kappa * self.h

    def times(self) -> np.ndarray:
        """Grid points t_i = i*h for i = 0..N (shape (N+1,))."""
        return np.arange(self.N + 1, dtype=np.float64) * self.h


@dataclass(frozen=True, eq=False)
class PathBatch:
    """M sample paths of standardized increments on a grid.

    Attributes
    ----------
    spec : GridSpec
        Grid the increments live on.
    M : int
        Number of sample paths.
    G : numpy.ndarray
        Standardized Brownian increments, float64, shape (M, N).
    Q : numpy.ndarray
        Poisson interval counts, int32, shape (M, N).
    seed : int
        Seed the batch was generated from (kept for audit trails).
    """

    spec: GridSpec
    M: int
    G: np.ndarray
    Q: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        expected = (self.M, self.spec.N)
        if self.G.shape != expected:
            raise ValueError(f"G has shape {self.G.shape}, expected {expected}")
        if self.Q.shape != expected:
            raise ValueError(f"Q has shape {self.Q.shape}, expected {expected}")

    def rows(self, start: int, stop: int) -> "PathBatch":
        """View of sample paths start..stop-1 as a new batch (no copy)."""
        if not (0 <= start < stop <= self.M):
            raise ValueError(f"invalid row range [{start}, {stop}) for M={self.M}")
        return PathBatch(self.spec, stop - start, self.G[start:stop],
                         self.Q[start:stop], self.seed)


@lru_cache(maxsize=32)
def _poisson_cdf(mean: float) -> np.ndarray:
    """CDF table of the Poisson(mean) law, truncated at tail mass < 1e-17."""
    pmf = math.exp(-mean)  # > 0 whenever mean <= MAX_POISSON_MEAN
    cdf = [pmf]
    k = 0
    # Extend past the mode until the term itself is negligible; beyond the
    # mode terms decay geometrically, so the dropped tail is O(pmf).
    while pmf > _TAIL_EPS or k < mean:
        k += 1
        pmf *= mean / k
        cdf.append(cdf[-1] + pmf)
    return np.asarray(cdf, dtype=np.float64)


def sample_paths(spec: GridSpec, M: int, seed: int) -> PathBatch:
    """Draw M paths of standardized increments, deterministically in seed.

    Parameters
    ----------
    spec : GridSpec
        Grid to sample on.
    M : int
        Number of sample paths, at least 1.
    seed : int
        Nonnegative seed for the counter-based generator.

    Returns
    -------
    PathBatch
        Batch with G ~ iid standard normal and Q ~ iid Poisson(kappa*h),
        mutually independent, identical across runs for identical inputs.

    Raises
    ------
    ValueError
        If M < 1, or kappa*h exceeds the supported range.
    TypeError
        If M or seed is not an integer.
    """
    if not isinstance(M, int) or isinstance(M, bool):
        raise TypeError(f"M must be an int, got {type(M).__name__}")
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise TypeError(f"seed must be an int, got {type(seed).__name__}")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    mean = spec.jump_mean
    if not (mean <= MAX_POISSON_MEAN):
        raise ValueError(
            f"per-interval jump mean kappa*h = {mean:g} exceeds the supported "
            f"maximum {MAX_POISSON_MEAN:g}; refine the grid")

    # Single fixed-order pass: Gaussians first, then the uniforms that drive
    # Poisson inversion. Changing this order changes every seeded result, so
    # it is part of the reproducibility contract.
    rng = np.random.Generator(np.random.Philox(seed))
    G = rng.standard_normal((M, spec.N))
    u = rng.random((M, spec.N))
    # Inversion: Q = #{k : cdf[k] <= u}. searchsorted returns the insertion
    # point to the right, which is exactly that count.
    Q = np.searchsorted(_poisson_cdf(mean), u, side="right").astype(np.int32)
    return PathBatch(spec=spec, M=M, G=G, Q=Q, seed=seed)
