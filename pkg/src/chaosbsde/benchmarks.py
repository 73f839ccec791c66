"""Closed-form reference problems and the discretized error norm.

Two linear jump BSDEs with known solutions serve as benchmarks.

Example 1 (counting terminal): the forward differential of Y carries drift
-c*U, so the driver in the backward integral form is f(t, y, z, u) = c*u
(Driver.linear_jump(c)); jump intensity fixed at kappa = 1, terminal value
xi = N_T. Exact solution:

    Y_t = N_t + (1 + c) * (T - t),   Z = 0,   U = 1.

Example 2 (exponential Levy terminal): drift -(alpha*Y + beta*Z + gamma*U),
driver f = alpha*y + beta*z + gamma*u (Driver.linear), terminal
xi = exp(a*T + b*B_T + c*N_T). Exact:

    Y_t = exp(a*T + b*B_t + c*N_t)
          * exp((alpha + ((b+beta)**2 - beta**2)/2) * (T-t)
                + (exp(c) - 1) * (kappa + gamma) * (T-t)),
    Z_t = b * Y_{t-},   U_t = (exp(c) - 1) * Y_{t-}.

Grid comparison convention: left limits coincide with grid values off a
probability-zero event (a jump landing exactly on a grid point), so exact
grids evaluate Y, Z, U at the state built from all increments up to and
including interval r. Exact grids are materialized as SolutionGrid objects
from the same PathBatch the solver consumed, so error norms isolate method
error from path randomness.

The error norm discretizes a supremum-in-time norm for Y and
time-integrated squared norms for Z and U:

    errY = mean_m max_r |dY|^2
    errZ = mean_m h * sum_{r>=1} |dZ|^2
    errU = kappa * mean_m h * sum_{r>=1} |dU|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .picard_solver import SolutionGrid
from .stochastic_grid import GridSpec, PathBatch

__all__ = [
    "Example1Params",
    "Example2Params",
    "example1_exact",
    "example2_exact",
    "example1_grid",
    "example2_grid",
    "error_norm",
]


@dataclass(frozen=True)
class Example1Params:
    """Counting-terminal benchmark parameters; kappa is pinned to 1."""

    c: float
    T: float
    kappa: float = 1.0

    def __post_init__(self) -> None:
        for name in ("c", "T", "kappa"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.kappa != 1.0:
            raise ValueError(
                f"this benchmark's closed form is stated for kappa = 1, got {self.kappa}")
        if self.T <= 0:
            raise ValueError(f"T must be > 0, got {self.T}")

    def grid(self, N: int) -> GridSpec:
        return GridSpec(T=self.T, N=N, kappa=self.kappa)


@dataclass(frozen=True)
class Example2Params:
    """Exponential-Levy benchmark parameters."""

    alpha: float
    beta: float
    gamma: float
    a: float
    b: float
    c: float
    kappa: float
    T: float

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "a", "b", "c", "kappa", "T"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.T <= 0 or self.kappa <= 0:
            raise ValueError("T and kappa must be > 0")

    def grid(self, N: int) -> GridSpec:
        return GridSpec(T=self.T, N=N, kappa=self.kappa)


def example1_exact(params: Example1Params, t, n_t):
    """Exact (y, z, u) of the counting benchmark at time t given N_t."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or np.any(t > params.T):
        raise ValueError("t must lie in [0, T]")
    n_t = np.asarray(n_t)
    if np.any(n_t < 0):
        raise ValueError("N_t must be nonnegative")
    y = n_t + (1.0 + params.c) * (params.T - t)
    z = np.zeros_like(y, dtype=np.float64)
    u = np.ones_like(y, dtype=np.float64)
    if y.ndim == 0:
        return float(y), 0.0, 1.0
    return y.astype(np.float64), z, u


def example2_exact(params: Example2Params, t, b_t, n_t):
    """Exact (y, z, u) of the exponential-Levy benchmark at time t."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or np.any(t > params.T):
        raise ValueError("t must lie in [0, T]")
    b_t = np.asarray(b_t, dtype=np.float64)
    n_t = np.asarray(n_t)
    rate = (params.alpha + ((params.b + params.beta) ** 2 - params.beta ** 2) / 2.0
            + (math.exp(params.c) - 1.0) * (params.kappa + params.gamma))
    y = np.exp(params.a * params.T + params.b * b_t + params.c * n_t
               + rate * (params.T - t))
    z = params.b * y
    u = (math.exp(params.c) - 1.0) * y
    if y.ndim == 0:
        return float(y), float(z), float(u)
    return y, z, u


def example1_grid(params: Example1Params, paths: PathBatch) -> SolutionGrid:
    """Exact solution of the counting benchmark along a sampled batch."""
    spec = paths.spec
    if spec.kappa != params.kappa or spec.T != params.T:
        raise ValueError(
            f"paths grid (T={spec.T}, kappa={spec.kappa}) does not match "
            f"params (T={params.T}, kappa={params.kappa})")
    N, M = spec.N, paths.M
    counts = np.cumsum(paths.Q, axis=1, dtype=np.float64).T  # (N, M)
    times = spec.times()
    Y = np.empty((N + 1, M))
    Y[0] = (1.0 + params.c) * params.T
    Y[1:] = counts + ((1.0 + params.c) * (params.T - times[1:]))[:, None]
    Z = np.zeros((N + 1, M))
    U = np.ones((N + 1, M))
    return SolutionGrid(Y=Y, Z=Z, U=U, coeffs_final=None, paths=paths)


def example2_grid(params: Example2Params, paths: PathBatch) -> SolutionGrid:
    """Exact solution of the exponential-Levy benchmark along a batch."""
    spec = paths.spec
    if spec.kappa != params.kappa or spec.T != params.T:
        raise ValueError(
            f"paths grid (T={spec.T}, kappa={spec.kappa}) does not match "
            f"params (T={params.T}, kappa={params.kappa})")
    N, M = spec.N, paths.M
    times = spec.times()
    B = math.sqrt(spec.h) * np.cumsum(paths.G, axis=1).T   # (N, M)
    counts = np.cumsum(paths.Q, axis=1, dtype=np.float64).T
    Y = np.empty((N + 1, M))
    y0, _, _ = example2_exact(params, 0.0, 0.0, 0)
    Y[0] = y0
    yr, _, _ = example2_exact(params, times[1:][:, None], B, counts)
    Y[1:] = yr
    Z = params.b * Y
    U = (math.exp(params.c) - 1.0) * Y
    return SolutionGrid(Y=Y, Z=Z, U=U, coeffs_final=None, paths=paths)


def error_norm(approx: SolutionGrid, exact: SolutionGrid, spec: GridSpec,
               ) -> tuple[float, float, float]:
    """Discretized squared error norms between two grid solutions.

    Returns (errY, errZ, errU): pathwise-sup-squared for Y averaged over
    samples, h-weighted time sums of squares for Z and U (the U norm also
    carries the jump intensity factor). Zero on identical grids; scales
    quadratically in the difference.
    """
    shape = (spec.N + 1, approx.Y.shape[1])
    for name, a, e in (("Y", approx.Y, exact.Y), ("Z", approx.Z, exact.Z),
                       ("U", approx.U, exact.U)):
        if a.shape != shape or e.shape != shape:
            raise ValueError(
                f"{name} grids have shapes {a.shape} and {e.shape}, expected {shape}")
    dY = approx.Y - exact.Y
    dZ = approx.Z - exact.Z
    dU = approx.U - exact.U
    errY = float(np.mean(np.max(dY * dY, axis=0)))
    errZ = float(spec.h * np.mean(np.sum(dZ[1:] * dZ[1:], axis=0)))
    errU = float(spec.kappa * spec.h * np.mean(np.sum(dU[1:] * dU[1:], axis=0)))
    return errY, errZ, errU
