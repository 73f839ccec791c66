"""Evaluators for truncated chaos expansions along a path.

Conditioning a truncated expansion on the information available at grid time
t_r keeps exactly the indices supported on the first r intervals:

    cond_r = d0 + sum_{support(n) <= r} d_n * Phi_n(path),

which at r = 0 is d0 and at r = N reconstructs the full truncated
functional. The two derivative evaluators act on the interval ending at t_r
and keep only indices supported exactly up to r:

  * Brownian direction (delivers Z): indices with nB[r] >= 1 contribute
    d_n * K_{nB[r]-1}(G_r) * C_{nP[r]}(Q_r) * (product over earlier slots),
    all divided by sqrt(h). At r = 0 the value is the first Brownian unit
    coefficient divided by sqrt(h).
  * Jump direction (delivers U): indices with nP[r] >= 1 contribute
    d_n * K_{nB[r]}(G_r) * nP[r] * C_{nP[r]-1}(Q_r) * (earlier slots).
    At r = 0 the value is the first jump unit coefficient.

``conditional_at`` refines this to an arbitrary time t inside interval r
given the partial increments accumulated since t_{r-1}: each index is scaled
by theta**(nB[r]/2) with theta = (t - t_{r-1})/h, its Hermite factor is
evaluated at the partial increment standardized by the elapsed time, and its
Charlier factor at the partial count with mean kappa*(t - t_{r-1}). At
t = t_r this reduces exactly to the grid evaluators.

``evaluate_grid`` is the batched engine the solver uses: one pass over the
coefficient array per chunk of paths, each index contributing to its support
bucket, followed by a cumulative sum over r. The full r = 0..N sweep is
O(#indices) per path, amortized.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chaos_core import ChaosCoefficients, _chunk_slices
from .orthopoly import charlier_batch, hermite_batch
from .stochastic_grid import PathBatch

__all__ = [
    "PathView",
    "conditional",
    "malliavin_b",
    "malliavin_p",
    "conditional_at",
    "evaluate_grid",
]


@dataclass(frozen=True, eq=False)
class PathView:
    """One sample path of standardized increments (one row of a PathBatch)."""

    G: np.ndarray
    Q: np.ndarray

    def __post_init__(self) -> None:
        G = np.asarray(self.G, dtype=np.float64)
        Q = np.asarray(self.Q)
        if G.ndim != 1 or Q.ndim != 1 or G.shape != Q.shape:
            raise ValueError(
                f"G and Q must be equal-length vectors, got {G.shape} and {Q.shape}")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "Q", Q)

    @classmethod
    def from_batch(cls, paths: PathBatch, m: int) -> "PathView":
        return cls(paths.G[m], paths.Q[m])


def _check_args(coeffs: ChaosCoefficients, path: PathView, r: int) -> None:
    if len(path.G) != coeffs.spec.N:
        raise ValueError(
            f"path has {len(path.G)} intervals, coefficients expect {coeffs.spec.N}")
    if not isinstance(r, (int, np.integer)) or isinstance(r, bool):
        raise TypeError(f"r must be an int, got {type(r).__name__}")
    if not 0 <= r <= coeffs.spec.N:
        raise ValueError(f"r must be in [0, {coeffs.spec.N}], got {r}")


def _path_factor_tables(coeffs: ChaosCoefficients, path: PathView):
    """Per-slot polynomial values, degrees 0..p, for one path.

    Returns (Kv, Cv) of shape (J, N): the Hermite and Charlier factors of
    every enumerated index at every slot.
    """
    iset = coeffs.iset
    Ktab = hermite_batch(iset.p, path.G)  # (p+1, N)
    Ctab = charlier_batch(iset.p, np.asarray(path.Q, dtype=np.float64),
                          coeffs.spec.jump_mean)
    cols = np.arange(iset.N)
    Kv = Ktab[iset.degB, cols]
    Cv = Ctab[iset.degP, cols]
    return Kv, Cv, Ktab, Ctab


def conditional(coeffs: ChaosCoefficients, path: PathView, r: int) -> float:
    """Conditional expectation of the truncated expansion at grid time r.

    Only indices with support(n) <= r contribute; r = 0 returns d0 and
    r = N the full reconstruction d0 + sum d_n Phi_n for this path.
    """
    _check_args(coeffs, path, r)
    if r == 0 or coeffs.iset.J == 0:
        return float(coeffs.d0)
    Kv, Cv, _, _ = _path_factor_tables(coeffs, path)
    mask = coeffs.iset.support <= r
    prods = (Kv[mask] * Cv[mask]).prod(axis=1)
    return float(coeffs.d0 + coeffs.values[mask] @ prods)


def malliavin_b(coeffs: ChaosCoefficients, path: PathView, r: int) -> float:
    """Brownian-direction derivative of the conditioned expansion at time r.

    This is the Z-evaluator of the solver. At r = 0 it returns the first
    Brownian unit coefficient divided by sqrt(h).
    """
    _check_args(coeffs, path, r)
    iset = coeffs.iset
    sqrt_h = math.sqrt(coeffs.spec.h)
    if iset.J == 0:
        return 0.0
    if r == 0:
        return float(coeffs.values[0]) / sqrt_h
    dBr = iset.degB[:, r - 1]
    mask = (iset.support == r) & (dBr >= 1)
    if not mask.any():
        return 0.0
    Kv, Cv, Ktab, Ctab = _path_factor_tables(coeffs, path)
    KC = Kv[mask] * Cv[mask]
    # Replace the slot-r Hermite factor by the degree-lowered one.
    KC[:, r - 1] = Ktab[dBr[mask] - 1, r - 1] * Ctab[iset.degP[mask, r - 1], r - 1]
    return float(coeffs.values[mask] @ KC.prod(axis=1)) / sqrt_h


def malliavin_p(coeffs: ChaosCoefficients, path: PathView, r: int) -> float:
    """Jump-direction derivative of the conditioned expansion at time r.

    This is the U-evaluator of the solver. At r = 0 it returns the first
    jump unit coefficient.
    """
    _check_args(coeffs, path, r)
    iset = coeffs.iset
    if iset.J == 0:
        return 0.0
    if r == 0:
        return float(coeffs.values[iset.N])
    dPr = iset.degP[:, r - 1]
    mask = (iset.support == r) & (dPr >= 1)
    if not mask.any():
        return 0.0
    Kv, Cv, Ktab, Ctab = _path_factor_tables(coeffs, path)
    KC = Kv[mask] * Cv[mask]
    # Replace the slot-r Charlier factor by nP[r] * (degree-lowered value).
    KC[:, r - 1] = (Ktab[iset.degB[mask, r - 1], r - 1]
                    * dPr[mask] * Ctab[dPr[mask] - 1, r - 1])
    return float(coeffs.values[mask] @ KC.prod(axis=1))


def conditional_at(coeffs: ChaosCoefficients, path: PathView, r: int, t: float,
                   dB: float, dN: int) -> tuple[float, float, float]:
    """Expansion value and its two derivatives at a time inside interval r.

    Parameters
    ----------
    coeffs, path
        Expansion and the path observed up to t_{r-1}.
    r : int
        Interval index, 1..N.
    t : float
        Time in (t_{r-1}, t_r].
    dB : float
        Partial Brownian increment accumulated on (t_{r-1}, t].
    dN : int
        Partial jump count on (t_{r-1}, t], nonnegative.

    Returns
    -------
    (y, z, u) : tuple of floats
        At t = t_r with the full interval increments this agrees with the
        three grid evaluators at r.
    """
    spec = coeffs.spec
    if not isinstance(r, (int, np.integer)) or isinstance(r, bool):
        raise TypeError(f"r must be an int, got {type(r).__name__}")
    if not 1 <= r <= spec.N:
        raise ValueError(f"r must be in [1, {spec.N}], got {r}")
    if len(path.G) != spec.N:
        raise ValueError(
            f"path has {len(path.G)} intervals, coefficients expect {spec.N}")
    h = spec.h
    t_lo = (r - 1) * h
    t_hi = r * h
    if not (t_lo < t <= t_hi):
        raise ValueError(f"t = {t!r} outside ({t_lo}, {t_hi}] for r = {r}")
    if not (isinstance(dN, (int, np.integer)) and not isinstance(dN, bool)) or dN < 0:
        raise ValueError(f"dN must be a nonnegative int, got {dN!r}")
    if not math.isfinite(dB):
        raise ValueError(f"dB must be finite, got {dB!r}")

    iset = coeffs.iset
    if iset.J == 0:
        return float(coeffs.d0), 0.0, 0.0
    tau = t - t_lo
    theta = tau / h
    sqrt_h = math.sqrt(h)
    Ktau = hermite_batch(iset.p, np.float64(dB / math.sqrt(tau)))
    Ctau = charlier_batch(iset.p, np.float64(dN), spec.kappa * tau)

    mask = iset.support <= r
    dBr = iset.degB[mask, r - 1].astype(np.int64)
    dPr = iset.degP[mask, r - 1].astype(np.int64)
    vals = coeffs.values[mask]
    # Product over the fully observed slots 1..r-1. Masked indices carry no
    # degree beyond slot r, so restricting the columns suffices.
    if r > 1:
        Ktab = hermite_batch(iset.p, path.G[:r - 1])
        Ctab = charlier_batch(iset.p, np.asarray(path.Q[:r - 1], dtype=np.float64),
                              spec.jump_mean)
        cols = np.arange(r - 1)
        A = (Ktab[iset.degB[mask, :r - 1], cols]
             * Ctab[iset.degP[mask, :r - 1], cols]).prod(axis=1)
    else:
        A = np.ones(vals.shape)

    theta_half = np.power(theta, dBr / 2.0)
    y = coeffs.d0 + vals @ (theta_half * Ktau[dBr] * Ctau[dPr] * A)

    zsel = dBr >= 1
    z = 0.0
    if zsel.any():
        z = (vals[zsel] @ (np.power(theta, (dBr[zsel] - 1) / 2.0)
                           * Ktau[dBr[zsel] - 1] * Ctau[dPr[zsel]] * A[zsel])) / sqrt_h

    usel = dPr >= 1
    u = 0.0
    if usel.any():
        u = vals[usel] @ (np.power(theta, dBr[usel] / 2.0) * Ktau[dBr[usel]]
                          * dPr[usel] * Ctau[dPr[usel] - 1] * A[usel])
    return float(y), float(z), float(u)


@dataclass(frozen=True, eq=False)
class _FastPlan:
    """Order <= 2 coefficients rearranged for the closed-form GEMM kernel."""

    d1B: np.ndarray       # (N,) Brownian unit coefficients
    d1P: np.ndarray       # (N,) jump unit coefficients
    dBBd: Optional[np.ndarray] = None   # (N,) same-slot Hermite degree 2
    dPPd: Optional[np.ndarray] = None   # (N,) same-slot Charlier degree 2
    diag_bp: Optional[np.ndarray] = None  # (N,) same-slot mixed pairs
    D_BBu: Optional[np.ndarray] = None  # (N,N) strictly upper, slot pairs i<j
    D_PPu: Optional[np.ndarray] = None
    U_bp: Optional[np.ndarray] = None   # Brownian slot < jump slot
    L_bpT: Optional[np.ndarray] = None  # transpose of (Brownian slot > jump slot)


def _fast_plan(coeffs: ChaosCoefficients) -> _FastPlan:
    iset = coeffs.iset
    N = iset.N
    v = coeffs.values
    d1B = v[iset.r1B]
    d1P = v[iset.r1P]
    if iset.p < 2:
        return _FastPlan(d1B=d1B, d1P=d1P)
    iu, ju, bb_diag, pp_diag, bb_pairs, pp_pairs, bp = iset._pair_layout
    D_BBu = np.zeros((N, N))
    D_BBu[iu, ju] = v[bb_pairs]
    D_PPu = np.zeros((N, N))
    D_PPu[iu, ju] = v[pp_pairs]
    D_BP = v[bp]  # (N, N) full: row = Brownian slot, col = jump slot
    return _FastPlan(
        d1B=d1B, d1P=d1P,
        dBBd=v[bb_diag], dPPd=v[pp_diag], diag_bp=np.diag(D_BP).copy(),
        D_BBu=D_BBu, D_PPu=D_PPu,
        U_bp=np.triu(D_BP, 1), L_bpT=np.tril(D_BP, -1).T)


def _eval_chunk_fast(plan: _FastPlan, p: int, kh: float, G, Q, sl: slice,
                     Y, Z, U, d0: float, z0: float, u0: float, sqrt_h: float) -> None:
    K1 = G[sl]
    Qf = Q[sl].astype(np.float64)
    C1 = Qf - kh
    # SY[:, j] collects the terms activated at support slot j+1; SZ and SU
    # hold the (unscaled) derivative sums at that slot.
    SY = K1 * plan.d1B + C1 * plan.d1P
    SZ = np.broadcast_to(plan.d1B, K1.shape).copy()
    SU = np.broadcast_to(plan.d1P, K1.shape).copy()
    if p >= 2:
        K2 = 0.5 * (K1 * K1 - 1.0)
        C2 = (Qf - 1.0 - kh) * C1 - kh
        TBB = K1 @ plan.D_BBu
        TPP = C1 @ plan.D_PPu
        TBPu = K1 @ plan.U_bp
        TBPl = C1 @ plan.L_bpT
        SY += (K2 * plan.dBBd + K1 * TBB + C2 * plan.dPPd + C1 * TPP
               + C1 * TBPu + K1 * TBPl + (K1 * C1) * plan.diag_bp)
        SZ += K1 * plan.dBBd + TBB + TBPl + C1 * plan.diag_bp
        SU += 2.0 * (C1 * plan.dPPd) + TPP + TBPu + K1 * plan.diag_bp
    Y[0, sl] = d0
    Y[1:, sl] = d0 + np.cumsum(SY, axis=1).T
    Z[0, sl] = z0
    Z[1:, sl] = SZ.T / sqrt_h
    U[0, sl] = u0
    U[1:, sl] = SU.T


def _eval_chunk_generic(coeffs: ChaosCoefficients, kh: float, G, Q, sl: slice,
                        Y, Z, U, d0: float, z0: float, u0: float,
                        sqrt_h: float) -> None:
    iset = coeffs.iset
    vals = coeffs.values
    Gc = G[sl]
    Qf = Q[sl].astype(np.float64)
    Mc = Gc.shape[0]
    N = iset.N
    Ktab = hermite_batch(iset.p, Gc)       # (p+1, Mc, N)
    Ctab = charlier_batch(iset.p, Qf, kh)
    SY = np.zeros((N, Mc))
    SZ = np.zeros((N, Mc))
    SU = np.zeros((N, Mc))
    for grp in iset.slot_groups:
        g = grp.slots.shape[1]
        dv = vals[grp.rows]
        prefix = None
        for a in range(g - 1):
            fac = (Ktab[grp.dB[:, a], :, grp.slots[:, a]]
                   * Ctab[grp.dP[:, a], :, grp.slots[:, a]])
            prefix = fac if prefix is None else prefix * fac
        sL = grp.slots[:, -1]   # support slot, 0-based
        dBL = grp.dB[:, -1]
        dPL = grp.dP[:, -1]
        KL = Ktab[dBL, :, sL]
        CL = Ctab[dPL, :, sL]
        full = KL * CL if prefix is None else prefix * KL * CL
        np.add.at(SY, sL, dv[:, None] * full)
        zsel = dBL >= 1
        if zsel.any():
            zfac = Ktab[dBL[zsel] - 1, :, sL[zsel]] * CL[zsel]
            if prefix is not None:
                zfac = zfac * prefix[zsel]
            np.add.at(SZ, sL[zsel], dv[zsel][:, None] * zfac)
        usel = dPL >= 1
        if usel.any():
            ufac = KL[usel] * (dPL[usel][:, None] * Ctab[dPL[usel] - 1, :, sL[usel]])
            if prefix is not None:
                ufac = ufac * prefix[usel]
            np.add.at(SU, sL[usel], dv[usel][:, None] * ufac)
    Y[0, sl] = d0
    Y[1:, sl] = d0 + np.cumsum(SY, axis=0)
    Z[0, sl] = z0
    Z[1:, sl] = SZ / sqrt_h
    U[0, sl] = u0
    U[1:, sl] = SU


def evaluate_grid(coeffs: ChaosCoefficients, paths: PathBatch, *,
                  threads: int = 1,
                  out: Optional[tuple[np.ndarray, np.ndarray, np.ndarray]] = None,
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Expansion value and both derivative evaluators at every grid time,
    for every path of a batch.

    Returns (Y, Z, U), each of shape (N+1, M): row r holds the value at grid
    time r. Row 0 is the deterministic time-0 value of each evaluator.

    ``out`` optionally supplies preallocated (N+1, M) arrays to fill,
    avoiding reallocation in iterative callers. Results are bit-identical
    for every ``threads`` value: chunks write disjoint column blocks.
    """
    if paths.spec != coeffs.spec:
        raise ValueError(
            f"path batch grid {paths.spec} does not match coefficients grid {coeffs.spec}")
    N = coeffs.spec.N
    M = paths.M
    if out is None:
        Y = np.empty((N + 1, M))
        Z = np.empty((N + 1, M))
        U = np.empty((N + 1, M))
    else:
        Y, Z, U = out
        for name, arr in (("Y", Y), ("Z", Z), ("U", U)):
            if arr.shape != (N + 1, M):
                raise ValueError(f"out {name} has shape {arr.shape}, expected {(N + 1, M)}")
    d0 = float(coeffs.d0)
    sqrt_h = math.sqrt(coeffs.spec.h)
    if coeffs.iset.J == 0:
        Y[:] = d0
        Z[:] = 0.0
        U[:] = 0.0
        return Y, Z, U
    z0 = float(coeffs.values[0]) / sqrt_h
    u0 = float(coeffs.values[N])
    kh = coeffs.spec.jump_mean
    if coeffs.p <= 2:
        plan = _fast_plan(coeffs)

        def work(sl: slice) -> None:
            _eval_chunk_fast(plan, coeffs.p, kh, paths.G, paths.Q, sl,
                             Y, Z, U, d0, z0, u0, sqrt_h)
    else:
        def work(sl: slice) -> None:
            _eval_chunk_generic(coeffs, kh, paths.G, paths.Q, sl,
                                Y, Z, U, d0, z0, u0, sqrt_h)

    slices = _chunk_slices(M)
    if threads <= 1 or len(slices) == 1:
        for sl in slices:
            work(sl)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, slices))
    return Y, Z, U
