"""Integrated density of states and eigenvalue-count statistics.

Everything here runs on Sturm counts alone (no eigenvector work): the
integrated density of states is the trial-averaged fraction of eigenvalues
below each grid energy, densities come from symmetric difference quotients
on the grid, and the Wegner / lower-Wegner / Minami checks compare the
fitted quantities against the potential's density bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from anderson1d.operator import sturm_count_trials
from anderson1d.potential import essential_spectrum
from anderson1d.rng import stream_rng


class EdgeIntervalError(ValueError):
    """Probe interval is not compactly inside the essential spectrum."""


class BlockLengthError(ValueError):
    """Block length below the concentration threshold; carries the minimum."""

    def __init__(self, message, required_length=None):
        super().__init__(message)
        self.required_length = required_length


@dataclass(frozen=True)
class IdsEstimate:
    """Monte Carlo integrated density of states on an energy grid.

    N_values[i] estimates the limiting fraction of eigenvalues <= E_grid[i];
    density lives on the interior grid points (symmetric difference
    quotient).  a_I / A_emp are the min/max fitted density over interior
    grid points strictly inside the essential spectrum (the probe range of
    this estimate).
    """

    E_grid: np.ndarray
    N_values: np.ndarray
    N_stderr: np.ndarray
    density_grid: np.ndarray
    density: np.ndarray
    density_stderr: np.ndarray
    block_length: int
    trials: int
    seed: int
    s_lo: float
    s_hi: float
    a_I: float
    A_emp: float

    def __post_init__(self):
        N = self.N_values
        if np.any(N < -1e-15) or np.any(N > 1 + 1e-15):
            raise ValueError("IDS values must lie in [0, 1]")
        if np.any(np.diff(N) < 0):
            raise ValueError("IDS must be non-decreasing along the grid")


def _sample_diagonals(dist, trials, L, seed, stream_offset):
    out = np.empty((trials, L))
    for t in range(trials):
        out[t] = dist.sample_from(stream_rng(seed, stream_offset + t), L)
    return out


def ids_estimate(
    dist, E_grid, L: int, trials: int, seed: int, stream_offset: int = 0
) -> IdsEstimate:
    """Estimate the IDS by averaging Sturm counts over `trials` blocks."""
    if L < 16:
        raise ValueError(f"block length must be >= 16, got {L}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    E_grid = np.asarray(E_grid, dtype=float)
    if E_grid.ndim != 1 or E_grid.size < 3:
        raise ValueError("grid must be a 1-d array with >= 3 points")
    if np.any(np.diff(E_grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    s_lo, s_hi = essential_spectrum(dist)
    if E_grid[0] < s_lo - 1.0 - 1e-12 or E_grid[-1] > s_hi + 1.0 + 1e-12:
        raise ValueError(
            f"grid must stay inside [{s_lo}, {s_hi}] padded by 1"
        )
    diags = _sample_diagonals(dist, trials, L, seed, stream_offset)
    counts = sturm_count_trials(diags, E_grid).astype(float)
    N = counts.mean(axis=0) / L
    if trials > 1:
        N_stderr = counts.std(axis=0, ddof=1) / math.sqrt(trials) / L
    else:
        N_stderr = np.zeros_like(N)
    dg = E_grid[1:-1]
    span = E_grid[2:] - E_grid[:-2]
    dens_trials = (counts[:, 2:] - counts[:, :-2]) / span[None, :] / L
    density = dens_trials.mean(axis=0)
    if trials > 1:
        density_stderr = dens_trials.std(axis=0, ddof=1) / math.sqrt(trials)
    else:
        density_stderr = np.zeros_like(density)
    inside = (dg > s_lo) & (dg < s_hi)
    a_I = float(density[inside].min()) if np.any(inside) else math.nan
    A_emp = float(density.max()) if density.size else math.nan
    return IdsEstimate(
        E_grid=E_grid,
        N_values=N,
        N_stderr=N_stderr,
        density_grid=dg,
        density=density,
        density_stderr=density_stderr,
        block_length=L,
        trials=trials,
        seed=seed,
        s_lo=s_lo,
        s_hi=s_hi,
        a_I=a_I,
        A_emp=A_emp,
    )


@dataclass(frozen=True)
class WegnerCheck:
    passed: bool
    max_density: float
    at_E: float
    bound_A: float
    tol: float


def wegner_check(ids: IdsEstimate, A: float, tol: float = 0.15) -> WegnerCheck:
    """Fitted density stays below A*(1+tol); tol absorbs finite-L and MC error."""
    spacing = float(np.max(np.diff(ids.E_grid)))
    if spacing > 0.01 + 1e-12:
        raise ValueError(f"grid spacing must be <= 0.01, got {spacing:.4g}")
    i = int(np.argmax(ids.density))
    mx = float(ids.density[i])
    return WegnerCheck(
        passed=bool(mx <= A * (1.0 + tol)),
        max_density=mx,
        at_E=float(ids.density_grid[i]),
        bound_A=A,
        tol=tol,
    )


@dataclass(frozen=True)
class LowerWegnerCheck:
    a_I: float
    stderr_at_min: float
    at_E: float
    passed: bool  # a_I exceeds 3 standard errors


def lower_wegner_check(ids: IdsEstimate, I) -> LowerWegnerCheck:
    """Minimum fitted density on I, with I strictly inside the spectrum."""
    lo, hi = float(I[0]), float(I[1])
    if hi <= lo:
        raise ValueError("I must be a nondegenerate interval")
    if lo <= ids.s_lo or hi >= ids.s_hi:
        raise EdgeIntervalError(
            f"I=[{lo}, {hi}] must be contained in the interior of the "
            f"essential spectrum ({ids.s_lo}, {ids.s_hi})"
        )
    mask = (ids.density_grid >= lo) & (ids.density_grid <= hi)
    if not np.any(mask):
        raise ValueError("no density grid points inside I")
    sub = ids.density[mask]
    i = int(np.argmin(sub))
    a_I = float(sub[i])
    se = float(ids.density_stderr[mask][i])
    return LowerWegnerCheck(
        a_I=a_I,
        stderr_at_min=se,
        at_E=float(ids.density_grid[mask][i]),
        passed=bool(a_I > 3.0 * se),
    )


@dataclass(frozen=True)
class MinamiTailRow:
    r: int
    empirical: float
    stderr: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class MinamiTail:
    L: int
    I: tuple
    trials: int
    seed: int
    rows: tuple


def minami_tail(
    dist, L: int, I, r: int, trials: int, seed: int, stream_offset: int = 0
) -> MinamiTail:
    """Empirical P(#(spectrum cap I) >= r') against (A |I| L)^r' / r'!.

    Rows cover r' in {1, 2, r} (deduplicated, sorted); pass means the
    empirical tail does not exceed the factorial-decay bound by more than 3
    binomial standard errors.
    """
    if trials < 1000:
        raise ValueError(f"trials must be >= 1000, got {trials}")
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    lo, hi = float(I[0]), float(I[1])
    if hi <= lo:
        raise ValueError("I must be a nondegenerate interval")
    A = dist.density_bound_A
    diags = _sample_diagonals(dist, trials, L, seed, stream_offset)
    counts = sturm_count_trials(diags, np.array([lo, hi]))
    in_I = counts[:, 1] - counts[:, 0]
    rows = []
    for rp in sorted({1, 2, r}):
        emp = float(np.mean(in_I >= rp))
        se = math.sqrt(emp * (1.0 - emp) / trials)
        bound = (A * (hi - lo) * L) ** rp / math.factorial(rp)
        rows.append(
            MinamiTailRow(
                r=rp,
                empirical=emp,
                stderr=se,
                bound=bound,
                passed=bool(emp <= bound + 3.0 * se),
            )
        )
    return MinamiTail(L=L, I=(lo, hi), trials=trials, seed=seed, rows=tuple(rows))


@dataclass(frozen=True)
class CountConcentration:
    L: int
    I: tuple
    a_I: float
    A_emp: float
    count_threshold: float
    empirical: float
    stderr: float
    target: float  # a_I / (15 A_emp)
    passed: bool


def count_concentration(
    dist,
    L: int,
    I,
    trials: int,
    seed: int,
    ids: IdsEstimate = None,  # type: ignore[assignment]
    a_I: float = None,  # type: ignore[assignment]
    stream_offset: int = 0,
) -> CountConcentration:
    """P(#(spectrum cap I) >= a_I |I| L / 2) against the a_I/(15 A) floor.

    Requires the block to clear the concentration threshold
    (min(1, a_I^2)/A) |I| L >= 100; shorter blocks are rejected with the
    minimum admissible length.  a_I and A_emp come from `ids` (an internal
    estimate is run when neither `ids` nor `a_I` is given).
    """
    lo, hi = float(I[0]), float(I[1])
    if hi <= lo:
        raise ValueError("I must be a nondegenerate interval")
    mes_I = hi - lo
    A = dist.density_bound_A
    if a_I is None:
        if ids is None:
            pad = 0.05 * mes_I
            grid = np.arange(lo - pad, hi + pad + 1e-12, min(0.005, mes_I / 40))
            ids = ids_estimate(
                dist, grid, L=1024, trials=100, seed=seed, stream_offset=10_000_000
            )
        probe = lower_wegner_check(ids, I)
        a_I = probe.a_I
    A_emp = ids.A_emp if ids is not None else A
    need = 100.0 * A / (min(1.0, a_I * a_I) * mes_I)
    if (min(1.0, a_I * a_I) / A) * mes_I * L < 100.0:
        raise BlockLengthError(
            f"block length {L} below the concentration threshold; need "
            f"L >= {math.ceil(need)} for a_I={a_I:.4g}, |I|={mes_I:.4g}, A={A:.4g}",
            required_length=math.ceil(need),
        )
    diags = _sample_diagonals(dist, trials, L, seed, stream_offset)
    counts = sturm_count_trials(diags, np.array([lo, hi]))
    in_I = counts[:, 1] - counts[:, 0]
    thr = a_I * mes_I * L / 2.0
    emp = float(np.mean(in_I >= thr))
    se = math.sqrt(emp * (1.0 - emp) / trials)
    target = a_I / (15.0 * A_emp)
    return CountConcentration(
        L=L,
        I=(lo, hi),
        a_I=float(a_I),
        A_emp=float(A_emp),
        count_threshold=thr,
        empirical=emp,
        stderr=se,
        target=target,
        passed=bool(emp >= target - 3.0 * se),
    )
