"""Transfer-matrix products, Lyapunov exponents, and growth diagnostics.

The single-step matrix at energy E with potential value v is
[[E - v, -1], [1, 0]]; the n-step product multiplies steps in site order.
Products are stored as a normalized 2x2 matrix plus an accumulated natural-
log scale; the matrix is renormalized whenever its max entry leaves
[2^-64, 2^64], which keeps short products exact and long ones overflow-free.
All norms are spectral (2-)norms, so an orthogonal product reports zero
growth exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from anderson1d.rng import stream_rng

_HI = 2.0**64
_LO = 2.0**-64


def transfer_step(E: float, v: float) -> np.ndarray:
    """Single transfer matrix [[E - v, -1], [1, 0]]."""
    return np.array([[E - v, -1.0], [1.0, 0.0]])


def _spectral_log_norm(a, b, c, d):
    """log of the largest singular value of [[a, b], [c, d]] (vectorized)."""
    fro2 = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0)
    s1sq = 0.5 * (fro2 + np.sqrt(disc))
    return 0.5 * np.log(s1sq)


@dataclass(frozen=True)
class TransferProduct:
    """Normalized n-step product with its log scale factor.

    The true product is exp(log_scale) * matrix; log||Phi_n|| is therefore
    log_scale + log of the spectral norm of `matrix`.
    """

    matrix: np.ndarray
    log_scale: float
    n: int
    E: float

    @property
    def log_norm(self) -> float:
        m = self.matrix
        return float(
            _spectral_log_norm(m[0, 0], m[0, 1], m[1, 0], m[1, 1]) + self.log_scale
        )

    def log_det_defect(self) -> float:
        """log|det Phi_n|: zero up to rounding since each factor has det 1.

        Only measurable while the product's condition number stays below
        ~1e8: beyond that the stored matrix cannot represent its tiny second
        singular value and the subtraction cancels; nan is returned then
        (the four-determinant identity is the sharp correctness check for
        long products).
        """
        m = self.matrix
        ad, bc = m[0, 0] * m[1, 1], m[0, 1] * m[1, 0]
        det = ad - bc
        if det == 0.0 or abs(det) < 1e-12 * (abs(ad) + abs(bc)):
            return math.nan
        return float(math.log(abs(det)) + 2.0 * self.log_scale)

    def log_entry(self, i: int, j: int) -> tuple[float, float]:
        """(sign, log|entry|) of the true (i, j) product entry."""
        e = self.matrix[i, j]
        if e == 0.0:
            return 0.0, -math.inf
        return math.copysign(1.0, e), math.log(abs(e)) + self.log_scale


@dataclass(frozen=True)
class LyapunovEstimate:
    """Monte Carlo estimate of the Lyapunov exponent at one energy."""

    E: float
    gamma_hat: float
    std_err: float
    n: int
    trials: int
    seed: int
    stream_offset: int = 0

    def __post_init__(self):
        if not math.isfinite(self.gamma_hat):
            raise ValueError("gamma_hat must be finite")
        if self.std_err < 0:
            raise ValueError("std_err must be >= 0")


def _sweep(v, E, record_from=None):
    """Scalar product sweep; optionally records log||Phi_j|| for j >= record_from.

    Returns (a, b, c, d, scale, trace) where trace is None or the array of
    log norms for j = record_from..n.
    """
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    scale = 0.0
    trace = None
    if record_from is not None:
        trace = np.empty(len(v) - record_from + 1)
    for j, vv in enumerate(v, start=1):
        w = E - vv
        a, b, c, d = w * a - c, w * b - d, a, b
        m = max(abs(a), abs(b), abs(c), abs(d))
        if m > _HI or m < _LO:
            a /= m
            b /= m
            c /= m
            d /= m
            scale += math.log(m)
        if trace is not None and j >= record_from:
            trace[j - record_from] = _spectral_log_norm(a, b, c, d) + scale
    return a, b, c, d, scale, trace


def transfer_product(v, E: float) -> TransferProduct:
    """Ordered product of transfer steps over the whole potential sequence."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("potential sequence must be nonempty")
    a, b, c, d, scale, _ = _sweep(v, E)
    return TransferProduct(
        matrix=np.array([[a, b], [c, d]]), log_scale=scale, n=int(v.size), E=E
    )


def growth_profile(v, E: float, checkpoints) -> np.ndarray:
    """(n, (1/n) log||Phi_n||) at each checkpoint, from a single sweep."""
    v = np.asarray(v, dtype=float)
    cps = np.asarray(checkpoints, dtype=int)
    if cps.size == 0 or np.any(np.diff(cps) <= 0):
        raise ValueError("checkpoints must be a nonempty increasing index list")
    if cps[0] < 1 or cps[-1] > v.size:
        raise IndexError("checkpoints outside the potential sequence")
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    scale = 0.0
    out = np.empty((cps.size, 2))
    pos = 0
    for j, vv in enumerate(v[: cps[-1]], start=1):
        w = E - vv
        a, b, c, d = w * a - c, w * b - d, a, b
        m = max(abs(a), abs(b), abs(c), abs(d))
        if m > _HI or m < _LO:
            a /= m
            b /= m
            c /= m
            d /= m
            scale += math.log(m)
        if j == cps[pos]:
            out[pos, 0] = j
            out[pos, 1] = (_spectral_log_norm(a, b, c, d) + scale) / j
            pos += 1
    return out


def _batched_final_log_norm(dist, E_cols, n, seed, streams, chunk=8192):
    """log||Phi_n|| for many columns at once.

    Column i evolves with energy E_cols[i] and its own potential stream
    streams[i]; the per-column values are bit-identical to scalar sweeps
    over `dist.sample(n, seed, streams[i])`.
    """
    E = np.asarray(E_cols, dtype=float)
    ncols = E.size
    rngs = [stream_rng(seed, s) for s in streams]
    a = np.ones(ncols)
    b = np.zeros(ncols)
    c = np.zeros(ncols)
    d = np.ones(ncols)
    scale = np.zeros(ncols)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        V = np.empty((m, ncols))
        for i, rng in enumerate(rngs):
            V[:, i] = dist.sample_from(rng, m)
        for j in range(m):
            w = E - V[j]
            a, b, c, d = w * a - c, w * b - d, a, b
            mx = np.maximum(
                np.maximum(np.abs(a), np.abs(b)), np.maximum(np.abs(c), np.abs(d))
            )
            bad = (mx > _HI) | (mx < _LO)
            if bad.any():
                f = np.where(bad, mx, 1.0)
                a /= f
                b /= f
                c /= f
                d /= f
                scale += np.log(f)
        done += m
    return _spectral_log_norm(a, b, c, d) + scale


def lyapunov_estimate(
    dist, E: float, n: int, trials: int, seed: int, stream_offset: int = 0
) -> LyapunovEstimate:
    """Monte Carlo Lyapunov exponent: mean of (1/n) log||Phi_n|| over trials.

    Trial t uses stream stream_offset + t, so disjoint offsets give
    independent estimates and the reduction order is fixed by trial index.
    """
    if n < 1000:
        raise ValueError(f"n must be >= 1000, got {n}")
    if trials < 2:
        raise ValueError(f"trials must be >= 2, got {trials}")
    streams = [stream_offset + t for t in range(trials)]
    logs = _batched_final_log_norm(dist, np.full(trials, E), n, seed, streams)
    rates = logs / n
    gamma_hat = float(np.mean(rates))
    std_err = float(np.std(rates, ddof=1) / math.sqrt(trials))
    return LyapunovEstimate(
        E=E,
        gamma_hat=gamma_hat,
        std_err=std_err,
        n=n,
        trials=trials,
        seed=seed,
        stream_offset=stream_offset,
    )


def lyapunov_grid(
    dist, E_values, n: int, trials: int, seed: int, stream_offset: int = 0
) -> list[LyapunovEstimate]:
    """Lyapunov estimates over an energy grid, one batched sweep.

    Grid point i / trial t uses stream stream_offset + i*trials + t, so the
    result for each E matches a standalone `lyapunov_estimate` at the same
    offset.
    """
    if n < 1000:
        raise ValueError(f"n must be >= 1000, got {n}")
    if trials < 2:
        raise ValueError(f"trials must be >= 2, got {trials}")
    E_values = np.asarray(E_values, dtype=float)
    nE = E_values.size
    E_cols = np.repeat(E_values, trials)
    streams = [stream_offset + i * trials + t for i in range(nE) for t in range(trials)]
    logs = _batched_final_log_norm(dist, E_cols, n, seed, streams)
    rates = (logs / n).reshape(nE, trials)
    out = []
    for i, E in enumerate(E_values):
        out.append(
            LyapunovEstimate(
                E=float(E),
                gamma_hat=float(np.mean(rates[i])),
                std_err=float(np.std(rates[i], ddof=1) / math.sqrt(trials)),
                n=n,
                trials=trials,
                seed=seed,
                stream_offset=stream_offset + i * trials,
            )
        )
    return out


@dataclass(frozen=True)
class NonLyapunovScan:
    """Finite-horizon scan for below-Lyapunov growth.

    min_rate is the minimum of (1/n) log||Phi_n(E)|| over n in [sqrt(N), N];
    `flagged` says the minimum dipped below tau * gamma_ref.  A finite scan
    can only report this liminf proxy, never membership in the limit set.
    """

    E: float
    tau: float
    gamma_ref: float
    horizon: int
    min_rate: float
    min_at_n: int
    flagged: bool


def non_lyapunov_scan(v, E: float, N: int, tau: float, gamma_ref: float) -> NonLyapunovScan:
    """Scan growth rates over n in [sqrt(N), N] for a dip below tau*gamma_ref."""
    if not (0.0 <= tau < 1.0):
        raise ValueError(f"tau must satisfy 0 <= tau < 1, got {tau}")
    if gamma_ref <= 0:
        raise ValueError(f"gamma_ref must be > 0, got {gamma_ref}")
    v = np.asarray(v, dtype=float)
    if N < 1 or N > v.size:
        raise IndexError(f"horizon {N} outside potential length {v.size}")
    n_start = max(1, int(math.ceil(math.sqrt(N))))
    *_, trace = _sweep(v[:N], E, record_from=n_start)
    ns = np.arange(n_start, N + 1)
    rates = trace / ns
    i = int(np.argmin(rates))
    min_rate = float(rates[i])
    return NonLyapunovScan(
        E=E,
        tau=tau,
        gamma_ref=gamma_ref,
        horizon=N,
        min_rate=min_rate,
        min_at_n=int(ns[i]),
        flagged=bool(min_rate <= tau * gamma_ref),
    )


@dataclass(frozen=True)
class DipEvaluation:
    E: float
    log_norm: float
    within_gamma_bound: bool
    within_plain_bound: bool


@dataclass(frozen=True)
class TransferDipCheck:
    """Growth of the 2k-step product at and next to a localized eigenvalue.

    Evaluates log||Phi_2k(E)|| at E_k and E_k +- radius with
    radius = exp(-2*gamma_bar*k), against two normalizations of the expected
    ceiling: 12*tau*gamma_k*k (rate-weighted) and 12*tau*k (plain); both are
    reported because neither normalization is canonical.  markov_max_log_norm
    is the grid maximum of log||Phi_2k|| over [E_k - radius, E_k + radius],
    the ingredient of the polynomial-derivative (Markov) bound.
    """

    k: int
    E_k: float
    tau: float
    gamma_k: float
    gamma_bar: float
    radius: float
    radius_underflow: bool
    bound_gamma: float
    bound_plain: float
    evaluations: tuple
    markov_max_log_norm: float


def transfer_dip_check(
    v,
    E_k: float,
    k: int,
    gamma_k: float,
    gamma_bar: float,
    tau: float,
    interval_points: int = 17,
) -> TransferDipCheck:
    """Check the transfer product stays sub-exponential near eigenvalue E_k."""
    if not (gamma_bar >= gamma_k > 0):
        raise ValueError("need gamma_bar >= gamma_k > 0")
    if k < 1:
        raise ValueError(f"center k must be >= 1, got {k}")
    v = np.asarray(v, dtype=float)
    if v.size < 2 * k:
        raise IndexError(f"need potential up to site {2 * k}, have {v.size}")
    radius = math.exp(-2.0 * gamma_bar * k) if 2.0 * gamma_bar * k < 745.0 else 0.0
    underflow = radius == 0.0 or E_k + radius == E_k
    bound_gamma = 12.0 * tau * gamma_k * k
    bound_plain = 12.0 * tau * k
    if underflow:
        probes = [E_k]
    else:
        probes = [E_k, E_k - radius, E_k + radius]
    evals = []
    for E in probes:
        ln = transfer_product(v[: 2 * k], E).log_norm
        evals.append(
            DipEvaluation(
                E=E,
                log_norm=ln,
                within_gamma_bound=bool(ln <= bound_gamma),
                within_plain_bound=bool(ln <= bound_plain),
            )
        )
    if underflow:
        markov_max = evals[0].log_norm
    else:
        grid = np.linspace(E_k - radius, E_k + radius, interval_points)
        markov_max = max(transfer_product(v[: 2 * k], float(E)).log_norm for E in grid)
    return TransferDipCheck(
        k=k,
        E_k=E_k,
        tau=tau,
        gamma_k=gamma_k,
        gamma_bar=gamma_bar,
        radius=radius,
        radius_underflow=underflow,
        bound_gamma=bound_gamma,
        bound_plain=bound_plain,
        evaluations=tuple(evals),
        markov_max_log_norm=float(markov_max),
    )
