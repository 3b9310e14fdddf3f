"""Metric approximation by eigenvalues: interval unions and limsup-set proxies.

Finite unions of disjoint open intervals carry every set in play: the
truncated well-approximable sets (unions of alpha-neighborhoods of
eigenvalues), the neighborhoods of dyadic block spectra, and their
complements.  All set algebra here is exact up to float rounding; no
measure is ever estimated by sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from anderson1d.localization import localization_centers
from anderson1d.operator import SpectrumResult, restrict, spectrum


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted union of disjoint open intervals (los[i], his[i]).

    Construct through `from_pairs`; overlapping or touching inputs are
    merged so gaps between stored components are strictly positive.
    """

    los: np.ndarray
    his: np.ndarray

    def __post_init__(self):
        los = np.asarray(self.los, dtype=float)
        his = np.asarray(self.his, dtype=float)
        object.__setattr__(self, "los", los)
        object.__setattr__(self, "his", his)
        if los.shape != his.shape or los.ndim != 1:
            raise ValueError("los/his must be 1-d arrays of equal length")
        if np.any(his <= los):
            raise ValueError("intervals must satisfy lo < hi")
        if los.size > 1 and np.any(los[1:] <= his[:-1]):
            raise ValueError("components must be sorted with positive gaps")

    # -- constructors ----------------------------------------------------

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def from_pairs(cls, pairs) -> "IntervalUnion":
        """Normalize arbitrary (lo, hi) pairs: drop empties, sort, merge."""
        pairs = [(float(lo), float(hi)) for lo, hi in pairs if hi > lo]
        if not pairs:
            return cls.empty()
        pairs.sort()
        los, his = [], []
        cur_lo, cur_hi = pairs[0]
        for lo, hi in pairs[1:]:
            if lo <= cur_hi:
                cur_hi = max(cur_hi, hi)
            else:
                los.append(cur_lo)
                his.append(cur_hi)
                cur_lo, cur_hi = lo, hi
        los.append(cur_lo)
        his.append(cur_hi)
        return cls(np.array(los), np.array(his))

    @classmethod
    def interval(cls, lo: float, hi: float) -> "IntervalUnion":
        return cls.from_pairs([(lo, hi)])

    # -- basic queries ---------------------------------------------------

    @property
    def measure(self) -> float:
        return float(np.sum(self.his - self.los))

    @property
    def n_components(self) -> int:
        return int(self.los.size)

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.los.tolist(), self.his.tolist()))

    def is_empty(self) -> bool:
        return self.los.size == 0

    def prefix_measure(self, x) -> np.ndarray | float:
        """Measure of the union intersected with (-inf, x], vectorized."""
        x_arr = np.asarray(x, dtype=float)
        scalar = x_arr.ndim == 0
        xs = np.atleast_1d(x_arr)
        if self.los.size == 0:
            out = np.zeros(xs.shape)
            return float(out[0]) if scalar else out
        cum = np.concatenate(([0.0], np.cumsum(self.his - self.los)))
        i = np.searchsorted(self.los, xs, side="right")
        partial = np.where(
            i > 0,
            np.minimum(xs, self.his[np.maximum(i - 1, 0)])
            - self.los[np.maximum(i - 1, 0)],
            0.0,
        )
        out = cum[np.maximum(i - 1, 0)] + np.maximum(partial, 0.0)
        out = np.where(i > 0, out, 0.0)
        return float(out[0]) if scalar else out

    def contains(self, other: "IntervalUnion") -> bool:
        """Closure containment: every component of other sits in one of self."""
        if other.is_empty():
            return True
        if self.is_empty():
            return False
        i = np.searchsorted(self.los, other.los, side="right") - 1
        if np.any(i < 0):
            return False
        return bool(np.all(other.his <= self.his[i]))

    # -- set algebra -----------------------------------------------------

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion.from_pairs(self.pairs() + other.pairs())

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        out = []
        i = j = 0
        while i < self.n_components and j < other.n_components:
            lo = max(self.los[i], other.los[j])
            hi = min(self.his[i], other.his[j])
            if hi > lo:
                out.append((lo, hi))
            if self.his[i] <= other.his[j]:
                i += 1
            else:
                j += 1
        return IntervalUnion.from_pairs(out)

    def clip(self, lo: float, hi: float) -> "IntervalUnion":
        return self.intersect(IntervalUnion.interval(lo, hi))

    def complement_within(self, lo: float, hi: float) -> "IntervalUnion":
        """(lo, hi) minus this union."""
        out = []
        cursor = lo
        for a, b in self.clip(lo, hi).pairs():
            if a > cursor:
                out.append((cursor, a))
            cursor = max(cursor, b)
        if hi > cursor:
            out.append((cursor, hi))
        return IntervalUnion.from_pairs(out)


def union_of_intervals(centers, half_widths, clip=None) -> IntervalUnion:
    """Union of (c - h, c + h) over paired lists, optionally clipped."""
    centers = np.asarray(centers, dtype=float)
    half_widths = np.asarray(half_widths, dtype=float)
    if centers.shape != half_widths.shape:
        raise ValueError(
            f"length mismatch: {centers.size} centers, {half_widths.size} widths"
        )
    if np.any(half_widths <= 0):
        raise ValueError("half_widths must be > 0")
    u = IntervalUnion.from_pairs(zip(centers - half_widths, centers + half_widths))
    if clip is not None:
        u = u.clip(clip[0], clip[1])
    return u


# -- approximation speed sequences ---------------------------------------


@dataclass(frozen=True)
class ApproxSequence:
    """Approximation radii alpha_k, positive and non-increasing to zero.

    Kinds: "exponential" alpha_k = exp(-2*gamma_bar*k); "power" c*k^-p;
    "harmonic" c/k; "table" explicit values indexed from k=1.  The clamped
    variant replaces alpha_k by min(alpha_k, 1/k); by a condensation
    argument this preserves the divergence class of the series.
    """

    kind: str
    c: float = 1.0
    p: float = 2.0
    gamma_bar: float = 1.0
    table: tuple = ()
    clamped: bool = False

    def __post_init__(self):
        if self.kind not in ("exponential", "power", "harmonic", "table"):
            raise ValueError(f"unknown alpha kind {self.kind!r}")
        if self.kind == "exponential" and self.gamma_bar <= 0:
            raise ValueError("gamma_bar must be > 0")
        if self.kind in ("power", "harmonic") and self.c <= 0:
            raise ValueError("c must be > 0")
        if self.kind == "power" and self.p <= 0:
            raise ValueError("p must be > 0")
        if self.kind == "table":
            vals = np.asarray(self.table, dtype=float)
            if vals.size == 0 or np.any(vals <= 0):
                raise ValueError("table must be nonempty and positive")
            if np.any(np.diff(vals) > 0):
                raise ValueError("table must be non-increasing")

    def _raw(self, ks: np.ndarray) -> np.ndarray:
        if self.kind == "exponential":
            return np.exp(-2.0 * self.gamma_bar * ks)
        if self.kind == "power":
            return self.c * ks ** (-self.p)
        if self.kind == "harmonic":
            return self.c / ks
        vals = np.asarray(self.table, dtype=float)
        if np.any(ks > vals.size):
            raise IndexError(f"table has {vals.size} entries, asked for k={ks.max()}")
        return vals[ks.astype(int) - 1]

    def values(self, ks) -> np.ndarray:
        ks = np.asarray(ks, dtype=float)
        out = self._raw(ks)
        if self.clamped:
            out = np.minimum(out, 1.0 / ks)
        return out

    def value(self, k: int) -> float:
        return float(self.values(np.array([k]))[0])

    def log_inv_values(self, ks) -> np.ndarray:
        """log(1/alpha_k), computed stably even where alpha underflows."""
        ks = np.asarray(ks, dtype=float)
        if self.kind == "exponential":
            raw = 2.0 * self.gamma_bar * ks
        elif self.kind == "power":
            raw = self.p * np.log(ks) - math.log(self.c)
        elif self.kind == "harmonic":
            raw = np.log(ks) - math.log(self.c)
        else:
            raw = -np.log(self._raw(ks))
        if self.clamped:
            raw = np.maximum(raw, np.log(ks))
        return raw

    def series_class(self) -> str:
        """Convergence class of sum(alpha_k): convergent/divergent/unknown."""
        if self.kind == "exponential":
            return "convergent"
        if self.kind == "power":
            return "convergent" if self.p > 1 else "divergent"
        if self.kind == "harmonic":
            return "divergent"
        return "unknown"

    def partial_sum(self, k_lo: int, k_hi: int) -> float:
        """sum of alpha_k for k in [k_lo, k_hi]."""
        ks = np.arange(k_lo, k_hi + 1)
        return float(np.sum(self.values(ks)))


def clamp_sequence(alpha: ApproxSequence) -> ApproxSequence:
    """alpha_k -> min(alpha_k, 1/k); divergence class is preserved."""
    return replace(alpha, clamped=True)


# -- truncated approximable sets and the block chain ----------------------


def truncated_approx_set(
    eigenvalues_by_rank, alpha: ApproxSequence, K1: int, K2: int, I
) -> IntervalUnion:
    """Union over k in [K1, K2] of (E_k - alpha_k, E_k + alpha_k), clipped to I.

    eigenvalues_by_rank[k-1] is the eigenvalue whose localization rank is k
    (center order); its measure is the finite-scale proxy for the mass of
    the well-approximable set inside I.
    """
    E = np.asarray(eigenvalues_by_rank, dtype=float)
    if not (1 <= K1 <= K2 <= E.size):
        raise IndexError(
            f"rank range [{K1}, {K2}] invalid for {E.size} available eigenvalues"
        )
    ks = np.arange(K1, K2 + 1)
    return union_of_intervals(E[K1 - 1 : K2], alpha.values(ks), clip=I)


def delta_set(
    block_spectrum: SpectrumResult, I, alpha: ApproxSequence, m: int
) -> IntervalUnion:
    """Energies in I within half of alpha_{2*4^m} of the level-m block spectrum."""
    if not alpha.clamped:
        raise ValueError("delta_set requires a clamped sequence (alpha_k <= 1/k)")
    half = 0.5 * alpha.value(2 * 4**m)
    E = block_spectrum.eigenvalues
    if half <= 0 or E.size == 0:
        return IntervalUnion.empty()
    return union_of_intervals(E, np.full(E.size, half), clip=I)


@dataclass(frozen=True)
class BPrimeLevel:
    m: int
    delta_measure: float
    bprime_measure: float
    new_mass: float  # mes(B'_{m+1} \ B'_m); nan at the top level
    new_mass_ratio: float  # new_mass / (mes I * 4^m * alpha_{2*4^m}); nan at top


@dataclass(frozen=True)
class BPrimeChain:
    I: tuple
    m_lo: int
    m_hi: int
    levels: tuple
    bprime: tuple  # IntervalUnion per level, same order as levels


def bprime_chain(spectra, m_lo: int, I, alpha: ApproxSequence) -> BPrimeChain:
    """Nested avoided sets B'_m = I minus all level >= m spectrum neighborhoods.

    spectra[i] is the SpectrumResult of the dyadic block at level m_lo + i;
    the window top M = m_lo + len(spectra) - 1 truncates the 'for all
    higher levels' condition and is recorded in the result.  Emits, per
    consecutive pair, the relative new mass
    mes(B'_{m+1} - B'_m) / (mes I * 4^m * alpha_{2*4^m}).
    """
    if len(spectra) < 2:
        raise ValueError("need at least two levels")
    I_lo, I_hi = float(I[0]), float(I[1])
    mes_I = I_hi - I_lo
    ms = list(range(m_lo, m_lo + len(spectra)))
    deltas = [delta_set(s, (I_lo, I_hi), alpha, m) for s, m in zip(spectra, ms)]
    # suffix unions of deltas, then complements
    bprimes: list[IntervalUnion] = [None] * len(ms)  # type: ignore[list-item]
    suffix = IntervalUnion.empty()
    for i in range(len(ms) - 1, -1, -1):
        suffix = suffix.union(deltas[i])
        bprimes[i] = suffix.complement_within(I_lo, I_hi)
    levels = []
    for i, m in enumerate(ms):
        if i + 1 < len(ms):
            new = bprimes[i + 1].intersect(
                bprimes[i].complement_within(I_lo, I_hi)
            )
            new_mass = new.measure
            denom = mes_I * 4**m * alpha.value(2 * 4**m)
            ratio = new_mass / denom if denom > 0 else math.inf
        else:
            new_mass = math.nan
            ratio = math.nan
        levels.append(
            BPrimeLevel(
                m=m,
                delta_measure=deltas[i].measure,
                bprime_measure=bprimes[i].measure,
                new_mass=new_mass,
                new_mass_ratio=ratio,
            )
        )
    return BPrimeChain(
        I=(I_lo, I_hi),
        m_lo=m_lo,
        m_hi=ms[-1],
        levels=tuple(levels),
        bprime=tuple(bprimes),
    )


# -- the covering lemma, exactly ------------------------------------------


def covering_function(B: IntervalUnion, I, theta: float):
    """Exact sparse-cover set A^theta and its measure.

    A^theta = {E in I : mes((E-theta, E+theta) cap B) <= theta}.  The map
    E -> mes((E-theta, E+theta) cap B) is piecewise linear with breakpoints
    at B-endpoints -+ theta, so the sublevel set is computed exactly by a
    sweep over breakpoints.  The sparse-cover inequality
    mes A^theta <= 4 (mes(I - B) + theta) is re-verified on every call.
    """
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    I_lo, I_hi = float(I[0]), float(I[1])
    if I_hi <= I_lo:
        raise ValueError("I must be a nondegenerate interval")
    if not IntervalUnion.interval(I_lo, I_hi).contains(B):
        raise ValueError("B must be contained in I")

    ends = np.concatenate((B.los, B.his))
    knots = np.unique(
        np.concatenate((ends - theta, ends + theta, [I_lo, I_hi]))
    )
    knots = knots[(knots >= I_lo) & (knots <= I_hi)]
    if knots.size == 0 or knots[0] > I_lo:
        knots = np.concatenate(([I_lo], knots))
    if knots[-1] < I_hi:
        knots = np.concatenate((knots, [I_hi]))

    f = B.prefix_measure(knots + theta) - B.prefix_measure(knots - theta)
    pieces = []
    for i in range(knots.size - 1):
        x0, x1 = knots[i], knots[i + 1]
        f0, f1 = f[i], f[i + 1]
        in0, in1 = f0 <= theta, f1 <= theta
        if in0 and in1:
            pieces.append((x0, x1))
        elif in0 != in1 and f1 != f0:
            xc = x0 + (theta - f0) * (x1 - x0) / (f1 - f0)
            xc = min(max(xc, x0), x1)
            pieces.append((x0, xc) if in0 else (xc, x1))
    a_theta = IntervalUnion.from_pairs(pieces)
    mes = a_theta.measure
    complement = B.complement_within(I_lo, I_hi).measure
    bound = 4.0 * (complement + theta)
    if mes > bound * (1 + 1e-9) + 1e-12:
        raise RuntimeError(
            f"sparse-cover inequality violated: {mes} > 4*({complement} + {theta})"
        )
    return a_theta, mes


# -- the zero-or-full dichotomy experiment --------------------------------


@dataclass(frozen=True)
class KhinchinCurve:
    """Covered/tail measures along dyadic rank checkpoints, one realization."""

    K_checkpoints: tuple
    covered: tuple  # measure of union_{k <= K} (E_k +- alpha_k) cap I
    tail: tuple  # measure of union_{k in [K, K_max]} cap I
    tail_bound: tuple  # 2 * sum_{k >= K} alpha_k capped at mes I


@dataclass(frozen=True)
class KhinchinReport:
    I: tuple
    K_max: int
    box_length: int
    seed: int
    alpha_kind: str
    series_class: str
    curves: tuple  # one KhinchinCurve per realization
    mean_covered_final: float
    mes_I: float


def _dyadic_checkpoints(K_max: int) -> list[int]:
    ks = []
    k = 1
    while k < K_max:
        ks.append(k)
        k *= 2
    ks.append(K_max)
    return ks


def eigenvalues_by_rank(v, n_box: int, tol: float = 1e-10) -> np.ndarray:
    """Center-ordered eigenvalues of the box [1, n_box] over potential v."""
    spec = spectrum(restrict(v, 1, n_box), tol=tol, want_vectors=True)
    assignment = localization_centers(spec)
    return np.array([p.E for p in assignment.pairs])


def khinchin_experiment(
    dist,
    I,
    alpha: ApproxSequence,
    K_max: int,
    trials: int,
    seed: int,
    box_pad: int = None,  # type: ignore[assignment]
) -> KhinchinReport:
    """Covered-measure growth (divergent alpha) or tail decay (convergent).

    Per realization: sample a box of length K_max + pad, extract
    center-ordered eigenvalues, and record along dyadic K both the covered
    measure of the first K neighborhoods and the tail measure from K, the
    latter against its union bound 2*sum_{k>=K} alpha_k.  Covered measures
    are non-decreasing in K by construction.
    """
    I_lo, I_hi = float(I[0]), float(I[1])
    if box_pad is None:
        box_pad = max(64, K_max // 16)
    n_box = K_max + box_pad
    cps = _dyadic_checkpoints(K_max)
    curves = []
    for t in range(trials):
        v = dist.sample(n_box, seed, stream=t)
        E = eigenvalues_by_rank(v, n_box)
        covered = [
            truncated_approx_set(E, alpha, 1, K, (I_lo, I_hi)).measure for K in cps
        ]
        tail = [
            truncated_approx_set(E, alpha, K, K_max, (I_lo, I_hi)).measure
            for K in cps
        ]
        bound = [
            min(2.0 * alpha.partial_sum(K, K_max), I_hi - I_lo) for K in cps
        ]
        curves.append(
            KhinchinCurve(
                K_checkpoints=tuple(cps),
                covered=tuple(covered),
                tail=tuple(tail),
                tail_bound=tuple(bound),
            )
        )
    mean_final = float(np.mean([c.covered[-1] for c in curves]))
    return KhinchinReport(
        I=(I_lo, I_hi),
        K_max=K_max,
        box_length=n_box,
        seed=seed,
        alpha_kind=alpha.kind + ("/clamped" if alpha.clamped else ""),
        series_class=alpha.series_class(),
        curves=tuple(curves),
        mean_covered_final=mean_final,
        mes_I=I_hi - I_lo,
    )
