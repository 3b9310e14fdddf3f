"""Gauge functions and Hausdorff-type cover estimates.

A gauge is a non-decreasing continuous function rho on [0, 1] with
rho(0) = 0; the generalized outer measure of a set is the infimum of
sum rho(eps_j) over covers by intervals of half-width eps_j <= eps.  Only
upper bounds from explicit covers are ever computed here: a finite
computation can exhibit a small cover, it cannot certify that no small
cover exists, so lower bounds (and any claim of infinite measure) remain
outside the reported quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from anderson1d.approx import ApproxSequence, IntervalUnion


class CoverageError(ValueError):
    """Supplied cover does not contain the target set."""


@dataclass(frozen=True)
class GaugeFunction:
    """Gauge rho on [0, 1].

    Kinds: "lebesgue" rho(t) = 2t (recovers Lebesgue outer measure);
    "power" rho(t) = t^s with s in (0, 1]; "reciprocal_log"
    rho(t) = 1/max(1, log(1/t)) (capped at 1 near t = 1 to stay monotone
    and continuous); "table" a monotone sample on [0, 1].  Set
    rho_over_t_nonincreasing=True to claim that rho(t)/t is non-increasing;
    closed forms are checked analytically, tables on a 10^4-point log grid.
    """

    kind: str
    s: float = 0.5
    table_t: tuple = ()
    table_v: tuple = ()
    rho_over_t_nonincreasing: bool = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.kind not in ("lebesgue", "power", "reciprocal_log", "table"):
            raise ValueError(f"unknown gauge kind {self.kind!r}")
        if self.kind == "power" and not (0.0 < self.s <= 1.0):
            raise ValueError(f"power gauge needs s in (0, 1], got {self.s}")
        if self.kind == "table":
            ts = np.asarray(self.table_t, dtype=float)
            vs = np.asarray(self.table_v, dtype=float)
            if ts.size < 2 or ts.shape != vs.shape:
                raise ValueError("table needs matching t/v arrays, >= 2 points")
            if ts[0] != 0.0 or ts[-1] != 1.0:
                raise ValueError("table abscissae must span [0, 1]")
            if np.any(np.diff(ts) <= 0):
                raise ValueError("table abscissae must increase")
            if vs[0] != 0.0:
                raise ValueError("gauge must vanish at 0")
            if np.any(np.diff(vs) < 0) or np.any(vs < 0):
                raise ValueError("gauge must be non-negative and non-decreasing")
        if self.rho_over_t_nonincreasing:
            self._verify_ratio_monotone()

    def _verify_ratio_monotone(self):
        if self.kind in ("lebesgue", "power", "reciprocal_log"):
            return  # 2, t^(s-1) with s <= 1, and 1/(t max(1, log 1/t)): all OK
        ts = np.logspace(-12, 0, 10_000)
        ratio = self.eval(ts) / ts
        if np.any(np.diff(ratio) > 1e-12 * np.abs(ratio[:-1])):
            raise ValueError("rho(t)/t is not non-increasing on the test grid")

    def eval(self, t):
        t_arr = np.asarray(t, dtype=float)
        scalar = t_arr.ndim == 0
        ts = np.atleast_1d(t_arr)
        if np.any((ts < 0) | (ts > 1)):
            raise ValueError("gauge argument must lie in [0, 1]")
        if self.kind == "lebesgue":
            out = 2.0 * ts
        elif self.kind == "power":
            out = ts**self.s
        elif self.kind == "reciprocal_log":
            with np.errstate(divide="ignore"):
                out = np.where(
                    ts > 0, 1.0 / np.maximum(1.0, -np.log(ts)), 0.0
                )
        else:
            out = np.interp(ts, self.table_t, self.table_v)
        return float(out[0]) if scalar else out

    def eval_from_log_inv(self, L):
        """rho(e^-L) given L = log(1/t); stable when t underflows."""
        L_arr = np.asarray(L, dtype=float)
        scalar = L_arr.ndim == 0
        Ls = np.atleast_1d(L_arr)
        if np.any(Ls < 0):
            raise ValueError("log(1/t) must be >= 0 for t in [0, 1]")
        if self.kind == "lebesgue":
            out = 2.0 * np.exp(-Ls)
        elif self.kind == "power":
            out = np.exp(-self.s * Ls)
        elif self.kind == "reciprocal_log":
            out = 1.0 / np.maximum(1.0, Ls)
        else:
            out = np.interp(np.exp(-Ls), self.table_t, self.table_v)
        return float(out[0]) if scalar else out


def gauge_eval(rho: GaugeFunction, t):
    """rho(t) for t in [0, 1] (scalar or array)."""
    return rho.eval(t)


@dataclass(frozen=True)
class IntegrabilityResult:
    verdict: str  # integrable / non-integrable / inconclusive
    analytic: bool
    eps_grid: tuple
    partial_integrals: tuple  # integral of rho(t)/t over [eps, 1]


def integrability_test(rho: GaugeFunction, eps_grid=None) -> IntegrabilityResult:
    """Classify whether rho(t)/t is integrable at zero.

    Closed-form kinds are classified analytically (lebesgue and power
    integrate to 2 and 1/s; reciprocal-log diverges like log log).  Tables
    are integrated numerically on a logarithmic grid down to 1e-12 and the
    verdict is extrapolated from the per-decade increments: vanishing
    increments mean integrable, steady or growing ones mean non-integrable.
    """
    if eps_grid is None:
        eps_grid = np.logspace(-12, 0, 961)
    eps_grid = np.sort(np.asarray(eps_grid, dtype=float))
    u = np.log(1.0 / eps_grid)[::-1]  # increasing in u = log(1/eps)
    vals = rho.eval_from_log_inv(u)
    partial = np.concatenate(
        ([0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(u)))
    )
    partials_by_eps = partial[::-1]  # aligned with eps_grid ascending
    if rho.kind in ("lebesgue", "power"):
        verdict, analytic = "integrable", True
    elif rho.kind == "reciprocal_log":
        verdict, analytic = "non-integrable", True
    else:
        analytic = False
        decades = np.logspace(0, math.floor(math.log10(1.0 / eps_grid[0])), num=13)
        marks = np.interp(np.log(decades), u, partial)
        inc = np.diff(marks)
        inc = inc[inc > 0]
        if inc.size < 3:
            verdict = "inconclusive"
        else:
            r = inc[-1] / inc[-3]
            if inc[-1] < 1e-3 * max(partial[-1], 1e-30) or r < 0.5:
                verdict = "integrable"
            elif r > 0.85:
                verdict = "non-integrable"
            else:
                verdict = "inconclusive"
    return IntegrabilityResult(
        verdict=verdict,
        analytic=analytic,
        eps_grid=tuple(eps_grid.tolist()),
        partial_integrals=tuple(partials_by_eps.tolist()),
    )


@dataclass(frozen=True)
class SeriesTest:
    verdict: str  # convergent / divergent / unknown
    analytic: bool
    checkpoints: tuple
    partial_sums: tuple
    integral_lower_bound: float  # for exponential alpha: int_1^K rho(e^-2gs) ds
    reference_log_growth: float  # log(K) / (2 gamma_bar) for exponential alpha


def _series_verdict(rho: GaugeFunction, alpha: ApproxSequence) -> tuple[str, bool]:
    """Analytic classification of sum rho(alpha_k) for closed-form pairs.

    Clamping alpha at 1/k never changes the class for these pairs: the
    clamp is inactive eventually (exponential, power p > 1), or the clamped
    and raw terms are comparable (harmonic, power p <= 1).
    """
    if rho.kind == "table" or alpha.kind == "table":
        return "unknown", False
    if rho.kind == "lebesgue":
        return alpha.series_class(), True
    if rho.kind == "power":
        if alpha.kind == "exponential":
            return "convergent", True
        p_eff = alpha.p if alpha.kind == "power" else 1.0
        return ("convergent" if p_eff * rho.s > 1 else "divergent"), True
    # reciprocal_log: rho(alpha_k) ~ 1/log(1/alpha_k), which decays like
    # 1/k (exponential alpha) or 1/log k (power/harmonic): always divergent
    return "divergent", True


def series_test(
    rho: GaugeFunction, alpha: ApproxSequence, K: int, checkpoints=None
) -> SeriesTest:
    """Partial sums of rho(alpha_k) up to K plus the analytic verdict.

    Terms are computed through log(1/alpha_k) so nothing is lost when
    alpha_k underflows.  For exponential alpha the integral comparison
    int_1^K rho(e^{-2 gamma_bar s}) ds is evaluated as well: the partial
    sums dominate it term by term, which is the reduction that turns a
    non-integrable gauge into a divergent series.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if checkpoints is None:
        cps = []
        k = 1
        while k < K:
            cps.append(k)
            k *= 4
        cps.append(K)
    else:
        cps = sorted(set(int(c) for c in checkpoints) | {K})
    ks = np.arange(1, K + 1)
    terms = rho.eval_from_log_inv(alpha.log_inv_values(ks))
    sums = np.cumsum(terms)
    partials = tuple(float(sums[c - 1]) for c in cps)
    verdict, analytic = _series_verdict(rho, alpha)
    if alpha.kind == "exponential":
        g2 = 2.0 * alpha.gamma_bar
        # log-spaced grid: the integrand decays like 1/s, linear spacing
        # would badly overestimate the head of the integral
        s_grid = np.geomspace(1.0, float(K), 8193)
        vals = rho.eval_from_log_inv(g2 * s_grid)
        integral = float(np.trapezoid(vals, s_grid))
        ref = math.log(K) / g2
    else:
        integral = math.nan
        ref = math.nan
    return SeriesTest(
        verdict=verdict,
        analytic=analytic,
        checkpoints=tuple(cps),
        partial_sums=partials,
        integral_lower_bound=integral,
        reference_log_growth=ref,
    )


@dataclass(frozen=True)
class CoverEstimate:
    value: float  # sum of rho(half-width) over the cover
    n_intervals: int
    eps: float
    mode: str  # canonical / explicit


def cover_measure_upper(
    target: IntervalUnion, rho: GaugeFunction, eps: float, cover=None
) -> CoverEstimate:
    """Upper bound on the rho-measure of target from an interval cover.

    Canonical mode subdivides each component into pieces of half-width eps;
    explicit mode takes (center, half_width) pairs, verifies every
    half-width is <= eps and that the union of closed cover intervals
    contains the target (CoverageError otherwise).  The reported value is
    sum rho(half_width); with the Lebesgue gauge this reproduces the
    target's measure up to eps per component.
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if cover is None:
        n_total = 0
        for lo, hi in target.pairs():
            n_total += max(1, math.ceil((hi - lo) / (2.0 * eps)))
        return CoverEstimate(
            value=float(n_total * rho.eval(min(eps, 1.0))),
            n_intervals=n_total,
            eps=eps,
            mode="canonical",
        )
    centers = np.asarray([c for c, _ in cover], dtype=float)
    halfs = np.asarray([h for _, h in cover], dtype=float)
    if np.any(halfs <= 0):
        raise ValueError("cover half-widths must be > 0")
    if np.any(halfs > eps * (1 + 1e-12)):
        raise ValueError("cover half-widths must be <= eps")
    union = IntervalUnion.from_pairs(zip(centers - halfs, centers + halfs))
    if not union.contains(target):
        raise CoverageError("cover does not contain the target set")
    return CoverEstimate(
        value=float(np.sum(rho.eval(np.minimum(halfs, 1.0)))),
        n_intervals=int(halfs.size),
        eps=eps,
        mode="explicit",
    )


def cover_measure_curve(target: IntervalUnion, rho: GaugeFunction, eps_list):
    """Canonical-cover estimates along decreasing eps with the running infimum.

    The measure estimator is an infimum over covers, so the curve to quote
    is the running minimum; it never increases as eps decreases.
    """
    eps_arr = sorted((float(e) for e in eps_list), reverse=True)
    values, best = [], math.inf
    for e in eps_arr:
        v = cover_measure_upper(target, rho, e).value
        best = min(best, v)
        values.append((e, v, best))
    return values
