"""Potential laws: i.i.d. diagonal disorder supported on a compact interval.

Supported laws have a density on J = [j_lo, j_hi] that is bounded above by
A >= 1 and strictly positive in the interior (uniform, or piecewise linear
through user-supplied nodes).  Purely atomic or unbounded laws are out of
scope.  Sampling is by exact inverse-CDF transform so that a (seed, stream)
pair reproduces the same values bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from anderson1d.rng import stream_rng


class InvalidDistributionError(ValueError):
    """The requested potential law violates the support/density contract."""


@dataclass(frozen=True)
class PotentialDistribution:
    """i.i.d. law of the diagonal entries.

    Parameters
    ----------
    j_lo, j_hi : float
        Endpoints of the support interval J; j_hi > j_lo is required
        (constant laws are rejected here; see `ConstantPotential` for the
        degenerate test-only path).
    kind : {"uniform", "piecewise"}
    nodes : array-like of (t, f) pairs, for kind="piecewise"
        Density nodes with t_0 = j_lo, t_last = j_hi, t strictly increasing,
        f >= 0, and f > 0 at all interior nodes.  The density is the linear
        interpolant, normalized to integrate to 1.
    density_bound_A : float, optional
        Upper bound A for the density.  Defaults to max(1, sup density);
        if supplied it must be >= that value and >= 1.
    """

    j_lo: float
    j_hi: float
    kind: str = "uniform"
    nodes: tuple = ()
    density_bound_A: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not np.isfinite(self.j_lo) or not np.isfinite(self.j_hi):
            raise InvalidDistributionError("support endpoints must be finite")
        if self.j_hi <= self.j_lo:
            raise InvalidDistributionError(
                f"degenerate support: j_hi={self.j_hi} <= j_lo={self.j_lo}"
            )
        if self.kind not in ("uniform", "piecewise"):
            raise InvalidDistributionError(f"unknown kind {self.kind!r}")
        if self.kind == "piecewise":
            ts, fs = self._raw_nodes()
            if len(ts) < 2:
                raise InvalidDistributionError("piecewise law needs >= 2 nodes")
            if ts[0] != self.j_lo or ts[-1] != self.j_hi:
                raise InvalidDistributionError("nodes must span [j_lo, j_hi]")
            if np.any(np.diff(ts) <= 0):
                raise InvalidDistributionError("node abscissae must increase")
            if np.any(fs < 0):
                raise InvalidDistributionError("density nodes must be >= 0")
            if np.any(fs[1:-1] <= 0):
                raise InvalidDistributionError(
                    "density must be positive at interior nodes"
                )
            if np.trapezoid(fs, ts) <= 0:
                raise InvalidDistributionError("density integrates to zero")
        sup = float(np.max(self._density_node_values()))
        bound = self.density_bound_A
        if bound is None:
            object.__setattr__(self, "density_bound_A", max(1.0, sup))
        else:
            if bound < 1.0:
                raise InvalidDistributionError("density_bound_A must be >= 1")
            if sup > bound * (1 + 1e-12):
                raise InvalidDistributionError(
                    f"density exceeds bound: sup={sup} > A={bound}"
                )

    # -- internal node bookkeeping ------------------------------------

    def _raw_nodes(self):
        arr = np.asarray(self.nodes, dtype=float)
        if arr.size == 0:
            return np.array([]), np.array([])
        return arr[:, 0], arr[:, 1]

    def _normalized_nodes(self):
        """Node abscissae and density values scaled to unit total mass."""
        if self.kind == "uniform":
            h = 1.0 / (self.j_hi - self.j_lo)
            return (np.array([self.j_lo, self.j_hi]), np.array([h, h]))
        ts, fs = self._raw_nodes()
        z = np.trapezoid(fs, ts)
        return ts, fs / z

    def _density_node_values(self):
        return self._normalized_nodes()[1]

    def _cdf_nodes(self):
        ts, fs = self._normalized_nodes()
        seg = 0.5 * (fs[1:] + fs[:-1]) * np.diff(ts)
        cs = np.concatenate(([0.0], np.cumsum(seg)))
        cs[-1] = 1.0  # pin the top against rounding
        return ts, fs, cs

    # -- public law interface ------------------------------------------

    def density(self, x):
        """Density value(s) at x (0 outside J)."""
        ts, fs = self._normalized_nodes()
        x = np.asarray(x, dtype=float)
        out = np.interp(x, ts, fs, left=0.0, right=0.0)
        out = np.where((x < self.j_lo) | (x > self.j_hi), 0.0, out)
        return out if out.ndim else float(out)

    def cdf(self, x):
        """Cumulative distribution at x."""
        ts, fs, cs = self._cdf_nodes()
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.j_lo, self.j_hi)
        i = np.clip(np.searchsorted(ts, xc, side="right") - 1, 0, len(ts) - 2)
        dt = xc - ts[i]
        slope = (fs[i + 1] - fs[i]) / (ts[i + 1] - ts[i])
        out = cs[i] + fs[i] * dt + 0.5 * slope * dt * dt
        out = np.clip(out, 0.0, 1.0)
        return out if out.ndim else float(out)

    def ppf(self, u):
        """Inverse CDF.  Exact per linear-density segment (quadratic solve)."""
        ts, fs, cs = self._cdf_nodes()
        u = np.asarray(u, dtype=float)
        i = np.clip(np.searchsorted(cs, u, side="right") - 1, 0, len(ts) - 2)
        du = u - cs[i]
        f0 = fs[i]
        slope = (fs[i + 1] - fs[i]) / (ts[i + 1] - ts[i])
        # solve 0.5*slope*y^2 + f0*y = du for y in [0, segment length]
        lin = du / np.where(f0 > 0, f0, 1.0)
        disc = np.maximum(f0 * f0 + 2.0 * slope * du, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            quad = np.where(
                np.abs(slope) > 1e-300, (np.sqrt(disc) - f0) / slope, lin
            )
        y = np.where(np.abs(slope) * (ts[i + 1] - ts[i]) < 1e-14 * f0, lin, quad)
        out = np.clip(ts[i] + y, self.j_lo, self.j_hi)
        return out if out.ndim else float(out)

    def sample_from(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n values from an existing generator (consumes n uniforms)."""
        u = rng.random(n)
        if self.kind == "uniform":
            return self.j_lo + (self.j_hi - self.j_lo) * u
        return self.ppf(u)

    def sample(self, n: int, seed: int, stream: int = 0) -> np.ndarray:
        """Draw n i.i.d. values on the given stream (bit-reproducible)."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return self.sample_from(stream_rng(seed, stream), n)

    def min_density(self, margin: float = None) -> float:  # type: ignore[assignment]
        """Diagnostic lower bound of the density away from the endpoints.

        The lower bound on proper subintervals is never a configuration
        constant; this reports min density on [j_lo+margin, j_hi-margin]
        at node resolution (default margin: 1% of the support width).
        """
        if margin is None:
            margin = 0.01 * (self.j_hi - self.j_lo)
        ts, fs = self._normalized_nodes()
        lo, hi = self.j_lo + margin, self.j_hi - margin
        inner = ts[(ts >= lo) & (ts <= hi)]
        probes = np.concatenate(([lo], inner, [hi]))
        return float(np.min(np.interp(probes, ts, fs)))

    def support_width(self) -> float:
        return self.j_hi - self.j_lo


@dataclass(frozen=True)
class ConstantPotential:
    """Degenerate constant law, for closed-form test paths only.

    Not a valid `PotentialDistribution` (those reject j_hi <= j_lo); it just
    implements the same `.sample` protocol so estimators can be exercised on
    exactly solvable inputs.
    """

    value: float

    def sample_from(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, float(self.value))

    def sample(self, n: int, seed: int, stream: int = 0) -> np.ndarray:
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return np.full(n, float(self.value))


def sample_potential(dist, n: int, seed: int, stream: int = 0) -> np.ndarray:
    """Sequence of n potential values for (dist, seed, stream)."""
    return dist.sample(n, seed, stream)


def essential_spectrum(dist) -> tuple[float, float]:
    """Essential spectrum [j_lo - 2, j_hi + 2] of the whole-line operator."""
    if isinstance(dist, ConstantPotential):
        return (dist.value - 2.0, dist.value + 2.0)
    return (dist.j_lo - 2.0, dist.j_hi + 2.0)
