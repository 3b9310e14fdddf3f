"""Finite restrictions of the Jacobi matrix: determinants, spectra, vectors.

Blocks are tridiagonal with the sampled potential on the diagonal and unit
off-diagonals.  Site indices are 1-based throughout, matching the operator
convention; numpy arrays are 0-based internally.

The eigensolver is bisection on Sturm sign counts: the experiments need
eigenvalue counts in intervals far more often than full decompositions, the
count is exact by construction, and per-eigenvalue bisection has no shared
state.  Eigenvectors come from inverse iteration on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

_TINY = np.finfo(float).tiny
_RESCALE_HI = 2.0**512
_RESCALE_LO = 2.0**-512
_LN2 = math.log(2.0)


class NumericError(RuntimeError):
    """A numeric routine failed to converge; carries the offending index."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class TridiagonalBlock:
    """Restriction of the operator to sites [offset, offset + len(diag) - 1]."""

    offset: int
    diag: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        object.__setattr__(self, "diag", diag)
        if diag.ndim != 1 or diag.size < 1:
            raise ValueError("block needs a 1-d diagonal of length >= 1")
        if self.offset < 1:
            raise ValueError(f"offset must be >= 1, got {self.offset}")

    @property
    def length(self) -> int:
        return int(self.diag.size)

    def sites(self) -> np.ndarray:
        """1-based site indices covered by the block."""
        return np.arange(self.offset, self.offset + self.length)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Matrix-vector product H_block @ x."""
        y = self.diag * x
        y[:-1] += x[1:]
        y[1:] += x[:-1]
        return y


@dataclass(frozen=True)
class SpectrumResult:
    """Sorted simple spectrum of a block, with optional eigenvectors.

    eigenvectors, when present, are unit columns of a (length x length)
    array; residuals[j] = ||(H - E_j) psi_j||.
    """

    block: TridiagonalBlock
    eigenvalues: np.ndarray
    residual_tol: float
    eigenvectors: np.ndarray = None  # type: ignore[assignment]
    residuals: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        object.__setattr__(self, "eigenvalues", ev)
        if ev.size != self.block.length:
            raise ValueError("eigenvalue count must equal block length")
        if ev.size > 1 and not np.all(np.diff(ev) > 0):
            raise NumericError("eigenvalues are not strictly increasing")
        if self.eigenvectors is not None:
            res = np.asarray(self.residuals, dtype=float)
            if np.any(res > self.residual_tol):
                j = int(np.argmax(res))
                raise NumericError(
                    f"eigenvector residual {res[j]:.3e} exceeds "
                    f"{self.residual_tol:.3e}",
                    index=j,
                )

    @property
    def count(self) -> int:
        return int(self.eigenvalues.size)


def restrict(v, a: int, b: int) -> TridiagonalBlock:
    """Block over sites a..b (1-based, inclusive) of the potential sequence."""
    v = np.asarray(v, dtype=float)
    if not (1 <= a <= b <= v.size):
        raise IndexError(f"restriction [{a}, {b}] out of range for length {v.size}")
    return TridiagonalBlock(offset=a, diag=v[a - 1 : b].copy())


def dyadic_block(v, m: int) -> TridiagonalBlock:
    """Block over sites [4^m, 2*4^m), the m-th dyadic window."""
    if m < 0:
        raise ValueError(f"level must be >= 0, got {m}")
    lo = 4**m
    return restrict(v, lo, 2 * lo - 1)


def char_poly_logdet(block: TridiagonalBlock, E: float) -> tuple[float, float]:
    """(sign, log|det|) of det(E*I - H_block), overflow safe.

    Three-term recursion d_j = (E - v_j) d_{j-1} - d_{j-2}; whenever |d_j|
    leaves [2^-512, 2^512] both carried terms are rescaled by an exact power
    of two and the exponent is tracked, so the result is bit-equivalent to
    the naive recursion whenever that one does not overflow.
    """
    dm1, d = 0.0, 1.0
    shift = 0
    for vj in block.diag:
        dm1, d = d, (E - vj) * d - dm1
        ad = abs(d)
        if ad > _RESCALE_HI:
            d *= _RESCALE_LO
            dm1 *= _RESCALE_LO
            shift += 512
        elif 0.0 < ad < _RESCALE_LO:
            d *= _RESCALE_HI
            dm1 *= _RESCALE_HI
            shift -= 512
    if d == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, d), math.log(abs(d)) + shift * _LN2


def char_poly_value(block: TridiagonalBlock, E: float) -> float:
    """det(E*I - H_block); +-inf if the value exceeds float range."""
    dm1, d = 0.0, 1.0
    shift = 0
    for vj in block.diag:
        dm1, d = d, (E - vj) * d - dm1
        ad = abs(d)
        if ad > _RESCALE_HI:
            d *= _RESCALE_LO
            dm1 *= _RESCALE_LO
            shift += 512
        elif 0.0 < ad < _RESCALE_LO:
            d *= _RESCALE_HI
            dm1 *= _RESCALE_HI
            shift -= 512
    return float(np.ldexp(d, shift))


def sturm_count(diag, E) -> np.ndarray | int:
    """#{eigenvalues <= E} of the block with the given diagonal, exactly.

    Counts negative pivots of the LDL^T factorization of (H - E*I); an
    exactly-zero pivot is treated as negative so that eigenvalues equal to E
    are counted.  E may be a scalar or an array (vectorized recurrence).
    """
    diag = np.atleast_1d(np.asarray(diag, dtype=float))
    E_arr = np.asarray(E, dtype=float)
    scalar = E_arr.ndim == 0
    Es = np.atleast_1d(E_arr)
    d = np.full_like(Es, np.inf)  # 1/d_0 = 0: no coupling into the first pivot
    count = np.zeros(Es.shape, dtype=np.int64)
    for vj in diag:
        d = (vj - Es) - 1.0 / d
        d = np.where(d == 0.0, -_TINY, d)
        count += d < 0.0
    return int(count[0]) if scalar else count


def sturm_count_trials(diags: np.ndarray, E) -> np.ndarray:
    """Counts for many independent diagonals at once.

    diags has shape (trials, L); E is scalar or (nE,).  Returns (trials,)
    or (trials, nE).
    """
    diags = np.asarray(diags, dtype=float)
    E_arr = np.asarray(E, dtype=float)
    scalar = E_arr.ndim == 0
    Es = np.atleast_1d(E_arr)[None, :]
    d = np.full((diags.shape[0], Es.shape[1]), np.inf)
    count = np.zeros_like(d, dtype=np.int64)
    for j in range(diags.shape[1]):
        d = (diags[:, j : j + 1] - Es) - 1.0 / d
        d = np.where(d == 0.0, -_TINY, d)
        count += d < 0.0
    return count[:, 0] if scalar else count


def _gershgorin(diag) -> tuple[float, float]:
    return float(np.min(diag) - 2.0), float(np.max(diag) + 2.0)


def _bisect_all(diag: np.ndarray, tol: float) -> np.ndarray:
    n = diag.size
    g_lo, g_hi = _gershgorin(diag)
    lo = np.full(n, g_lo - 1.0)
    hi = np.full(n, g_hi + 1.0)
    ranks = np.arange(1, n + 1)
    iters = max(1, int(math.ceil(math.log2((hi[0] - lo[0]) / tol))))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        take_hi = sturm_count(diag, mid) >= ranks
        hi = np.where(take_hi, mid, hi)
        lo = np.where(take_hi, lo, mid)
    return np.sort(0.5 * (lo + hi))


def _residual(diag: np.ndarray, E: float, x: np.ndarray) -> float:
    r = (diag - E) * x
    r[:-1] += x[1:]
    r[1:] += x[:-1]
    return float(np.linalg.norm(r))


def _inverse_iteration(diag, E, res_tol, rng, max_restarts=3):
    # at least 3 solves: the first aligns the core of the vector, the
    # extra ones scrub the far tail (contamination shrinks geometrically,
    # which matters for decay diagnostics even after the residual converges)
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = 1.0
    ab[1, :] = diag - E
    ab[2, :-1] = 1.0
    shift_bump = 0
    for restart in range(max_restarts + 1):
        x = rng.standard_normal(n)
        x /= np.linalg.norm(x)
        best = None
        for it in range(5):
            try:
                y = solve_banded((1, 1), ab, x)
            except np.linalg.LinAlgError:
                # exactly singular shift: nudge by one residual tolerance
                shift_bump += 1
                ab[1, :] = diag - (E + shift_bump * res_tol * 0.1)
                break
            norm_y = np.linalg.norm(y)
            if not np.isfinite(norm_y) or norm_y == 0.0:
                break
            x = y / norm_y
            res = _residual(diag, E, x)
            if res <= res_tol:
                best = (x, res)
                if it >= 2:
                    return best
        if best is not None:
            return best
    return None, math.inf


def spectrum(
    block: TridiagonalBlock,
    tol: float = 1e-12,
    want_vectors: bool = False,
    vector_seed: int = 0x5EED,
) -> SpectrumResult:
    """All eigenvalues by Sturm bisection to absolute accuracy tol.

    The Sturm count at any E agrees exactly with the number of returned
    eigenvalues <= E (up to the bisection tolerance on ties).  Eigenvectors,
    when requested, come from inverse iteration with a deterministic start;
    per-vector residual must meet 100*tol*max(1, spectral scale) or a
    NumericError identifies the failing index.  Nearly degenerate
    neighbours (gap < 1e-4) are re-orthogonalized within their cluster.
    """
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    diag = block.diag
    n = diag.size
    # residual tolerance scales with the spectral range (backward stability:
    # an absolute target below scale*eps is not achievable in floats)
    scale = max(1.0, float(np.max(np.abs(diag))) + 2.0)
    res_tol = 100 * tol * scale
    if n == 1:
        evals = diag.copy()
    else:
        evals = _bisect_all(diag, tol)
    if not want_vectors:
        return SpectrumResult(block=block, eigenvalues=evals, residual_tol=res_tol)

    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=vector_seed))
    )
    vecs = np.empty((n, n))
    residuals = np.empty(n)
    for j in range(n):
        if n == 1:
            vecs[:, 0] = 1.0
            residuals[0] = 0.0
            continue
        x, res = _inverse_iteration(diag, evals[j], res_tol, rng)
        if x is None:
            raise NumericError(
                f"inverse iteration failed at eigenvalue index {j}", index=j
            )
        vecs[:, j] = x
        residuals[j] = res

    # near-degenerate neighbours: contamination after one inverse-iteration
    # solve scales like tol/gap, so gaps below 1e-4 get a QR cleanup
    if n > 1:
        gaps = np.diff(evals)
        j = 0
        while j < n - 1:
            if gaps[j] < 1e-4:
                k = j + 1
                while k < n - 1 and gaps[k] < 1e-4:
                    k += 1
                q, _ = np.linalg.qr(vecs[:, j : k + 1])
                vecs[:, j : k + 1] = q
                for i in range(j, k + 1):
                    residuals[i] = _residual(diag, evals[i], vecs[:, i].copy())
                j = k + 1
            else:
                j += 1

    return SpectrumResult(
        block=block,
        eigenvalues=evals,
        residual_tol=res_tol,
        eigenvectors=vecs,
        residuals=residuals,
    )


def min_spacing(spec: SpectrumResult) -> float:
    """Smallest consecutive eigenvalue gap."""
    if spec.count < 2:
        raise ValueError("min_spacing needs at least 2 eigenvalues")
    return float(np.min(np.diff(spec.eigenvalues)))


def spectrum_to_rows(spec: SpectrumResult) -> list[tuple]:
    """CSV rows (block_offset, block_length, index, eigenvalue)."""
    return [
        (spec.block.offset, spec.block.length, j + 1, float(e))
        for j, e in enumerate(spec.eigenvalues)
    ]
