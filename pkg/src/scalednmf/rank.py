"""Spectral rank selection: leading singular values and likelihood elbows.

The number of topics is estimated from the singular spectrum by locating the
change point that maximizes a two-population normal profile likelihood with a
shared (pooled) variance, then re-applying the same search to the tail of the
spectrum to obtain a second, finer elbow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, svds

from .errors import NumericalError

__all__ = [
    "SingularSpectrum",
    "ElbowEstimate",
    "singular_values",
    "zg_elbow",
    "second_elbow",
    "sweep_range",
]

# pooled-variance floor in the elbow likelihood
_VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class SingularSpectrum:
    """Leading singular values in descending order plus the source shape."""

    values: np.ndarray
    source_dims: tuple[int, int]

    def __len__(self) -> int:
        return len(self.values)


def singular_values(M, count: int, *, seed: int = 0, dense_cutoff: int = 64) -> SingularSpectrum:
    """The ``count`` largest singular values of ``M``, sorted descending.

    Small problems (min dimension at most ``dense_cutoff``) use a dense
    decomposition; larger ones use iterative Lanczos bidiagonalization with a
    seed-determined starting vector.
    """
    n, m = M.shape
    small = min(n, m)
    if count < 1:
        raise ValueError("count must be a positive integer")
    if count > small:
        raise ValueError(f"count {count} exceeds min(n, m) = {small}")
    if small <= dense_cutoff or count >= small:
        dense = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=np.float64)
        vals = np.linalg.svd(dense, compute_uv=False)[:count]
    else:
        op = M if sp.issparse(M) else np.asarray(M, dtype=np.float64)
        v0 = np.random.default_rng(seed).standard_normal(small)
        try:
            vals = svds(op, k=count, v0=v0, which="LM", return_singular_vectors=False)
        except ArpackNoConvergence as exc:
            raise NumericalError(f"singular value iteration did not converge: {exc}") from None
        vals = np.sort(vals)[::-1]
    return SingularSpectrum(values=np.asarray(vals, dtype=np.float64), source_dims=(n, m))


def _profile_loglik(values: np.ndarray, q: int) -> float:
    """Two-population normal log-likelihood with pooled MLE variance."""
    head, tail = values[:q], values[q:]
    rss = float(((head - head.mean()) ** 2).sum())
    if tail.size:
        rss += float(((tail - tail.mean()) ** 2).sum())
    var = max(rss / values.size, _VARIANCE_FLOOR)
    return -0.5 * values.size * math.log(2.0 * math.pi * var) - rss / (2.0 * var)


def zg_elbow(values) -> int:
    """Most likely break position q in a descending value profile.

    Values before the break and after it are modeled as two normal
    populations with separate means and one pooled variance; the first q
    maximizing the profile likelihood is returned (1 <= q <= len - 1).
    """
    if isinstance(values, SingularSpectrum):
        values = values.values
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("need at least 2 values to locate an elbow")
    best_q, best_ll = 1, -np.inf
    for q in range(1, v.size):
        ll = _profile_loglik(v, q)
        if ll > best_ll:
            best_q, best_ll = q, ll
    return best_q


@dataclass(frozen=True)
class ElbowEstimate:
    """First and second spectrum elbows, both as absolute 1-based positions."""

    first: int
    second: int
    degenerate: bool = False


def second_elbow(values) -> ElbowEstimate:
    """Locate the first elbow, then the elbow of the remaining tail."""
    if isinstance(values, SingularSpectrum):
        values = values.values
    v = np.asarray(values, dtype=np.float64)
    if v.size < 4:
        raise ValueError("need at least 4 values for a second elbow")
    first = zg_elbow(v)
    tail = v[first:]
    if tail.size < 2:
        return ElbowEstimate(first=first, second=first + 1, degenerate=True)
    return ElbowEstimate(first=first, second=first + zg_elbow(tail))


def sweep_range(elbow: ElbowEstimate, radius: int = 10, bounds: tuple[int, int] = (2, 1 << 30)) -> list[int]:
    """Candidate ranks centered on the second elbow, clipped to ``bounds``."""
    lo, hi = bounds
    if lo > hi:
        raise ValueError(f"empty rank bounds {bounds}")
    if radius < 0:
        raise ValueError("radius must be non-negative")
    start = max(lo, elbow.second - radius)
    stop = min(hi, elbow.second + radius)
    return list(range(start, stop + 1))
