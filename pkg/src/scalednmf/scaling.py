"""Diagonal scalings of a sparse document-term count matrix.

Five variants are supported, all defined through the row-sum and column-sum
diagonal matrices D_r = diag(M 1) and D_c = diag(1' M):

    counts  M                          (no scaling)
    rs      D_r^-1 M                   (each row sums to 1)
    cs      M D_c^-1                   (each column sums to 1)
    nl      D_r^-1/2 M D_c^-1/2        (normalized-Laplacian style)
    pwmi    D_r^-1 M D_c^-1            (exponentiated pointwise mutual
                                        information, up to the grand total)

Scaling preserves the sparsity pattern, so scaled matrices stay sparse.
The diagonal scalers are retained so factor matrices can be mapped back to
count scale afterwards (``post_scale``).
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DataError

__all__ = [
    "ScalingKind",
    "ALL_SCALINGS",
    "DocTermMatrix",
    "ScaledMatrix",
    "BipartiteMatrix",
    "NlBoundReport",
    "marginals",
    "apply_scaling",
    "post_scale",
    "bipartite_block",
    "nl_singular_bound_check",
    "save_triplets",
    "load_triplets",
]


class ScalingKind(Enum):
    COUNTS = "counts"
    ROW = "rs"
    COLUMN = "cs"
    NORMALIZED_LAPLACIAN = "nl"
    PWMI = "pwmi"

    @classmethod
    def parse(cls, name: str) -> "ScalingKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown scaling {name!r} (expected one of: {valid})") from None


ALL_SCALINGS: tuple[ScalingKind, ...] = tuple(ScalingKind)


def _to_csr(matrix) -> sp.csr_matrix:
    if isinstance(matrix, DocTermMatrix):
        return matrix.counts
    if sp.issparse(matrix):
        out = matrix.tocsr().astype(np.float64)
    else:
        out = sp.csr_matrix(np.asarray(matrix, dtype=np.float64))
    out.sort_indices()
    return out


@dataclass(frozen=True)
class DocTermMatrix:
    """Sparse non-negative counts, documents in rows and terms in columns.

    Structural zeros are unstored, and every row and column is required to
    contain at least one positive entry; downstream scalings divide by the
    marginals.  ``total_count`` is the grand sum of all entries.
    """

    counts: sp.csr_matrix

    @property
    def n_docs(self) -> int:
        return self.counts.shape[0]

    @property
    def n_terms(self) -> int:
        return self.counts.shape[1]

    @property
    def total_count(self) -> float:
        return float(self.counts.sum())

    @property
    def nnz(self) -> int:
        return int(self.counts.nnz)

    def toarray(self) -> np.ndarray:
        return self.counts.toarray()

    @classmethod
    def from_array(cls, matrix) -> "DocTermMatrix":
        """Validate and wrap a dense array or any scipy sparse matrix."""
        m = _to_csr(matrix)
        if m.shape[0] == 0 or m.shape[1] == 0:
            raise DataError("matrix must have at least one row and one column")
        if not np.all(np.isfinite(m.data)):
            raise DataError("matrix entries must be finite")
        if np.any(m.data < 0):
            raise DataError("matrix entries must be non-negative")
        m.eliminate_zeros()
        row_sums = np.asarray(m.sum(axis=1)).ravel()
        col_sums = np.asarray(m.sum(axis=0)).ravel()
        for i in np.nonzero(row_sums == 0)[0][:1]:
            raise DataError(f"row {int(i)} has no positive entries")
        for j in np.nonzero(col_sums == 0)[0][:1]:
            raise DataError(f"column {int(j)} has no positive entries")
        return cls(counts=m)

    def save(self, path: str | Path) -> None:
        save_triplets(self.counts, path)

    @classmethod
    def load(cls, path: str | Path) -> "DocTermMatrix":
        return cls.from_array(load_triplets(path))


def marginals(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Row and column sums of a counts matrix, each strictly positive."""
    m = _to_csr(matrix)
    rows = np.asarray(m.sum(axis=1)).ravel()
    cols = np.asarray(m.sum(axis=0)).ravel()
    zero_rows = np.nonzero(rows <= 0)[0]
    if zero_rows.size:
        raise DataError(f"row {int(zero_rows[0])} has zero marginal")
    zero_cols = np.nonzero(cols <= 0)[0]
    if zero_cols.size:
        raise DataError(f"column {int(zero_cols[0])} has zero marginal")
    return rows, cols


@dataclass(frozen=True)
class ScaledMatrix:
    """A counts matrix after one scaling, keeping the original marginals."""

    matrix: sp.csr_matrix
    kind: ScalingKind
    row_marginals: np.ndarray
    col_marginals: np.ndarray
    total_count: float
    pwmi_times_n: bool = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def apply_scaling(m: DocTermMatrix, kind: ScalingKind, *, pwmi_times_n: bool = False) -> ScaledMatrix:
    """Scale ``m`` by the diagonal marginals according to ``kind``.

    ``pwmi_times_n`` multiplies the pwmi matrix by the grand total count,
    turning entries into joint-over-product-of-marginals probability ratios;
    the default omits that constant factor.
    """
    rows, cols = marginals(m)
    counts = m.counts
    if kind is ScalingKind.COUNTS:
        scaled = counts.copy()
    elif kind is ScalingKind.ROW:
        scaled = sp.diags(1.0 / rows) @ counts
    elif kind is ScalingKind.COLUMN:
        scaled = counts @ sp.diags(1.0 / cols)
    elif kind is ScalingKind.NORMALIZED_LAPLACIAN:
        scaled = sp.diags(1.0 / np.sqrt(rows)) @ counts @ sp.diags(1.0 / np.sqrt(cols))
    elif kind is ScalingKind.PWMI:
        scaled = sp.diags(1.0 / rows) @ counts @ sp.diags(1.0 / cols)
        if pwmi_times_n:
            scaled = scaled * m.total_count
    else:  # pragma: no cover - closed enum
        raise ValueError(f"unhandled scaling kind {kind}")
    scaled = scaled.tocsr()
    scaled.sort_indices()
    return ScaledMatrix(
        matrix=scaled,
        kind=kind,
        row_marginals=rows,
        col_marginals=cols,
        total_count=m.total_count,
        pwmi_times_n=pwmi_times_n and kind is ScalingKind.PWMI,
    )


def _post_scalers(s: ScaledMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Per-row and per-column multipliers inverting the pre-scaling of ``s``."""
    n, m = s.shape
    ones_r, ones_c = np.ones(n), np.ones(m)
    if s.kind is ScalingKind.COUNTS:
        return ones_r, ones_c
    if s.kind is ScalingKind.ROW:
        return s.row_marginals, ones_c
    if s.kind is ScalingKind.COLUMN:
        return ones_r, s.col_marginals
    if s.kind is ScalingKind.NORMALIZED_LAPLACIAN:
        return np.sqrt(s.row_marginals), np.sqrt(s.col_marginals)
    # pwmi; with the grand-total variant the 1/n is split evenly between the
    # factors so that W @ H still reconstructs the original counts
    if s.pwmi_times_n:
        root_n = np.sqrt(s.total_count)
        return s.row_marginals / root_n, s.col_marginals / root_n
    return s.row_marginals, s.col_marginals


def post_scale(w_tilde: np.ndarray, h_tilde: np.ndarray, s: ScaledMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Map factors of the scaled matrix back to count scale.

    Multiplies the rows of ``w_tilde`` and the columns of ``h_tilde`` by the
    inverse of the diagonal pre-scalers, so that when ``w_tilde @ h_tilde``
    equals the scaled matrix the returned product equals the raw counts.
    """
    w_tilde = np.asarray(w_tilde, dtype=np.float64)
    h_tilde = np.asarray(h_tilde, dtype=np.float64)
    n, m = s.shape
    if w_tilde.ndim != 2 or w_tilde.shape[0] != n:
        raise ValueError(f"W has shape {w_tilde.shape}, expected ({n}, k)")
    if h_tilde.ndim != 2 or h_tilde.shape[1] != m:
        raise ValueError(f"H has shape {h_tilde.shape}, expected (k, {m})")
    if w_tilde.shape[1] != h_tilde.shape[0]:
        raise ValueError("inner dimensions of W and H differ")
    row_scale, col_scale = _post_scalers(s)
    return row_scale[:, None] * w_tilde, h_tilde * col_scale[None, :]


@dataclass(frozen=True)
class BipartiteMatrix:
    """Symmetric block matrix [[0, M], [M', 0]] over docs plus terms."""

    adjacency: sp.csr_matrix
    n_docs: int
    n_terms: int

    @property
    def size(self) -> int:
        return self.n_docs + self.n_terms


def bipartite_block(m: DocTermMatrix) -> BipartiteMatrix:
    """Adjacency matrix of the weighted bipartite doc-term graph."""
    a = sp.bmat([[None, m.counts], [m.counts.T, None]], format="csr")
    a.sort_indices()
    return BipartiteMatrix(adjacency=a, n_docs=m.n_docs, n_terms=m.n_terms)


@dataclass(frozen=True)
class NlBoundReport:
    sigma_max: float
    sigma_min: float
    within_unit: bool


def nl_singular_bound_check(s: ScaledMatrix, *, seed: int = 0) -> NlBoundReport:
    """Check that the top singular value of an nl-scaled matrix is at most 1.

    ``sigma_min`` is the smallest of the computed leading singular values
    (the full spectrum when min(n, m) <= 64).
    """
    if s.kind is not ScalingKind.NORMALIZED_LAPLACIAN:
        raise ValueError("singular bound check applies to the nl scaling only")
    from .rank import singular_values

    count = min(64, min(s.shape))
    spectrum = singular_values(s.matrix, count, seed=seed)
    sigma_max = float(spectrum.values[0])
    sigma_min = float(spectrum.values[-1])
    return NlBoundReport(
        sigma_max=sigma_max,
        sigma_min=sigma_min,
        within_unit=sigma_max <= 1.0 + 1e-8,
    )


def save_triplets(matrix, path: str | Path) -> None:
    """Write a sparse matrix as 'rows cols nnz' plus one 'i j value' per line."""
    m = _to_csr(matrix).tocoo()
    buf = io.StringIO()
    buf.write(f"{m.shape[0]} {m.shape[1]} {m.nnz}\n")
    order = np.lexsort((m.col, m.row))
    for i, j, v in zip(m.row[order], m.col[order], m.data[order]):
        buf.write(f"{i} {j} {float(v)!r}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_triplets(path: str | Path) -> sp.csr_matrix:
    """Read a matrix written by :func:`save_triplets`."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise DataError(f"{path}: empty triplet file")
    try:
        n_rows, n_cols, nnz = (int(p) for p in lines[0].split())
    except ValueError:
        raise DataError(f"{path}: malformed header {lines[0]!r}") from None
    if len(lines) - 1 != nnz:
        raise DataError(f"{path}: header promises {nnz} entries, found {len(lines) - 1}")
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    for idx, line in enumerate(lines[1:]):
        parts = line.split()
        try:
            rows[idx], cols[idx], vals[idx] = int(parts[0]), int(parts[1]), float(parts[2])
        except (IndexError, ValueError):
            raise DataError(f"{path}: malformed triplet on line {idx + 2}: {line!r}") from None
    return sp.csr_matrix((vals, (rows, cols)), shape=(n_rows, n_cols))
