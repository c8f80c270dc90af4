"""Topic assignment from factor weights and pair-counting partition scores."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Partition",
    "ContingencyTable",
    "AriReport",
    "assign_clusters",
    "contingency_table",
    "rand_index",
    "adjusted_rand_index",
    "score_partitions",
]


@dataclass(frozen=True)
class Partition:
    """Cluster label per document id; labels need not be contiguous."""

    assignments: dict[str, int]

    @property
    def k(self) -> int:
        return len(set(self.assignments.values()))

    def __len__(self) -> int:
        return len(self.assignments)


def assign_clusters(W: np.ndarray, doc_ids: list[str]) -> Partition:
    """Assign each document to the topic with the largest weight in its row.

    Ties and all-zero rows resolve to the smallest topic index; all-zero rows
    additionally emit a warning.  Rescaling rows by positive constants leaves
    the result unchanged.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != len(doc_ids):
        raise ValueError(f"W has shape {W.shape}, expected ({len(doc_ids)}, k)")
    zero_rows = np.nonzero(~(W > 0).any(axis=1))[0]
    if zero_rows.size:
        warnings.warn(
            f"{zero_rows.size} document(s) have all-zero weights; assigned topic 0",
            stacklevel=2,
        )
    labels = W.argmax(axis=1)
    return Partition(assignments={doc: int(lab) for doc, lab in zip(doc_ids, labels)})


@dataclass(frozen=True)
class ContingencyTable:
    """Cross-tabulated cluster co-membership counts of two partitions."""

    counts: np.ndarray
    row_marginals: np.ndarray
    col_marginals: np.ndarray
    total: int


def contingency_table(p1: Partition, p2: Partition) -> ContingencyTable:
    if set(p1.assignments) != set(p2.assignments):
        raise ValueError("partitions cover different document sets")
    labels1 = sorted(set(p1.assignments.values()))
    labels2 = sorted(set(p2.assignments.values()))
    idx1 = {lab: i for i, lab in enumerate(labels1)}
    idx2 = {lab: i for i, lab in enumerate(labels2)}
    counts = np.zeros((len(labels1), len(labels2)), dtype=np.int64)
    for doc, lab in p1.assignments.items():
        counts[idx1[lab], idx2[p2.assignments[doc]]] += 1
    return ContingencyTable(
        counts=counts,
        row_marginals=counts.sum(axis=1),
        col_marginals=counts.sum(axis=0),
        total=len(p1),
    )


def _pair_sums(table: ContingencyTable) -> tuple[int, int, int, int]:
    together_both = sum(math.comb(int(v), 2) for v in table.counts.flat)
    together_1 = sum(math.comb(int(v), 2) for v in table.row_marginals)
    together_2 = sum(math.comb(int(v), 2) for v in table.col_marginals)
    all_pairs = math.comb(table.total, 2)
    return together_both, together_1, together_2, all_pairs


def rand_index(p1: Partition, p2: Partition) -> float:
    """Fraction of document pairs on which the two partitions agree."""
    table = contingency_table(p1, p2)
    s_both, s1, s2, total = _pair_sums(table)
    if total == 0:
        return 1.0
    agreements = total + 2 * s_both - s1 - s2
    return agreements / total


def adjusted_rand_index(p1: Partition, p2: Partition) -> float:
    """Rand agreement corrected for chance under the permutation model.

    Bounded above by 1; 0 in expectation for random partitions.  When the
    correction denominator vanishes (both partitions trivial) the value is
    1.0 for identical partitions and 0.0 otherwise.
    """
    table = contingency_table(p1, p2)
    s_both, s1, s2, total = _pair_sums(table)
    if total == 0:
        return 1.0
    expected = s1 * s2 / total
    denom = 0.5 * (s1 + s2) - expected
    if denom == 0.0:
        # partitions are identical iff the table is one nonzero per row/column
        nonzero = table.counts > 0
        same = bool(np.all(nonzero.sum(axis=0) == 1) and np.all(nonzero.sum(axis=1) == 1))
        return 1.0 if same else 0.0
    return (s_both - expected) / denom


@dataclass(frozen=True)
class AriReport:
    """Partition agreement summary against a reference partition."""

    ari: float
    rand: float
    k_pred: int
    k_true: int

    def to_dict(self) -> dict:
        return {"ari": self.ari, "rand": self.rand, "k_pred": self.k_pred, "k_true": self.k_true}


def score_partitions(predicted: Partition, truth: Partition) -> AriReport:
    return AriReport(
        ari=adjusted_rand_index(predicted, truth),
        rand=rand_index(predicted, truth),
        k_pred=predicted.k,
        k_true=truth.k,
    )
