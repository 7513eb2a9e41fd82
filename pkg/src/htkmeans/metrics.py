"""Objective values, partition agreement and center summaries.

Partitions are 0-based integer label arrays throughout the library; files
written by the CLI use 1-based labels.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DataError


def _as_matrix(data) -> np.ndarray:
    return np.asarray(getattr(data, "values", data), dtype=float)


def wcss(data, centers, labels) -> float:
    """Within-cluster sum of squares divided by n, for the given assignment.

    Uses the supplied centers as they are (no re-averaging), so a column of
    zero centers contributes its full mean square.
    """
    x = _as_matrix(data)
    centers = np.asarray(centers, dtype=float)
    labels = np.asarray(labels)
    if centers.ndim != 2 or centers.shape[1] != x.shape[1]:
        raise DataError(f"centers of shape {centers.shape} do not match {x.shape[1]} variables")
    if labels.shape != (x.shape[0],):
        raise DataError(f"{labels.size} labels for {x.shape[0]} observations")
    if labels.size and (labels.min() < 0 or labels.max() >= centers.shape[0]):
        raise DataError("labels out of range for the center matrix")
    resid = x - centers[labels]
    return float(np.einsum("ij,ij->", resid, resid) / x.shape[0])


def penalized_objective(data, centers, labels, spec) -> float:
    """``wcss + lambda * pen(centers)`` for a :class:`~htkmeans.penalties.PenaltySpec`.

    Adaptive specs weight each column by the inverse norm of the cluster
    means of ``labels``.
    """
    from .penalties import penalty_term

    base = wcss(data, centers, labels)
    if spec.lam == 0:
        return base
    return base + penalty_term(spec, data, centers, labels)


def center_column_norms(centers) -> np.ndarray:
    """Euclidean norm of every center column."""
    centers = np.asarray(centers, dtype=float)
    return np.sqrt((centers**2).sum(axis=0))


def contingency(a, b) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DataError(f"partitions of different length: {a.size} vs {b.size}")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def _pairs(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    return float((counts * (counts - 1) / 2).sum())


def adjusted_rand_index(a, b) -> float:
    """Hubert-Arabie adjusted Rand index between two labelings."""
    a = np.asarray(a)
    if a.size < 2:
        raise DataError("adjusted Rand index needs at least two observations")
    table = contingency(a, b)
    n = a.size
    both = _pairs(table)
    rows = _pairs(table.sum(axis=1))
    cols = _pairs(table.sum(axis=0))
    total = n * (n - 1) / 2
    expected = rows * cols / total
    maximum = (rows + cols) / 2
    if maximum == expected:
        # both partitions trivial (all singletons or one block): identical up to relabeling
        return 1.0
    return float((both - expected) / (maximum - expected))
