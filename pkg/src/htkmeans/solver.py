"""Regularized Lloyd iterations, sparse multi-start initialization and lambda paths."""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ConfigError, DataError, NumericalError
from .metrics import penalized_objective, wcss
from .penalties import Family, PenaltySpec, cluster_means, update_centers

logger = logging.getLogger(__name__)

FRACTIONS_PERCENT = (1, 2, 5, 10, 25, 50, 100)
MONOTONE_TOL = 1e-9


@dataclass(frozen=True)
class FitResult:
    centers: np.ndarray
    labels: np.ndarray
    objective: float
    wcss: float
    active_set: tuple[int, ...]
    iterations: int
    converged: bool
    lam: float
    family: Family
    trace: tuple[float, ...] = field(default=(), repr=False)

    @property
    def K(self) -> int:
        return self.centers.shape[0]

    def to_dict(self, column_names: Sequence[str] | None = None) -> dict:
        out = {
            "lambda": float(self.lam),
            "family": self.family.value,
            "objective": float(self.objective),
            "wcss": float(self.wcss),
            "active_set": [int(j) for j in self.active_set],
            "centers": [[float(v) for v in row] for row in self.centers],
            "assignment": [int(v) + 1 for v in self.labels],
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }
        if column_names is not None:
            out["active_names"] = [column_names[j] for j in self.active_set]
        return out


@dataclass(frozen=True)
class PathResult:
    grid: tuple[float, ...]
    fits: tuple[FitResult, ...]
    family: Family
    K: int
    fingerprint: str
    column_names: tuple[str, ...] = ()

    def active_sets(self) -> list[tuple[int, ...]]:
        return [f.active_set for f in self.fits]

    def to_dict(self) -> dict:
        names = self.column_names or None
        return {
            "family": self.family.value,
            "K": self.K,
            "fingerprint": self.fingerprint,
            "column_names": list(self.column_names),
            "grid": [float(v) for v in self.grid],
            "fits": [f.to_dict(names) for f in self.fits],
        }


def _values(data) -> np.ndarray:
    return np.asarray(getattr(data, "values", data), dtype=float)


def fingerprint(data) -> str:
    x = np.ascontiguousarray(_values(data))
    digest = hashlib.sha256()
    digest.update(repr(x.shape).encode())
    digest.update(x.tobytes())
    return digest.hexdigest()


def default_grid(lo: float = -2.0, hi: float = 2.0, length: int = 40, zero: bool = True) -> list[float]:
    """Descending grid ``10 ** (lo + (hi - lo) * i / length)``, i = length-1..0, plus 0."""
    if length < 1:
        raise ConfigError("grid length must be at least 1")
    grid = [10.0 ** (lo + (hi - lo) * i / length) for i in range(length - 1, -1, -1)]
    if zero:
        grid.append(0.0)
    return grid


def assign_points(data, centers) -> np.ndarray:
    """Nearest-center labels; ties go to the lowest cluster index."""
    x = _values(data)
    centers = np.asarray(centers, dtype=float)
    if not np.all(np.isfinite(centers)):
        raise NumericalError("non-finite cluster center")
    # columns on which all centers agree shift every distance equally
    differs = np.any(centers != centers[:1], axis=0)
    if not differs.any():
        return np.zeros(x.shape[0], dtype=np.intp)
    xs = x[:, differs]
    cs = centers[:, differs]
    dist = (cs**2).sum(axis=1)[None, :] - 2.0 * xs @ cs.T
    return np.argmin(dist, axis=1)


def repair_empty(data, centers, labels, K: int) -> np.ndarray:
    """Move the points farthest from their centers into empty clusters, one each."""
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=K)
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return labels
    x = _values(data)
    if x.shape[0] < K:
        raise DataError(f"cannot populate {K} clusters with {x.shape[0]} observations")
    resid = x - np.asarray(centers)[labels]
    order = np.argsort(-np.einsum("ij,ij->i", resid, resid), kind="stable")
    labels = labels.copy()
    pos = 0
    for k in empty:
        while counts[labels[order[pos]]] <= 1:
            pos += 1
        i = order[pos]
        counts[labels[i]] -= 1
        labels[i] = k
        counts[k] = 1
        pos += 1
    return labels


def _provisional_centers(x, labels, K):
    counts = np.bincount(labels, minlength=K)
    sums = np.zeros((K, x.shape[1]))
    np.add.at(sums, labels, x)
    return sums / np.maximum(counts, 1)[:, None]


def _update_allowing_empty(spec, x, labels, K):
    # an empty cluster's row only carries penalty, so zero is its exact minimizer
    present = np.flatnonzero(np.bincount(labels, minlength=K))
    if present.size == K:
        return update_centers(spec, x, labels, K)
    relabel = np.full(K, -1)
    relabel[present] = np.arange(present.size)
    centers = np.zeros((K, x.shape[1]))
    centers[present] = update_centers(spec, x, relabel[labels], present.size)
    return centers


def lloyd_regularized(data, spec: PenaltySpec, init_labels, K: int, max_iter: int = 100) -> FitResult:
    """Alternate exact center updates and nearest-center assignment until the partition is stable.

    Empty clusters are refilled with the points farthest from their
    centers. With shrinkage penalties a refill can raise the objective;
    it is then declined and the empty cluster keeps a zero center, which
    keeps the objective non-increasing.
    """
    x = _values(data)
    labels = np.asarray(init_labels, dtype=np.intp)
    if labels.shape != (x.shape[0],) or labels.min() < 0 or labels.max() >= K:
        raise ConfigError("initial partition does not match the data and K")
    labels = repair_empty(x, _provisional_centers(x, labels, K), labels, K)

    trace = []
    converged = False
    iterations = 0
    centers = _update_allowing_empty(spec, x, labels, K)
    for iterations in range(1, max_iter + 1):
        obj = penalized_objective(x, centers, labels, spec)
        if trace and not spec.adaptive and obj > trace[-1] + MONOTONE_TOL * max(1.0, abs(trace[-1])):
            logger.warning("objective increased from %.17g to %.17g", trace[-1], obj)
        trace.append(obj)
        new = assign_points(x, centers)
        new_centers = None
        if np.bincount(new, minlength=K).min() == 0:
            repaired = repair_empty(x, centers, new, K)
            candidate = update_centers(spec, x, repaired, K)
            if spec.adaptive or penalized_objective(x, candidate, repaired, spec) <= obj + MONOTONE_TOL * max(1.0, abs(obj)):
                new, new_centers = repaired, candidate
        if np.array_equal(new, labels):
            converged = True
            break
        if iterations == max_iter:
            break
        labels = new
        centers = new_centers if new_centers is not None else _update_allowing_empty(spec, x, labels, K)
    if not converged:
        logger.info("Lloyd iterations stopped at max_iter=%d without convergence", max_iter)

    active = tuple(int(j) for j in np.flatnonzero(np.any(centers != 0, axis=0)))
    return FitResult(
        centers=centers,
        labels=labels,
        objective=trace[-1],
        wcss=wcss(x, centers, labels),
        active_set=active,
        iterations=iterations,
        converged=converged,
        lam=spec.lam,
        family=spec.family,
        trace=tuple(trace),
    )


def canonical_labels(labels) -> np.ndarray:
    """Relabel clusters in order of first appearance."""
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))
    return rank[inverse]


def random_partitions(data, K: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Partitions induced by K distinct observations drawn as centers."""
    x = _values(data)
    n = x.shape[0]
    out = []
    for _ in range(count):
        seeds = x[rng.choice(n, size=K, replace=False)]
        labels = assign_points(x, seeds)
        out.append(repair_empty(x, seeds, labels, K))
    return out


def kmeans(data, K: int, nstart: int = 10, seed=0, starts: Sequence[np.ndarray] = (), max_iter: int = 100) -> FitResult:
    """Classical K-means: the lambda = 0 engine from ``nstart`` random starts plus ``starts``."""
    x = _values(data)
    if K > x.shape[0]:
        raise ConfigError(f"K={K} exceeds the number of observations {x.shape[0]}")
    rng = np.random.default_rng(seed)
    spec = PenaltySpec(Family.HT, 0.0)
    best = None
    for init in list(starts) + random_partitions(x, K, nstart, rng):
        result = lloyd_regularized(x, spec, init, K, max_iter)
        if best is None or result.objective < best.objective:
            best = result
    return best


def subset_sizes(p: int) -> list[int]:
    """Distinct top-variable counts: ceil(f * p), at least 1, for each start fraction."""
    return sorted({max(1, -(-pct * p // 100)) for pct in FRACTIONS_PERCENT})


def sparse_init(data, K: int, nstart: int = 10, seed=0, max_iter: int = 100) -> list[np.ndarray]:
    """Starting partitions from classical K-means on the variables with the largest center norms.

    A full classical fit ranks variables by their center-column norm; K-means
    is then rerun on the top 1, 2, 5, 10, 25, 50 and 100 percent of them.
    Duplicate partitions are dropped.
    """
    x = _values(data)
    n, p = x.shape
    if K > n:
        raise ConfigError(f"K={K} exceeds the number of observations {n}")
    if K == 1:
        return [np.zeros(n, dtype=np.intp)]
    base_seed = np.random.SeedSequence(seed).spawn(1)[0]
    streams = base_seed.spawn(1 + len(FRACTIONS_PERCENT))
    full = kmeans(x, K, nstart, np.random.default_rng(streams[0]), max_iter=max_iter)
    norms = np.sqrt((full.centers**2).sum(axis=0))
    order = np.argsort(-norms, kind="stable")
    out, seen = [], set()
    for size, stream in zip(subset_sizes(p), streams[1:]):
        cols = np.sort(order[:size])
        if size == p:
            labels = full.labels
        else:
            labels = kmeans(x[:, cols], K, nstart, np.random.default_rng(stream), max_iter=max_iter).labels
        key = canonical_labels(labels).tobytes()
        if key not in seen:
            seen.add(key)
            out.append(np.asarray(labels, dtype=np.intp))
    return out


def initial_partitions(data, K: int, nstart: int = 10, seed=0, max_iter: int = 100) -> list[np.ndarray]:
    """Sparse starts followed by ``nstart`` random starts, all derived from ``seed``."""
    x = _values(data)
    starts = sparse_init(x, K, nstart, seed, max_iter)
    if K > 1:
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[1])
        starts += random_partitions(x, K, nstart, rng)
    return starts


def fit(
    data,
    K: int,
    spec: PenaltySpec,
    nstart: int = 10,
    seed=0,
    starts: Sequence[np.ndarray] | None = None,
    max_iter: int = 100,
) -> FitResult:
    """Best regularized fit over all starting partitions (lowest penalized objective).

    ``starts`` can be passed to reuse the starting partitions across several
    penalties on the same data; they do not depend on the penalty.
    """
    x = _values(data)
    if K < 1 or K > x.shape[0]:
        raise ConfigError(f"K must be in [1, n]; got K={K} with n={x.shape[0]}")
    if starts is None:
        starts = initial_partitions(x, K, nstart, seed, max_iter)
    best = None
    for init in starts:
        result = lloyd_regularized(x, spec, init, K, max_iter)
        if best is None or result.objective < best.objective:
            best = result
    return best


def lambda_path(
    data,
    K: int,
    family=Family.HT,
    grid: Sequence[float] | None = None,
    nstart: int = 10,
    seed=0,
    adaptive: bool = False,
    threads: int = 1,
    max_iter: int = 100,
    starts: Sequence[np.ndarray] | None = None,
) -> PathResult:
    """Independent fits over a descending lambda grid, all from the same starting partitions."""
    x = _values(data)
    grid = default_grid() if grid is None else [float(v) for v in grid]
    if not grid:
        raise ConfigError("lambda grid is empty")
    if any(v < 0 for v in grid):
        raise ConfigError("lambda grid must be non-negative")
    grid = sorted(grid, reverse=True)
    base = PenaltySpec(family, 0.0, adaptive)
    if starts is None:
        starts = initial_partitions(x, K, nstart, seed, max_iter)

    def run(lam):
        return fit(x, K, base.with_lambda(lam), starts=starts, max_iter=max_iter)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fits = list(pool.map(run, grid))
    else:
        fits = [run(lam) for lam in grid]
    return PathResult(
        grid=tuple(grid),
        fits=tuple(fits),
        family=base.family,
        K=K,
        fingerprint=fingerprint(x),
        column_names=tuple(getattr(data, "column_names", ())),
    )


__all__ = [
    "FitResult",
    "PathResult",
    "assign_points",
    "cluster_means",
    "default_grid",
    "fit",
    "initial_partitions",
    "kmeans",
    "lambda_path",
    "lloyd_regularized",
    "repair_empty",
    "sparse_init",
]
