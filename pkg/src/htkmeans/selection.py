"""Choosing lambda: information criteria, bootstrap instability and the permutation gap method."""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ConfigError, NumericalError
from .metrics import contingency, wcss
from .penalties import Family, PenaltySpec
from .solver import (
    FitResult,
    PathResult,
    assign_points,
    fit,
    initial_partitions,
    kmeans,
    lambda_path,
    lloyd_regularized,
)

logger = logging.getLogger(__name__)

SCHEMES = ("stab1", "stab2", "stab3")


class Method(str, enum.Enum):
    AIC = "aic"
    BIC = "bic"
    GAP1 = "gap1"
    GAP2 = "gap2"
    STAB1 = "stab1"
    STAB2 = "stab2"
    STAB3 = "stab3"


@dataclass(frozen=True)
class SelectionReport:
    method: Method
    grid: tuple[float, ...]
    scores: tuple[float | None, ...]
    chosen_lambda: float
    chosen_fit: FitResult
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def model_size(self) -> int:
        return len(self.chosen_fit.active_set)

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "grid": [float(v) for v in self.grid],
            "scores": [None if s is None else float(s) for s in self.scores],
            "diagnostics": self.diagnostics,
            "chosen_lambda": float(self.chosen_lambda),
            "chosen_active_set": [int(j) for j in self.chosen_fit.active_set],
            "chosen_assignment": [int(v) + 1 for v in self.chosen_fit.labels],
        }


def _values(data) -> np.ndarray:
    return np.asarray(getattr(data, "values", data), dtype=float)


def _descending(path: PathResult) -> list[int]:
    # stable: equal lambdas keep path order
    return sorted(range(len(path.grid)), key=lambda i: -path.grid[i])


# --- information criteria -------------------------------------------------


def information_criterion(path: PathResult, data, method="aic", rescale: bool = True) -> SelectionReport:
    """AIC or BIC over a path: ``n * wcss + c * K * q`` with q the active-set size.

    ``wcss`` is measured on all variables with each fit's own centers, so
    inactive variables contribute their full mean square. ``c`` is 2 for
    AIC and ln(n) for BIC. ``rescale=False`` keeps the 1/n-normalized WCSS.
    Ties go to the larger lambda.
    """
    method = Method(str(getattr(method, "value", method)).lower())
    if method not in (Method.AIC, Method.BIC):
        raise ConfigError(f"{method.value} is not an information criterion")
    if not path.fits:
        raise ConfigError("empty path")
    x = _values(data)
    n = x.shape[0]
    coef = 2.0 if method is Method.AIC else math.log(n)
    scale = n if rescale else 1.0
    scores, fit_terms = [], []
    for f in path.fits:
        term = scale * wcss(x, f.centers, f.labels)
        fit_terms.append(term)
        scores.append(term + coef * path.K * len(f.active_set))
    best = min(_descending(path), key=lambda i: scores[i])
    return SelectionReport(
        method=method,
        grid=path.grid,
        scores=tuple(scores),
        chosen_lambda=path.grid[best],
        chosen_fit=path.fits[best],
        diagnostics={
            "wcss_term": fit_terms,
            "model_size": [len(f.active_set) for f in path.fits],
            "coefficient": coef,
        },
    )


def aic(path: PathResult, data, rescale: bool = True) -> SelectionReport:
    return information_criterion(path, data, Method.AIC, rescale)


def bic(path: PathResult, data, rescale: bool = True) -> SelectionReport:
    return information_criterion(path, data, Method.BIC, rescale)


# --- stability ------------------------------------------------------------


def clustering_distance(a, b) -> float:
    """Fraction of observation pairs that exactly one of the two labelings puts together."""
    a = np.asarray(a)
    n = a.size
    if n < 2:
        raise ConfigError("clustering distance needs at least two observations")
    table = contingency(a, b)

    def pairs(c):
        c = c.astype(float)
        return float((c * (c - 1) / 2).sum())

    together_a = pairs(table.sum(axis=1))
    together_b = pairs(table.sum(axis=0))
    together_both = pairs(table)
    return (together_a + together_b - 2 * together_both) / (n * (n - 1) / 2)


@dataclass(frozen=True)
class StabilityEstimate:
    scheme: str
    grid: tuple[float, ...]
    instability: tuple[float, ...]
    qualified: tuple[bool, ...]
    replications: int


def _replication(x, K, base, grid, b, seed, nstart, max_iter, schemes):
    n = x.shape[0]
    rng = np.random.default_rng([seed, 101, b])
    boot = [rng.integers(0, n, size=n) for _ in range(3)]
    validation = {
        "stab1": np.arange(n),
        "stab2": np.intersect1d(boot[0], boot[1]),
        "stab3": boot[2],
    }
    centers = []
    for j in range(2):
        xb = x[boot[j]]
        starts = initial_partitions(xb, K, nstart, [seed, 102, b, j], max_iter)
        centers.append([fit(xb, K, base.with_lambda(lam), starts=starts, max_iter=max_iter).centers for lam in grid])
    out = {}
    for scheme in schemes:
        idx = validation[scheme]
        if idx.size < 2:
            out[scheme] = None
            continue
        xv = x[idx]
        dist, degenerate = [], []
        for c1, c2 in zip(*centers):
            l1 = assign_points(xv, c1)
            l2 = assign_points(xv, c2)
            degenerate.append(np.unique(l1).size < 2 or np.unique(l2).size < 2)
            dist.append(clustering_distance(l1, l2))
        out[scheme] = (dist, degenerate)
    return out


def instability(
    data,
    K: int,
    family,
    lam: float,
    scheme: str = "stab1",
    B: int = 20,
    seed: int = 0,
    nstart: int = 10,
    adaptive: bool = False,
    max_iter: int = 100,
) -> float:
    """Mean pair-disagreement between fits on two bootstrap samples, over B replications."""
    est = stability_path(data, K, family, [lam], (scheme,), B, seed, nstart, adaptive, max_iter=max_iter)
    return est[scheme].instability[0]


def stability_path(
    data,
    K: int,
    family,
    grid: Sequence[float],
    schemes: Sequence[str] = SCHEMES,
    B: int = 20,
    seed: int = 0,
    nstart: int = 10,
    adaptive: bool = False,
    threads: int = 1,
    max_iter: int = 100,
) -> dict[str, StabilityEstimate]:
    """Bootstrap instability for every lambda on a grid and every requested scheme.

    Each replication draws three bootstrap index sets. The first two are
    fitted at every lambda (from shared starting partitions); the validation
    set is the original data (stab1), the intersection of the two
    bootstraps' distinct indices (stab2) or the third bootstrap (stab3).
    Validation points are assigned to each fit's nearest center. A lambda is
    disqualified when any replication predicts fewer than two clusters.
    """
    if B < 1:
        raise ConfigError("B must be at least 1")
    for scheme in schemes:
        if scheme not in SCHEMES:
            raise ConfigError(f"unknown stability scheme {scheme!r}")
    grid = sorted((float(v) for v in grid), reverse=True)
    if not grid:
        raise ConfigError("lambda grid is empty")
    x = _values(data)
    base = PenaltySpec(family, 0.0, adaptive)

    def run(b):
        return _replication(x, K, base, grid, b, seed, nstart, max_iter, schemes)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reps = list(pool.map(run, range(B)))
    else:
        reps = [run(b) for b in range(B)]

    out = {}
    for scheme in schemes:
        usable = [r[scheme] for r in reps if r[scheme] is not None]
        skipped = B - len(usable)
        if skipped:
            logger.warning("%s: skipped %d replications with fewer than 2 validation points", scheme, skipped)
        if not usable:
            raise NumericalError(f"{scheme}: every replication had fewer than 2 validation points")
        dist = np.array([u[0] for u in usable])
        degenerate = np.array([u[1] for u in usable])
        out[scheme] = StabilityEstimate(
            scheme=scheme,
            grid=tuple(grid),
            instability=tuple(float(v) for v in dist.mean(axis=0)),
            qualified=tuple(bool(v) for v in ~degenerate.any(axis=0)),
            replications=len(usable),
        )
    return out


def _report_from_stability(est: StabilityEstimate, data, K, family, adaptive, path, seed, nstart, max_iter):
    candidates = [i for i, ok in enumerate(est.qualified) if ok]
    if not candidates:
        raise NumericalError(f"{est.scheme}: no lambda yields at least two predicted clusters")
    # grid is descending, so the first minimum is the largest lambda
    best = min(candidates, key=lambda i: est.instability[i])
    lam = est.grid[best]
    chosen = None
    if path is not None:
        for g, f in zip(path.grid, path.fits):
            if g == lam:
                chosen = f
                break
    if chosen is None:
        chosen = fit(data, K, PenaltySpec(family, lam, adaptive), nstart=nstart, seed=seed, max_iter=max_iter)
    return SelectionReport(
        method=Method(est.scheme),
        grid=est.grid,
        scores=tuple(v if ok else None for v, ok in zip(est.instability, est.qualified)),
        chosen_lambda=lam,
        chosen_fit=chosen,
        diagnostics={
            "instability": list(est.instability),
            "qualified": list(est.qualified),
            "replications": est.replications,
        },
    )


def stability_reports(
    data,
    K: int,
    family,
    grid: Sequence[float],
    schemes: Sequence[str] = SCHEMES,
    B: int = 20,
    seed: int = 0,
    nstart: int = 10,
    adaptive: bool = False,
    path: PathResult | None = None,
    threads: int = 1,
    max_iter: int = 100,
) -> dict[str, SelectionReport]:
    """One report per scheme; the bootstrap fits are shared between schemes."""
    est = stability_path(data, K, family, grid, schemes, B, seed, nstart, adaptive, threads, max_iter)
    return {
        s: _report_from_stability(e, data, K, family, adaptive, path, seed, nstart, max_iter)
        for s, e in est.items()
    }


def select_stability(
    data,
    K: int,
    family,
    grid: Sequence[float],
    scheme: str = "stab1",
    B: int = 20,
    seed: int = 0,
    nstart: int = 10,
    adaptive: bool = False,
    path: PathResult | None = None,
    threads: int = 1,
    max_iter: int = 100,
) -> SelectionReport:
    """Lambda with the smallest bootstrap instability; ties go to the larger lambda."""
    reports = stability_reports(data, K, family, grid, (scheme,), B, seed, nstart, adaptive, path, threads, max_iter)
    return reports[scheme]


# --- gap method -----------------------------------------------------------


@dataclass(frozen=True)
class GapStep:
    """One change of active set along a path.

    ``delta`` and ``reference`` are per entering variable: both are divided
    by the number of entering variables when more than one enters at once.
    ``reference_enter`` and ``reference_leave`` hold the two one-sided
    permutation increases, each divided by its own permuted-variable count.
    """

    lam: float
    previous: tuple[int, ...]
    current: tuple[int, ...]
    entering: tuple[int, ...]
    leaving: tuple[int, ...]
    delta: float
    reference: tuple[float, ...]
    reference_enter: tuple[float, ...]
    reference_leave: tuple[float, ...]
    m: float
    s: float
    D: float | None

    @property
    def nested(self) -> bool:
        return not self.leaving

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "previous": list(self.previous),
            "current": list(self.current),
            "entering": list(self.entering),
            "leaving": list(self.leaving),
            "delta": self.delta,
            "m": self.m,
            "s": self.s,
            "D": self.D,
        }


class _SubsetWCSS:
    """Best known K-means WCSS (divided by n) for each variable subset.

    Values only ever decrease: any partition found for a related subset is
    tried as an extra Lloyd start, which keeps nested subsets consistent
    (W(A) <= W(B) <= W(A) + |B \\ A| for A inside B on standardized data).
    """

    def __init__(self, x, K, nstart, seed, extra_starts, max_iter):
        self.x = x
        self.K = K
        self.nstart = nstart
        self.seed = seed
        self.extra = list(extra_starts)
        self.max_iter = max_iter
        self.best: dict[tuple[int, ...], FitResult] = {}
        self.version: dict[tuple[int, ...], int] = {}

    def fit(self, cols) -> FitResult | None:
        cols = tuple(cols)
        if not cols:
            return None
        if cols not in self.best:
            key = [self.seed, 201, len(self.best)]
            self.best[cols] = kmeans(self.x[:, cols], self.K, self.nstart, key, self.extra, self.max_iter)
            self.version[cols] = 0
        return self.best[cols]

    def value(self, cols) -> float:
        f = self.fit(cols)
        return 0.0 if f is None else f.wcss

    def labels(self, cols):
        f = self.fit(cols)
        return None if f is None else f.labels

    def improve(self, cols, labels) -> bool:
        cols = tuple(cols)
        if not cols or labels is None:
            return False
        current = self.fit(cols)
        trial = lloyd_regularized(self.x[:, cols], _CLASSICAL, labels, self.K, self.max_iter)
        if trial.wcss < current.wcss:
            self.best[cols] = trial
            self.version[cols] += 1
            return True
        return False


_CLASSICAL = PenaltySpec(Family.HT, 0.0)


class _Reference:
    """Permutation reference fits for one one-sided comparison (base plus permuted extra columns)."""

    def __init__(self, engine, base, extra, step_index, side, S):
        self.engine = engine
        self.base = tuple(base)
        self.extra = tuple(extra)
        self.step_index = step_index
        self.side = side
        self.S = S
        self.values = [None] * S
        self.labels = [None] * S
        self.seen_version = [-1] * S

    def _matrix(self, s):
        x = self.engine.x
        # permutations depend on (step, replicate, variable) only, so both sides share them
        cols = [x[:, self.base]]
        for j in self.extra:
            rng = np.random.default_rng([self.engine.seed, 301, self.step_index, s, j])
            cols.append(x[rng.permutation(x.shape[0]), j][:, None])
        return np.hstack(cols)

    def refresh(self) -> bool:
        """Bring every replicate up to date with the base subset; True if the base improved."""
        engine = self.engine
        improved = False
        for s in range(self.S):
            version = engine.version.get(self.base, 0)
            if self.seen_version[s] == version and self.values[s] is not None:
                continue
            xs = self._matrix(s)
            base_labels = engine.labels(self.base)
            if self.values[s] is None:
                starts = [] if base_labels is None else [base_labels]
                key = [engine.seed, 302, self.step_index, self.side, s]
                res = kmeans(xs, engine.K, engine.nstart, key, starts, engine.max_iter)
            else:
                res = lloyd_regularized(xs, _CLASSICAL, base_labels, engine.K, engine.max_iter)
                if res.wcss >= self.values[s]:
                    res = None
            if res is not None:
                self.values[s] = res.wcss
                self.labels[s] = res.labels
            self.seen_version[s] = version
            if engine.improve(self.base, self.labels[s]):
                improved = True
        return improved

    def increases(self) -> np.ndarray:
        base = self.engine.value(self.base)
        return (np.array(self.values) - base) / max(1, len(self.extra))


def _gap_records(x, transitions, K, S, seed, nstart, extra_starts, max_iter):
    """Observed and permutation increases for a list of (lam, previous, current) transitions."""
    if S < 2:
        raise ConfigError("S must be at least 2")
    engine = _SubsetWCSS(x, K, nstart, seed, extra_starts, max_iter)
    sets = []
    for _, prev, cur in transitions:
        sets.extend([prev, cur])
    for cols in sets:
        engine.fit(cols)

    refs = []
    for i, (_, prev, cur) in enumerate(transitions):
        union = tuple(sorted(set(prev) | set(cur)))
        entering = tuple(j for j in union if j not in prev)
        leaving = tuple(j for j in union if j not in cur)
        enter = _Reference(engine, prev, entering, i, 0, S) if entering else None
        leave = _Reference(engine, cur, leaving, i, 1, S) if leaving else None
        refs.append((enter, leave))

    # alternate until no subset improves: bounds then hold for the final values
    while True:
        changed = True
        while changed:
            changed = False
            for _, prev, cur in transitions:
                changed |= engine.improve(prev, engine.labels(cur))
                changed |= engine.improve(cur, engine.labels(prev))
        improved = False
        for enter, leave in refs:
            for ref in (enter, leave):
                if ref is not None:
                    improved |= ref.refresh()
        if not improved:
            break

    records = []
    for (lam, prev, cur), (enter, leave) in zip(transitions, refs):
        entering = enter.extra if enter else ()
        leaving = leave.extra if leave else ()
        up = enter.increases() if enter else np.zeros(S)
        down = leave.increases() if leave else np.zeros(S)
        # back to raw WCSS differences, then per entering variable
        raw = up * max(1, len(entering)) - down * max(1, len(leaving))
        scale = max(1, len(entering))
        reference = raw / scale
        delta = (engine.value(cur) - engine.value(prev)) / scale
        m = float(reference.mean())
        s = float(reference.std(ddof=1))
        D = (m - delta) / s if s > 1e-12 * max(1.0, abs(m)) else None
        records.append(
            GapStep(
                lam=float(lam),
                previous=tuple(prev),
                current=tuple(cur),
                entering=entering,
                leaving=leaving,
                delta=float(delta),
                reference=tuple(float(v) for v in reference),
                reference_enter=tuple(float(v) for v in up) if enter else (),
                reference_leave=tuple(float(v) for v in down) if leave else (),
                m=m,
                s=s,
                D=None if D is None else float(D),
            )
        )
    return records


def path_transitions(path: PathResult) -> list[tuple[float, tuple[int, ...], tuple[int, ...]]]:
    """Consecutive distinct active sets along the descending grid, with the largest lambda of each new set.

    The walk starts from the empty set, so a path whose largest lambda
    already selects variables contributes a first step from nothing.
    """
    out = []
    previous: tuple[int, ...] = ()
    for i in _descending(path):
        current = path.fits[i].active_set
        if current != previous:
            out.append((path.grid[i], previous, current))
            previous = current
    return out


def gap_step(data, previous, current, K: int, S: int = 50, seed: int = 0, nstart: int = 10, max_iter: int = 100) -> GapStep:
    """Gap record for a single transition between two variable subsets."""
    x = _values(data)
    return _gap_records(x, [(float("nan"), tuple(previous), tuple(current))], K, S, seed, nstart, (), max_iter)[0]


def gap_deltas(path: PathResult, data, K: int | None = None, S: int = 50, seed: int = 0, nstart: int = 10, max_iter: int = 100) -> list[GapStep]:
    """Gap records for every active-set change along a path.

    Each subset's WCSS comes from classical K-means on those variables,
    started from ``nstart`` random partitions and from every distinct
    partition on the path. Steps whose permutation spread is zero (for
    example a single variable entering an empty set) get ``D = None``.
    """
    x = _values(data)
    K = path.K if K is None else K
    transitions = path_transitions(path)
    starts, seen = [], set()
    for f in path.fits:
        key = f.labels.tobytes()
        if key not in seen and np.unique(f.labels).size == K:
            seen.add(key)
            starts.append(f.labels)
    return _gap_records(x, transitions, K, S, seed, nstart, starts, max_iter)


def select_gap(
    path: PathResult,
    data,
    K: int | None = None,
    variant: str = "gap1",
    c: float = 1.0,
    S: int = 50,
    seed: int = 0,
    nstart: int = 10,
    steps: Sequence[GapStep] | None = None,
    max_iter: int = 100,
) -> SelectionReport:
    """Pick the active set reached by the step with the largest D.

    ``gap1`` takes the maximal D. ``gap2`` takes the smallest lambda whose
    step has D within ``c`` of the maximum (D is already in units of the
    permutation standard deviation). The chosen lambda is the largest grid
    value reaching that active set at that step.
    """
    variant = Method(str(getattr(variant, "value", variant)).lower())
    if variant not in (Method.GAP1, Method.GAP2):
        raise ConfigError(f"{variant.value} is not a gap variant")
    if steps is None:
        steps = gap_deltas(path, data, K, S, seed, nstart, max_iter)
    valid = [i for i, st in enumerate(steps) if st.D is not None]
    if not valid:
        raise NumericalError("no path step has a usable gap statistic; use AIC or BIC instead")
    best = max(valid, key=lambda i: (steps[i].D, -i))
    if variant is Method.GAP2:
        threshold = steps[best].D - c
        best = max(i for i in valid if steps[i].D >= threshold)
    chosen = steps[best]
    lam_index = next(i for i in _descending(path) if path.grid[i] == chosen.lam)

    scores: list[float | None] = [None] * len(path.grid)
    step_iter = iter(steps)
    current_D = None
    previous: tuple[int, ...] = ()
    for i in _descending(path):
        active = path.fits[i].active_set
        if active != previous:
            current_D = next(step_iter).D
            previous = active
        scores[i] = current_D

    return SelectionReport(
        method=variant,
        grid=path.grid,
        scores=tuple(scores),
        chosen_lambda=chosen.lam,
        chosen_fit=path.fits[lam_index],
        diagnostics={"steps": [st.to_dict() for st in steps], "c": c, "S": S},
    )


def select(
    method,
    data,
    K: int,
    family=Family.HT,
    grid: Sequence[float] | None = None,
    path: PathResult | None = None,
    B: int = 20,
    S: int = 50,
    c: float = 1.0,
    nstart: int = 10,
    seed: int = 0,
    adaptive: bool = False,
    threads: int = 1,
) -> SelectionReport:
    """Run one selection method end to end, computing the path if needed."""
    method = Method(str(getattr(method, "value", method)).lower())
    if path is None:
        path = lambda_path(data, K, family, grid, nstart, seed, adaptive, threads)
    if method in (Method.AIC, Method.BIC):
        return information_criterion(path, data, method)
    if method in (Method.GAP1, Method.GAP2):
        return select_gap(path, data, K, method, c, S, seed, nstart)
    return select_stability(data, K, family, path.grid, method.value, B, seed, nstart, adaptive, path, threads)
