"""Center-size penalties and the exact center updates for a fixed partition.

All four penalties are sums over center columns, so the update splits into
independent per-column problems

    min_mu  sum_k w_k (mu_k - m_k)^2 + lam * pen(mu),    w_k = |C_k| / n,

where ``m`` is the column of cluster means. Updates write literal zeros so
the active set needs no tolerance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigError, EmptyClusterError, NumericalError


class Family(str, enum.Enum):
    HT = "ht"
    LASSO = "lasso"
    RIDGE = "ridge"
    GLASSO = "glasso"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {"hardthresholding": "ht", "l0": "ht", "grouplasso": "glasso"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ConfigError(f"unknown penalty family {value!r}") from None


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty family, strength and the group-lasso root-finder budget."""

    family: Family = Family.HT
    lam: float = 0.0
    adaptive: bool = False
    tol: float = 1e-13
    max_iter: int = 100

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if not (self.lam >= 0 and np.isfinite(self.lam)):
            raise ConfigError(f"lambda must be finite and non-negative, got {self.lam}")

    def with_lambda(self, lam: float) -> "PenaltySpec":
        return replace(self, lam=float(lam))


def cluster_means(data, labels, K: int) -> np.ndarray:
    """K x p matrix of per-cluster means; raises on an empty cluster."""
    x = np.asarray(getattr(data, "values", data), dtype=float)
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=K)
    if counts.size > K or np.any(counts == 0):
        empty = [k + 1 for k in range(K) if k >= counts.size or counts[k] == 0]
        raise EmptyClusterError(f"empty clusters {empty}; repair the partition first")
    sums = np.zeros((K, x.shape[1]))
    np.add.at(sums, labels, x)
    return sums / counts[:, None]


def column_lambdas(spec: PenaltySpec, means: np.ndarray) -> np.ndarray:
    """Per-column penalty strength; adaptive specs divide by the mean-column norm."""
    p = means.shape[1]
    if not spec.adaptive:
        return np.full(p, spec.lam)
    norms = np.sqrt((means**2).sum(axis=0))
    with np.errstate(divide="ignore"):
        return np.where(norms > 0, spec.lam / np.where(norms > 0, norms, 1.0), np.inf)


def column_penalties(family: Family, centers) -> np.ndarray:
    centers = np.asarray(centers, dtype=float)
    if family is Family.HT:
        return np.any(centers != 0, axis=0).astype(float)
    if family is Family.LASSO:
        return np.abs(centers).sum(axis=0)
    if family is Family.RIDGE:
        return (centers**2).sum(axis=0)
    return np.sqrt((centers**2).sum(axis=0))


def penalty_value(spec: PenaltySpec, centers) -> float:
    """Unscaled penalty of a center matrix (nonzero-column count, l1, squared l2 or l2 sum)."""
    return float(column_penalties(spec.family, centers).sum())


def penalty_term(spec: PenaltySpec, data, centers, labels) -> float:
    """``lam * pen(centers)``, with adaptive weights taken from the partition's cluster means."""
    terms = column_penalties(spec.family, centers)
    if spec.adaptive:
        K = np.asarray(centers).shape[0]
        lam = column_lambdas(spec, cluster_means(data, labels, K))
        # infinite weights only ever meet zero columns
        weighted = np.zeros_like(terms)
        weighted[terms > 0] = lam[terms > 0] * terms[terms > 0]
        return float(weighted.sum())
    return spec.lam * float(terms.sum())


def _group_lasso_columns(means, counts, n, lam, tol, max_iter):
    w = counts[:, None] / n
    a = 2.0 * w * means
    grad_norm = np.sqrt((a**2).sum(axis=0))
    # zero column is optimal iff the subgradient condition ||2 w m|| <= lam holds
    active = grad_norm > lam
    out = np.zeros_like(means)
    if not active.any():
        return out
    a = a[:, active]
    b = np.broadcast_to(2.0 * w, a.shape)
    lam_a = lam[active]
    # Newton on 1/||v(r)|| - 1 with v_k = a_k / (b_k r + lam); the function is
    # increasing and concave in r, so iterates from r = 0 rise monotonically to the root
    r = np.zeros(a.shape[1])
    for _ in range(max_iter):
        denom = b * r + lam_a
        v = a / denom
        vnorm = np.sqrt((v**2).sum(axis=0))
        psi = 1.0 / vnorm - 1.0
        dpsi = (b * v**2 / denom).sum(axis=0) / vnorm**3
        step = -psi / dpsi
        r = np.maximum(r + step, 0.0)
        if np.all(np.abs(step) <= tol * np.maximum(1.0, r)):
            break
    else:
        raise NumericalError("group-lasso column norm did not converge")
    shrink = b * r / (b * r + lam_a)
    out[:, active] = means[:, active] * shrink
    return out


def update_centers(spec: PenaltySpec, data, labels, K: int) -> np.ndarray:
    """Minimize the penalized objective over the K x p centers for a fixed partition."""
    x = np.asarray(getattr(data, "values", data), dtype=float)
    labels = np.asarray(labels)
    n = x.shape[0]
    means = cluster_means(x, labels, K)
    if spec.lam == 0:
        return means
    lam = column_lambdas(spec, means)
    counts = np.bincount(labels, minlength=K).astype(float)
    family = spec.family

    if family is Family.HT:
        total = np.einsum("ij,ij->j", x, x)
        resid = x - means[labels]
        within = np.einsum("ij,ij->j", resid, resid)
        with np.errstate(invalid="ignore"):
            keep = total > within + n * lam
        return np.where(keep[None, :], means, 0.0)

    if family is Family.LASSO:
        with np.errstate(invalid="ignore"):
            threshold = n * lam[None, :] / (2.0 * counts[:, None])
        shrunk = np.maximum(np.abs(means) - threshold, 0.0)
        return np.where(shrunk > 0, np.sign(means) * shrunk, 0.0)

    if family is Family.RIDGE:
        factor = 1.0 + n * lam[None, :] / counts[:, None]
        return np.where(np.isfinite(factor), means / factor, 0.0)

    return _group_lasso_columns(means, counts, n, lam, spec.tol, spec.max_iter)
