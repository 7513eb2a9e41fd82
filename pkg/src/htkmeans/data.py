"""Observation matrices: CSV ingestion, standardization and the synthetic generator."""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import ConfigError, DataError

logger = logging.getLogger(__name__)

N_INFORMATIVE = 50
SUPPORTED_K = (2, 4, 8)

# Column block widths and per-cluster signs of the informative mean templates.
_TEMPLATE_BLOCKS = {
    2: ((50,), ((1,), (-1,))),
    4: ((25, 25), ((-1, 1), (1, 1), (1, -1), (-1, -1))),
    8: (
        (17, 17, 16),
        (
            (1, 1, 1),
            (1, -1, 1),
            (1, 1, -1),
            (1, -1, -1),
            (-1, 1, 1),
            (-1, -1, 1),
            (-1, 1, -1),
            (-1, -1, -1),
        ),
    ),
}


@dataclass(frozen=True)
class DataMatrix:
    """An n x p matrix of finite observations.

    ``values`` is stored as a read-only float array. ``dropped`` lists the
    names of zero-variance columns removed by :func:`standardize`.
    """

    values: np.ndarray
    column_names: tuple[str, ...] = ()
    standardized: bool = False
    dropped: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError(f"expected a 2-d matrix, got shape {values.shape}")
        n, p = values.shape
        if n < 1 or p < 1:
            raise DataError(f"empty matrix of shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("matrix contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        names = tuple(self.column_names) or tuple(f"V{j + 1}" for j in range(p))
        if len(names) != p:
            raise DataError(f"{len(names)} column names for {p} columns")
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def subset(self, rows=None, columns=None) -> "DataMatrix":
        values = self.values
        names = self.column_names
        if rows is not None:
            values = values[np.asarray(rows)]
        if columns is not None:
            columns = list(columns)
            values = values[:, columns]
            names = tuple(names[j] for j in columns)
        return DataMatrix(values, names, standardized=self.standardized and rows is None)


@dataclass(frozen=True)
class SimConfig:
    n: int
    p: int
    K: int
    mu: float
    seed: int = 0

    def validate(self):
        if self.K not in SUPPORTED_K:
            raise ConfigError(f"no mean template for K={self.K}; supported: {SUPPORTED_K}")
        if self.p < N_INFORMATIVE:
            raise ConfigError(f"p must be at least {N_INFORMATIVE}, got {self.p}")
        if self.n < 1:
            raise ConfigError(f"n must be positive, got {self.n}")
        if not self.mu > 0:
            raise ConfigError(f"mu must be positive, got {self.mu}")


@dataclass(frozen=True)
class LabeledDataset:
    data: DataMatrix
    labels: np.ndarray  # 1-based cluster labels

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.shape != (self.data.n,):
            raise DataError(f"{labels.size} labels for {self.data.n} observations")
        if labels.size and labels.min() < 1:
            raise DataError("labels must be positive integers")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)


def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"non-numeric cell {text!r} at row {row}, column {col}") from None
    if not math.isfinite(value):
        raise DataError(f"non-finite cell {text!r} at row {row}, column {col}")
    return value


def load_csv(path: str | os.PathLike, has_header: bool = False) -> DataMatrix:
    """Read a comma-separated numeric matrix.

    Rows and columns in error messages are 1-based file positions.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        rows = [r for r in csv.reader(handle) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty input")
    names: tuple[str, ...] = ()
    offset = 1
    if has_header:
        names = tuple(c.strip() for c in rows[0])
        rows = rows[1:]
        offset = 2
        if not rows:
            raise DataError(f"{path}: header but no data rows")
    width = len(names) if names else len(rows[0])
    values = []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(
                f"{path}: row {i + offset} has {len(row)} cells, expected {width}"
            )
        values.append([_parse_cell(c.strip(), i + offset, j + 1) for j, c in enumerate(row)])
    return DataMatrix(np.array(values, dtype=float), names)


def load_labels(path: str | os.PathLike) -> np.ndarray:
    """Read one integer label per row; a non-numeric first row is taken as a header."""
    with open(path, newline="", encoding="utf-8") as handle:
        cells = [r[0].strip() for r in csv.reader(handle) if r and r[0].strip()]
    if not cells:
        raise DataError(f"{path}: empty input")
    try:
        float(cells[0])
    except ValueError:
        cells = cells[1:]
    out = []
    for i, c in enumerate(cells):
        try:
            out.append(int(c))
        except ValueError:
            raise DataError(f"{path}: label {c!r} on line {i + 1} is not an integer") from None
    return np.array(out, dtype=int)


def write_matrix_csv(path: str | os.PathLike, data: DataMatrix, header: bool = True):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        if header:
            writer.writerow(data.column_names)
        for row in data.values:
            writer.writerow([repr(float(v)) for v in row])


def write_labels_csv(path: str | os.PathLike, labels: Sequence[int]):
    with open(path, "w", encoding="utf-8") as handle:
        handle.writelines(f"{int(v)}\n" for v in labels)


def standardize(data: DataMatrix) -> DataMatrix:
    """Center every column and scale it to unit mean square (population convention).

    Zero-variance columns are dropped and reported through ``dropped`` and
    a logged warning.
    """
    if data.n < 2:
        raise DataError("standardization needs at least two observations")
    x = data.values
    centered = x - x.mean(axis=0)
    scale = np.sqrt((centered**2).mean(axis=0))
    # a constant column leaves only rounding noise after centering
    keep = scale > 1e-12 * np.maximum(1.0, np.abs(x).max(axis=0))
    if not keep.any():
        raise DataError("all columns have zero variance")
    dropped = tuple(name for name, k in zip(data.column_names, keep) if not k)
    if dropped:
        logger.warning("dropping zero-variance columns: %s", ", ".join(dropped))
    z = centered[:, keep] / scale[keep]
    # second pass removes the residual rounding in mean and scale
    z -= z.mean(axis=0)
    z /= np.sqrt((z**2).mean(axis=0))
    names = tuple(name for name, k in zip(data.column_names, keep) if k)
    return DataMatrix(z, names, standardized=True, dropped=data.dropped + dropped)


def mean_template(K: int, mu: float) -> np.ndarray:
    """K x 50 matrix whose row k is the informative mean of cluster k + 1."""
    if K not in _TEMPLATE_BLOCKS:
        raise ConfigError(f"no mean template for K={K}; supported: {SUPPORTED_K}")
    widths, signs = _TEMPLATE_BLOCKS[K]
    return np.array([np.repeat(np.array(s, dtype=float) * mu, widths) for s in signs])


def simulate_dataset(cfg: SimConfig) -> LabeledDataset:
    """Gaussian clusters on the first 50 variables plus standard-normal noise variables.

    Labels, informative noise and pure-noise columns come from independent
    streams spawned off ``cfg.seed``, so the informative block does not
    change when only ``p`` changes.
    """
    cfg.validate()
    label_ss, signal_ss, noise_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    labels = np.random.default_rng(label_ss).integers(1, cfg.K + 1, size=cfg.n)
    means = mean_template(cfg.K, cfg.mu)[labels - 1]
    signal = means + np.random.default_rng(signal_ss).standard_normal((cfg.n, N_INFORMATIVE))
    noise = np.random.default_rng(noise_ss).standard_normal((cfg.n, cfg.p - N_INFORMATIVE))
    values = np.hstack([signal, noise])
    return LabeledDataset(DataMatrix(values), labels)


def _bundled(name: str) -> Path:
    return Path(str(resources.files("htkmeans") / "datasets" / name))


def load_iris() -> LabeledDataset:
    """Fisher's Iris measurements (150 x 4) with species labels 1..3."""
    raw = load_csv(_bundled("iris.csv"), has_header=True)
    return LabeledDataset(raw.subset(columns=range(4)), raw.values[:, 4].astype(int))


def load_banknote(path: str | os.PathLike | None = None) -> LabeledDataset:
    """Swiss banknote measurements (200 x 6) with genuine/counterfeit labels.

    The data is not redistributed with the package. ``path`` (or the
    ``HTKM_BANKNOTE_CSV`` environment variable) must point to a CSV with a
    header row: a ``Status`` column ("genuine"/"counterfeit") followed by
    Length, Left, Right, Bottom, Top, Diagonal, as exported from R's
    ``mclust::banknote``. A leading row-name column is ignored.
    """
    path = path or os.environ.get("HTKM_BANKNOTE_CSV")
    if not path or not Path(path).is_file():
        raise FileNotFoundError("banknote data not available; set HTKM_BANKNOTE_CSV")
    with open(path, newline="", encoding="utf-8") as handle:
        rows = [r for r in csv.reader(handle) if r]
    header = [h.strip().strip('"') for h in rows[0]]
    status_col = next(i for i, h in enumerate(header) if h.lower() == "status")
    numeric = [i for i, h in enumerate(header) if i != status_col and h not in ("", "rownames")]
    labels = [1 if r[status_col].strip().strip('"').lower() == "genuine" else 2 for r in rows[1:]]
    values = [[_parse_cell(r[i], k + 2, i + 1) for i in numeric] for k, r in enumerate(rows[1:])]
    data = DataMatrix(np.array(values), tuple(header[i] for i in numeric))
    return LabeledDataset(data, np.array(labels))
