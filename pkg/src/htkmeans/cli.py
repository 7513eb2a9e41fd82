"""Command-line entry point: ``htkmeans {fit,path,select,simulate,score}``.

Every command writes into ``--output`` (a directory, created if missing):

* ``fit``: ``fit.json`` and ``assignment.csv``
* ``path``: ``path.json`` and ``path.tsv`` (lambda followed by one center-column norm per variable)
* ``select``: ``select.json`` and ``assignment.csv``
* ``simulate``: ``data.csv`` and ``labels.csv``

``score`` prints the adjusted Rand index of two label files to stdout.
Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import DataMatrix, SimConfig, load_csv, load_labels, simulate_dataset, standardize, write_labels_csv, write_matrix_csv
from .exceptions import ConfigError, DataError, EmptyClusterError, NumericalError
from .metrics import adjusted_rand_index, center_column_norms
from .penalties import Family, PenaltySpec
from .selection import Method, select
from .solver import default_grid, fit, lambda_path

logger = logging.getLogger("htkmeans")

DEFAULT_SEED = 0
EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple[str, ...] = ()
    header: bool = False
    K: int = 2
    penalty: Family = Family.HT
    adaptive: bool = False
    lam: float | None = None
    grid_min: float = -2.0
    grid_max: float = 2.0
    grid_length: int = 40
    method: Method = Method.GAP1
    B: int = 20
    S: int = 50
    c: float = 1.0
    nstart: int = 10
    seed: int = DEFAULT_SEED
    output: str = "."
    standardize: bool = True
    threads: int = 1
    n: int = 80
    p: int = 1000
    mu: float = 0.8

    def validate(self):
        if self.grid_length < 1:
            raise ConfigError("--grid-length must be at least 1")
        if self.K < 1:
            raise ConfigError("--k must be positive")
        if self.nstart < 1:
            raise ConfigError("--nstart must be positive")
        if self.B < 1 or self.S < 2:
            raise ConfigError("--B must be at least 1 and --S at least 2")
        if self.threads < 1:
            raise ConfigError("--threads must be positive")
        if self.lam is not None and self.lam < 0:
            raise ConfigError("--lambda must be non-negative")
        needed = {"fit": 1, "path": 1, "select": 1, "score": 2, "simulate": 0}[self.command]
        if len(self.inputs) != needed:
            raise ConfigError(f"{self.command} takes {needed} input file(s), got {len(self.inputs)}")

    def grid(self) -> list[float]:
        return default_grid(self.grid_min, self.grid_max, self.grid_length)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="htkmeans", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, data=True):
        p.add_argument("--output", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        if data:
            p.add_argument("--input", nargs=1, required=True, dest="inputs")
            p.add_argument("--header", action="store_true", help="first CSV row holds column names")
            p.add_argument("--k", type=int, required=True, dest="K")
            p.add_argument("--penalty", type=Family.parse, default=Family.HT, help="ht, lasso, ridge or glasso")
            p.add_argument("--adaptive", action="store_true")
            p.add_argument("--nstart", type=int, default=10)
            p.add_argument("--no-standardize", dest="standardize", action="store_false")
            p.add_argument("--threads", type=int, default=None, help="defaults to $HTKM_THREADS or 1")

    def grid(p):
        p.add_argument("--grid-min", type=float, default=-2.0)
        p.add_argument("--grid-max", type=float, default=2.0)
        p.add_argument("--grid-length", type=int, default=40)

    p_fit = sub.add_parser("fit", help="fit at a single lambda")
    common(p_fit)
    p_fit.add_argument("--lambda", type=float, required=True, dest="lam")

    p_path = sub.add_parser("path", help="fit over a lambda grid")
    common(p_path)
    grid(p_path)

    p_sel = sub.add_parser("select", help="choose lambda")
    common(p_sel)
    grid(p_sel)
    p_sel.add_argument("--method", type=str.lower, choices=[m.value for m in Method], default="gap1")
    p_sel.add_argument("--B", type=int, default=20)
    p_sel.add_argument("--S", type=int, default=50)
    p_sel.add_argument("--c", type=float, default=1.0)

    p_sim = sub.add_parser("simulate", help="write a synthetic dataset")
    common(p_sim, data=False)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--p", type=int, required=True)
    p_sim.add_argument("--k", type=int, required=True, dest="K")
    p_sim.add_argument("--mu", type=float, required=True)

    p_score = sub.add_parser("score", help="adjusted Rand index of two label files")
    p_score.add_argument("--input", nargs=2, required=True, dest="inputs", metavar=("A", "B"))
    return parser


def _threads(value) -> int:
    if value is not None:
        return value
    env = os.environ.get("HTKM_THREADS")
    if not env:
        return 1
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"HTKM_THREADS={env!r} is not an integer") from None


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__ and v is not None}
    if "method" in fields:
        fields["method"] = Method(fields["method"])
    fields["inputs"] = tuple(fields.get("inputs", ()))
    fields["threads"] = _threads(getattr(args, "threads", None))
    cfg = RunConfig(**fields)
    cfg.validate()
    return cfg


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (tuple, set)):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_json(path: Path, payload: dict):
    # float repr round-trips, so every number keeps 17 significant digits
    text = json.dumps(payload, sort_keys=True, indent=2, default=_json_default, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def _load(cfg: RunConfig) -> DataMatrix:
    data = load_csv(cfg.inputs[0], has_header=cfg.header)
    return standardize(data) if cfg.standardize else data


def _run_fit(cfg: RunConfig, out: Path):
    data = _load(cfg)
    result = fit(data, cfg.K, PenaltySpec(cfg.penalty, cfg.lam, cfg.adaptive), nstart=cfg.nstart, seed=cfg.seed)
    payload = result.to_dict(data.column_names)
    payload.update(seed=cfg.seed, K=cfg.K, standardized=cfg.standardize, dropped=list(data.dropped))
    write_json(out / "fit.json", payload)
    write_labels_csv(out / "assignment.csv", result.labels + 1)


def _run_path(cfg: RunConfig, out: Path):
    data = _load(cfg)
    path = lambda_path(data, cfg.K, cfg.penalty, cfg.grid(), cfg.nstart, cfg.seed, cfg.adaptive, cfg.threads)
    payload = path.to_dict()
    payload.update(seed=cfg.seed, adaptive=cfg.adaptive, dropped=list(data.dropped))
    write_json(out / "path.json", payload)
    with open(out / "path.tsv", "w", encoding="utf-8") as handle:
        handle.write("\t".join(("lambda",) + data.column_names) + "\n")
        for lam, f in zip(path.grid, path.fits):
            norms = center_column_norms(f.centers)
            handle.write("\t".join(repr(float(v)) for v in (lam, *norms)) + "\n")


def _run_select(cfg: RunConfig, out: Path):
    data = _load(cfg)
    path = lambda_path(data, cfg.K, cfg.penalty, cfg.grid(), cfg.nstart, cfg.seed, cfg.adaptive, cfg.threads)
    report = select(
        cfg.method, data, cfg.K, cfg.penalty, path=path, B=cfg.B, S=cfg.S, c=cfg.c,
        nstart=cfg.nstart, seed=cfg.seed, adaptive=cfg.adaptive, threads=cfg.threads,
    )
    payload = report.to_dict()
    payload["chosen_active_names"] = [data.column_names[j] for j in report.chosen_fit.active_set]
    payload.update(seed=cfg.seed, family=cfg.penalty.value, K=cfg.K)
    write_json(out / "select.json", payload)
    write_labels_csv(out / "assignment.csv", report.chosen_fit.labels + 1)


def _run_simulate(cfg: RunConfig, out: Path):
    ds = simulate_dataset(SimConfig(cfg.n, cfg.p, cfg.K, cfg.mu, cfg.seed))
    write_matrix_csv(out / "data.csv", ds.data, header=False)
    write_labels_csv(out / "labels.csv", ds.labels)


def _run_score(cfg: RunConfig):
    a, b = (load_labels(p) for p in cfg.inputs)
    if a.shape != b.shape:
        raise DataError(f"label files differ in length: {a.size} vs {b.size}")
    print(repr(adjusted_rand_index(a, b)))


def run(cfg: RunConfig) -> int:
    if cfg.command == "score":
        _run_score(cfg)
        return EXIT_OK
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    {"fit": _run_fit, "path": _run_path, "select": _run_select, "simulate": _run_simulate}[cfg.command](cfg, out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return run(config_from_args(args))
    except ConfigError as exc:
        print(f"htkmeans: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"htkmeans: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, EmptyClusterError, FloatingPointError) as exc:
        print(f"htkmeans: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
