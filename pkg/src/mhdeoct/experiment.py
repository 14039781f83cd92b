"""Repeated train/test experiments, complexity tuning and report files.

Repetition ``i`` uses ``seed_i = base_seed + i``. From it,
``SeedSequence(seed_i).generate_state(2)`` yields the split seed and the
optimiser seed, so changing the repetition count never changes earlier rows.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import DataError, RawTable, SplitSpec, encode_and_scale, fit_scaling, load_csv, split_indices
from .estimators import (
    CARTClassifier,
    DEOCTClassifier,
    MHDEOCTClassifier,
    OptimalDepth1Classifier,
    OptimalDepth2Classifier,
)

__all__ = [
    "METHODS",
    "DEFAULT_ALPHA_GRID",
    "ExperimentConfig",
    "RunReport",
    "load_table",
    "make_estimator",
    "run_experiment",
    "tune_alpha",
    "emit_report",
    "parse_report",
]

METHODS = ("cart", "deoct", "mh-deoct", "oracle-d1", "oracle-d2")
# complexity penalty per split as a fraction of the training-set size
DEFAULT_ALPHA_GRID = tuple(np.linspace(0.0, 0.05, 21).round(6))
METRICS = ("train_acc", "val_acc", "test_acc", "fitness", "active_splits", "time_s")
COLUMNS = ("row", "seed", "alpha") + METRICS


@dataclass(frozen=True)
class ExperimentConfig:
    data: str
    method: str = "mh-deoct"
    label_col: str | None = None
    categorical_cols: tuple[str, ...] = ()
    depth: int = 2
    mh_depth: int | None = None
    alpha: float = 0.0
    alpha_grid: tuple[float, ...] | None = None
    n_min: int = 1
    mode: str = "normal"
    pop: int | None = None
    gens: int | None = None
    cr: float = 0.1
    reps: int = 10
    seed: int = 0
    workers: int | None = None
    stride: int = 32
    train_fraction: float = 0.75
    validation_fraction: float = 0.0
    warm_starts: tuple[bool, bool, bool] = (True, True, True)  # cart_in_de, de_warm, cart_warm
    out: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.method == "oracle-d1" and self.depth != 1 or self.method == "oracle-d2" and self.depth != 2:
            raise ValueError(f"{self.method} builds depth-{self.method[-1]} trees; set depth accordingly")
        if self.alpha_grid is not None and len(self.alpha_grid) == 0:
            raise ValueError("alpha grid must not be empty")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")
        if self.alpha < 0 or self.n_min < 1 or self.stride < 1:
            raise ValueError("need alpha >= 0, n_min >= 1 and stride >= 1")

    def replace(self, **changes) -> "ExperimentConfig":
        return ExperimentConfig(**{**asdict(self), **changes})


@dataclass
class RunReport:
    config: dict
    rows: list[dict] = field(default_factory=list)

    def aggregate(self, fn) -> dict:
        out = {}
        for m in METRICS:
            vals = [r[m] for r in self.rows if r.get(m) is not None]
            out[m] = float(fn(np.asarray(vals, dtype=np.float64))) if vals else None
        return out

    @property
    def mean(self) -> dict:
        return self.aggregate(np.mean)

    @property
    def std(self) -> dict:
        return self.aggregate(np.std)


def load_table(cfg: ExperimentConfig) -> RawTable:
    """CSV path, or the name of a benchmark dataset when no such file exists."""
    path = Path(cfg.data)
    if path.is_file() or path.suffix == ".csv":
        return load_csv(path, label=cfg.label_col, categorical=cfg.categorical_cols)
    from .benchmarks import load_benchmark

    return load_benchmark(cfg.data)


def make_estimator(cfg: ExperimentConfig, alpha: float, seed: int):
    if cfg.method == "cart":
        return CARTClassifier(max_depth=cfg.depth, n_min=cfg.n_min)
    if cfg.method == "oracle-d1":
        return OptimalDepth1Classifier(alpha=alpha, n_min=cfg.n_min)
    if cfg.method == "oracle-d2":
        return OptimalDepth2Classifier(alpha=alpha, n_min=cfg.n_min)
    common = dict(
        max_depth=cfg.depth,
        alpha=alpha,
        n_min=cfg.n_min,
        mode=cfg.mode,
        pop_size=cfg.pop,
        generations=cfg.gens,
        cr=cfg.cr,
        random_state=seed,
        n_stride=cfg.stride,
        workers=cfg.workers,
    )
    if cfg.method == "deoct":
        return DEOCTClassifier(cart_warm_start=cfg.warm_starts[0], **common)
    cart_in_de, de_warm, cart_warm = cfg.warm_starts
    return MHDEOCTClassifier(mh_depth=cfg.mh_depth, cart_in_de=cart_in_de, de_warm=de_warm, cart_warm=cart_warm, **common)


def _seeds(seed_i: int) -> tuple[int, int]:
    split_seed, model_seed = np.random.SeedSequence(seed_i).generate_state(2)
    return int(split_seed), int(model_seed)


def _accuracy(est, ds) -> float | None:
    if ds is None or ds.n == 0:
        return None
    return 100.0 * float(np.mean(est.predict(ds.X) == ds.y))


def _encode_parts(raw: RawTable, parts):
    stats = fit_scaling(raw.take(parts[0]), extra_labels=raw.labels)
    return [encode_and_scale(raw.take(p), stats) if len(p) else None for p in parts]


def _fit(cfg, alpha, seed, train):
    est = make_estimator(cfg, alpha, seed)
    t0 = time.perf_counter()
    est.fit(train.X, train.y)
    return est, time.perf_counter() - t0


def _row(i, seed_i, alpha, est, train, val, test, seconds) -> dict:
    return {
        "row": i,
        "seed": seed_i,
        "alpha": float(alpha),
        "train_acc": _accuracy(est, train),
        "val_acc": _accuracy(est, val),
        "test_acc": _accuracy(est, test),
        "fitness": float(est.fitness_),
        "active_splits": int(est.n_active_splits_),
        "time_s": float(seconds),
    }


def _config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["categorical_cols"] = list(cfg.categorical_cols)
    d["alpha_grid"] = None if cfg.alpha_grid is None else list(cfg.alpha_grid)
    d["warm_starts"] = list(cfg.warm_starts)
    return d


def run_experiment(cfg: ExperimentConfig, table: RawTable | None = None, on_fit=None) -> RunReport:
    """Train and score ``cfg.reps`` times on fresh seeded splits.

    ``on_fit(i, estimator)`` is called after each repetition's fit, which
    gives access to fitted trees and DE histories. Dispatches to
    :func:`tune_alpha` when ``cfg.alpha_grid`` is set (``on_fit`` is then unused).
    """
    if cfg.alpha_grid is not None:
        return tune_alpha(cfg, table)[1]
    raw = load_table(cfg) if table is None else table
    report = RunReport(_config_dict(cfg))
    for i in range(cfg.reps):
        seed_i = cfg.seed + i
        split_seed, model_seed = _seeds(seed_i)
        parts = split_indices(raw.n_rows, SplitSpec(cfg.train_fraction, cfg.validation_fraction, split_seed))
        train, val, test = _encode_parts(raw, parts)
        est, seconds = _fit(cfg, cfg.alpha, model_seed, train)
        if on_fit is not None:
            on_fit(i, est)
        report.rows.append(_row(i, seed_i, cfg.alpha, est, train, val, test, seconds))
    return report


def tune_alpha(cfg: ExperimentConfig, table: RawTable | None = None) -> tuple[list[float], RunReport]:
    """Pick alpha on a validation split, then retrain on train + validation.

    Grid values are penalties per split relative to the size of the set being
    fitted, so the selected value is rescaled for the retraining step. The
    reported ``val_acc`` is the winning validation accuracy, ``time_s`` covers
    the whole search. Returns the selected normalised values and the report.
    """
    grid = sorted(cfg.alpha_grid if cfg.alpha_grid is not None else DEFAULT_ALPHA_GRID)
    if not grid:
        raise ValueError("alpha grid must not be empty")
    if cfg.validation_fraction <= 0:
        raise DataError("alpha tuning needs validation_fraction > 0")
    raw = load_table(cfg) if table is None else table
    report = RunReport(_config_dict(cfg))
    chosen = []
    for i in range(cfg.reps):
        seed_i = cfg.seed + i
        split_seed, model_seed = _seeds(seed_i)
        tr, va, te = split_indices(raw.n_rows, SplitSpec(cfg.train_fraction, cfg.validation_fraction, split_seed))
        train, val, _ = _encode_parts(raw, (tr, va, te))
        t0 = time.perf_counter()
        scores = []
        for a in grid:
            est, _ = _fit(cfg, a * train.n, model_seed, train)
            scores.append(_accuracy(est, val))
        best = grid[int(np.argmax(scores))]  # first maximum, i.e. the smallest alpha
        full, _, test = _encode_parts(raw, (np.sort(np.concatenate([tr, va])), np.array([], int), te))
        alpha = best * full.n
        est, _ = _fit(cfg, alpha, model_seed, full)
        row = _row(i, seed_i, alpha, est, full, None, test, time.perf_counter() - t0)
        row["val_acc"] = max(scores)
        report.rows.append(row)
        chosen.append(best)
    return chosen, report


def _rounded(values: dict) -> dict:
    out = {}
    for k, v in values.items():
        if v is None or k in ("row", "seed"):
            out[k] = v
        elif k.endswith("_acc"):
            out[k] = round(v, 2)
        elif k == "time_s":
            out[k] = round(v, 4)
        else:
            out[k] = round(float(v), 6)
    return out


def report_records(report: RunReport) -> dict:
    """Report content as written to disk (accuracies rounded to 2 decimals)."""
    mean = {"row": "mean", "seed": None, "alpha": None, **report.mean}
    std = {"row": "std", "seed": None, "alpha": None, **report.std}
    return {
        "config": report.config,
        "rows": [_rounded({c: r.get(c) for c in COLUMNS}) for r in report.rows],
        "mean": _rounded(mean),
        "std": _rounded(std),
    }


def emit_report(report: RunReport, format: str = "json", path=None) -> str:
    """Serialise the report; also write it to ``path`` when given."""
    rec = report_records(report)
    if format == "json":
        text = json.dumps(rec, indent=2) + "\n"
    elif format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in rec["rows"] + [rec["mean"], rec["std"]]:
            writer.writerow([_fmt(c, r[c]) for c in COLUMNS])
        text = buf.getvalue()
    else:
        raise ValueError("format must be json or csv")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _fmt(column: str, value) -> str:
    if value is None:
        return ""
    if column.endswith("_acc"):
        return f"{value:.2f}"
    return str(value)


def parse_report(text: str, format: str = "json") -> dict:
    """Inverse of :func:`emit_report` (the CSV form carries no config)."""
    if format == "json":
        return json.loads(text)
    rows = list(csv.DictReader(io.StringIO(text)))

    def conv(r):
        out = {}
        for c in COLUMNS:
            v = r[c]
            if v == "":
                out[c] = None
            elif c in ("row", "seed", "active_splits") and v.lstrip("-").isdigit():
                out[c] = int(v)
            elif c == "row":
                out[c] = v
            else:
                out[c] = float(v)
        return out

    parsed = [conv(r) for r in rows]
    return {"rows": parsed[:-2], "mean": parsed[-2], "std": parsed[-1]}


def summary_line(report: RunReport) -> str:
    m, s = report.mean, report.std
    parts = [f"{k}={m[k]:.2f}±{s[k]:.2f}" for k in ("train_acc", "test_acc") if m[k] is not None]
    return " ".join(parts + [f"time_s={m['time_s']:.3f}"])


def alpha_grid_from_text(text: str | None) -> tuple[float, ...] | None:
    """``None``, ``"default"`` (21 points in [0, 0.05]) or comma-separated values."""
    if text is None:
        return None
    if text.strip().lower() in ("default", "auto"):
        return DEFAULT_ALPHA_GRID
    return tuple(float(v) for v in text.split(",") if v.strip())


def _as_tuple(values: Sequence[str] | str | None) -> tuple[str, ...]:
    if not values:
        return ()
    if isinstance(values, str):
        values = values.split(",")
    return tuple(v.strip() for v in values if v.strip())
