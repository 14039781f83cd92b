"""Tabular ingestion, min-max scaling, seeded splits and per-feature threshold sets."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "DataError",
    "RawTable",
    "ScalingStats",
    "Dataset",
    "ThresholdSets",
    "SplitSpec",
    "load_csv",
    "fit_scaling",
    "encode_and_scale",
    "split_indices",
    "split",
    "build_threshold_sets",
    "subset_by_path",
]

NUMERIC, CATEGORICAL, LABEL = "numeric", "categorical", "label"
_MISSING = {"", "?", "na", "nan", "null"}


class DataError(ValueError):
    """Malformed input data (bad CSV, schema mismatch, empty partition)."""


@dataclass(frozen=True)
class RawTable:
    """Typed columns straight from a CSV file, in row order.

    Numeric columns hold floats, categorical and label columns hold strings.
    """

    names: tuple[str, ...]
    kinds: tuple[str, ...]
    columns: tuple[tuple, ...]

    def __post_init__(self):
        if not (len(self.names) == len(self.kinds) == len(self.columns)):
            raise DataError("names, kinds and columns must have equal length")
        if self.kinds.count(LABEL) != 1:
            raise DataError("exactly one label column is required")
        if len({len(c) for c in self.columns}) > 1:
            raise DataError("all columns must have the same number of rows")

    @property
    def n_rows(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    @property
    def label_name(self) -> str:
        return self.names[self.kinds.index(LABEL)]

    @property
    def labels(self) -> tuple:
        return self.columns[self.kinds.index(LABEL)]

    def column(self, name: str) -> tuple:
        return self.columns[self.names.index(name)]

    def take(self, rows: Sequence[int]) -> "RawTable":
        rows = list(rows)
        return RawTable(self.names, self.kinds, tuple(tuple(c[i] for i in rows) for c in self.columns))

    @classmethod
    def from_arrays(cls, X, y, feature_names=None, categorical=()) -> "RawTable":
        X = np.asarray(X, dtype=object)
        names = list(feature_names or [f"x{i + 1}" for i in range(X.shape[1])])
        kinds = [CATEGORICAL if nm in categorical else NUMERIC for nm in names]
        cols = []
        for j, kind in enumerate(kinds):
            col = X[:, j]
            cols.append(tuple(str(v) for v in col) if kind == CATEGORICAL else tuple(float(v) for v in col))
        cols.append(tuple(str(v) for v in y))
        return cls(tuple(names) + ("class",), tuple(kinds) + (LABEL,), tuple(cols))


@dataclass(frozen=True)
class ScalingStats:
    """Everything needed to encode new rows exactly like the training rows."""

    feature_names: tuple[str, ...]
    numeric_ranges: Mapping[str, tuple[float, float]]
    categories: Mapping[str, tuple[str, ...]]
    classes: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "numeric_ranges": {k: list(v) for k, v in self.numeric_ranges.items()},
            "categories": {k: list(v) for k, v in self.categories.items()},
            "classes": list(self.classes),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScalingStats":
        return cls(
            tuple(d["feature_names"]),
            {k: (float(v[0]), float(v[1])) for k, v in d["numeric_ranges"].items()},
            {k: tuple(v) for k, v in d["categories"].items()},
            tuple(d["classes"]),
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Scaled features ``X`` (n x P, values in [0, 1]) and class ids ``y`` in 1..K."""

    X: np.ndarray
    y: np.ndarray
    n_classes: int
    feature_names: tuple[str, ...] = ()
    stats: ScalingStats | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.int64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DataError(f"inconsistent shapes X{X.shape} y{y.shape}")
        if y.size and (y.min() < 1 or y.max() > self.n_classes):
            raise DataError("class ids must lie in 1..K")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def P(self) -> int:
        return self.X.shape[1]

    @property
    def K(self) -> int:
        return self.n_classes

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], self.n_classes, self.feature_names, self.stats)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y - 1, minlength=self.n_classes)


@dataclass(frozen=True, eq=False)
class ThresholdSets:
    """Sorted candidate split values per feature: ``0``, adjacent midpoints, ``1``.

    ``padded`` stacks the sets into a (P, max_len) matrix (tail padded with 1.0)
    so a whole population can be decoded with one fancy-indexing call.
    """

    sets: tuple[np.ndarray, ...]
    n_unique: np.ndarray = field(repr=False)
    padded: np.ndarray = field(repr=False)

    @classmethod
    def from_sets(cls, sets: Sequence[np.ndarray]) -> "ThresholdSets":
        sets = tuple(np.asarray(s, dtype=np.float64) for s in sets)
        n_unique = np.array([len(s) - 1 for s in sets], dtype=np.int64)
        width = max((len(s) for s in sets), default=1)
        padded = np.ones((len(sets), width))
        for p, s in enumerate(sets):
            padded[p, : len(s)] = s
        return cls(sets, n_unique, padded)

    @property
    def P(self) -> int:
        return len(self.sets)

    def __getitem__(self, p: int) -> np.ndarray:
        """Threshold set of feature ``p`` (1-based, as in the tree's ``a`` vector)."""
        return self.sets[p - 1]

    def total_size(self) -> int:
        return int(sum(len(s) for s in self.sets))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.75
    validation_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.train_fraction <= 0 or self.validation_fraction < 0:
            raise DataError("fractions must be positive")
        if self.train_fraction + self.validation_fraction > 1 + 1e-12:
            raise DataError("train_fraction + validation_fraction must not exceed 1")


def _parse_float(token: str, path, line: int, column: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise DataError(f"{path}:{line}: non-numeric token {token!r} in numeric column {column!r}") from None


def load_csv(
    path,
    schema: Mapping[str, str] | None = None,
    *,
    label: str | None = None,
    categorical: Sequence[str] = (),
) -> RawTable:
    """Read a comma-separated file with a header row.

    Column kinds come either from ``schema`` (name -> ``numeric`` | ``categorical``
    | ``label``; must name exactly the header columns) or from ``label`` plus an
    optional list of ``categorical`` columns, everything else being numeric.
    Missing values are rejected.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: file not found")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [(reader.line_num, [tok.strip() for tok in row]) for row in reader if row]

    if schema is not None:
        if set(schema) != set(header) or len(header) != len(schema):
            raise DataError(f"{path}:1: header {header} does not match schema {sorted(schema)}")
        kinds = [schema[h] for h in header]
    else:
        if label is None:
            label = header[-1]
        if label not in header:
            raise DataError(f"{path}:1: label column {label!r} not in header")
        unknown = set(categorical) - set(header)
        if unknown:
            raise DataError(f"{path}:1: unknown categorical columns {sorted(unknown)}")
        kinds = [LABEL if h == label else CATEGORICAL if h in categorical else NUMERIC for h in header]
    bad = set(kinds) - {NUMERIC, CATEGORICAL, LABEL}
    if bad:
        raise DataError(f"unknown column kinds {sorted(bad)}")

    cols: list[list] = [[] for _ in header]
    for line, row in rows:
        if len(row) != len(header):
            raise DataError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
        for j, tok in enumerate(row):
            if tok.lower() in _MISSING:
                raise DataError(f"{path}:{line}: missing value in column {header[j]!r}")
            cols[j].append(_parse_float(tok, path, line, header[j]) if kinds[j] == NUMERIC else tok)
    return RawTable(tuple(header), tuple(kinds), tuple(tuple(c) for c in cols))


def _first_occurrence(values) -> tuple:
    return tuple(dict.fromkeys(values))


def fit_scaling(raw: RawTable, extra_labels: Sequence = ()) -> ScalingStats:
    """Learn min/max ranges, category levels and the class dictionary from ``raw``.

    Class ids follow first occurrence in ``raw``; labels only present in
    ``extra_labels`` (e.g. the full table before splitting) are appended.
    """
    feature_names: list[str] = []
    ranges: dict[str, tuple[float, float]] = {}
    categories: dict[str, tuple[str, ...]] = {}
    for name, kind, col in zip(raw.names, raw.kinds, raw.columns):
        if kind == NUMERIC:
            vals = np.asarray(col, dtype=np.float64)
            ranges[name] = (float(vals.min()), float(vals.max())) if vals.size else (0.0, 0.0)
            feature_names.append(name)
        elif kind == CATEGORICAL:
            levels = _first_occurrence(col)
            categories[name] = levels
            feature_names.extend(f"{name}={lv}" for lv in levels)
    classes = _first_occurrence(tuple(raw.labels) + tuple(extra_labels))
    return ScalingStats(tuple(feature_names), ranges, categories, classes)


def encode_and_scale(raw: RawTable, stats: ScalingStats | None = None) -> Dataset:
    """One-hot encode categoricals, min-max scale numerics, densify labels to 1..K.

    Without ``stats`` the ranges are learned from ``raw`` itself. With ``stats``
    (learned on a training partition) values are scaled by the training ranges
    and clamped to [0, 1]; unseen category levels encode as all zeros.
    Constant numeric features map to 0.
    """
    if stats is None:
        stats = fit_scaling(raw)
    n = raw.n_rows
    blocks = []
    for name, kind, col in zip(raw.names, raw.kinds, raw.columns):
        if kind == NUMERIC:
            lo, hi = stats.numeric_ranges[name]
            vals = np.asarray(col, dtype=np.float64)
            if hi > lo:
                scaled = np.clip((vals - lo) / (hi - lo), 0.0, 1.0)
            else:
                scaled = np.zeros(n)
            blocks.append(scaled[:, None])
        elif kind == CATEGORICAL:
            levels = stats.categories[name]
            lookup = {lv: j for j, lv in enumerate(levels)}
            onehot = np.zeros((n, len(levels)))
            for i, v in enumerate(col):
                j = lookup.get(v)
                if j is not None:
                    onehot[i, j] = 1.0
            blocks.append(onehot)
    X = np.hstack(blocks) if blocks else np.zeros((n, 0))
    class_ids = {c: k + 1 for k, c in enumerate(stats.classes)}
    try:
        y = np.array([class_ids[v] for v in raw.labels], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"label {exc.args[0]!r} missing from the class dictionary") from None
    return Dataset(X, y, len(stats.classes), stats.feature_names, stats)


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded shuffle, then floor-sized train/validation parts; remainder is test.

    Each part is returned in ascending index order.
    """
    n_train = int(np.floor(n * spec.train_fraction + 1e-9))
    n_val = int(np.floor(n * spec.validation_fraction + 1e-9))
    n_test = n - n_train - n_val
    if n_train < 2:
        raise DataError(f"train partition would hold {n_train} samples (need >= 2)")
    if spec.validation_fraction > 0 and n_val == 0:
        raise DataError("validation partition would be empty")
    if n_test <= 0:
        raise DataError("test partition would be empty")
    perm = np.random.default_rng(spec.seed).permutation(n)
    return (
        np.sort(perm[:n_train]),
        np.sort(perm[n_train : n_train + n_val]),
        np.sort(perm[n_train + n_val :]),
    )


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    tr, va, te = split_indices(ds.n, spec)
    return ds.take(tr), ds.take(va), ds.take(te)


def build_threshold_sets(train: Dataset) -> ThresholdSets:
    if train.n == 0:
        raise DataError("cannot build threshold sets from an empty dataset")
    sets = []
    for p in range(train.P):
        u = np.unique(train.X[:, p])
        sets.append(np.concatenate(([0.0], (u[:-1] + u[1:]) / 2.0, [1.0])))
    return ThresholdSets.from_sets(sets)


def path_to(t: int) -> list[int]:
    """Node indices from the root down to ``t`` (inclusive)."""
    path = []
    while t >= 1:
        path.append(t)
        t //= 2
    return path[::-1]


def path_mask(X: np.ndarray, a: np.ndarray, b: np.ndarray, t: int) -> np.ndarray:
    """Boolean mask of rows of ``X`` that the ancestor splits route into node ``t``."""
    mask = np.ones(X.shape[0], dtype=bool)
    path = path_to(t)
    for parent, child in zip(path[:-1], path[1:]):
        p = a[parent - 1]
        goes_left = X[:, p - 1] < b[parent - 1] if p >= 1 else np.zeros(X.shape[0], dtype=bool)
        mask &= goes_left if child == 2 * parent else ~goes_left
    return mask


def subset_by_path(ds: Dataset, tree, t: int) -> Dataset:
    if not 1 <= t <= 2 ** (tree.depth + 1) - 1:
        raise IndexError(f"node {t} outside a depth-{tree.depth} tree")
    return ds.take(np.flatnonzero(path_mask(ds.X, tree.a, tree.b, t)))
