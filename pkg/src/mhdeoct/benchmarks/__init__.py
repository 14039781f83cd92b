"""Small UCI classification datasets used by the tests and the acceptance suite.

Bundled CSV files hold numeric features with the label in the last column
named ``class``. Iris, Wine and Breast-cancer (WDBC) come from scikit-learn.
Any ``<name>.csv`` found in the directory named by ``MHDEOCT_DATA_DIR`` takes
precedence, which is how datasets that cannot be redistributed here (for
example ``seeds`` or ``banknote``) are supplied.
"""

from __future__ import annotations

import os
from importlib import resources
from pathlib import Path

from ..data import DataError, RawTable, load_csv

__all__ = ["DATA_DIR_ENV", "available", "load_benchmark", "BUNDLED", "SKLEARN"]

DATA_DIR_ENV = "MHDEOCT_DATA_DIR"

BUNDLED = (
    "balance-scale",
    "contraceptive",
    "fertility",
    "glass",
    "haberman",
    "hayes-roth",
    "hepatitis",
    "mammographic",
    "new-thyroid",
    "tae",
)
SKLEARN = ("iris", "wine", "breast-cancer")


def _external(name: str) -> Path | None:
    root = os.environ.get(DATA_DIR_ENV)
    if root:
        path = Path(root) / f"{name}.csv"
        if path.is_file():
            return path
    return None


def available() -> list[str]:
    names = set(BUNDLED) | set(SKLEARN)
    root = os.environ.get(DATA_DIR_ENV)
    if root and Path(root).is_dir():
        names |= {p.stem for p in Path(root).glob("*.csv")}
    return sorted(names)


def load_benchmark(name: str) -> RawTable:
    """Raw table for a benchmark; the label column is the last one."""
    path = _external(name)
    if path is not None:
        return load_csv(path)
    if name in BUNDLED:
        with resources.as_file(resources.files(__package__) / "data" / f"{name}.csv") as p:
            return load_csv(p)
    if name in SKLEARN:
        from sklearn import datasets

        loader = {
            "iris": datasets.load_iris,
            "wine": datasets.load_wine,
            "breast-cancer": datasets.load_breast_cancer,
        }[name]
        d = loader()
        return RawTable.from_arrays(d.data, d.target, feature_names=[str(f) for f in d.feature_names])
    raise DataError(f"benchmark {name!r} is not bundled; place {name}.csv in ${DATA_DIR_ENV}")
