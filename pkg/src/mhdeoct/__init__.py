"""Optimal classification trees by differential evolution, with a moving-horizon driver."""

from .data import Dataset, DataError, RawTable, SplitSpec, ThresholdSets, build_threshold_sets, encode_and_scale, load_csv
from .de import DeConfig, run_deoct
from .estimators import (
    CARTClassifier,
    DEOCTClassifier,
    MHDEOCTClassifier,
    OptimalDepth1Classifier,
    OptimalDepth2Classifier,
)
from .fitness import EvalConfig, evaluate_population
from .greedy import BudgetExceeded, best_split_misclass, cart_train, exact_depth2
from .mh import MhConfig, WarmStartPolicy, run_mh_deoct
from .tree import TreeParams

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "CARTClassifier",
    "DEOCTClassifier",
    "DataError",
    "Dataset",
    "DeConfig",
    "EvalConfig",
    "MHDEOCTClassifier",
    "MhConfig",
    "OptimalDepth1Classifier",
    "OptimalDepth2Classifier",
    "RawTable",
    "SplitSpec",
    "ThresholdSets",
    "TreeParams",
    "WarmStartPolicy",
    "best_split_misclass",
    "build_threshold_sets",
    "cart_train",
    "encode_and_scale",
    "evaluate_population",
    "exact_depth2",
    "load_csv",
    "run_deoct",
    "run_mh_deoct",
]
