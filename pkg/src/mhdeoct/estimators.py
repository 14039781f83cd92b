"""scikit-learn compatible classifiers wrapping the tree builders.

All estimators min-max scale ``X`` with the training ranges (clamping new data
into [0, 1]) and map arbitrary labels to the dense class ids used internally.

>>> from sklearn.datasets import load_iris
>>> X, y = load_iris(return_X_y=True)
>>> clf = MHDEOCTClassifier(max_depth=2, generations=50).fit(X, y)
>>> clf.score(X, y) > 0.9
True
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from .data import Dataset, build_threshold_sets
from .de import DeConfig, run_deoct
from .fitness import EvalConfig
from .greedy import best_split_misclass, cart_train, exact_depth2
from .mh import MhConfig, WarmStartPolicy, run_mh_deoct
from .tree import TreeParams, assign_leaf_classes, objective, predict_many, route_many

__all__ = [
    "CARTClassifier",
    "DEOCTClassifier",
    "MHDEOCTClassifier",
    "OptimalDepth1Classifier",
    "OptimalDepth2Classifier",
]


def _check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def _check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha < 0:
        raise ValueError(f"alpha must be a finite number >= 0, got {alpha!r}")
    return alpha


class _TreeClassifier(ClassifierMixin, BaseEstimator):
    """Shared fit/predict plumbing; subclasses implement ``_build``."""

    def _validate_common(self):
        _check_positive_int(self.n_min, "n_min")

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        check_classification_targets(y)
        self._validate_common()
        self.classes_, y_ids = np.unique(y, return_inverse=True)
        self.data_min_ = X.min(axis=0)
        self.data_range_ = X.max(axis=0) - self.data_min_
        ds = Dataset(self._scale(X), y_ids + 1, len(self.classes_))
        th = build_threshold_sets(ds)
        tree = self._build(ds, th)
        self.tree_, _ = assign_leaf_classes(tree, ds)
        self.fitness_ = objective(self.tree_, ds, getattr(self, "alpha", 0.0), self.n_min).fitness
        return self

    def _scale(self, X):
        rng = np.where(self.data_range_ > 0, self.data_range_, 1.0)
        Z = np.clip((X - self.data_min_) / rng, 0.0, 1.0)
        Z[:, self.data_range_ <= 0] = 0.0
        return Z

    def apply(self, X) -> np.ndarray:
        """Leaf node index (breadth-first numbering) reached by each sample."""
        check_is_fitted(self, "tree_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return route_many(self.tree_, self._scale(X))

    def predict(self, X):
        check_is_fitted(self, "tree_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return self.classes_[predict_many(self.tree_, self._scale(X)) - 1]

    @property
    def n_active_splits_(self) -> int:
        check_is_fitted(self, "tree_")
        return self.tree_.active_splits


class CARTClassifier(_TreeClassifier):
    """Greedy top-down tree on the shared threshold grid.

    Parameters
    ----------
    max_depth : int
    n_min : int
        Nodes holding ``n_min`` samples or fewer are not split.
    impurity : {"gini", "misclassification"}
    """

    def __init__(self, max_depth=2, n_min=1, impurity="gini"):
        self.max_depth = max_depth
        self.n_min = n_min
        self.impurity = impurity

    def _build(self, ds, th):
        depth = _check_positive_int(self.max_depth, "max_depth")
        return cart_train(ds, depth, self.n_min, self.impurity, th=th)


class _DEParams:
    def _eval_config(self, depth):
        return EvalConfig(
            depth=depth,
            alpha=_check_alpha(self.alpha),
            n_min=self.n_min,
            n_stride=_check_positive_int(self.n_stride, "n_stride"),
            workers=self.workers,
            backend=self.backend,
        )

    def _de_config(self):
        return DeConfig.for_mode(
            self.mode, N=self.pop_size, G=self.generations, CR=self.cr, seed=int(self.random_state)
        )


class DEOCTClassifier(_DEParams, _TreeClassifier):
    """Whole-tree differential evolution.

    Parameters
    ----------
    max_depth : int
    alpha : float
        Cost per active split, in misclassified-sample units.
    n_min : int
        Leaves holding between 1 and ``n_min - 1`` samples cost one unit each.
    mode : {"normal", "long"}
        Preset population size and generation count.
    pop_size, generations : int or None
        Override the preset.
    cr : float
        Crossover probability.
    cart_warm_start : bool
        Seed the population with the Gini CART tree.
    random_state : int
    n_stride, workers, backend
        Fitness evaluation settings, see :class:`mhdeoct.fitness.EvalConfig`.

    Attributes
    ----------
    tree_ : TreeParams
    history_ : ndarray
        Best fitness after initialisation and after every generation.
    """

    def __init__(
        self,
        max_depth=2,
        alpha=0.0,
        n_min=1,
        mode="normal",
        pop_size=None,
        generations=None,
        cr=0.1,
        cart_warm_start=True,
        random_state=0,
        n_stride=32,
        workers=None,
        backend="numba",
    ):
        self.max_depth = max_depth
        self.alpha = alpha
        self.n_min = n_min
        self.mode = mode
        self.pop_size = pop_size
        self.generations = generations
        self.cr = cr
        self.cart_warm_start = cart_warm_start
        self.random_state = random_state
        self.n_stride = n_stride
        self.workers = workers
        self.backend = backend

    def _build(self, ds, th):
        depth = _check_positive_int(self.max_depth, "max_depth")
        oct_cfg = self._eval_config(depth)
        warm = [cart_train(ds, depth, self.n_min, "gini", th=th)] if self.cart_warm_start else []
        res = run_deoct(ds, th, depth, oct_cfg, self._de_config(), warm)
        self.history_ = res.history
        return res.tree


class MHDEOCTClassifier(_DEParams, _TreeClassifier):
    """Moving-horizon DEOCT.

    Takes the :class:`DEOCTClassifier` parameters (minus ``cart_warm_start``)
    plus ``mh_depth`` (default 2 for depth-2 trees, else 3) and the three
    warm-start switches ``cart_in_de``, ``de_warm`` and ``cart_warm``.
    The per-node report is stored in ``report_``.
    """

    def __init__(
        self,
        max_depth=2,
        mh_depth=None,
        alpha=0.0,
        n_min=1,
        mode="normal",
        pop_size=None,
        generations=None,
        cr=0.1,
        cart_in_de=True,
        de_warm=True,
        cart_warm=True,
        random_state=0,
        n_stride=32,
        workers=None,
        backend="numba",
    ):
        self.max_depth = max_depth
        self.mh_depth = mh_depth
        self.alpha = alpha
        self.n_min = n_min
        self.mode = mode
        self.pop_size = pop_size
        self.generations = generations
        self.cr = cr
        self.cart_in_de = cart_in_de
        self.de_warm = de_warm
        self.cart_warm = cart_warm
        self.random_state = random_state
        self.n_stride = n_stride
        self.workers = workers
        self.backend = backend

    def _build(self, ds, th):
        depth = _check_positive_int(self.max_depth, "max_depth")
        cfg = MhConfig(
            D=depth,
            D_MH=self.mh_depth,
            oct=self._eval_config(depth),
            de=self._de_config(),
            policy=WarmStartPolicy(bool(self.cart_in_de), bool(self.de_warm), bool(self.cart_warm)),
        )
        tree, self.report_ = run_mh_deoct(ds, th, cfg)
        return tree


class OptimalDepth1Classifier(_TreeClassifier):
    """Exhaustive single split (a stump, or a single leaf if no split pays off)."""

    def __init__(self, alpha=0.0, n_min=1):
        self.alpha = alpha
        self.n_min = n_min

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.classifier_tags.poor_score = True  # a stump predicts at most two classes
        return tags

    def _build(self, ds, th):
        cand = best_split_misclass(ds, th, _check_alpha(self.alpha), self.n_min)
        return TreeParams.empty(1) if cand is None else cand.as_tree()


class OptimalDepth2Classifier(_TreeClassifier):
    """Globally optimal depth-2 tree by enumeration of every root split.

    Raises :class:`mhdeoct.greedy.BudgetExceeded` on data with too many
    distinct feature values.
    """

    def __init__(self, alpha=0.0, n_min=1):
        self.alpha = alpha
        self.n_min = n_min

    def _build(self, ds, th):
        return exact_depth2(ds, th, _check_alpha(self.alpha), self.n_min)
