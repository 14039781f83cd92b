"""Greedy and exhaustive tree builders, plus the per-sample fitness oracle.

Every split search here scans the candidate thresholds of a
:class:`~mhdeoct.data.ThresholdSets` with one sort per feature and a running
class-count sweep, so the chosen thresholds always come from the same sets the
DE codec uses and any result can be encoded into a DE individual exactly.

Ties between candidates of equal cost go to the lower feature id, then to the
lower threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, ThresholdSets, build_threshold_sets, subset_by_path
from .tree import TreeParams, assign_leaf_classes

__all__ = [
    "BudgetExceeded",
    "SplitCandidate",
    "DEPTH2_BUDGET",
    "best_split_misclass",
    "best_split_gini",
    "cart_train",
    "exact_depth2",
    "naive_fitness_oracle",
]

DEPTH2_BUDGET = 5000


class BudgetExceeded(RuntimeError):
    """The exact search would enumerate more root thresholds than allowed."""


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    threshold: float
    loss: int  # misclassified samples after majority-labelling both children
    cost: float  # loss + alpha + small-leaf penalties

    def as_tree(self) -> TreeParams:
        return TreeParams(1, [self.feature], [self.threshold])


def _one_hot(y: np.ndarray, K: int) -> np.ndarray:
    Y = np.zeros((y.size, K), dtype=np.int64)
    Y[np.arange(y.size), y - 1] = 1
    return Y


def _leaf_penalty(counts: np.ndarray, n_min: int) -> np.ndarray:
    """Misclassified + (0 < n_t < n_min) for count vectors along the last axis."""
    n_t = counts.sum(axis=-1)
    return n_t - counts.max(axis=-1) + ((n_t > 0) & (n_t < n_min))


def _left_counts(X: np.ndarray, Y: np.ndarray, M: np.ndarray, q: int, beta: np.ndarray) -> np.ndarray:
    """Class counts of rows with ``M`` set and ``X[:, q] < beta_j``, shape (C, |beta|, K).

    ``M`` is a (C, n) stack of row masks; one sort of feature ``q`` serves all of them.
    """
    order = np.argsort(X[:, q], kind="stable")
    xs = X[order, q]
    weighted = M[:, order, None] * Y[order][None, :, :]
    cum = np.concatenate([np.zeros((M.shape[0], 1, Y.shape[1]), np.int64), np.cumsum(weighted, axis=1)], axis=1)
    pos = np.searchsorted(xs, beta, side="left")
    return cum[:, pos, :]


def _best_local_splits(
    ds: Dataset, th: ThresholdSets, M: np.ndarray, alpha: float, n_min: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Best depth-1 subtree for each row subset in ``M``.

    Returns (cost, feature, threshold, loss) arrays of length C; feature 0 marks
    that no split is strictly cheaper than sending everything right.
    """
    Y = _one_hot(ds.y, ds.K)
    C = M.shape[0]
    totals = M.astype(np.int64) @ Y
    best_cost = _leaf_penalty(totals, n_min).astype(np.float64)
    best_loss = (totals.sum(axis=1) - totals.max(axis=1)).astype(np.int64)
    best_feat = np.zeros(C, dtype=np.int64)
    best_thr = np.zeros(C)
    for q in range(ds.P):
        beta = th.sets[q]
        left = _left_counts(ds.X, Y, M, q, beta)
        right = totals[:, None, :] - left
        cost = _leaf_penalty(left, n_min) + _leaf_penalty(right, n_min) + alpha
        j = np.argmin(cost, axis=1)
        c = cost[np.arange(C), j]
        better = c < best_cost  # strict: earlier features and the no-split option win ties
        if better.any():
            best_cost[better] = c[better]
            best_feat[better] = q + 1
            best_thr[better] = beta[j[better]]
            lj, rj = left[better, j[better]], right[better, j[better]]
            best_loss[better] = lj.sum(1) - lj.max(1) + rj.sum(1) - rj.max(1)
    return best_cost, best_feat, best_thr, best_loss


def best_split_misclass(
    ds: Dataset, th: ThresholdSets, alpha: float = 0.0, n_min: int = 1
) -> SplitCandidate | None:
    """Exhaustive depth-1 split under the OCT objective, or ``None`` for no split.

    A split must be strictly cheaper than the artificial node (all samples in
    one leaf). With ``alpha=0, n_min=1`` this is plain misclassification CART.
    """
    if ds.n == 0:
        return None
    cost, feat, thr, loss = _best_local_splits(ds, th, np.ones((1, ds.n), dtype=bool), alpha, n_min)
    if feat[0] == 0:
        return None
    return SplitCandidate(int(feat[0]), float(thr[0]), int(loss[0]), float(cost[0]))


def best_split_gini(ds: Dataset, th: ThresholdSets, min_leaf: int = 1) -> SplitCandidate | None:
    """Split with the largest strictly positive decrease in weighted Gini impurity."""
    if ds.n == 0:
        return None
    Y = _one_hot(ds.y, ds.K)
    M = np.ones((1, ds.n), dtype=bool)
    total = Y.sum(axis=0)
    # n * gini = n - sum_k n_k^2 / n; minimise the children's sum of that
    parent = ds.n - (total**2).sum() / ds.n
    best = None
    best_val = parent - 1e-12 * max(parent, 1.0)
    for q in range(ds.P):
        beta = th.sets[q]
        left = _left_counts(ds.X, Y, M, q, beta)[0]
        right = total[None, :] - left
        nl, nr = left.sum(1), right.sum(1)
        ok = (nl >= min_leaf) & (nr >= min_leaf)
        if not ok.any():
            continue
        with np.errstate(invalid="ignore", divide="ignore"):
            val = nl - (left**2).sum(1) / nl + nr - (right**2).sum(1) / nr
        val = np.where(ok, val, np.inf)
        j = int(np.argmin(val))
        if val[j] < best_val:
            best_val = val[j]
            loss = int(nl[j] - left[j].max() + nr[j] - right[j].max())
            best = SplitCandidate(q + 1, float(beta[j]), loss, float(val[j]))
    return best


def cart_train(
    ds: Dataset,
    depth: int,
    n_min: int = 1,
    impurity: str = "gini",
    th: ThresholdSets | None = None,
    alpha: float = 0.0,
) -> TreeParams:
    """Greedy top-down tree, padded with artificial nodes to a complete depth-``depth`` tree.

    Nodes are filled breadth-first. A node stays artificial when it holds at
    most ``n_min`` samples, is label-pure, or has no improving split. The
    ``misclassification`` criterion uses :func:`best_split_misclass` with
    ``alpha`` and ``n_min``.
    """
    if impurity not in ("gini", "misclassification"):
        raise ValueError(f"unknown impurity {impurity!r}")
    if ds.n == 0:
        raise ValueError("cannot train on an empty dataset")
    th = build_threshold_sets(ds) if th is None else th
    tree = TreeParams.empty(depth)
    a, b = tree.a.copy(), tree.b.copy()
    for t in range(1, tree.n_branch + 1):
        sub = subset_by_path(ds, TreeParams(depth, a, b), t)
        if sub.n <= n_min or np.unique(sub.y).size <= 1:
            continue
        if impurity == "gini":
            cand = best_split_gini(sub, th)
        else:
            cand = best_split_misclass(sub, th, alpha, n_min)
        if cand is not None:
            a[t - 1], b[t - 1] = cand.feature, cand.threshold
    tree, _ = assign_leaf_classes(TreeParams(depth, a, b), ds)
    return tree


def exact_depth2(
    ds: Dataset, th: ThresholdSets, alpha: float = 0.0, n_min: int = 1, budget: int = DEPTH2_BUDGET
) -> TreeParams:
    """Globally optimal depth-2 tree under the OCT objective.

    Every root split is enumerated; both children are then solved exactly as
    depth-1 problems. The artificial root (everything to the right child) is
    tried first and wins ties, as do lower features and thresholds.

    Raises :class:`BudgetExceeded` when the threshold sets hold more than
    ``budget`` entries in total.
    """
    size = th.total_size()
    if size > budget:
        raise BudgetExceeded(f"exact depth-2 search needs sum_p (n_p + 1) <= {budget}, got {size}")
    if ds.n == 0:
        raise ValueError("cannot optimise on an empty dataset")
    all_rows = np.ones((1, ds.n), dtype=bool)
    c0, f0, b0, _ = _best_local_splits(ds, th, all_rows, alpha, n_min)
    best_cost = float(c0[0])
    best = ([0, 0, int(f0[0])], [0.0, 0.0, float(b0[0])])
    for p in range(ds.P):
        beta = th.sets[p]
        M = ds.X[None, :, p] < beta[:, None]
        cl, fl, bl, _ = _best_local_splits(ds, th, M, alpha, n_min)
        cr, fr, br, _ = _best_local_splits(ds, th, ~M, alpha, n_min)
        cost = cl + cr + alpha
        j = int(np.argmin(cost))
        if cost[j] < best_cost:
            best_cost = float(cost[j])
            best = ([p + 1, int(fl[j]), int(fr[j])], [float(beta[j]), float(bl[j]), float(br[j])])
    tree, _ = assign_leaf_classes(TreeParams(2, *best), ds)
    return tree


def naive_fitness_oracle(tree: TreeParams, ds: Dataset, alpha: float = 0.0, n_min: int = 1) -> float:
    """Objective value computed one sample at a time with plain Python lists and dicts."""
    a, b = tree.a.tolist(), tree.b.tolist()
    n_branch = len(a)
    counts: dict[int, dict[int, int]] = {}
    for x, y in zip(ds.X.tolist(), ds.y.tolist()):
        t = 1
        while t <= n_branch:
            p = a[t - 1]
            t = 2 * t if p >= 1 and x[p - 1] < b[t - 1] else 2 * t + 1
        per_class = counts.setdefault(t, {})
        per_class[y] = per_class.get(y, 0) + 1
    misclassified = 0
    violations = 0
    for per_class in counts.values():
        n_t = sum(per_class.values())
        misclassified += n_t - max(per_class.values())
        if 0 < n_t < n_min:
            violations += 1
    active = sum(1 for p in a if p >= 1)
    return misclassified + alpha * active + violations
