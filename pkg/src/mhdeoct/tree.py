"""Complete binary classification trees stored as (a, b, c) vectors.

Nodes are numbered breadth-first from 1. Branch node ``t`` sends a sample to
``2t`` when ``x[a_t] < b_t`` and to ``2t + 1`` otherwise; ``a_t = 0`` marks an
artificial node that routes everything right. Features and classes are 1-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import Dataset, ScalingStats

__all__ = [
    "TreeParams",
    "ObjectiveReport",
    "node_depth",
    "route",
    "route_many",
    "leaf_class_counts",
    "assign_leaf_classes",
    "predict",
    "predict_many",
    "objective",
    "subtree_at",
    "graft_first_node",
    "tree_to_json",
    "tree_from_json",
]


def node_depth(t: int) -> int:
    """Depth of node ``t``, root at depth 0."""
    return int(t).bit_length() - 1


@dataclass(frozen=True, eq=False)
class TreeParams:
    depth: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray | None = None

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        sb = 2**self.depth - 1
        a = np.array(self.a, dtype=np.int64).reshape(-1)
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        if a.shape != (sb,) or b.shape != (sb,):
            raise ValueError(f"depth {self.depth} needs {sb} branch entries, got a{a.shape} b{b.shape}")
        if (a < 0).any():
            raise ValueError("feature indices must be >= 0")
        b[a == 0] = 0.0
        c = np.ones(sb + 1, dtype=np.int64) if self.c is None else np.array(self.c, dtype=np.int64).reshape(-1)
        if c.shape != (sb + 1,):
            raise ValueError(f"depth {self.depth} needs {sb + 1} leaf classes")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def n_branch(self) -> int:
        return 2**self.depth - 1

    @property
    def n_leaves(self) -> int:
        return 2**self.depth

    @property
    def n_nodes(self) -> int:
        return 2 ** (self.depth + 1) - 1

    @property
    def active_splits(self) -> int:
        return int((self.a >= 1).sum())

    @classmethod
    def empty(cls, depth: int) -> "TreeParams":
        sb = 2**depth - 1
        return cls(depth, np.zeros(sb, np.int64), np.zeros(sb))

    def with_classes(self, c) -> "TreeParams":
        return TreeParams(self.depth, self.a, self.b, c)

    def same_splits(self, other: "TreeParams") -> bool:
        return self.depth == other.depth and np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)

    def __eq__(self, other):
        if not isinstance(other, TreeParams):
            return NotImplemented
        return self.same_splits(other) and np.array_equal(self.c, other.c)

    def __repr__(self):
        return f"TreeParams(depth={self.depth}, a={self.a.tolist()}, b={self.b.tolist()}, c={self.c.tolist()})"


@dataclass(frozen=True, eq=False)
class ObjectiveReport:
    misclassified: int
    active_splits: int
    violations: int
    leaf_counts: np.ndarray
    class_counts: np.ndarray
    fitness: float


def route(tree: TreeParams, x) -> int:
    """Leaf index (in ``SB+1 .. T``) reached by a single sample."""
    t = 1
    sb = tree.n_branch
    while t <= sb:
        p = tree.a[t - 1]
        t = 2 * t if p >= 1 and x[p - 1] < tree.b[t - 1] else 2 * t + 1
    return t


def route_many(tree: TreeParams, X: np.ndarray) -> np.ndarray:
    """Vectorised :func:`route` over the rows of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    Xe = np.hstack([np.zeros((X.shape[0], 1)), X])
    t = np.ones(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    for _ in range(tree.depth):
        go_left = Xe[rows, tree.a[t - 1]] < tree.b[t - 1]
        t = 2 * t + (~go_left)
    return t


def leaf_class_counts(tree: TreeParams, ds: Dataset) -> np.ndarray:
    """(SL, K) matrix of per-leaf class counts."""
    leaf = route_many(tree, ds.X) - tree.n_leaves
    counts = np.zeros((tree.n_leaves, ds.K), dtype=np.int64)
    np.add.at(counts, (leaf, ds.y - 1), 1)
    return counts


def _majority(counts: np.ndarray) -> np.ndarray:
    # argmax returns the first maximum, i.e. the smallest class id; empty leaves get class 1
    return np.argmax(counts, axis=-1) + 1


def assign_leaf_classes(tree: TreeParams, ds: Dataset) -> tuple[TreeParams, np.ndarray]:
    counts = leaf_class_counts(tree, ds)
    return tree.with_classes(_majority(counts)), counts


def predict(tree: TreeParams, x) -> int:
    return int(tree.c[route(tree, x) - tree.n_leaves])


def predict_many(tree: TreeParams, X) -> np.ndarray:
    return tree.c[route_many(tree, X) - tree.n_leaves]


def objective(tree: TreeParams, ds: Dataset, alpha: float = 0.0, n_min: int = 1) -> ObjectiveReport:
    counts = leaf_class_counts(tree, ds)
    n_t = counts.sum(axis=1)
    misclassified = int(ds.n - counts.max(axis=1).sum())
    violations = int(((n_t > 0) & (n_t < n_min)).sum())
    active = tree.active_splits
    return ObjectiveReport(
        misclassified=misclassified,
        active_splits=active,
        violations=violations,
        leaf_counts=n_t,
        class_counts=counts,
        fitness=misclassified + alpha * active + violations,
    )


def _subtree_nodes(t: int, d: int) -> np.ndarray:
    """Original indices of the branch nodes of the depth-``d`` subtree rooted at ``t``."""
    return np.concatenate([t * 2**k + np.arange(2**k) for k in range(d)])


def subtree_at(tree: TreeParams, t: int, d: int) -> TreeParams:
    if d < 1 or not 1 <= t <= tree.n_branch or node_depth(t) + d > tree.depth:
        raise IndexError(f"no depth-{d} subtree at node {t} of a depth-{tree.depth} tree")
    nodes = _subtree_nodes(t, d) - 1
    c = None
    if node_depth(t) + d == tree.depth:
        leaves = t * 2**d + np.arange(2**d)
        c = tree.c[leaves - tree.n_leaves]
    return TreeParams(d, tree.a[nodes], tree.b[nodes], c)


def graft_first_node(dest: TreeParams, t: int, sub: TreeParams) -> TreeParams:
    if not 1 <= t <= dest.n_branch:
        raise IndexError(f"node {t} is not a branch node of a depth-{dest.depth} tree")
    a, b = dest.a.copy(), dest.b.copy()
    a[t - 1], b[t - 1] = sub.a[0], sub.b[0]
    return TreeParams(dest.depth, a, b, dest.c)


def tree_to_json(
    tree: TreeParams,
    class_dictionary=None,
    scaling_stats: ScalingStats | None = None,
    indent: int | None = None,
) -> str:
    """Serialise as ``{depth, a, b, c, class_dictionary, scaling_stats}`` (that order)."""
    doc = {
        "depth": tree.depth,
        "a": tree.a.tolist(),
        "b": tree.b.tolist(),
        "c": tree.c.tolist(),
        "class_dictionary": None if class_dictionary is None else [str(v) for v in class_dictionary],
        "scaling_stats": None if scaling_stats is None else scaling_stats.to_dict(),
    }
    return json.dumps(doc, indent=indent)


def tree_from_json(text: str) -> tuple[TreeParams, list | None, ScalingStats | None]:
    doc = json.loads(text)
    tree = TreeParams(doc["depth"], doc["a"], doc["b"], doc["c"])
    stats = doc.get("scaling_stats")
    return tree, doc.get("class_dictionary"), None if stats is None else ScalingStats.from_dict(stats)
