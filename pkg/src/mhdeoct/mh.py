"""Moving-horizon DEOCT: grow a deep tree one branch node at a time.

Branch nodes are visited breadth-first. At node ``t`` the samples routed there
by the already-fixed ancestors define a local problem; a shallow subtree of
depth ``min(D_MH, D - depth(t))`` is optimised on it and only its first node is
kept. Local problems of depth 1 are solved exhaustively instead of by DE.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, ThresholdSets, subset_by_path
from .de import DeConfig, run_deoct
from .fitness import EvalConfig
from .greedy import best_split_misclass, cart_train
from .tree import TreeParams, assign_leaf_classes, graft_first_node, node_depth, objective, subtree_at

__all__ = [
    "WarmStartPolicy",
    "MhConfig",
    "NodeRecord",
    "MhReport",
    "default_mh_depth",
    "effective_depth",
    "harvest_warm_subtrees",
    "run_mh_deoct",
]


@dataclass(frozen=True)
class WarmStartPolicy:
    """Which warm starts seed the per-node DE runs.

    cart_in_de
        add a CART tree fitted to each local problem, and start the global
        DEOCT pool run (if any) from the global CART tree
    de_warm
        harvest subtrees from one full-depth DEOCT run made before the loop
    cart_warm
        harvest subtrees from the full-depth CART tree
    """

    cart_in_de: bool = True
    de_warm: bool = True
    cart_warm: bool = True

    @classmethod
    def none(cls) -> "WarmStartPolicy":
        return cls(False, False, False)


def default_mh_depth(D: int) -> int:
    return min(D, 3)


@dataclass(frozen=True)
class MhConfig:
    D: int
    D_MH: int | None = None
    oct: EvalConfig = field(default_factory=EvalConfig)
    de: DeConfig = field(default_factory=DeConfig)
    policy: WarmStartPolicy = field(default_factory=WarmStartPolicy)
    gini_cart: bool = True  # impurity of the warm-start CART trees

    def __post_init__(self):
        if self.D < 1:
            raise ValueError("depth must be >= 1")
        if self.D_MH is None:
            object.__setattr__(self, "D_MH", default_mh_depth(self.D))
        if not 1 <= self.D_MH <= self.D:
            raise ValueError(f"moving-horizon depth must lie in [1, {self.D}]")


@dataclass
class NodeRecord:
    t: int
    n_samples: int
    horizon: int  # 0 when the node was made artificial by the gate
    action: str  # "de", "exhaustive" or "artificial"
    local_fitness: float
    seconds: float
    history: np.ndarray | None = None  # best-fitness trace of the node's DE run


@dataclass
class MhReport:
    nodes: list[NodeRecord]
    warm_start_seconds: float
    total_seconds: float
    fitness: float
    pool_fitness: dict[str, float]
    pool_history: np.ndarray | None = None

    def histories(self) -> list[np.ndarray]:
        """Best-fitness traces of every DE run made while building the tree."""
        runs = [] if self.pool_history is None else [self.pool_history]
        return runs + [r.history for r in self.nodes if r.history is not None]


def effective_depth(D_MH: int, D: int, D_t: int) -> int:
    if not 0 <= D_t < D:
        raise ValueError(f"node depth {D_t} outside [0, {D})")
    return min(D_MH, D - D_t)


def harvest_warm_subtrees(pools: list[TreeParams], t: int, d: int) -> list[TreeParams]:
    return [subtree_at(tree, t, d) for tree in pools]


def _cart(ds: Dataset, depth: int, cfg: MhConfig, th: ThresholdSets) -> TreeParams:
    impurity = "gini" if cfg.gini_cart else "misclassification"
    return cart_train(ds, depth, cfg.oct.n_min, impurity, th=th, alpha=cfg.oct.alpha)


def run_mh_deoct(ds: Dataset, th: ThresholdSets, cfg: MhConfig) -> tuple[TreeParams, MhReport]:
    """Build a depth-``cfg.D`` tree; the report times every node and the warm starts."""
    if ds.n == 0:
        raise ValueError("cannot optimise on an empty dataset")
    start = time.perf_counter()
    D, policy = cfg.D, cfg.policy
    oct_full = cfg.oct.replace(depth=D)
    pools: list[TreeParams] = []
    pool_fitness: dict[str, float] = {}
    cart_tree = None
    pool_history = None
    if policy.cart_warm or (policy.de_warm and policy.cart_in_de):
        cart_tree = _cart(ds, D, cfg, th)
    if policy.cart_warm:
        pools.append(cart_tree)
        pool_fitness["cart"] = objective(cart_tree, ds, cfg.oct.alpha, cfg.oct.n_min).fitness
    if policy.de_warm:
        warm = [cart_tree] if policy.cart_in_de else []
        seed = np.random.SeedSequence(cfg.de.seed, spawn_key=(0,))
        res = run_deoct(ds, th, D, oct_full, cfg.de, warm, seed=seed)
        pools.append(res.tree)
        pool_fitness["deoct"] = res.fitness
        pool_history = res.history
    warm_seconds = time.perf_counter() - start

    tree = TreeParams.empty(D)
    records = []
    for t in range(1, tree.n_branch + 1):
        t0 = time.perf_counter()
        sub = subset_by_path(ds, tree, t)
        if not (sub.n > cfg.oct.n_min and np.unique(sub.y).size > 1):
            records.append(NodeRecord(t, sub.n, 0, "artificial", 0.0, time.perf_counter() - t0))
            continue  # the node is already artificial
        d = effective_depth(cfg.D_MH, D, node_depth(t))
        if d > 1:
            warm = harvest_warm_subtrees(pools, t, d)
            if policy.cart_in_de:
                warm.append(_cart(sub, d, cfg, th))
            seed = np.random.SeedSequence(cfg.de.seed, spawn_key=(t,))
            local, local_f, history = run_deoct(sub, th, d, cfg.oct.replace(depth=d), cfg.de, warm, seed=seed)
            action = "de"
        else:
            cand = best_split_misclass(sub, th, cfg.oct.alpha, cfg.oct.n_min)
            local = TreeParams.empty(1) if cand is None else cand.as_tree()
            local_f = objective(local, sub, cfg.oct.alpha, cfg.oct.n_min).fitness
            action, history = "exhaustive", None
        tree = graft_first_node(tree, t, local)
        records.append(NodeRecord(t, sub.n, d, action, float(local_f), time.perf_counter() - t0, history))

    tree, _ = assign_leaf_classes(tree, ds)
    fitness = objective(tree, ds, cfg.oct.alpha, cfg.oct.n_min).fitness
    report = MhReport(records, warm_seconds, time.perf_counter() - start, fitness, pool_fitness, pool_history)
    return tree, report
