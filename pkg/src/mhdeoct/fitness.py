"""Batched OCT fitness for a whole DE population.

The dataset is cut into contiguous strides of ``n_stride`` samples. Each stride
routes its samples through every tree and adds into a private
(trees x leaves x classes) accumulator; accumulators are joined by integer
addition, so the result does not depend on stride size, worker count or
scheduling.

Two backends implement the same contract:

``"sequential"``
    numpy reference, one stride at a time.
``"numba"``
    compiled kernel; strides are dealt round-robin to ``workers`` private
    accumulators processed in parallel threads (the default).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .codec import decode_population
from .data import Dataset, ThresholdSets
from .tree import TreeParams

__all__ = [
    "EvalConfig",
    "default_workers",
    "class_count_tensor",
    "count_tensor",
    "fitness_from_counts",
    "evaluate_population",
]

WORKERS_ENV = "MHDEOCT_WORKERS"

# probe OpenMP before TBB; old system TBB builds only trigger a warning
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return numba.config.NUMBA_NUM_THREADS


@dataclass(frozen=True)
class EvalConfig:
    depth: int = 2
    alpha: float = 0.0
    n_min: int = 1
    n_stride: int = 32
    workers: int | None = None
    backend: str = "numba"

    def __post_init__(self):
        if self.n_stride < 1:
            raise ValueError("n_stride must be >= 1")
        if self.n_min < 1:
            raise ValueError("n_min must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.backend not in ("numba", "sequential"):
            raise ValueError(f"unknown backend {self.backend!r}")

    def replace(self, **changes) -> "EvalConfig":
        return EvalConfig(**{**self.__dict__, **changes})


@numba.njit(parallel=True, cache=True, nogil=True)
def _counts_kernel(Xe, y0, A, B, K, n_stride, n_workers):
    n = Xe.shape[0]
    N, SB = A.shape
    SL = SB + 1
    n_blocks = (n + n_stride - 1) // n_stride
    Z = np.zeros((n_workers, N, SL, K), dtype=np.int64)
    for w in numba.prange(n_workers):
        for j in range(w, n_blocks, n_workers):
            lo = j * n_stride
            hi = min(lo + n_stride, n)
            for r in range(N):
                for i in range(lo, hi):
                    t = 1
                    while t <= SB:
                        if Xe[i, A[r, t - 1]] < B[r, t - 1]:
                            t = 2 * t
                        else:
                            t = 2 * t + 1
                    Z[w, r, t - SL, y0[i]] += 1
    out = np.zeros((N, SL, K), dtype=np.int64)
    for w in range(n_workers):
        out += Z[w]
    return out


def _counts_sequential(Xe, y0, A, B, K, n_stride):
    n = Xe.shape[0]
    N, SB = A.shape
    SL = SB + 1
    depth = SL.bit_length() - 1
    out = np.zeros((N, SL, K), dtype=np.int64)
    tree_idx = np.arange(N)[:, None]
    for lo in range(0, n, n_stride):
        xs, ys = Xe[lo : lo + n_stride], y0[lo : lo + n_stride]
        m = xs.shape[0]
        t = np.ones((N, m), dtype=np.int64)
        cols = np.arange(m)[None, :]
        for _ in range(depth):
            feat = A[tree_idx, t - 1]
            thr = B[tree_idx, t - 1]
            t = 2 * t + (xs[cols, feat] >= thr)
        local = np.zeros((N, SL, K), dtype=np.int64)
        np.add.at(local, (np.broadcast_to(tree_idx, t.shape), t - SL, np.broadcast_to(ys, t.shape)), 1)
        out += local
    return out


def _extended(ds: Dataset) -> np.ndarray:
    # column 0 is a constant 0 so that artificial nodes (a=0, b=0) always route right
    return np.ascontiguousarray(np.hstack([np.zeros((ds.n, 1)), ds.X]))


def count_tensor(
    A: np.ndarray,
    B: np.ndarray,
    ds: Dataset,
    n_stride: int = 32,
    workers: int | None = None,
    backend: str = "numba",
    _Xe: np.ndarray | None = None,
) -> np.ndarray:
    """(N, SL, K) class counts for the split matrices ``A`` (features) and ``B`` (thresholds)."""
    A = np.ascontiguousarray(A, dtype=np.int64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    Xe = _extended(ds) if _Xe is None else _Xe
    y0 = ds.y - 1
    if backend == "sequential":
        return _counts_sequential(Xe, y0, A, B, ds.K, n_stride)
    workers = default_workers() if workers is None else max(1, int(workers))
    threads = min(workers, numba.config.NUMBA_NUM_THREADS)
    previous = numba.get_num_threads()
    numba.set_num_threads(threads)
    try:
        return _counts_kernel(Xe, y0, A, B, ds.K, n_stride, workers)
    finally:
        numba.set_num_threads(previous)


def class_count_tensor(trees: Sequence[TreeParams], ds: Dataset, cfg: EvalConfig) -> np.ndarray:
    if not trees:
        raise ValueError("need at least one tree")
    depths = {t.depth for t in trees}
    if len(depths) != 1:
        raise ValueError("all trees must share the same depth")
    A = np.stack([t.a for t in trees])
    B = np.stack([t.b for t in trees])
    return count_tensor(A, B, ds, cfg.n_stride, cfg.workers, cfg.backend)


def fitness_from_counts(counts: np.ndarray, A, cfg: EvalConfig) -> np.ndarray | float:
    """Misclassifications + alpha * active splits + leaves with 0 < n_t < n_min.

    ``counts`` is one (SL, K) slice with ``A`` a tree or feature vector, or a
    (N, SL, K) tensor with ``A`` an (N, SB) feature matrix.
    """
    if isinstance(A, TreeParams):
        A = A.a
    counts = np.asarray(counts)
    A = np.asarray(A)
    n_t = counts.sum(axis=-1)
    n = n_t.sum(axis=-1)
    misclassified = n - counts.max(axis=-1).sum(axis=-1)
    violations = ((n_t > 0) & (n_t < cfg.n_min)).sum(axis=-1)
    active = (A >= 1).sum(axis=-1)
    f = misclassified + cfg.alpha * active + violations
    return float(f) if np.ndim(f) == 0 else f.astype(np.float64)


class _Evaluator:
    """Caches the padded feature matrix across generations of one DE run."""

    def __init__(self, ds: Dataset, th: ThresholdSets, cfg: EvalConfig):
        self.ds, self.th, self.cfg = ds, th, cfg
        self.Xe = _extended(ds)

    def __call__(self, S: np.ndarray) -> np.ndarray:
        A, B = decode_population(S, self.th)
        cfg = self.cfg
        counts = count_tensor(A, B, self.ds, cfg.n_stride, cfg.workers, cfg.backend, _Xe=self.Xe)
        return fitness_from_counts(counts, A, cfg)


def evaluate_population(pop, ds: Dataset, th: ThresholdSets, cfg: EvalConfig) -> np.ndarray:
    """Fitness of every individual; ``pop`` is a Population or an (N, 2*SB) gene matrix."""
    S = getattr(pop, "members", pop)
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    if S.shape[0] == 0:
        raise ValueError("population is empty")
    return _Evaluator(ds, th, cfg)(S)
