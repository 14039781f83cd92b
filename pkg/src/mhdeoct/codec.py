"""Mapping between real-valued DE individuals and trees.

An individual for a depth-``D`` tree is the vector ``(â_1..â_SB, b̂_1..b̂_SB)``
with ``â_t`` in ``[0, P+1)`` and ``b̂_t`` in ``[0, 1)``. The feature is
``floor(â_t)``; ``b̂_t`` indexes into the feature's threshold set, so every
real value in one cell of width ``1/(n_p+1)`` decodes to the same split.
"""

from __future__ import annotations

import numpy as np

from .data import ThresholdSets
from .tree import TreeParams

__all__ = ["n_genes", "clamp", "decode", "decode_population", "encode"]

_B_MAX = np.nextafter(1.0, 0.0)


def n_genes(depth: int) -> int:
    return 2 * (2**depth - 1)


def clamp(genes: np.ndarray, P: int) -> np.ndarray:
    """Project genes (one individual or a population matrix) into their half-open boxes."""
    genes = np.array(genes, dtype=np.float64)
    sb = genes.shape[-1] // 2
    genes[..., :sb] = np.clip(genes[..., :sb], 0.0, np.nextafter(float(P + 1), 0.0))
    genes[..., sb:] = np.clip(genes[..., sb:], 0.0, _B_MAX)
    return genes


def decode_population(S: np.ndarray, th: ThresholdSets) -> tuple[np.ndarray, np.ndarray]:
    """Decode an (N, 2*SB) matrix of clamped individuals into (A, B) split matrices."""
    S = np.atleast_2d(S)
    sb = S.shape[1] // 2
    A = np.floor(S[:, :sb]).astype(np.int64)
    active = A >= 1
    feat = np.where(active, A - 1, 0)
    n_p = th.n_unique[feat]
    # the min() guards against b̂ * (n_p + 1) rounding up to n_p + 1
    i = np.minimum(np.floor(S[:, sb:] * (n_p + 1)).astype(np.int64), n_p)
    B = np.where(active, th.padded[feat, i], 0.0)
    return A, B


def decode(ind: np.ndarray, th: ThresholdSets, P: int | None = None) -> TreeParams:
    ind = np.asarray(ind, dtype=np.float64)
    if P is not None and ind.size and ind[: ind.size // 2].max(initial=0.0) >= P + 1:
        raise ValueError("individual is not clamped to the feature box")
    depth = (ind.size // 2 + 1).bit_length() - 1
    A, B = decode_population(ind[None, :], th)
    return TreeParams(depth, A[0], B[0])


def encode(tree: TreeParams, th: ThresholdSets) -> np.ndarray:
    """Inverse of :func:`decode`, placing every gene at the centre of its decode cell.

    Thresholds that are not exactly in the feature's set snap to the nearest entry.
    """
    sb = tree.n_branch
    genes = np.empty(2 * sb)
    for t in range(sb):
        p = int(tree.a[t])
        if p == 0:
            genes[t], genes[sb + t] = 0.25, 0.0
            continue
        beta = th[p]
        i = int(np.argmin(np.abs(beta - tree.b[t])))  # 0-based position in the set
        genes[t] = p + 0.5
        genes[sb + t] = (i + 0.5) / len(beta)
    return genes
