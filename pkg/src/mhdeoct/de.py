"""Differential evolution over encoded trees (DEOCT).

Mutation perturbs the previous generation's best individual,
``v = s_best + M * (s_r1 - s_r2)``, with a fresh ``M ~ U(0, 1)`` per individual
and generation. Binomial crossover and greedy ``<=`` selection follow; the
whole trial population is scored in one batched fitness call per generation.

Randomness comes from numpy's PCG64. The run seed feeds a ``SeedSequence``
that is split into four independent sub-streams (initial population, ``M``,
crossover, partner indices), all drawn on the calling thread, so a fixed
seed reproduces the run bit for bit whatever the evaluation backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codec import clamp, decode, encode, n_genes
from .data import Dataset, ThresholdSets
from .fitness import EvalConfig, _Evaluator
from .tree import TreeParams, assign_leaf_classes

__all__ = [
    "DeConfig",
    "Population",
    "DeResult",
    "make_streams",
    "init_population",
    "mutate",
    "crossover",
    "select",
    "run_deoct",
]

_MODES = {"normal": (100, 600), "long": (200, 4000)}


@dataclass(frozen=True)
class DeConfig:
    """Population size ``N``, generations ``G``, crossover rate ``CR`` and seed.

    Use :meth:`for_mode` for the standard presets (normal: 100 x 600,
    long: 200 x 4000); explicit ``N``/``G`` override the preset.
    """

    N: int = 100
    G: int = 600
    CR: float = 0.1
    seed: int = 0
    mode: str = "normal"

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {sorted(_MODES)}")
        if self.N < 3:
            raise ValueError("population size must be >= 3")
        if self.G < 0:
            raise ValueError("generations must be >= 0")
        if not 0.0 <= self.CR <= 1.0:
            raise ValueError("CR must lie in [0, 1]")

    @classmethod
    def for_mode(cls, mode: str = "normal", **overrides) -> "DeConfig":
        if mode not in _MODES:
            raise ValueError(f"mode must be one of {sorted(_MODES)}")
        N, G = _MODES[mode]
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return cls(**{"N": N, "G": G, "mode": mode, **overrides})

    def replace(self, **changes) -> "DeConfig":
        return DeConfig(**{**self.__dict__, **changes})


@dataclass
class Population:
    members: np.ndarray  # (N, 2*SB) clamped genes
    fitnesses: np.ndarray
    P: int
    best_index: int = 0
    generation: int = 0

    @property
    def N(self) -> int:
        return self.members.shape[0]

    @property
    def best(self) -> np.ndarray:
        return self.members[self.best_index]

    @property
    def best_fitness(self) -> float:
        return float(self.fitnesses[self.best_index])


@dataclass
class DeResult:
    tree: TreeParams
    fitness: float
    history: np.ndarray  # best fitness after initialisation, then after each generation
    population: Population = field(repr=False)

    def __iter__(self):
        # unpacks as (tree, fitness, history)
        return iter((self.tree, self.fitness, self.history))


def make_streams(seed) -> dict[str, np.random.Generator]:
    """Independent PCG64 generators for each purpose, derived from one seed."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    names = ("init", "M", "crossover", "partners")
    return {name: np.random.Generator(np.random.PCG64(child)) for name, child in zip(names, ss.spawn(len(names)))}


def init_population(
    warm: list[TreeParams],
    cfg: DeConfig,
    th: ThresholdSets,
    D: int,
    P: int,
    rng: np.random.Generator | None = None,
) -> Population:
    """Encoded warm-start trees first, then uniform draws from the gene box.

    Fitnesses are left at ``inf`` until the caller evaluates the population.
    """
    if len(warm) > cfg.N:
        raise ValueError(f"{len(warm)} warm starts exceed the population size {cfg.N}")
    for w in warm:
        if w.depth != D:
            raise ValueError(f"warm-start tree has depth {w.depth}, expected {D}")
    rng = make_streams(cfg.seed)["init"] if rng is None else rng
    sb = 2**D - 1
    n_rand = cfg.N - len(warm)
    random_part = np.hstack([rng.uniform(0.0, P + 1, (n_rand, sb)), rng.uniform(0.0, 1.0, (n_rand, sb))])
    S = np.vstack([np.array([encode(w, th) for w in warm]).reshape(len(warm), n_genes(D)), random_part])
    return Population(clamp(S, P), np.full(cfg.N, np.inf), P)


def _draw_partners(rng: np.random.Generator, N: int, size: int) -> tuple[np.ndarray, np.ndarray]:
    # r2 is uniform over the N-1 indices different from r1
    r1 = rng.integers(0, N, size)
    r2 = (r1 + 1 + rng.integers(0, N - 1, size)) % N
    return r1, r2


def mutate(
    pop: Population,
    r: int,
    M: float,
    rng: np.random.Generator | None = None,
    partners: tuple[int, int] | None = None,
) -> np.ndarray:
    """Mutant for slot ``r``: previous best plus ``M`` times a random difference.

    Partners ``r1 != r2`` are drawn from ``rng`` unless given; either may equal ``r``.
    """
    if partners is None:
        rng = np.random.default_rng() if rng is None else rng
        r1, r2 = (int(v[0]) for v in _draw_partners(rng, pop.N, 1))
    else:
        r1, r2 = partners
    S = pop.members
    return clamp(pop.best + M * (S[r1] - S[r2]), pop.P)


def _crossover_mask(rng: np.random.Generator, shape: tuple[int, int], CR: float) -> np.ndarray:
    mask = rng.random(shape) <= CR
    forced = rng.integers(0, shape[1], shape[0])
    mask[np.arange(shape[0]), forced] = True
    return mask


def crossover(parent: np.ndarray, mutant: np.ndarray, CR: float, stream: np.random.Generator) -> np.ndarray:
    """Binomial crossover with one forced mutant gene."""
    parent, mutant = np.asarray(parent), np.asarray(mutant)
    if parent.shape != mutant.shape:
        raise ValueError("parent and mutant lengths differ")
    mask = _crossover_mask(stream, (1, parent.size), CR)[0]
    return np.where(mask, mutant, parent)


def select(parent_f: float, trial_f: float) -> bool:
    """True when the trial replaces the parent (ties go to the trial)."""
    return trial_f <= parent_f


def run_deoct(
    ds: Dataset,
    th: ThresholdSets,
    D: int,
    oct: EvalConfig,
    cfg: DeConfig,
    warm: list[TreeParams] = (),
    seed=None,
) -> DeResult:
    """Optimise a depth-``D`` tree; returns ``(tree, fitness, history)``.

    ``seed`` overrides ``cfg.seed`` and may be a ``SeedSequence``.
    """
    if ds.n == 0:
        raise ValueError("cannot optimise on an empty dataset")
    streams = make_streams(cfg.seed if seed is None else seed)
    pop = init_population(list(warm), cfg, th, D, ds.P, streams["init"])
    evaluate = _Evaluator(ds, th, oct)
    pop.fitnesses = evaluate(pop.members)
    pop.best_index = int(np.argmin(pop.fitnesses))
    history = [pop.best_fitness]
    N, L = pop.members.shape
    rows = np.arange(N)
    for g in range(1, cfg.G + 1):
        S = pop.members
        M = streams["M"].random(N)
        r1, r2 = _draw_partners(streams["partners"], N, N)
        V = clamp(pop.best[None, :] + M[:, None] * (S[r1] - S[r2]), ds.P)
        U = np.where(_crossover_mask(streams["crossover"], (N, L), cfg.CR), V, S)
        fU = evaluate(U)
        keep = select(pop.fitnesses, fU)
        S[keep] = U[keep]
        pop.fitnesses[keep] = fU[keep]
        pop.best_index = int(rows[np.argmin(pop.fitnesses)])
        pop.generation = g
        history.append(pop.best_fitness)
    tree, _ = assign_leaf_classes(decode(pop.best, th), ds)
    return DeResult(tree, pop.best_fitness, np.array(history), pop)
