"""NSGA-II machinery and the generational loop shared by NSGA-II and L2-NSGA.

Populations are kept as arrays: ``X`` (bool, ``N x n`` chromosomes) and ``F``
(``N x 3`` objective vectors). Ranks are 1-based.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from l2nsga._backend import kernels
from l2nsga.instance import Instance, compact
from l2nsga.objectives import Evaluator

ALGORITHMS = ("nsga2", "l2nsga")
LINKAGE_SOURCES = ("population", "first_front")


@dataclass
class RunConfig:
    population_size: int = 100
    max_evaluations: int = 20_000
    crossover_probability: float = 0.8
    mutation_probability: float | None = None  # None -> 1 / num_tests
    seed: int = 0
    algorithm: str = "nsga2"
    linkage_source: str = "population"
    inference_period: int = 2
    snapshot_every: int = 0  # keep the first front every k generations; 0 = off

    def validate(self) -> "RunConfig":
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError("population_size must be even and >= 2")
        if self.max_evaluations < self.population_size:
            raise ValueError("max_evaluations must be >= population_size")
        if not 0.0 <= self.crossover_probability <= 1.0:
            raise ValueError("crossover_probability must lie in [0, 1]")
        if self.mutation_probability is not None and not 0.0 <= self.mutation_probability <= 1.0:
            raise ValueError("mutation_probability must lie in [0, 1]")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.linkage_source not in LINKAGE_SOURCES:
            raise ValueError(f"linkage_source must be one of {LINKAGE_SOURCES}")
        if self.inference_period < 1:
            raise ValueError("inference_period must be >= 1")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EvaluatedSolution:
    chromosome: np.ndarray
    objectives: np.ndarray
    rank: int = 0
    crowding: float = 0.0


@dataclass
class RunResult:
    algorithm: str
    seed: int
    config: RunConfig
    instance_name: str
    front_X: np.ndarray
    front_F: np.ndarray
    population_X: np.ndarray
    population_F: np.ndarray
    evaluations: int
    generations: int
    wall_time: float
    linkage_inferences: int = 0
    snapshots: list = field(default_factory=list)  # (generation, first-front F)

    def front(self) -> list[EvaluatedSolution]:
        return [EvaluatedSolution(x, f, 1, 0.0) for x, f in zip(self.front_X, self.front_F)]


# --------------------------------------------------------------------- operators


def _objectives(population) -> np.ndarray:
    if isinstance(population, np.ndarray):
        return np.atleast_2d(population).astype(np.float64, copy=False)
    return np.array([np.asarray(s.objectives, dtype=np.float64) for s in population])


def fast_nondominated_sort(population) -> list[np.ndarray]:
    """Split a population into Pareto fronts.

    Accepts an ``N x m`` objective array or a sequence of
    :class:`EvaluatedSolution` (ranks are then written back). Returns index
    arrays, best front first, each in original order.
    """
    F = _objectives(population)
    if F.shape[0] == 0:
        raise ValueError("cannot sort an empty population")
    ranks = kernels.nondominated_ranks(np.ascontiguousarray(F))
    fronts = [np.flatnonzero(ranks == r) for r in range(int(ranks.max()) + 1)]
    if not isinstance(population, np.ndarray):
        for r, idx in enumerate(fronts, start=1):
            for i in idx:
                population[i].rank = r
    return fronts


def crowding_distance(front) -> np.ndarray:
    """Crowding distance of each member of one front.

    Boundary members get ``inf``; an objective with zero range adds nothing.
    Writes ``crowding`` back when given solutions.
    """
    F = _objectives(front)
    n, m = F.shape
    dist = np.zeros(n, dtype=np.float64)
    if n <= 2:
        dist[:] = np.inf
    else:
        for k in range(m):
            order = np.argsort(F[:, k], kind="stable")
            col = F[order, k]
            span = col[-1] - col[0]
            dist[order[0]] = dist[order[-1]] = np.inf
            if span > 0:
                dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    if not isinstance(front, np.ndarray):
        for s, d in zip(front, dist):
            s.crowding = float(d)
    return dist


def rank_and_crowding(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rank = np.empty(F.shape[0], dtype=np.int64)
    crowd = np.empty(F.shape[0], dtype=np.float64)
    for r, idx in enumerate(fast_nondominated_sort(F), start=1):
        rank[idx] = r
        crowd[idx] = crowding_distance(F[idx])
    return rank, crowd


def binary_tournament(rank: np.ndarray, crowding: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    """Indices of ``size`` binary-tournament winners.

    Contestants are two distinct members; lower rank wins, then larger
    crowding, then a fair coin.
    """
    n = rank.shape[0]
    if n < 2:
        raise ValueError("tournament needs at least two members")
    a = rng.integers(0, n, size)
    b = rng.integers(0, n - 1, size)
    b += b >= a
    coin = rng.random(size) < 0.5
    a_wins = (rank[a] < rank[b]) | (
        (rank[a] == rank[b]) & ((crowding[a] > crowding[b]) | ((crowding[a] == crowding[b]) & coin))
    )
    return np.where(a_wins, a, b)


def tournament_select(population: Sequence[EvaluatedSolution], rng: np.random.Generator) -> EvaluatedSolution:
    rank = np.array([s.rank for s in population])
    crowd = np.array([s.crowding for s in population], dtype=np.float64)
    return population[int(binary_tournament(rank, crowd, rng, 1)[0])]


def scattered_crossover(p1: np.ndarray, p2: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform crossover: a fair coin per gene picks the source parent."""
    p1 = np.asarray(p1, dtype=bool)
    p2 = np.asarray(p2, dtype=bool)
    if p1.shape != p2.shape:
        raise ValueError("parents differ in length")
    return np.where(rng.random(p1.shape) < 0.5, p1, p2)


def bit_flip_mutation(c: np.ndarray, p_m: float, rng: np.random.Generator) -> np.ndarray:
    if not 0.0 <= p_m <= 1.0:
        raise ValueError("mutation probability must lie in [0, 1]")
    c = np.asarray(c, dtype=bool)
    return c ^ (rng.random(c.shape) < p_m)


def environmental_selection(F: np.ndarray, population_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Elitist survivor selection over a merged pool ``F``.

    Returns ``(indices, rank, crowding)`` of the survivors. Whole fronts are
    taken while they fit; the first front that does not fit is cut by
    descending crowding distance, ties by pool index.
    """
    F = np.asarray(F, dtype=np.float64)
    if F.shape[0] < population_size:
        raise ValueError("pool is smaller than the population size")
    keep, ranks, crowds = [], [], []
    taken = 0
    for r, idx in enumerate(fast_nondominated_sort(F), start=1):
        d = crowding_distance(F[idx])
        if taken + idx.size <= population_size:
            keep.append(idx)
            ranks.append(np.full(idx.size, r))
            crowds.append(d)
            taken += idx.size
            if taken == population_size:
                break
            continue
        order = np.argsort(-d, kind="stable")[: population_size - taken]
        keep.append(idx[order])
        ranks.append(np.full(order.size, r))
        crowds.append(d[order])
        break
    return np.concatenate(keep), np.concatenate(ranks).astype(np.int64), np.concatenate(crowds)


def initial_population(
    config: RunConfig, instance: Instance, rng: np.random.Generator | None = None, evaluator: Evaluator | None = None
) -> list[EvaluatedSolution]:
    rng = np.random.default_rng(config.seed) if rng is None else rng
    evaluator = Evaluator(instance) if evaluator is None else evaluator
    X = rng.random((config.population_size, instance.num_tests)) < 0.5
    F = evaluator(X)
    return [EvaluatedSolution(x, f) for x, f in zip(X, F)]


# ------------------------------------------------------------------------- loop


class Variation(Protocol):
    """Crossover strategy plugged into :func:`evolve`.

    ``prepare`` is called once per generation before any parent is picked;
    ``__call__`` maps parent and donor rows to children.
    """

    inferences: int

    def prepare(self, generation: int, X: np.ndarray, rank: np.ndarray) -> None: ...

    def __call__(self, parents: np.ndarray, donors: np.ndarray, rng: np.random.Generator) -> np.ndarray: ...


class ScatteredVariation:
    inferences = 0

    def prepare(self, generation, X, rank):
        pass

    def __call__(self, parents, donors, rng):
        return scattered_crossover(parents, donors, rng)


def evolve(
    config: RunConfig,
    instance: Instance,
    variation: Variation,
    on_generation: Callable[[int, np.ndarray, np.ndarray, np.ndarray], None] | None = None,
) -> RunResult:
    """Generational elitist loop; one child per tournament pair.

    The initial population counts against ``max_evaluations``; the last
    generation is shortened so the budget is hit exactly.
    ``on_generation(g, X, F, rank)`` sees the population after each step
    (``g = 0`` is the initial population).
    """
    config.validate()
    start = time.perf_counter()
    problem = compact(instance)
    evaluator = Evaluator(problem)
    rng = np.random.default_rng(config.seed)
    n = problem.num_tests
    N = config.population_size
    p_m = 1.0 / n if config.mutation_probability is None else config.mutation_probability

    pop = initial_population(config, problem, rng, evaluator)
    X = np.array([s.chromosome for s in pop])
    F = np.array([s.objectives for s in pop])
    rank, crowd = rank_and_crowding(F)
    snapshots = []
    if on_generation is not None:
        on_generation(0, X, F, rank)

    generation = 0
    while evaluator.count < config.max_evaluations:
        m = min(N, config.max_evaluations - evaluator.count)
        variation.prepare(generation, X, rank)
        parents = binary_tournament(rank, crowd, rng, m)
        donors = binary_tournament(rank, crowd, rng, m)
        crossed = rng.random(m) < config.crossover_probability
        children = variation(X[parents], X[donors], rng)
        children = np.where(crossed[:, None], children, X[parents])
        children = bit_flip_mutation(children, p_m, rng)

        XR = np.concatenate([X, children])
        FR = np.concatenate([F, evaluator(children)])
        keep, rank, crowd = environmental_selection(FR, N)
        X, F = XR[keep], FR[keep]
        generation += 1
        if config.snapshot_every and generation % config.snapshot_every == 0:
            snapshots.append((generation, F[rank == 1].copy()))
        if on_generation is not None:
            on_generation(generation, X, F, rank)

    first = np.flatnonzero(rank == 1)
    _, uniq = np.unique(X[first], axis=0, return_index=True)
    first = first[np.sort(uniq)]
    return RunResult(
        algorithm=config.algorithm,
        seed=config.seed,
        config=config,
        instance_name=instance.name,
        front_X=X[first],
        front_F=F[first],
        population_X=X,
        population_F=F,
        evaluations=evaluator.count,
        generations=generation,
        wall_time=time.perf_counter() - start,
        linkage_inferences=variation.inferences,
        snapshots=snapshots,
    )


def run_nsga2(config: RunConfig, instance: Instance, on_generation=None) -> RunResult:
    if config.algorithm != "nsga2":
        raise ValueError("run_nsga2 needs algorithm='nsga2'")
    return evolve(config, instance, ScatteredVariation(), on_generation)


def run(config: RunConfig, instance: Instance, on_generation=None) -> RunResult:
    """Dispatch on ``config.algorithm``."""
    if config.algorithm == "l2nsga":
        from l2nsga.linkage import run_l2nsga

        return run_l2nsga(config, instance, on_generation)
    return run_nsga2(config, instance, on_generation)
