import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import exhaustive_front, oracle_ranks, random_instance
from l2nsga.engine import (
    EvaluatedSolution,
    RunConfig,
    binary_tournament,
    bit_flip_mutation,
    crowding_distance,
    environmental_selection,
    fast_nondominated_sort,
    initial_population,
    run,
    run_nsga2,
    scattered_crossover,
    tournament_select,
)
from l2nsga.instance import Instance


def test_sort_example():
    F = np.array([(1, 2), (2, 1), (2, 2), (3, 3)], float)
    fronts = fast_nondominated_sort(F)
    assert [f.tolist() for f in fronts] == [[0, 1], [2], [3]]


def test_sort_single_and_duplicates():
    assert [f.tolist() for f in fast_nondominated_sort(np.array([[0.5, 0.5]]))] == [[0]]
    fronts = fast_nondominated_sort(np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 0.0]]))
    assert [f.tolist() for f in fronts] == [[0, 1, 2]]
    with pytest.raises(ValueError):
        fast_nondominated_sort(np.zeros((0, 3)))


def test_sort_writes_ranks_back():
    pop = [EvaluatedSolution(np.zeros(1, bool), np.array(f, float)) for f in [(1, 2), (2, 2), (0, 3)]]
    fast_nondominated_sort(pop)
    assert [s.rank for s in pop] == [1, 2, 1]


@settings(max_examples=500, deadline=None)
@given(
    st.integers(1, 64).flatmap(
        lambda n: st.lists(st.lists(st.integers(0, 5), min_size=3, max_size=3), min_size=n, max_size=n)
    )
)
def test_sort_matches_pairwise_oracle(points):
    F = np.array(points, float)
    rank = np.empty(len(F), int)
    for r, idx in enumerate(fast_nondominated_sort(F), start=1):
        assert list(idx) == sorted(idx)
        rank[idx] = r
    assert rank.tolist() == oracle_ranks(F)


def test_crowding_examples():
    assert np.isinf(crowding_distance(np.array([[0.0, 1.0], [1.0, 0.0]]))).all()
    d = crowding_distance(np.array([[0, 1], [0.5, 0.5], [1, 0]], float))
    assert np.isinf(d[0]) and np.isinf(d[2]) and d[1] == 2.0
    d = crowding_distance(np.array([[0, 1, 3], [0.5, 0.5, 3], [1, 0, 3]], float))
    assert d[1] == 2.0


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(3, 12))
def test_crowding_order_independent(seed, n):
    rng = np.random.default_rng(seed)
    F = rng.random((n, 3))
    perm = rng.permutation(n)
    assert np.array_equal(crowding_distance(F)[perm], crowding_distance(F[perm]))


def test_tournament_comparator():
    rng = np.random.default_rng(0)
    rank = np.array([1, 3])
    crowd = np.array([0.0, 5.0])
    assert (binary_tournament(rank, crowd, rng, 200) == 0).all()
    rank = np.array([2, 2])
    crowd = np.array([np.inf, 0.4])
    assert (binary_tournament(rank, crowd, rng, 200) == 0).all()
    with pytest.raises(ValueError):
        binary_tournament(np.array([1]), np.array([0.0]), rng, 1)


def test_tournament_coin_is_fair():
    rng = np.random.default_rng(1)
    wins = binary_tournament(np.array([1, 1]), np.array([1.0, 1.0]), rng, 10_000)
    assert 0.47 <= wins.mean() <= 0.53


def test_tournament_contestants_distinct():
    # with distinct contestants the worst of three can never win
    rng = np.random.default_rng(2)
    wins = binary_tournament(np.array([1, 1, 2]), np.array([1.0, 1.0, 1.0]), rng, 5000)
    assert (wins != 2).all()
    rank = np.array([1, 2])
    assert (binary_tournament(rank, np.zeros(2), rng, 500) == 0).all()


def test_tournament_select_solutions():
    pop = [EvaluatedSolution(np.zeros(2, bool), np.zeros(3), rank=r, crowding=0.0) for r in (1, 4)]
    assert tournament_select(pop, np.random.default_rng(0)) is pop[0]


def test_scattered_crossover():
    rng = np.random.default_rng(0)
    p = np.array([1, 0, 1, 1, 0], bool)
    assert np.array_equal(scattered_crossover(p, p, rng), p)
    zeros, ones = np.zeros(4, bool), np.ones(4, bool)
    seen = {tuple(scattered_crossover(zeros, ones, rng)) for _ in range(2000)}
    assert len(seen) == 16
    a = scattered_crossover(zeros, ones, np.random.default_rng(5))
    b = scattered_crossover(zeros, ones, np.random.default_rng(5))
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        scattered_crossover(zeros, np.ones(3, bool), rng)


def test_mutation():
    rng = np.random.default_rng(0)
    c = rng.random(50) < 0.5
    assert np.array_equal(bit_flip_mutation(c, 0.0, rng), c)
    assert np.array_equal(bit_flip_mutation(c, 1.0, rng), ~c)
    X = np.zeros((10_000, 100), bool)
    flips = bit_flip_mutation(X, 0.01, rng).sum(axis=1)
    assert 0.9 <= flips.mean() <= 1.1
    with pytest.raises(ValueError):
        bit_flip_mutation(c, 1.5, rng)


def test_selection_single_front_keeps_most_spread():
    # seven mutually non-dominated points on a line; keep 4
    x = np.array([0.0, 0.1, 0.15, 0.5, 0.55, 0.9, 1.0])
    F = np.column_stack([x, 1 - x])
    keep, rank, crowd = environmental_selection(F, 4)
    d = crowding_distance(F)
    assert set(keep.tolist()) == set(np.argsort(-d, kind="stable")[:4].tolist())
    assert (rank == 1).all()


def test_selection_first_front_exceeds():
    F = np.array([[0, 1], [0.3, 0.7], [0.6, 0.4], [1, 0], [1, 1]], float)
    keep, rank, _ = environmental_selection(F, 3)
    assert set(keep.tolist()) <= {0, 1, 2, 3} and len(keep) == 3


def test_selection_hand_trace():
    # fronts: {0, 1}, {2}, {3}; keep 3 -> whole F1 plus F2
    F = np.array([[1, 2], [2, 1], [2, 2], [3, 3]], float)
    keep, rank, crowd = environmental_selection(F, 3)
    assert keep.tolist() == [0, 1, 2]
    assert rank.tolist() == [1, 1, 2]
    assert np.isinf(crowd).all()
    # keep 1 -> F1 cut by crowding; both are boundary (inf) so index order decides
    keep, _, _ = environmental_selection(F, 1)
    assert keep.tolist() == [0]


def test_initial_population():
    inst = random_instance(np.random.default_rng(0), 50, 20, 10)
    cfg = RunConfig(seed=4)
    pop = initial_population(cfg, inst)
    assert len(pop) == 100 and all(s.chromosome.shape == (50,) for s in pop)
    again = initial_population(cfg, inst)
    assert all(np.array_equal(a.chromosome, b.chromosome) for a, b in zip(pop, again))
    bits = np.concatenate([s.chromosome for s in pop])[:1000]
    assert 0.45 <= bits.mean() <= 0.55


def test_config_validation():
    for bad in (
        dict(population_size=3),
        dict(population_size=0),
        dict(max_evaluations=10),
        dict(crossover_probability=1.2),
        dict(mutation_probability=-0.1),
        dict(algorithm="moead"),
        dict(linkage_source="elite"),
    ):
        with pytest.raises(ValueError):
            RunConfig(**bad).validate()


def test_trivial_single_test_instance():
    inst = Instance("one", np.ones((1, 3), bool), np.ones((1, 2), bool), np.array([2.0]))
    res = run_nsga2(RunConfig(max_evaluations=400), inst)
    assert sorted(map(tuple, res.front_F)) == [(0.0, 1.0, 1.0), (1.0, 0.0, 0.0)]


def test_budget_and_generations():
    inst = random_instance(np.random.default_rng(1), 20, 15, 10)
    res = run_nsga2(RunConfig(max_evaluations=20_000), inst)
    assert res.evaluations == 20_000 and res.generations == 199
    res = run_nsga2(RunConfig(max_evaluations=1050), inst)
    assert res.evaluations == 1050 and res.generations == 10
    assert res.population_X.shape == (100, 20)


def test_population_size_constant_and_elitist():
    inst = random_instance(np.random.default_rng(2), 12, 10, 6)
    sizes, fronts = [], []

    def watch(g, X, F, rank):
        sizes.append(len(X))
        fronts.append(F[rank == 1].copy())

    run_nsga2(RunConfig(max_evaluations=3000, seed=3), inst, on_generation=watch)
    assert set(sizes) == {100}
    # the true front of this instance has fewer than 100 points, so F1 never overflows
    assert len(exhaustive_front(inst)) < 100
    for prev, cur in zip(fronts, fronts[1:]):
        dominated = (prev[:, None, :] <= cur[None, :, :]).all(2) & (prev[:, None, :] < cur[None, :, :]).any(2)
        assert not dominated.any()


def test_nsga2_recovers_exact_front():
    inst = random_instance(np.random.default_rng(10), 10, 12, 8)
    res = run_nsga2(RunConfig(seed=0), inst)
    want = exhaustive_front(inst)
    got = np.array(sorted(set(map(tuple, res.front_F))))
    assert got.shape == want.shape and np.allclose(got, want, atol=1e-12, rtol=0)


def test_determinism_same_seed():
    inst = random_instance(np.random.default_rng(4), 30, 20, 10)
    a = run(RunConfig(seed=9, max_evaluations=2000), inst)
    b = run(RunConfig(seed=9, max_evaluations=2000), inst)
    assert np.array_equal(a.front_X, b.front_X) and np.array_equal(a.front_F, b.front_F)
    assert np.array_equal(a.population_X, b.population_X)


def test_crossover_skip_clones_parent():
    # p_c = 0 and p_m = 0: children are clones, so the population only loses diversity
    inst = random_instance(np.random.default_rng(5), 16, 10, 6)
    init = initial_population(RunConfig(seed=1), inst)
    X0 = {tuple(s.chromosome) for s in init}
    res = run_nsga2(RunConfig(seed=1, crossover_probability=0.0, mutation_probability=0.0, max_evaluations=600), inst)
    assert {tuple(x) for x in res.population_X} <= X0


def test_front_is_duplicate_free():
    inst = random_instance(np.random.default_rng(6), 8, 5, 3)
    res = run_nsga2(RunConfig(max_evaluations=2000), inst)
    assert len({tuple(x) for x in res.front_X}) == len(res.front_X)
    sols = res.front()
    assert all(s.rank == 1 for s in sols)
    assert math.isclose(sum(s.objectives[0] for s in sols), res.front_F[:, 0].sum())
