"""Shared oracles and fixtures. Oracles are deliberately naive and independent of the package."""

from __future__ import annotations

import itertools
import sys

import numpy as np
import pytest

from l2nsga.instance import Instance


def brute_objectives(instance: Instance, x) -> tuple[float, float, float]:
    """Direct set arithmetic on the raw matrices, one chromosome at a time."""
    sel = [i for i, b in enumerate(x) if b]
    cost = sum(instance.cost[i] for i in sel) / sum(instance.cost)
    stm = set()
    br = set()
    for i in sel:
        stm |= {j for j in range(instance.statement_cov.shape[1]) if instance.statement_cov[i, j]}
        br |= {j for j in range(instance.branch_cov.shape[1]) if instance.branch_cov[i, j]}
    s_cov = sum(int(instance.statement_weights[j]) for j in stm)
    b_cov = sum(int(instance.branch_weights[j]) for j in br)
    return (
        cost,
        (instance.total_statement_weight - s_cov) / instance.total_statement_weight,
        (instance.total_branch_weight - b_cov) / instance.total_branch_weight,
    )


def pairwise_dominates(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def pareto_filter(points) -> set[tuple]:
    pts = set(map(tuple, points))
    return {p for p in pts if not any(pairwise_dominates(q, p) for q in pts)}


def exhaustive_front(instance: Instance) -> np.ndarray:
    """True Pareto front by enumerating all 2^n selections (objective vectors, sorted)."""
    from l2nsga.objectives import evaluate_population

    n = instance.num_tests
    X = np.array(list(itertools.product([False, True], repeat=n)), dtype=bool)
    F = evaluate_population(X, instance)
    return np.array(sorted(pareto_filter(F)))


def oracle_ranks(F) -> list[int]:
    """1-based Pareto ranks by repeatedly peeling non-dominated points (O(N^3))."""
    F = [tuple(r) for r in F]
    rank = [0] * len(F)
    left = set(range(len(F)))
    r = 1
    while left:
        front = {i for i in left if not any(pairwise_dominates(F[j], F[i]) for j in left)}
        for i in front:
            rank[i] = r
        left -= front
        r += 1
    return rank


def naive_upgma(D):
    """Average linkage from scratch: cluster distance = mean over all leaf pairs.

    Clusters are keyed by their smallest leaf; among equal distances the
    smallest (key, key) pair merges first. Returns scipy-style merges.
    """
    D = np.asarray(D)
    n = D.shape[0]
    clusters = {i: ([i], i) for i in range(n)}  # key -> (leaves, node id)
    merges, heights = [], []
    for step in range(n - 1):
        best = None
        keys = sorted(clusters)
        for a, b in itertools.combinations(keys, 2):
            la, lb = clusters[a][0], clusters[b][0]
            total = sum(D[i, j] for i in la for j in lb)
            d = total / (len(la) * len(lb))
            if best is None or d < best[0]:
                best = (d, a, b)
        d, a, b = best
        ida, idb = clusters[a][1], clusters[b][1]
        merges.append((min(ida, idb), max(ida, idb)))
        heights.append(d)
        clusters[a] = (clusters[a][0] + clusters[b][0], n + step)
        del clusters[b]
    return np.array(merges), np.array(heights)


def random_instance(rng, n, s, b, density=0.3, integer_cost=False, name="rand"):
    S = rng.random((n, s)) < density
    B = rng.random((n, b)) < density
    cost = rng.integers(1, 10, n).astype(float) if integer_cost else np.round(rng.random(n) * 10 + 0.1, 3)
    return Instance(name=name, statement_cov=S, branch_cov=B, cost=cost)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def worked_instance():
    """t1:{s1,s2} cost 5, t2:{s2,s3} cost 3, t3:{s3} cost 1; 4 statements, one branch each."""
    S = np.array([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 0]], dtype=bool)
    B = np.array([[1, 0], [0, 1], [0, 0]], dtype=bool)
    return Instance("toy", S, B, np.array([5.0, 3.0, 1.0]))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
