"""Objective evaluation and Pareto dominance.

Objective vectors are in minimization form::

    [selected cost / total cost, 1 - statement coverage, 1 - branch coverage]

Coverage is weighted over (possibly compacted) columns and divided by the raw
entity count, so raw and compacted instances give identical vectors.
"""

from __future__ import annotations

import numpy as np

from l2nsga._backend import kernels
from l2nsga.instance import Instance

NUM_OBJECTIVES = 3


class Evaluator:
    """Batch objective evaluation with an evaluation counter.

    Holds float copies of the coverage matrices so each batch is two BLAS
    products. Results do not depend on batch composition.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self.count = 0
        self._s = instance.statement_cov.astype(np.float32)
        self._b = instance.branch_cov.astype(np.float32)
        self._sw = instance.statement_weights.astype(np.float64)
        self._bw = instance.branch_weights.astype(np.float64)
        self._cost = np.ascontiguousarray(instance.cost)
        self._total_cost = float(kernels.selected_cost_sums(np.ones((1, instance.num_tests), dtype=bool), self._cost)[0])

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=bool)
        if X.ndim == 1:
            return self(X[None, :])[0]
        if X.shape[1] != self.instance.num_tests:
            raise ValueError(f"chromosome length {X.shape[1]} != number of tests {self.instance.num_tests}")
        self.count += X.shape[0]
        Xf = X.astype(np.float32)
        out = np.empty((X.shape[0], NUM_OBJECTIVES), dtype=np.float64)
        out[:, 0] = kernels.selected_cost_sums(np.ascontiguousarray(X), self._cost) / self._total_cost
        for col, cov, w, total in (
            (1, self._s, self._sw, self.instance.total_statement_weight),
            (2, self._b, self._bw, self.instance.total_branch_weight),
        ):
            if cov.shape[1] == 0:
                out[:, col] = 1.0
                continue
            covered = ((Xf @ cov) > 0).astype(np.float64) @ w
            out[:, col] = (total - covered) / total
        return out


def evaluate(chromosome, instance: Instance) -> np.ndarray:
    """Objective vector of one selection (bit ``i`` set = test ``i`` selected)."""
    chromosome = np.asarray(chromosome, dtype=bool)
    if chromosome.ndim != 1:
        raise ValueError("a chromosome is a 1-D bit vector")
    return Evaluator(instance)(chromosome)


def evaluate_population(X, instance: Instance) -> np.ndarray:
    return Evaluator(instance)(np.atleast_2d(X))


def dominates(a, b) -> bool:
    """True iff ``a`` Pareto-dominates ``b`` under minimization."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"arity mismatch: {a.shape} vs {b.shape}")
    return bool((a <= b).all() and (a < b).any())
