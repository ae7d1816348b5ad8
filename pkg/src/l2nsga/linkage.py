"""Linkage learning and the L2 crossover.

Gene columns of the population are clustered bottom-up (UPGMA on hamming
distances). Every node of the resulting tree except the root is a subset of
genes; recombination copies the donor's genes for a random half of those
subsets into a clone of the parent.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from l2nsga._backend import kernels
from l2nsga.engine import RunConfig, RunResult, evolve
from l2nsga.instance import Instance


def gene_distances(population) -> np.ndarray:
    """Hamming distance between every pair of gene columns (``n x n`` int matrix)."""
    X = np.asarray(population, dtype=bool)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty 2-D population of chromosomes")
    # float32 products are exact for counts below 2**24
    Xf = X.astype(np.float32)
    ones = Xf.sum(axis=0)
    both = Xf.T @ Xf
    return (ones[:, None] + ones[None, :] - 2.0 * both).astype(np.int64)


@dataclass(frozen=True, eq=False)
class LinkageTree:
    """Agglomeration history: ``merges[k]`` joins two cluster ids into id ``n + k``."""

    n: int
    merges: np.ndarray
    heights: np.ndarray

    @cached_property
    def membership(self) -> np.ndarray:
        """``(2n - 1) x n`` bool matrix; row ``k`` is the gene set of node ``k``."""
        M = np.zeros((2 * self.n - 1, self.n), dtype=bool)
        M[np.arange(self.n), np.arange(self.n)] = True
        for k, (a, b) in enumerate(self.merges):
            np.logical_or(M[a], M[b], out=M[self.n + k])
        return M

    @property
    def subsets(self) -> list[tuple[int, ...]]:
        """All ``2n - 1`` node subsets: leaves ``0..n-1`` then merges in order."""
        return [tuple(np.flatnonzero(row).tolist()) for row in self.membership]

    @property
    def root(self) -> tuple[int, ...]:
        return self.subsets[-1]


def upgma(d) -> LinkageTree:
    """Average-linkage (UPGMA) tree of a symmetric distance matrix.

    A cluster is identified by its smallest gene index; among equally close
    pairs the lexicographically smallest pair of identifiers merges first.
    Node ids in ``merges`` follow the usual convention: leaves ``0..n-1``,
    the node built at step ``k`` is ``n + k``.
    """
    D = np.asarray(d, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("distance matrix must be square")
    if D.shape[0] < 2:
        raise ValueError("UPGMA needs at least two genes")
    merges, heights, _ = kernels.upgma_merges(np.ascontiguousarray(D))
    return LinkageTree(n=D.shape[0], merges=merges, heights=heights)


class FOS:
    """Family of subsets used by the L2 crossover (root excluded).

    Built from explicit subsets, or from a linkage tree whose nodes (root
    excluded) become the subsets in node-id order.
    """

    def __init__(self, n: int, subsets=None, tree: LinkageTree | None = None):
        self.n = n
        self.tree = tree
        if tree is not None:
            self._membership = None
            return
        membership = np.zeros((len(subsets), n), dtype=bool)
        for k, s in enumerate(subsets):
            membership[k, list(s)] = True
        membership.setflags(write=False)
        self._membership = membership

    @property
    def membership(self) -> np.ndarray:
        """``len(self) x n`` bool matrix, one row per subset."""
        if self._membership is None:
            self._membership = self.tree.membership[:-1]
            self._membership.setflags(write=False)
        return self._membership

    def __len__(self):
        if self.tree is not None:
            return 2 * self.n - 2
        return self._membership.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FOS):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.membership, other.membership)

    def __hash__(self):
        return hash((self.n, self.membership.tobytes()))

    def __repr__(self):
        return f"FOS(n={self.n}, subsets={self.subsets!r})"

    @cached_property
    def subsets(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(np.flatnonzero(row).tolist()) for row in self.membership)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Membership as float32, for batched unions via a matrix product."""
        return self.membership.astype(np.float32)

    def dump(self) -> str:
        """One subset per line, sorted gene indices separated by spaces."""
        return "".join(" ".join(map(str, s)) + "\n" for s in self.subsets)


def extract_fos(tree: LinkageTree) -> FOS:
    return FOS(tree.n, tree=tree)


def learn_fos(X: np.ndarray) -> FOS:
    X = np.asarray(X, dtype=bool)
    if X.shape[1] < 2:
        # a single gene has only the root subset, which is never used
        return FOS(X.shape[1], subsets=())
    return extract_fos(upgma(gene_distances(X)))


def infer_model(population, generation: int, cache: FOS | None = None, period: int = 2) -> FOS:
    """Fresh FOS on generations ``0, period, 2*period, ...``; otherwise ``cache``."""
    if generation % period == 0:
        return learn_fos(population)
    if cache is None:
        raise ValueError(f"no cached model for generation {generation}")
    return cache


def copy_subsets(parent, donor, subsets) -> np.ndarray:
    """Clone ``parent`` and overwrite the genes in ``subsets`` with the donor's."""
    parent = np.asarray(parent, dtype=bool)
    donor = np.asarray(donor, dtype=bool)
    if parent.shape != donor.shape:
        raise ValueError("parent and donor differ in length")
    child = parent.copy()
    genes = sorted(set().union(*map(set, subsets))) if subsets else []
    child[genes] = donor[genes]
    return child


def num_copied(fos: FOS) -> int:
    return len(fos) // 2


def l2_crossover(parent, donor, fos: FOS, rng: np.random.Generator) -> np.ndarray:
    """Copy the donor's genes for ``len(fos) // 2`` random FOS subsets into the parent."""
    parent = np.asarray(parent, dtype=bool)
    if parent.shape[-1] != fos.n:
        raise ValueError(f"chromosome length {parent.shape[-1]} != FOS gene count {fos.n}")
    picked = rng.choice(len(fos), size=num_copied(fos), replace=False)
    return copy_subsets(parent, donor, [fos.subsets[k] for k in picked])


def l2_crossover_batch(parents: np.ndarray, donors: np.ndarray, fos: FOS, rng: np.random.Generator) -> np.ndarray:
    """Row-wise :func:`l2_crossover`; every child draws its own subsets."""
    parents = np.asarray(parents, dtype=bool)
    donors = np.asarray(donors, dtype=bool)
    if parents.shape != donors.shape:
        raise ValueError("parents and donors differ in shape")
    if parents.shape[1] != fos.n:
        raise ValueError(f"chromosome length {parents.shape[1]} != FOS gene count {fos.n}")
    k = num_copied(fos)
    if k == 0:
        return parents.copy()
    keys = rng.random((parents.shape[0], len(fos)))
    picked = np.argpartition(keys, k - 1, axis=1)[:, :k]
    if fos.tree is not None:
        # FOS rows are tree node ids; the extra last column is the (never chosen) root
        chosen = np.zeros((keys.shape[0], len(fos) + 1), dtype=bool)
        np.put_along_axis(chosen, picked, True, axis=1)
        from_donor = kernels.tree_unions(chosen, fos.tree.merges, fos.n)
    else:
        chosen = np.zeros(keys.shape, dtype=np.float32)
        np.put_along_axis(chosen, picked, 1.0, axis=1)
        from_donor = (chosen @ fos.matrix) > 0
    return np.where(from_donor, donors, parents)


class L2Variation:
    """L2 crossover with a linkage model refreshed every ``period`` generations."""

    def __init__(self, period: int = 2, source: str = "population"):
        self.period = period
        self.source = source
        self.fos: FOS | None = None
        self.inferences = 0

    def prepare(self, generation, X, rank):
        if generation % self.period == 0:
            sample = X[rank == 1] if self.source == "first_front" else X
            self.fos = infer_model(sample, generation, self.fos, self.period)
            self.inferences += 1

    def __call__(self, parents, donors, rng):
        return l2_crossover_batch(parents, donors, self.fos, rng)


def run_l2nsga(config: RunConfig, instance: Instance, on_generation=None) -> RunResult:
    if config.algorithm != "l2nsga":
        raise ValueError("run_l2nsga needs algorithm='l2nsga'")
    variation = L2Variation(config.inference_period, config.linkage_source)
    return evolve(config, instance, variation, on_generation)
