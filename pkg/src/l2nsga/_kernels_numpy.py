"""Pure-numpy versions of the hot kernels.

Every function here has a twin in ``_kernels_numba`` with the same signature
and bit-identical output. The numba twins are loop-based; these are
vectorized so the package stays usable without a JIT.
"""

import numpy as np


def nondominated_ranks(F):
    """0-based Pareto rank of every row of ``F`` (minimization)."""
    n = F.shape[0]
    le = (F[:, None, :] <= F[None, :, :]).all(axis=2)
    lt = (F[:, None, :] < F[None, :, :]).any(axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    counts = dom.sum(axis=0)
    ranks = np.full(n, -1, dtype=np.int64)
    remaining = np.ones(n, dtype=bool)
    rank = 0
    while remaining.any():
        front = remaining & (counts == 0)
        ranks[front] = rank
        remaining &= ~front
        counts = counts - dom[front].sum(axis=0)
        rank += 1
    return ranks


def selected_cost_sums(X, cost):
    """Sum of ``cost`` over the selected columns of each row, added in column order.

    Accumulating column by column keeps every row's rounding independent of
    how many rows share the batch.
    """
    acc = np.zeros(X.shape[0], dtype=np.float64)
    for j in range(X.shape[1]):
        acc += np.where(X[:, j], cost[j], 0.0)
    return acc


def _row_nearest(S, sizes, active, rows):
    """Nearest active neighbour of each row in ``rows``; ties go to the lower slot."""
    cols = np.flatnonzero(active)
    d = S[np.ix_(rows, cols)] / np.outer(sizes[rows], sizes[cols])
    d[cols[None, :] == rows[:, None]] = np.inf
    pick = d.argmin(axis=1)  # first minimum = lowest slot
    return cols[pick], d[np.arange(rows.size), pick]


def upgma_merges(D):
    """Average-linkage agglomeration of an ``n x n`` distance matrix.

    Returns ``(merges, heights, sizes)``. ``merges[k] = (a, b)`` are the node
    ids joined at step ``k`` (``a < b``; leaves are ``0..n-1`` and the node
    built at step ``k`` is ``n + k``). A cluster is indexed by its smallest
    leaf; among equally close pairs the lexicographically smallest index pair
    is merged first.

    Row minima are cached; a merge only turns the affected ones into lower
    bounds, which get rescanned when they reach the top.
    """
    n = D.shape[0]
    S = np.array(D, dtype=np.float64, copy=True)  # pairwise distance sums
    sizes = np.ones(n, dtype=np.float64)
    ids = np.arange(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    stale = np.zeros(n, dtype=bool)
    merges = np.empty((n - 1, 2), dtype=np.int64)
    heights = np.empty(n - 1, dtype=np.float64)
    out_sizes = np.empty(n - 1, dtype=np.int64)

    nn, nnd = _row_nearest(S, sizes, active, np.arange(n))
    for step in range(n - 1):
        while True:
            r = int(np.argmin(np.where(active, nnd, np.inf)))
            if not stale[r]:
                break
            (nn[r],), (nnd[r],) = _row_nearest(S, sizes, active, np.array([r]))
            stale[r] = False
        c = nn[r]
        merges[step] = sorted((ids[r], ids[c]))
        heights[step] = nnd[r]

        S[r, :] += S[c, :]
        S[:, r] = S[r, :]
        sizes[r] += sizes[c]
        out_sizes[step] = int(sizes[r])
        ids[r] = n + step
        active[c] = False
        if step == n - 2:
            break

        stale[r] = True
        live = np.flatnonzero(active & ~stale)
        d = S[live, r] / (sizes[live] * sizes[r])
        hit = (nn[live] == r) | (nn[live] == c)
        keep_tie = hit & (d == nnd[live])
        stale[live[hit & ~keep_tie]] = True
        closer = keep_tie | (~hit & ((d < nnd[live]) | ((d == nnd[live]) & (r < nn[live]))))
        nn[live[closer]] = r
        nnd[live[closer]] = d[closer]
    return merges, heights, out_sizes


def tree_unions(chosen, merges, n):
    """Per row, the union of the leaf sets of all chosen tree nodes.

    ``chosen`` is ``rows x (2n - 1)`` over node ids (leaves ``0..n-1``, node
    ``n + k`` built by ``merges[k]``). Marks are pushed from each node to its
    children, root first.
    """
    mark = np.array(chosen, dtype=bool).T.copy()
    for node in range(mark.shape[0] - 1, n - 1, -1):
        a, b = merges[node - n]
        mark[a] |= mark[node]
        mark[b] |= mark[node]
    return np.ascontiguousarray(mark[:n].T)
