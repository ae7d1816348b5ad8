"""Numba-compiled versions of the hot kernels (see ``_kernels_numpy``)."""

import numpy as np
from numba import njit


@njit(cache=True)
def nondominated_ranks(F):
    n, m = F.shape
    dom = np.zeros((n, n), dtype=np.bool_)
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            i_le = True
            j_le = True
            strict_i = False
            strict_j = False
            for k in range(m):
                a = F[i, k]
                b = F[j, k]
                if a > b:
                    i_le = False
                    strict_j = True
                elif a < b:
                    j_le = False
                    strict_i = True
            if i_le and strict_i:
                dom[i, j] = True
                counts[j] += 1
            elif j_le and strict_j:
                dom[j, i] = True
                counts[i] += 1

    ranks = np.full(n, -1, dtype=np.int64)
    current = np.empty(n, dtype=np.int64)
    size = 0
    for i in range(n):
        if counts[i] == 0:
            current[size] = i
            size += 1
    rank = 0
    nxt = np.empty(n, dtype=np.int64)
    while size > 0:
        nsize = 0
        for t in range(size):
            p = current[t]
            ranks[p] = rank
            for q in range(n):
                if dom[p, q]:
                    counts[q] -= 1
                    if counts[q] == 0:
                        nxt[nsize] = q
                        nsize += 1
        current, nxt = nxt, current
        size = nsize
        rank += 1
    return ranks


@njit(cache=True)
def selected_cost_sums(X, cost):
    rows, cols = X.shape
    acc = np.zeros(rows, dtype=np.float64)
    for j in range(cols):
        c = cost[j]
        for i in range(rows):
            if X[i, j]:
                acc[i] += c
    return acc


@njit(cache=True)
def _nearest(S, sizes, active, r):
    n = S.shape[0]
    best = -1
    best_d = np.inf
    for k in range(n):
        if not active[k] or k == r:
            continue
        d = S[r, k] / (sizes[r] * sizes[k])
        if d < best_d:
            best = k
            best_d = d
    return best, best_d


@njit(cache=True)
def upgma_merges(D):
    n = D.shape[0]
    S = D.astype(np.float64).copy()  # pairwise distance sums between clusters
    sizes = np.ones(n, dtype=np.float64)
    ids = np.arange(n)
    active = np.ones(n, dtype=np.bool_)
    stale = np.zeros(n, dtype=np.bool_)  # nnd[k] is then only a lower bound
    merges = np.empty((n - 1, 2), dtype=np.int64)
    heights = np.empty(n - 1, dtype=np.float64)
    out_sizes = np.empty(n - 1, dtype=np.int64)
    nn = np.empty(n, dtype=np.int64)
    nnd = np.empty(n, dtype=np.float64)
    for r in range(n):
        nn[r], nnd[r] = _nearest(S, sizes, active, r)

    for step in range(n - 1):
        while True:
            r = -1
            for k in range(n):
                if active[k] and (r == -1 or nnd[k] < nnd[r]):
                    r = k
            if not stale[r]:
                break
            nn[r], nnd[r] = _nearest(S, sizes, active, r)
            stale[r] = False
        c = nn[r]
        a, b = ids[r], ids[c]
        merges[step, 0] = min(a, b)
        merges[step, 1] = max(a, b)
        heights[step] = nnd[r]

        sizes[r] += sizes[c]
        active[c] = False
        for k in range(n):
            S[r, k] += S[c, k]
        for k in range(n):
            S[k, r] = S[r, k]
        out_sizes[step] = np.int64(sizes[r])
        ids[r] = n + step
        if step == n - 2:
            break

        # merged distances are weighted means of the old ones, so old minima stay lower bounds
        stale[r] = True
        for k in range(n):
            if not active[k] or k == r or stale[k]:
                continue
            d = S[k, r] / (sizes[k] * sizes[r])
            if nn[k] == r or nn[k] == c:
                if d == nnd[k]:
                    nn[k] = r  # the merged cluster sits in the lower slot, so it keeps the tie
                else:
                    stale[k] = True
            elif d < nnd[k] or (d == nnd[k] and r < nn[k]):
                nn[k] = r
                nnd[k] = d
    return merges, heights, out_sizes


@njit(cache=True)
def tree_unions(chosen, merges, n):
    rows = chosen.shape[0]
    out = np.empty((rows, n), dtype=np.bool_)
    mark = np.empty(chosen.shape[1], dtype=np.bool_)
    for p in range(rows):
        for k in range(chosen.shape[1]):
            mark[k] = chosen[p, k]
        for node in range(chosen.shape[1] - 1, n - 1, -1):
            if mark[node]:
                mark[merges[node - n, 0]] = True
                mark[merges[node - n, 1]] = True
        for k in range(n):
            out[p, k] = mark[k]
    return out
