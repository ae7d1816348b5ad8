"""Rank-based comparison of repeated-run samples."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

EXACT_LIMIT = 12  # combined sample size up to which p-values are enumerated
# lower A12 bounds (on max(A12, 1 - A12)) of the small, medium and large classes
MAGNITUDE_CUTOFFS = ((0.71, "large"), (0.64, "medium"), (0.56, "small"))


@dataclass(frozen=True)
class SampleSet:
    """One value per independent run."""

    values: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        vals = tuple(float(v) for v in np.asarray(self.values, dtype=np.float64).ravel())
        if not vals:
            raise ValueError("sample set is empty")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.values)

    def median(self) -> float:
        return float(np.median(self.values))

    def iqr(self) -> float:
        q1, q3 = np.percentile(self.values, [25, 75])
        return float(q3 - q1)


def _samples(x) -> np.ndarray:
    return (x if isinstance(x, SampleSet) else SampleSet(x)).array


def midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties given the mean of the ranks they span."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    ranks = np.empty(values.size)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_p(ranks: np.ndarray, m: int) -> float:
    N = ranks.size
    expected = m * (N + 1) / 2.0
    observed = abs(ranks[:m].sum() - expected)
    # ranks are multiples of 0.5, so a tiny slack absorbs summation noise
    tol = 1e-9 * max(1.0, expected)
    hits = total = 0
    for combo in combinations(range(N), m):
        total += 1
        if abs(ranks[list(combo)].sum() - expected) >= observed - tol:
            hits += 1
    return hits / total


def _normal_p(ranks: np.ndarray, m: int) -> float:
    N = ranks.size
    n = N - m
    u = ranks[:m].sum() - m * (m + 1) / 2.0
    _, counts = np.unique(ranks, return_counts=True)
    ties = float(np.sum(counts**3 - counts))
    var = m * n / 12.0 * ((N + 1) - ties / (N * (N - 1)))
    if var <= 0:
        return 1.0
    z = max(abs(u - m * n / 2.0) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def wilcoxon_rank_sum(a, b) -> float:
    """Two-sided rank-sum p-value.

    Exact (all splits of the pooled midranks) when the samples hold at most
    ``EXACT_LIMIT`` values together, otherwise the normal approximation with
    tie and continuity corrections.
    """
    x, y = _samples(a), _samples(b)
    ranks = midranks(np.concatenate([x, y]))
    if ranks.size <= EXACT_LIMIT:
        return _exact_p(ranks, x.size)
    return _normal_p(ranks, x.size)


def magnitude(a12: float) -> str:
    a = max(a12, 1.0 - a12)
    for cutoff, label in MAGNITUDE_CUTOFFS:
        if a >= cutoff - 1e-12:
            return label
    return "negligible"


def vargha_delaney_a12(a, b) -> tuple[float, str]:
    """Probability that a draw from ``a`` beats one from ``b`` (ties count half)."""
    x, y = _samples(a), _samples(b)
    gt = np.sum(x[:, None] > y[None, :])
    eq = np.sum(x[:, None] == y[None, :])
    a12 = float((gt + 0.5 * eq) / (x.size * y.size))
    return a12, magnitude(a12)


@dataclass(frozen=True)
class Comparison:
    metric: str
    system: str
    label_a: str
    label_b: str
    median_a: float
    iqr_a: float
    median_b: float
    iqr_b: float
    p_value: float
    a12: float
    magnitude: str

    HEADER = ("system", "metric", "algo_a", "median_a", "iqr_a", "algo_b", "median_b", "iqr_b", "p", "A12", "magnitude")

    def row(self) -> tuple:
        return (
            self.system, self.metric,
            self.label_a, f"{self.median_a:.6g}", f"{self.iqr_a:.6g}",
            self.label_b, f"{self.median_b:.6g}", f"{self.iqr_b:.6g}",
            f"{self.p_value:.4g}", f"{self.a12:.4f}", self.magnitude,
        )


def compare(a: SampleSet, b: SampleSet, metric: str, system: str = "") -> Comparison:
    """Medians, IQRs, rank-sum p and A12 of ``a`` against ``b`` for one metric."""
    a12, mag = vargha_delaney_a12(a, b)
    return Comparison(
        metric=metric, system=system, label_a=a.label, label_b=b.label,
        median_a=a.median(), iqr_a=a.iqr(), median_b=b.median(), iqr_b=b.iqr(),
        p_value=wilcoxon_rank_sum(a, b), a12=a12, magnitude=mag,
    )


def format_table(rows: list[Comparison]) -> str:
    """Aligned plain-text table, one line per comparison."""
    cells = [Comparison.HEADER] + [c.row() for c in rows]
    widths = [max(len(str(r[i])) for r in cells) for i in range(len(Comparison.HEADER))]
    return "".join("  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip() + "\n" for r in cells)
