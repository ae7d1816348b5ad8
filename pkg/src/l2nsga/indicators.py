"""Front quality indicators: reference fronts, IGD, hypervolume and I_CE."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from l2nsga._backend import kernels
from l2nsga.instance import FaultMatrix, Instance

HV_REFERENCE = 1.1


@dataclass(frozen=True, eq=False)
class Front:
    """Objective vectors ``F`` (``k x m``), optionally with their chromosomes ``X``."""

    F: np.ndarray
    X: np.ndarray | None = None

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=np.float64))
        if F.size == 0:
            F = F.reshape(0, F.shape[-1] if F.ndim == 2 else 0)
        object.__setattr__(self, "F", F)
        if self.X is not None:
            X = np.atleast_2d(np.asarray(self.X, dtype=bool))
            if X.shape[0] != F.shape[0]:
                raise ValueError("front has a different number of chromosomes and objective vectors")
            object.__setattr__(self, "X", X)

    def __len__(self):
        return self.F.shape[0]


def _as_points(front) -> np.ndarray:
    if isinstance(front, Front):
        return front.F
    return np.atleast_2d(np.asarray(front, dtype=np.float64))


def nondominated_mask(F: np.ndarray) -> np.ndarray:
    F = np.ascontiguousarray(F, dtype=np.float64)
    if F.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return kernels.nondominated_ranks(F) == 0


def build_reference_front(fronts) -> Front:
    """Non-dominated, duplicate-free subset of the union of ``fronts``.

    Points keep the order of first appearance; chromosomes are carried along
    when every input front has them.
    """
    fronts = [f if isinstance(f, Front) else Front(f) for f in fronts]
    fronts = [f for f in fronts if len(f)]
    if not fronts:
        raise ValueError("all fronts are empty")
    F = np.concatenate([f.F for f in fronts])
    with_x = all(f.X is not None for f in fronts)
    X = np.concatenate([f.X for f in fronts]) if with_x else None
    _, first = np.unique(F, axis=0, return_index=True)
    first = np.sort(first)
    F = F[first]
    X = X[first] if with_x else None
    keep = nondominated_mask(F)
    return Front(F[keep], X[keep] if with_x else None)


def igd(front, reference) -> float:
    """Mean over reference points of the Euclidean distance to the nearest front point."""
    A = _as_points(front)
    R = _as_points(reference)
    if A.shape[0] == 0 or R.shape[0] == 0:
        raise ValueError("IGD needs non-empty front and reference")
    if A.shape[1] != R.shape[1]:
        raise ValueError("front and reference differ in arity")
    best = np.full(R.shape[0], np.inf)
    for start in range(0, A.shape[0], 256):
        chunk = A[start:start + 256]
        d = np.sqrt(((R[:, None, :] - chunk[None, :, :]) ** 2).sum(axis=2))
        np.minimum(best, d.min(axis=1), out=best)
    return float(best.mean())


def _area_2d(P: np.ndarray, ref: np.ndarray) -> float:
    if P.shape[0] == 0:
        return 0.0
    order = np.lexsort((P[:, 1], P[:, 0]))
    x = P[order, 0]
    ymin = np.minimum.accumulate(P[order, 1])
    widths = np.diff(np.append(x, ref[0]))
    return float(np.sum(widths * (ref[1] - ymin)))


def hypervolume(front, reference_point=None) -> float:
    """Exact dominated hypervolume for up to three objectives (minimization).

    Points outside the reference box are dropped with a warning. Three
    objectives are handled by sweeping the third axis over 2-D slices.
    """
    P = _as_points(front)
    if P.shape[0] == 0:
        return 0.0
    m = P.shape[1]
    ref = np.full(m, HV_REFERENCE) if reference_point is None else np.asarray(reference_point, dtype=np.float64)
    if ref.shape != (m,):
        raise ValueError("reference point arity does not match the front")
    if m > 3:
        raise ValueError("exact hypervolume is implemented for at most 3 objectives")
    outside = (P > ref).any(axis=1)
    if outside.any():
        warnings.warn(f"{int(outside.sum())} point(s) outside the reference box ignored", stacklevel=2)
        P = P[~outside]
    if P.shape[0] == 0:
        return 0.0
    if m == 1:
        return float(ref[0] - P[:, 0].min())
    if m == 2:
        return _area_2d(P, ref)
    P = P[np.argsort(P[:, 2], kind="stable")]
    z = np.append(P[:, 2], ref[2])
    volume = 0.0
    for i in range(P.shape[0]):
        depth = z[i + 1] - z[i]
        if depth > 0:
            volume += _area_2d(P[: i + 1, :2], ref[:2]) * depth
    return float(volume)


def cost_effectiveness(front: Front, instance: Instance, faults: FaultMatrix) -> float:
    """Normalized area under the cost / faults-detected staircase of a front.

    ``f(c)`` is the most faults found by any solution costing at most ``c``;
    the area over ``[0, total cost]`` is divided by ``total cost x #faults``.
    Returns 0 when there are no faults.
    """
    if front.X is None:
        raise ValueError("cost-effectiveness needs the chromosomes of the front")
    X = front.X
    if X.shape[1] != instance.num_tests or faults.num_tests != instance.num_tests:
        raise ValueError("front, instance and fault matrix disagree on the number of tests")
    if faults.num_faults == 0 or X.shape[0] == 0:
        return 0.0
    cost = kernels.selected_cost_sums(np.ascontiguousarray(X), instance.cost)
    total = float(kernels.selected_cost_sums(np.ones((1, instance.num_tests), dtype=bool), instance.cost)[0])
    found = ((X.astype(np.float32) @ faults.detects.astype(np.float32)) > 0).sum(axis=1)
    order = np.lexsort((-found, cost))
    c = cost[order]
    best = np.maximum.accumulate(found[order])
    widths = np.diff(np.append(c, total))
    area = float(np.sum(widths * best))
    return area / (total * faults.num_faults)
