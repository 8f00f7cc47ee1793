"""Conventional k-means and Weighted Sort-Means.

Both engines share one Lloyd loop. The conventional variant searches every
center for every point; the sort-means variant walks each point's previous
center row of the center distance table and stops as soon as
``d2[p][t] >= 4 * ||x - c_p||^2``, which the triangle inequality turns into a
guarantee that no remaining center can be closer.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
from numba import njit

from ..errors import InvalidParameterError
from ..utils.helpers import squared_distances
from ..utils.logging import Icons, pretty_log

logger = logging.getLogger("PaletteQuant")

DEFAULT_EPSILON = 0.001
DEFAULT_MAX_ITERATIONS = 100


class Convergence(str, Enum):
    CONTINUE = "CONTINUE"
    STOP = "STOP"


@dataclass(frozen=True)
class Termination:
    epsilon: float = DEFAULT_EPSILON
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    fixed_iterations: Optional[int] = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise InvalidParameterError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.max_iterations < 1:
            raise InvalidParameterError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.fixed_iterations is not None and self.fixed_iterations < 1:
            raise InvalidParameterError(f"fixed_iterations must be >= 1, got {self.fixed_iterations}")


@dataclass
class ClusterState:
    centers: np.ndarray
    memberships: np.ndarray
    sse_trace: List[float] = field(default_factory=list)
    iterations: int = 0
    ndc_total: int = 0
    repairs: int = 0
    point_count: int = 0
    weight_total: float = 1.0
    sse_increases: int = 0

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def sse(self) -> float:
        return self.sse_trace[-1] if self.sse_trace else float("nan")

    @property
    def normalized_sse_trace(self) -> List[float]:
        return [s / self.weight_total for s in self.sse_trace]

    @property
    def ndc_per_point_iter(self) -> float:
        if not self.point_count or not self.iterations:
            return 0.0
        return self.ndc_total / (self.point_count * self.iterations)


@dataclass(frozen=True)
class CenterDistanceTable:
    dist2: np.ndarray   # (K, K) squared center-center distances
    order: np.ndarray   # (K, K) row i: centers by increasing distance from center i, i first


@dataclass
class DistanceCounter:
    count: int = 0


# --- Kernels ---

@njit(nogil=True)
def _full_assign(points, centers, labels):
    n = points.shape[0]
    k = centers.shape[0]
    for i in range(n):
        best = 0
        min_dist = np.inf
        for t in range(k):
            d0 = points[i, 0] - centers[t, 0]
            d1 = points[i, 1] - centers[t, 1]
            d2 = points[i, 2] - centers[t, 2]
            dist = d0 * d0 + d1 * d1 + d2 * d2
            if dist < min_dist:
                min_dist = dist
                best = t
        labels[i] = best
    return n * k


@njit(nogil=True)
def _sorted_assign(points, centers, dist2, order, labels, chain, lowest_index_ties):
    n = points.shape[0]
    k = centers.shape[0]
    ndc = 0
    for i in range(n):
        if chain and i > 0:
            p = labels[i - 1]
        else:
            p = labels[i]
        d0 = points[i, 0] - centers[p, 0]
        d1 = points[i, 1] - centers[p, 1]
        d2 = points[i, 2] - centers[p, 2]
        prev_dist = d0 * d0 + d1 * d1 + d2 * d2
        ndc += 1
        min_dist = prev_dist
        best = p
        limit = 4.0 * prev_dist
        for j in range(1, k):
            t = order[p, j]
            if lowest_index_ties:
                if dist2[p, t] > limit:
                    break
            elif dist2[p, t] >= limit:
                break
            e0 = points[i, 0] - centers[t, 0]
            e1 = points[i, 1] - centers[t, 1]
            e2 = points[i, 2] - centers[t, 2]
            dist = e0 * e0 + e1 * e1 + e2 * e2
            ndc += 1
            if dist < min_dist or (lowest_index_ties and dist == min_dist and t < best):
                min_dist = dist
                best = t
        labels[i] = best
    return ndc


# --- Operations ---

def compute_sse(hist, centers, memberships) -> float:
    """Weighted SSE: sum of w_i * ||x_i - c_m[i]||^2."""
    colors = getattr(hist, "colors", hist)
    weights = getattr(hist, "weights", None)
    diff = colors - np.asarray(centers, dtype=np.float64)[memberships]
    sq = diff * diff
    d2 = sq[:, 0] + sq[:, 1] + sq[:, 2]
    if weights is None:
        return float(np.sum(d2))
    return float(np.sum(weights * d2))


def build_center_distance_table(centers) -> CenterDistanceTable:
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    k = centers.shape[0]
    dist2 = squared_distances(centers, centers)
    np.fill_diagonal(dist2, 0.0)
    cols = np.broadcast_to(np.arange(k), (k, k))
    not_self = cols != np.arange(k)[:, None]
    # lexsort: last key is primary -> distance, then self-first, then index
    order = np.lexsort((cols, not_self, dist2), axis=-1)
    return CenterDistanceTable(dist2=dist2, order=np.ascontiguousarray(order, dtype=np.int64))


def assign_point_sortmeans(x, prev: int, table: CenterDistanceTable, centers, counter: DistanceCounter) -> int:
    x = np.asarray(x, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)

    def dist(t):
        counter.count += 1
        d = x - centers[t]
        return d[0] * d[0] + d[1] * d[1] + d[2] * d[2]

    prev_dist = dist(prev)
    min_dist, best = prev_dist, prev
    row = table.order[prev]
    for j in range(1, row.shape[0]):
        t = int(row[j])
        if table.dist2[prev, t] >= 4.0 * prev_dist:
            break
        d = dist(t)
        if d < min_dist:
            min_dist, best = d, t
    return best


def nearest_centers(points, centers, hint: Optional[np.ndarray] = None):
    """Exact nearest center per point (ties to the lower index) via pruned sorted search.

    Without a ``hint`` each point starts from the previous point's answer.
    Returns ``(labels, ndc)``.
    """
    points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    table = build_center_distance_table(centers)
    centers = np.ascontiguousarray(centers, dtype=np.float64).reshape(-1, 3)
    if hint is None:
        labels = np.zeros(points.shape[0], dtype=np.int64)
        chain = True
    else:
        labels = np.array(hint, dtype=np.int64)
        chain = False
    ndc = _sorted_assign(points, centers, table.dist2, table.order, labels, chain, True)
    return labels, int(ndc)


def check_convergence(sse_prev: float, sse_cur: float, epsilon: float) -> Convergence:
    if sse_cur <= 0.0:
        return Convergence.STOP
    if (sse_prev - sse_cur) / sse_cur <= epsilon:
        return Convergence.STOP
    return Convergence.CONTINUE


def _weighted_means(points, weights, labels, k) -> np.ndarray:
    wsum = np.bincount(labels, weights=weights, minlength=k)
    centers = np.empty((k, 3), dtype=np.float64)
    for c in range(3):
        centers[:, c] = np.bincount(labels, weights=weights * points[:, c], minlength=k)
    return centers / wsum[:, None]


def color_groups(points) -> np.ndarray:
    """Group id per point, identical colors sharing one id, ids in order of first occurrence."""
    _, first, inverse = np.unique(points, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    rank = np.empty(first.shape[0], dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.shape[0])
    return rank[inverse]


def _repair(points, weights, centers, labels, groups=None) -> int:
    k = centers.shape[0]
    if np.bincount(labels, minlength=k).min() > 0:
        return 0
    n = points.shape[0]
    if groups is None:
        groups = np.arange(n)
    # Repair acts on distinct colors; a donor moves with all of its pixels
    _, rep = np.unique(groups, return_index=True)
    ng = rep.shape[0]
    gpoints = points[rep]
    gweights = np.bincount(groups, weights=weights, minlength=ng)
    glabels = labels[rep].copy()
    counts = np.bincount(glabels, minlength=k)
    repaired = 0
    for empty in np.flatnonzero(counts == 0):
        diff = gpoints - centers[glabels]
        sq = diff * diff
        contrib = gweights * (sq[:, 0] + sq[:, 1] + sq[:, 2])
        contrib[counts[glabels] < 2] = -1.0
        i = int(np.argmax(contrib))
        counts[glabels[i]] -= 1
        glabels[i] = empty
        counts[empty] = 1
        centers[empty] = gpoints[i]
        repaired += 1
    labels[:] = glabels[groups]
    return repaired


def repair_empty_clusters(state: ClusterState, hist) -> ClusterState:
    """Reseeds every empty cluster with the largest SSE contributor of a multi-member cluster."""
    centers = np.array(state.centers, dtype=np.float64)
    labels = np.array(state.memberships, dtype=np.int64)
    weights = getattr(hist, "weights", None)
    points = getattr(hist, "colors", hist)
    if weights is None:
        weights = np.ones(points.shape[0])
    groups = None if getattr(hist, "unique", False) else color_groups(points)
    n = _repair(points, weights, centers, labels, groups)
    if n:
        logger.debug(f"Repaired {n} empty cluster(s)")
    return ClusterState(
        centers=centers,
        memberships=labels,
        sse_trace=list(state.sse_trace),
        iterations=state.iterations,
        ndc_total=state.ndc_total,
        repairs=state.repairs + n,
        point_count=state.point_count,
        weight_total=state.weight_total,
        sse_increases=state.sse_increases,
    )


def _should_stop(term: Termination, iteration: int, trace: List[float]) -> bool:
    if term.fixed_iterations is not None:
        return iteration >= term.fixed_iterations
    if iteration >= term.max_iterations:
        return True
    if trace[-1] <= 0.0:
        return True
    if iteration >= 2:
        return check_convergence(trace[-2], trace[-1], term.epsilon) is Convergence.STOP
    return False


def _check_init(init, point_count: int, distinct: int) -> np.ndarray:
    centers = np.array(init, dtype=np.float64).reshape(-1, 3)
    k = centers.shape[0]
    if k < 1:
        raise InvalidParameterError("at least one initial center is required")
    if k > distinct:
        raise InvalidParameterError(f"K={k} exceeds the number of distinct colors N'={distinct}")
    return centers


def _lloyd(points, weights, init, term: Termination, pruned: bool, label: str, groups=None) -> ClusterState:
    n = points.shape[0]
    centers = init
    k = centers.shape[0]
    labels = np.zeros(n, dtype=np.int64)
    trace: List[float] = []
    ndc = 0
    repairs = 0
    increases = 0
    iteration = 0
    while True:
        iteration += 1
        if pruned and iteration > 1:
            table = build_center_distance_table(centers)
            ndc += _sorted_assign(points, centers, table.dist2, table.order, labels, False, False)
        else:
            ndc += _full_assign(points, centers, labels)
        centers = centers.copy()
        repairs += _repair(points, weights, centers, labels, groups)
        centers = _weighted_means(points, weights, labels, k)
        sse = compute_sse_arrays(points, weights, centers, labels)
        if trace and sse > trace[-1] * (1.0 + 1e-12):
            increases += 1
            logger.warning(f"{label}: SSE rose from {trace[-1]!r} to {sse!r} at iteration {iteration}")
        trace.append(sse)
        if _should_stop(term, iteration, trace):
            break

    state = ClusterState(
        centers=centers,
        memberships=labels,
        sse_trace=trace,
        iterations=iteration,
        ndc_total=int(ndc),
        repairs=repairs,
        point_count=n,
        weight_total=float(np.sum(weights)),
        sse_increases=increases,
    )
    pretty_log(
        label,
        f"K={k} it={iteration} ndc/pt/it={state.ndc_per_point_iter:.2f} sse={state.sse:.6g}",
        icon=Icons.CLUSTER,
    )
    return state


def compute_sse_arrays(points, weights, centers, labels) -> float:
    diff = points - centers[labels]
    sq = diff * diff
    return float(np.sum(weights * (sq[:, 0] + sq[:, 1] + sq[:, 2])))


def kmeans_full(points, init, term: Termination = Termination()) -> ClusterState:
    """Conventional k-means over an unweighted point sequence (full palette search)."""
    points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    groups = color_groups(points)
    centers = _check_init(init, points.shape[0], int(groups.max()) + 1 if groups.size else 0)
    return _lloyd(points, np.ones(points.shape[0]), centers, term, pruned=False, label="KM", groups=groups)


def wsm(hist, init, term: Termination = Termination()) -> ClusterState:
    """Weighted Sort-Means over a weighted color histogram."""
    centers = _check_init(init, len(hist), hist.distinct_count)
    groups = None if hist.unique else color_groups(hist.colors)
    return _lloyd(hist.colors, hist.weights, centers, term, pruned=True, label="WSM", groups=groups)
