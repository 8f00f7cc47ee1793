"""Divisive quantizers working on exact histogram colors (OTT, BS); no bin reduction."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..core.palette import Palette
from ..errors import InvalidParameterError
from ..utils.logging import Icons, pretty_log

logger = logging.getLogger("PaletteQuant")

POWER_MAX_ITER = 100
POWER_TOL = 1e-9


@dataclass
class ColorSet:
    members: np.ndarray     # histogram indices
    weight: float
    sums: np.ndarray
    sq: float

    @property
    def sse(self) -> float:
        return max(0.0, self.sq - float(self.sums @ self.sums) / self.weight)

    @property
    def centroid(self) -> np.ndarray:
        return self.sums / self.weight


def _color_set(colors, weights, members) -> ColorSet:
    w = weights[members]
    x = colors[members]
    return ColorSet(
        members=members,
        weight=float(w.sum()),
        sums=w @ x,
        sq=float(w @ np.einsum("ij,ij->i", x, x)),
    )


def _require_k(hist, k: int):
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    if k > len(hist):
        raise InvalidParameterError(f"K={k} exceeds the number of distinct colors N'={len(hist)}")


# --- Otto: exhaustive axis/cut search ---

@dataclass(frozen=True)
class ExactCut:
    axis: int
    position: int       # members sorted on axis; first `position` go left
    decrease: float


def best_exhaustive_cut(colors, weights, cset: ColorSet) -> Optional[ExactCut]:
    """Axis and cut maximizing the SSE decrease of splitting ``cset``."""
    best: Optional[ExactCut] = None
    x_all = colors[cset.members]
    w_all = weights[cset.members]
    for axis in range(3):
        order = np.argsort(x_all[:, axis], kind="stable")
        x = x_all[order]
        w = w_all[order]
        v = x[:, axis]
        distinct = np.flatnonzero(v[:-1] != v[1:])
        if distinct.size == 0:
            continue
        cw = np.cumsum(w)
        cs = np.cumsum(w[:, None] * x, axis=0)
        cq = np.cumsum(w * np.einsum("ij,ij->i", x, x))
        lw, ls, lq = cw[distinct], cs[distinct], cq[distinct]
        rw, rs, rq = cw[-1] - lw, cs[-1] - ls, cq[-1] - lq
        left = lq - np.einsum("ij,ij->i", ls, ls) / lw
        right = rq - np.einsum("ij,ij->i", rs, rs) / rw
        decrease = cset.sse - (left + right)
        j = int(np.argmax(decrease))
        if best is None or decrease[j] > best.decrease:
            best = ExactCut(axis=axis, position=int(distinct[j]) + 1, decrease=float(decrease[j]))
    return best


def _apply_cut(colors, weights, cset: ColorSet, cut: ExactCut) -> Tuple[ColorSet, ColorSet]:
    order = np.argsort(colors[cset.members, cut.axis], kind="stable")
    sorted_members = cset.members[order]
    left = np.sort(sorted_members[:cut.position])
    right = np.sort(sorted_members[cut.position:])
    return _color_set(colors, weights, left), _color_set(colors, weights, right)


def otto(hist, k: int, trace: Optional[List] = None) -> Palette:
    _require_k(hist, k)
    colors, weights = hist.colors, hist.weights
    sets = [_color_set(colors, weights, np.arange(len(hist)))]
    cuts = [best_exhaustive_cut(colors, weights, sets[0])]
    while len(sets) < k:
        candidates = [i for i, c in enumerate(cuts) if c is not None]
        if not candidates:
            break
        i = max(candidates, key=lambda j: (cuts[j].decrease, -j))
        left, right = _apply_cut(colors, weights, sets[i], cuts[i])
        if trace is not None:
            trace.append((sets[i], cuts[i]))
        sets[i:i + 1] = [left, right]
        cuts[i:i + 1] = [best_exhaustive_cut(colors, weights, left), best_exhaustive_cut(colors, weights, right)]

    palette = Palette(np.array([s.centroid for s in sets]), requested_k=k)
    pretty_log("Otto Split", f"{len(palette)}/{k} colors", icon=Icons.SPLIT)
    return palette


# --- Binary splitting: principal axis at the mean ---

def scatter_matrix(colors, weights, cset: ColorSet) -> np.ndarray:
    x = colors[cset.members] - cset.centroid
    w = weights[cset.members]
    return (w[:, None] * x).T @ x


def power_iteration(matrix: np.ndarray, max_iter: int = POWER_MAX_ITER, tol: float = POWER_TOL):
    """Dominant eigenpair of a symmetric PSD 3x3 matrix.

    Returns ``(eigenvalue, vector, converged)``.
    """
    v = np.ones(3) / np.sqrt(3.0)
    lam = float(v @ matrix @ v)
    for _ in range(max_iter):
        w = matrix @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, v, False
        v = w / norm
        new_lam = float(v @ matrix @ v)
        if abs(new_lam - lam) <= tol * max(abs(new_lam), 1e-300):
            return new_lam, v, True
        lam = new_lam
    return lam, v, False


@dataclass
class PrincipalSplit:
    eigenvalue: float
    vector: Optional[np.ndarray]


def _principal(colors, weights, cset: ColorSet) -> Optional[PrincipalSplit]:
    if cset.members.size < 2:
        return None
    R = scatter_matrix(colors, weights, cset)
    lam, v, converged = power_iteration(R)
    if not converged:
        logger.debug("Power iteration did not converge; using largest-variance axis")
        axis = int(np.argmax(np.diag(R)))
        v = np.zeros(3)
        v[axis] = 1.0
        lam = float(R[axis, axis])
    if lam <= 0.0:
        return None
    return PrincipalSplit(eigenvalue=lam, vector=v)


def _median_axis_split(colors, weights, cset: ColorSet):
    x = colors[cset.members]
    w = weights[cset.members]
    var = (w @ (x - cset.centroid) ** 2) / cset.weight
    for axis in np.argsort(-var, kind="stable"):
        vals = x[:, axis]
        if vals.min() == vals.max():
            continue
        order = np.argsort(vals, kind="stable")
        cum = np.cumsum(w[order])
        median = vals[order][int(np.searchsorted(cum, cum[-1] / 2.0, side="left"))]
        left = vals <= median
        if left.all():
            left = vals < median
        return left
    return None


def _bisect(colors, weights, cset: ColorSet, ps: PrincipalSplit):
    proj = (colors[cset.members] - cset.centroid) @ ps.vector
    left = proj <= 0.0
    if left.all() or not left.any():
        left = _median_axis_split(colors, weights, cset)
    return (
        _color_set(colors, weights, cset.members[left]),
        _color_set(colors, weights, cset.members[~left]),
    )


def binary_split(hist, k: int, trace: Optional[List] = None) -> Palette:
    _require_k(hist, k)
    colors, weights = hist.colors, hist.weights
    sets = [_color_set(colors, weights, np.arange(len(hist)))]
    principals = [_principal(colors, weights, sets[0])]
    while len(sets) < k:
        candidates = [i for i, p in enumerate(principals) if p is not None]
        if not candidates:
            break
        i = max(candidates, key=lambda j: (principals[j].eigenvalue, -j))
        left, right = _bisect(colors, weights, sets[i], principals[i])
        if trace is not None:
            trace.append((sets[i], principals[i]))
        sets[i:i + 1] = [left, right]
        principals[i:i + 1] = [_principal(colors, weights, left), _principal(colors, weights, right)]

    palette = Palette(np.array([s.centroid for s in sets]), requested_k=k)
    pretty_log("Binary Split", f"{len(palette)}/{k} colors", icon=Icons.SPLIT)
    return palette
