"""Generic seeding schemes producing K initial centers from a unique-color histogram."""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..errors import InvalidParameterError
from ..utils.helpers import make_rng, squared_distances
from ..utils.logging import Icons, pretty_log
from .kmeans import Termination, wsm

logger = logging.getLogger("PaletteQuant")

LBG_PERTURBATION = (0.255, 0.255, 0.255)
DEN_GRID = 8


@dataclass(frozen=True)
class SeedConfig:
    k: int
    seed: Optional[int] = 0
    lbg_perturbation: Tuple[float, float, float] = LBG_PERTURBATION
    den_grid: int = DEN_GRID
    weighted_first: bool = True
    refine: Termination = field(default_factory=Termination)

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParameterError(f"k must be >= 1, got {self.k}")
        if not 1 <= self.den_grid <= 256:
            raise InvalidParameterError(f"density grid must be in [1, 256], got {self.den_grid}")


def _require_k(hist, k: int) -> int:
    n = len(hist)
    if k > n:
        raise InvalidParameterError(f"K={k} exceeds the number of distinct colors N'={n}")
    return n


def _weighted_pick(rng: np.random.Generator, weights: np.ndarray) -> int:
    cum = np.cumsum(weights)
    r = rng.random() * cum[-1]
    idx = int(np.searchsorted(cum, r, side="right"))
    idx = min(idx, len(weights) - 1)
    while weights[idx] <= 0.0 and idx > 0:
        idx -= 1
    return idx


def _min_d2(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    return squared_distances(points, center.reshape(1, 3))[:, 0]


def farthest_first(points: np.ndarray, first: int, k: int) -> np.ndarray:
    """Maximin selection starting from ``first``; indices of the chosen points."""
    chosen = [first]
    d2 = _min_d2(points, points[first])
    for _ in range(1, k):
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, _min_d2(points, points[nxt]))
    return np.asarray(chosen, dtype=np.int64)


def kmeanspp_from(points: np.ndarray, weights: np.ndarray, first: int, k: int, rng: np.random.Generator) -> np.ndarray:
    chosen = [first]
    d2 = _min_d2(points, points[first])
    for _ in range(1, k):
        mass = weights * d2
        if mass.sum() <= 0.0:
            logger.debug(f"k-means++ ran out of positive mass after {len(chosen)} of {k} centers")
            break
        nxt = _weighted_pick(rng, mass)
        chosen.append(nxt)
        d2 = np.minimum(d2, _min_d2(points, points[nxt]))
    return np.asarray(chosen, dtype=np.int64)


def init_forgy(hist, cfg: SeedConfig) -> np.ndarray:
    n = _require_k(hist, cfg.k)
    rng = make_rng(cfg.seed)
    idx = rng.choice(n, size=cfg.k, replace=False)
    return hist.colors[idx].copy()


def init_lbg(hist, cfg: SeedConfig) -> np.ndarray:
    _require_k(hist, cfg.k)
    eps = np.asarray(cfg.lbg_perturbation, dtype=np.float64)
    centers = (hist.weights @ hist.colors / hist.weights.sum()).reshape(1, 3)
    doublings = int(math.floor(math.log2(cfg.k)))
    state = None
    for _ in range(doublings):
        split = np.empty((2 * centers.shape[0], 3))
        split[0::2] = centers - eps
        split[1::2] = centers + eps
        state = wsm(hist, split, cfg.refine)
        centers = state.centers

    remainder = cfg.k - centers.shape[0]
    if remainder > 0:
        logger.debug(f"LBG: {centers.shape[0]} centers after doubling, splitting {remainder} more")
        diff = hist.colors - centers[state.memberships]
        contrib = hist.weights * np.einsum("ij,ij->i", diff, diff)
        cluster_sse = np.bincount(state.memberships, weights=contrib, minlength=centers.shape[0])
        worst = np.argsort(-cluster_sse, kind="stable")[:remainder]
        extra = centers[worst] + eps
        centers = centers.copy()
        centers[worst] = centers[worst] - eps
        centers = np.vstack([centers, extra])
        centers = wsm(hist, centers, cfg.refine).centers
    return centers


def init_maximin(hist, cfg: SeedConfig) -> np.ndarray:
    n = _require_k(hist, cfg.k)
    rng = make_rng(cfg.seed)
    first = _weighted_pick(rng, hist.weights) if cfg.weighted_first else int(rng.integers(n))
    return hist.colors[farthest_first(hist.colors, first, cfg.k)].copy()


def apportion(cell_weights: np.ndarray, capacities: np.ndarray, k: int) -> np.ndarray:
    """Largest-remainder apportionment of k seats, capped by each cell's capacity."""
    exact = k * cell_weights / cell_weights.sum()
    quotas = np.minimum(np.floor(exact).astype(np.int64), capacities)
    frac = exact - np.floor(exact)
    order = np.lexsort((np.arange(len(frac)), -frac))
    while quotas.sum() < k:
        for c in order:
            if quotas.sum() >= k:
                break
            if quotas[c] < capacities[c]:
                quotas[c] += 1
    return quotas


def init_density(hist, cfg: SeedConfig) -> np.ndarray:
    _require_k(hist, cfg.k)
    rng = make_rng(cfg.seed)
    g = cfg.den_grid
    cell_xyz = np.minimum((hist.colors * g / 256.0).astype(np.int64), g - 1)
    cell_id = (cell_xyz[:, 0] * g + cell_xyz[:, 1]) * g + cell_xyz[:, 2]
    cells, inverse = np.unique(cell_id, return_inverse=True)
    inverse = inverse.reshape(-1)
    cell_weights = np.bincount(inverse, weights=hist.weights)
    capacities = np.bincount(inverse)
    quotas = apportion(cell_weights, capacities, cfg.k)

    picked = []
    for c in range(len(cells)):
        if quotas[c] == 0:
            continue
        members = np.flatnonzero(inverse == c)
        picked.extend(members[rng.choice(len(members), size=int(quotas[c]), replace=False)].tolist())
    return hist.colors[np.asarray(picked, dtype=np.int64)].copy()


def _weighted_lower_median(weights: np.ndarray) -> int:
    cum = np.cumsum(weights)
    half = cum[-1] / 2.0
    return int(np.searchsorted(cum, half - 1e-12 * cum[-1], side="left"))


def init_maxvar(hist, cfg: SeedConfig) -> np.ndarray:
    n = _require_k(hist, cfg.k)
    w = hist.weights
    total = w.sum()
    mean = w @ hist.colors / total
    var = w @ (hist.colors - mean) ** 2 / total
    axis = int(np.argmax(var))
    order = np.argsort(hist.colors[:, axis], kind="stable")
    sw = w[order]
    cum = np.cumsum(sw)

    bounds = [0]
    for j in range(1, cfg.k):
        b = int(np.searchsorted(cum, j * total / cfg.k + 1e-12 * total, side="right"))
        b = max(b, bounds[-1] + 1)
        b = min(b, n - (cfg.k - j))
        bounds.append(b)
    bounds.append(n)

    picks = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        picks.append(order[lo + _weighted_lower_median(sw[lo:hi])])
    return hist.colors[np.asarray(picks, dtype=np.int64)].copy()


def sff_subset_size(k: int, n: int) -> int:
    return min(int(math.ceil(2 * k * math.log(k))), n)


def init_sff(hist, cfg: SeedConfig) -> np.ndarray:
    n = _require_k(hist, cfg.k)
    if cfg.k == 1:
        return init_forgy(hist, cfg)
    rng = make_rng(cfg.seed)
    size = sff_subset_size(cfg.k, n)
    subset = rng.choice(n, size=size, replace=False, p=hist.weights / hist.weights.sum())
    sub_w = hist.weights[subset]
    first = _weighted_pick(rng, sub_w) if cfg.weighted_first else int(rng.integers(size))
    picks = farthest_first(hist.colors[subset], first, cfg.k)
    return hist.colors[subset[picks]].copy()


def init_kmeanspp(hist, cfg: SeedConfig) -> np.ndarray:
    _require_k(hist, cfg.k)
    rng = make_rng(cfg.seed)
    first = _weighted_pick(rng, hist.weights)
    return hist.colors[kmeanspp_from(hist.colors, hist.weights, first, cfg.k, rng)].copy()


INITIALIZERS: Dict[str, Callable] = {
    "fgy": init_forgy,
    "lbg": init_lbg,
    "mmx": init_maximin,
    "den": init_density,
    "var": init_maxvar,
    "sff": init_sff,
    "kpp": init_kmeanspp,
}


def initialize(token: str, hist, cfg: SeedConfig) -> np.ndarray:
    try:
        scheme = INITIALIZERS[token]
    except KeyError:
        raise InvalidParameterError(
            f"unknown initializer '{token}' (expected one of {', '.join(INITIALIZERS)})"
        ) from None
    pretty_log("Seeding", f"{token.upper()} K={cfg.k}", icon=Icons.SEED)
    return scheme(hist, cfg)
