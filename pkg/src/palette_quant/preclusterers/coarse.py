"""Box-splitting quantizers on the 32x32x32 coarse histogram (MC, WAN, WU).

Bins keep sums of the original 8-bit values so box centroids live in the
original color space. Cumulative moment tables answer any box query in O(1).
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..core.palette import Palette
from ..errors import EmptyInputError, InvalidParameterError
from ..utils.logging import Icons, pretty_log

logger = logging.getLogger("PaletteQuant")

BINS = 32
SHIFT = 3


@dataclass(frozen=True)
class CoarseHistogram:
    count: np.ndarray   # (32, 32, 32) pixel counts
    sums: np.ndarray    # (32, 32, 32, 3) per-channel sums of original values
    sq: np.ndarray      # (32, 32, 32, 3) per-channel sums of squared original values
    cum_count: np.ndarray
    cum_sums: np.ndarray
    cum_sq: np.ndarray

    @property
    def total(self) -> int:
        return int(self.count.sum())

    def moments(self, lo, hi) -> Tuple[float, np.ndarray, float]:
        """(count, channel sums, sum of squared norms) of the inclusive bin box [lo, hi]."""
        return (
            float(_box_query(self.cum_count, lo, hi)),
            _box_query(self.cum_sums, lo, hi),
            float(_box_query(self.cum_sq, lo, hi).sum()),
        )


def _cumulate(table: np.ndarray) -> np.ndarray:
    shape = (BINS + 1, BINS + 1, BINS + 1) + table.shape[3:]
    cum = np.zeros(shape, dtype=np.float64)
    cum[1:, 1:, 1:] = table.cumsum(0).cumsum(1).cumsum(2)
    return cum


def _box_query(cum: np.ndarray, lo, hi):
    r0, g0, b0 = lo
    r1, g1, b1 = hi[0] + 1, hi[1] + 1, hi[2] + 1
    return (
        cum[r1, g1, b1] - cum[r0, g1, b1] - cum[r1, g0, b1] - cum[r1, g1, b0]
        + cum[r0, g0, b1] + cum[r0, g1, b0] + cum[r1, g0, b0] - cum[r0, g0, b0]
    )


def build_coarse_histogram(pixels: np.ndarray) -> CoarseHistogram:
    pixels = np.asarray(pixels).reshape(-1, 3)
    if pixels.shape[0] == 0:
        raise EmptyInputError("cannot build a coarse histogram from an empty pixel sequence")
    bins = pixels.astype(np.int64) >> SHIFT
    flat = (bins[:, 0] * BINS + bins[:, 1]) * BINS + bins[:, 2]
    size = BINS ** 3
    count = np.bincount(flat, minlength=size).reshape(BINS, BINS, BINS)
    values = pixels.astype(np.float64)
    sums = np.stack([np.bincount(flat, weights=values[:, c], minlength=size) for c in range(3)], axis=-1)
    sq = np.stack([np.bincount(flat, weights=values[:, c] ** 2, minlength=size) for c in range(3)], axis=-1)
    sums = sums.reshape(BINS, BINS, BINS, 3)
    sq = sq.reshape(BINS, BINS, BINS, 3)
    return CoarseHistogram(
        count=count, sums=sums, sq=sq,
        cum_count=_cumulate(count.astype(np.float64)),
        cum_sums=_cumulate(sums),
        cum_sq=_cumulate(sq),
    )


@dataclass
class ColorBox:
    lo: Tuple[int, int, int]
    hi: Tuple[int, int, int]
    count: float
    sums: np.ndarray
    sq: float

    @property
    def sse(self) -> float:
        if self.count <= 0:
            return 0.0
        return max(0.0, self.sq - float(self.sums @ self.sums) / self.count)

    @property
    def centroid(self) -> np.ndarray:
        return self.sums / self.count

    def side(self, axis: int) -> int:
        return self.hi[axis] - self.lo[axis]


@dataclass(frozen=True)
class Split:
    axis: int
    cut: int    # last bin index of the lower half
    cost: float = 0.0


def make_box(ch: CoarseHistogram, lo, hi) -> ColorBox:
    """Box over [lo, hi] shrunk to the bounding box of its nonempty bins."""
    sub = ch.count[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1, lo[2]:hi[2] + 1]
    nz = np.nonzero(sub)
    new_lo = tuple(int(lo[a] + nz[a].min()) for a in range(3))
    new_hi = tuple(int(lo[a] + nz[a].max()) for a in range(3))
    count, sums, sq = ch.moments(new_lo, new_hi)
    return ColorBox(lo=new_lo, hi=new_hi, count=count, sums=sums, sq=sq)


def split_box(ch: CoarseHistogram, box: ColorBox, split: Split) -> Tuple[ColorBox, ColorBox]:
    left_hi = list(box.hi)
    left_hi[split.axis] = split.cut
    right_lo = list(box.lo)
    right_lo[split.axis] = split.cut + 1
    return make_box(ch, box.lo, tuple(left_hi)), make_box(ch, tuple(right_lo), box.hi)


def _marginal(ch: CoarseHistogram, box: ColorBox, axis: int):
    """Per-bin count, axis-channel sum and axis-channel square sum along ``axis`` inside the box."""
    sl = tuple(slice(box.lo[a], box.hi[a] + 1) for a in range(3))
    other = tuple(a for a in range(3) if a != axis)
    count = ch.count[sl].sum(axis=other).astype(np.float64)
    s = ch.sums[sl][..., axis].sum(axis=other)
    q = ch.sq[sl][..., axis].sum(axis=other)
    return count, s, q


def box_at_cut(ch: CoarseHistogram, box: ColorBox, axis: int, cut: int) -> Tuple[Tuple, Tuple, Tuple, Tuple]:
    left_hi = list(box.hi)
    left_hi[axis] = cut
    right_lo = list(box.lo)
    right_lo[axis] = cut + 1
    return box.lo, tuple(left_hi), tuple(right_lo), box.hi


# --- Split rules ---

def median_cut_rule(ch: CoarseHistogram, box: ColorBox) -> Optional[Split]:
    sides = [box.side(a) for a in range(3)]
    axis = int(np.argmax(sides))
    if sides[axis] == 0:
        return None
    count, _, _ = _marginal(ch, box, axis)
    cum = np.cumsum(count)
    pos = int(np.searchsorted(cum, cum[-1] / 2.0, side="left"))
    pos = min(pos, len(count) - 2)
    return Split(axis=axis, cut=box.lo[axis] + pos)


def _channel_variances(ch: CoarseHistogram, box: ColorBox) -> np.ndarray:
    lo, hi = box.lo, box.hi
    sq = _box_query(ch.cum_sq, lo, hi)
    mean = box.sums / box.count
    return sq / box.count - mean * mean


def variance_rule(ch: CoarseHistogram, box: ColorBox) -> Optional[Split]:
    var = _channel_variances(ch, box)
    candidates = [a for a in np.argsort(-var, kind="stable") if box.side(int(a)) > 0]
    if not candidates:
        return None
    axis = int(candidates[0])
    count, s, q = _marginal(ch, box, axis)
    cn, cs, cq = np.cumsum(count)[:-1], np.cumsum(s)[:-1], np.cumsum(q)[:-1]
    tn, ts, tq = count.sum(), s.sum(), q.sum()
    rn, rs, rq = tn - cn, ts - cs, tq - cq
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(cn > 0, cq - cs * cs / cn, 0.0)
        right = np.where(rn > 0, rq - rs * rs / rn, 0.0)
    cost = left + right
    pos = int(np.argmin(cost))
    return Split(axis=axis, cut=box.lo[axis] + pos, cost=float(cost[pos]))


def _sse_of(count, sums, sq) -> float:
    if count <= 0:
        return 0.0
    return sq - float(sums @ sums) / count


def wu_rule(ch: CoarseHistogram, box: ColorBox) -> Optional[Split]:
    best: Optional[Split] = None
    for axis in range(3):
        for cut in range(box.lo[axis], box.hi[axis]):
            llo, lhi, rlo, rhi = box_at_cut(ch, box, axis, cut)
            cost = _sse_of(*ch.moments(llo, lhi)) + _sse_of(*ch.moments(rlo, rhi))
            if best is None or cost < best.cost:
                best = Split(axis=axis, cut=cut, cost=cost)
    return best


# --- Driver ---

def divisive_split(
    ch: CoarseHistogram,
    k: int,
    priority: Callable[[ColorBox], float],
    rule: Callable[[CoarseHistogram, ColorBox], Optional[Split]],
    name: str,
    trace: Optional[List] = None,
) -> Palette:
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    if ch.total == 0:
        raise EmptyInputError("coarse histogram is empty")
    boxes: List[ColorBox] = [make_box(ch, (0, 0, 0), (BINS - 1,) * 3)]
    splits: List[Optional[Split]] = [rule(ch, boxes[0])]
    while len(boxes) < k:
        candidates = [i for i, s in enumerate(splits) if s is not None]
        if not candidates:
            logger.debug(f"{name}: no splittable box left at {len(boxes)} of {k} colors")
            break
        i = max(candidates, key=lambda j: (priority(boxes[j]), -j))
        box, split = boxes[i], splits[i]
        left, right = split_box(ch, box, split)
        if trace is not None:
            trace.append((box, split))
        boxes[i:i + 1] = [left, right]
        splits[i:i + 1] = [rule(ch, left), rule(ch, right)]

    palette = Palette(np.array([b.centroid for b in boxes]), requested_k=k)
    pretty_log(name, f"{len(palette)}/{k} colors", icon=Icons.SPLIT)
    return palette


def mediancut(ch: CoarseHistogram, k: int, trace: Optional[List] = None) -> Palette:
    return divisive_split(ch, k, lambda b: b.count, median_cut_rule, "Median Cut", trace)


def wan(ch: CoarseHistogram, k: int, trace: Optional[List] = None) -> Palette:
    return divisive_split(ch, k, lambda b: b.sse, variance_rule, "Variance Cut", trace)


def wu(ch: CoarseHistogram, k: int, trace: Optional[List] = None) -> Palette:
    return divisive_split(ch, k, lambda b: b.sse, wu_rule, "Wu Cut", trace)
