"""Reduction of image data to the clustering substrate.

Unique colors are found with a chained hash table keyed by a universal hash
``h_a(x) = (a1*x1 + a2*x2 + a3*x3) mod m``; each color keeps a weight equal
to its share of the sampled pixels.
"""

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from numba import njit

from ..errors import EmptyInputError, InvalidParameterError
from ..utils.helpers import is_prime, make_rng, next_prime
from ..utils.logging import Icons, pretty_log


class SamplingMode(str, Enum):
    NONE = "none"
    TWO_TO_ONE = "2to1"
    UNIQUE = "unique"
    BOTH = "both"

    @property
    def subsamples(self) -> bool:
        return self in (SamplingMode.TWO_TO_ONE, SamplingMode.BOTH)

    @property
    def unique(self) -> bool:
        return self in (SamplingMode.UNIQUE, SamplingMode.BOTH)


@dataclass(frozen=True)
class HashParams:
    m: int
    a: Tuple[int, int, int]

    def __post_init__(self):
        if not is_prime(self.m):
            raise InvalidParameterError(f"hash modulus m={self.m} is not prime")
        if len(self.a) != 3 or any(not 0 <= ai < self.m for ai in self.a):
            raise InvalidParameterError(f"hash coefficients {self.a} must lie in [0, {self.m - 1}]")

    @classmethod
    def draw(cls, pixel_count: int, rng: np.random.Generator) -> "HashParams":
        m = next_prime(2 * max(1, pixel_count))
        while True:
            a = tuple(int(v) for v in rng.integers(0, m, size=3))
            if any(a):
                return cls(m=m, a=a)


@dataclass
class WeightedHistogram:
    colors: np.ndarray          # (N', 3) float64
    weights: np.ndarray         # (N',) float64, sums to 1
    source_pixel_count: int
    counts: np.ndarray = field(default=None)
    hash_params: Optional[HashParams] = None
    unique: bool = True

    def __post_init__(self):
        self.colors = np.ascontiguousarray(self.colors, dtype=np.float64).reshape(-1, 3)
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if self.counts is None:
            self.counts = np.rint(self.weights * self.source_pixel_count).astype(np.int64)
        for arr in (self.colors, self.weights, self.counts):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return self.colors.shape[0]

    @property
    def distinct_count(self) -> int:
        if self.unique:
            return len(self)
        return int(np.unique(self.colors, axis=0).shape[0])

    @classmethod
    def from_points(cls, pixels: np.ndarray) -> "WeightedHistogram":
        """Every pixel kept as its own point with weight 1/N (no color merging)."""
        pixels = np.asarray(pixels).reshape(-1, 3)
        if pixels.shape[0] == 0:
            raise EmptyInputError("cannot cluster an empty pixel sequence")
        n = pixels.shape[0]
        return cls(
            colors=pixels.astype(np.float64),
            weights=np.full(n, 1.0 / n),
            source_pixel_count=n,
            counts=np.ones(n, dtype=np.int64),
            unique=False,
        )


def pack_colors(pixels: np.ndarray) -> np.ndarray:
    p = np.asarray(pixels, dtype=np.int64)
    return (p[:, 0] << 16) | (p[:, 1] << 8) | p[:, 2]


def subsample_2to1(img) -> np.ndarray:
    """Pixels at even rows and even columns, top-left origin."""
    return np.ascontiguousarray(img.grid()[::2, ::2].reshape(-1, 3))


def sample_pixels(img, mode: SamplingMode) -> np.ndarray:
    return subsample_2to1(img) if SamplingMode(mode).subsamples else img.pixels


def hash_color(x: Sequence[int], p: HashParams) -> int:
    return (p.a[0] * int(x[0]) + p.a[1] * int(x[1]) + p.a[2] * int(x[2])) % p.m


def hash_pixels(pixels: np.ndarray, p: HashParams) -> np.ndarray:
    px = np.asarray(pixels, dtype=np.int64)
    return (p.a[0] * px[:, 0] + p.a[1] * px[:, 1] + p.a[2] * px[:, 2]) % p.m


@njit(nogil=True)
def _chain_unique(packed, buckets, m):
    n = packed.shape[0]
    head = np.full(m, -1, dtype=np.int64)
    link = np.empty(n, dtype=np.int64)
    keys = np.empty(n, dtype=np.int64)
    first = np.empty(n, dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    inverse = np.empty(n, dtype=np.int64)
    n_unique = 0
    for i in range(n):
        b = buckets[i]
        key = packed[i]
        j = head[b]
        while j != -1 and keys[j] != key:
            j = link[j]
        if j == -1:
            j = n_unique
            keys[j] = key
            first[j] = i
            link[j] = head[b]
            head[b] = j
            n_unique += 1
        counts[j] += 1
        inverse[i] = j
    return first[:n_unique].copy(), counts[:n_unique].copy(), inverse


def index_colors(pixels: np.ndarray, params: HashParams):
    """First-occurrence index and count of each unique color, plus the pixel -> unique map."""
    pixels = np.asarray(pixels).reshape(-1, 3)
    packed = pack_colors(pixels)
    buckets = hash_pixels(pixels, params)
    return _chain_unique(packed, buckets, params.m)


def build_histogram(pixels: np.ndarray, seed: Optional[int] = 0) -> WeightedHistogram:
    pixels = np.asarray(pixels).reshape(-1, 3)
    total = pixels.shape[0]
    if total == 0:
        raise EmptyInputError("cannot build a histogram from an empty pixel sequence")
    params = HashParams.draw(total, make_rng(seed))
    first, counts, _ = index_colors(pixels, params)
    hist = WeightedHistogram(
        colors=pixels[first].astype(np.float64),
        weights=counts / float(total),
        source_pixel_count=total,
        counts=counts,
        hash_params=params,
    )
    pretty_log("Histogram", f"{len(hist)} unique of {total} pixels (m={params.m})", icon=Icons.HISTOGRAM)
    return hist


def clustering_data(pixels: np.ndarray, mode: SamplingMode, seed: Optional[int] = 0) -> WeightedHistogram:
    if SamplingMode(mode).unique:
        return build_histogram(pixels, seed)
    return WeightedHistogram.from_points(pixels)


def dump_histogram_csv(hist: WeightedHistogram, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "g", "b", "count", "weight"])
        for (r, g, b), count, weight in zip(hist.colors.astype(np.int64).tolist(), hist.counts.tolist(), hist.weights.tolist()):
            writer.writerow([r, g, b, count, repr(weight)])
