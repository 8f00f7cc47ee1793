"""Octree quantizer limited to depth 6, reduced bottom-up by merging the lightest nodes."""

import numpy as np

from ..core.palette import Palette
from ..errors import EmptyInputError, InvalidParameterError
from ..utils.logging import Icons, pretty_log

MAX_DEPTH = 6


def morton_index(prefix: np.ndarray, level: int) -> np.ndarray:
    """Interleaves the ``level`` bits of each channel prefix, R most significant."""
    prefix = np.asarray(prefix, dtype=np.int64).reshape(-1, 3)
    code = np.zeros(prefix.shape[0], dtype=np.int64)
    for bit in range(level - 1, -1, -1):
        for c in range(3):
            code = (code << 1) | ((prefix[:, c] >> bit) & 1)
    return code


def octree_quantize(pixels: np.ndarray, k: int) -> Palette:
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    pixels = np.asarray(pixels).reshape(-1, 3)
    if pixels.shape[0] == 0:
        raise EmptyInputError("cannot quantize an empty pixel sequence")

    # Leaves are keyed by (level, channel prefixes); all start at MAX_DEPTH
    prefix = pixels.astype(np.int64) >> (8 - MAX_DEPTH)
    keys, inverse = np.unique(prefix, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    counts = np.bincount(inverse).astype(np.float64)
    values = pixels.astype(np.float64)
    sums = np.stack([np.bincount(inverse, weights=values[:, c]) for c in range(3)], axis=-1)
    levels = np.full(keys.shape[0], MAX_DEPTH, dtype=np.int64)

    for level in range(MAX_DEPTH - 1, -1, -1):
        if keys.shape[0] <= k:
            break
        parents = keys >> (levels - level)[:, None]
        pkeys, pinv = np.unique(parents, axis=0, return_inverse=True)
        pinv = pinv.reshape(-1)
        pcounts = np.bincount(pinv, weights=counts)
        nleaves = np.bincount(pinv)
        order = np.lexsort((morton_index(pkeys, level), pcounts))

        # Merge lightest ancestors first; each collapses its whole subtree into one leaf
        saved = np.cumsum(nleaves[order] - 1)
        excess = keys.shape[0] - k
        n_merge = int(np.searchsorted(saved, excess, side="left")) + 1
        n_merge = min(n_merge, order.shape[0])
        merged = np.zeros(pkeys.shape[0], dtype=bool)
        merged[order[:n_merge]] = True

        keep = ~merged[pinv]
        psums = np.stack([np.bincount(pinv, weights=sums[:, c]) for c in range(3)], axis=-1)
        keys = np.concatenate([pkeys[merged], keys[keep]])
        counts = np.concatenate([pcounts[merged], counts[keep]])
        sums = np.concatenate([psums[merged], sums[keep]])
        levels = np.concatenate([np.full(int(merged.sum()), level), levels[keep]])

    # Palette ordered by position of each leaf along the depth-6 Morton curve
    deep = keys << (MAX_DEPTH - levels)[:, None]
    order = np.lexsort((levels, morton_index(deep, MAX_DEPTH)))
    palette = Palette(sums[order] / counts[order][:, None], requested_k=k)
    pretty_log("Octree", f"{len(palette)}/{k} colors", icon=Icons.SPLIT)
    return palette
