import math
from typing import Optional

import numpy as np


def is_prime(n: int) -> bool:
    if n < 2: return False
    if n < 4: return True
    if n % 2 == 0: return False
    for d in range(3, math.isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n, by trial division."""
    candidate = max(2, n)
    while not is_prime(candidate):
        candidate += 1
    return candidate


def make_rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.default_rng(seed)


def round_half_up(values) -> np.ndarray:
    """Rounds real channel values half up and clamps them to the 8-bit range."""
    arr = np.asarray(values, dtype=np.float64)
    return np.clip(np.floor(arr + 0.5), 0, 255).astype(np.uint8)


def squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """N x K table of squared Euclidean distances, summed channel by channel."""
    diff = points[:, None, :] - centers[None, :, :]
    sq = diff * diff
    return sq[:, :, 0] + sq[:, :, 1] + sq[:, :, 2]
