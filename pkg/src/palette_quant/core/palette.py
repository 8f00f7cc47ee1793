from dataclasses import dataclass, field
from typing import List

import numpy as np

from ..errors import EmptyInputError
from ..utils.helpers import round_half_up


@dataclass
class Palette:
    """Ordered representative colors.

    ``centers`` keeps the real-valued cluster centers; ``render`` is the 8-bit
    form written to files and used for pixel mapping.
    """
    centers: np.ndarray
    requested_k: int = 0
    flags: List[str] = field(default_factory=list)

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64).reshape(-1, 3)
        if centers.shape[0] == 0:
            raise EmptyInputError("palette must hold at least one color")
        self.centers = centers
        if not self.requested_k:
            self.requested_k = centers.shape[0]
        if self.is_short and "short_palette" not in self.flags:
            self.flags.append("short_palette")

    def __len__(self) -> int:
        return self.centers.shape[0]

    @property
    def is_short(self) -> bool:
        return self.centers.shape[0] < self.requested_k

    @property
    def render(self) -> np.ndarray:
        return round_half_up(self.centers)
