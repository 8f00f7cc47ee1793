from typing import Dict

import numpy as np

from ..core.palette import Palette
from ..errors import InvalidParameterError
from .coarse import CoarseHistogram, ColorBox, build_coarse_histogram, mediancut, wan, wu
from .exact import binary_split, otto
from .octree import octree_quantize

# Input each quantizer consumes: coarse histogram, raw pixels, or exact-color histogram
PRECLUSTERERS: Dict[str, str] = {
    "mc": "coarse",
    "ott": "exact",
    "oct": "pixels",
    "wan": "coarse",
    "wu": "coarse",
    "bs": "exact",
}

_COARSE = {"mc": mediancut, "wan": wan, "wu": wu}
_EXACT = {"ott": otto, "bs": binary_split}


def precluster(token: str, pixels: np.ndarray, hist, k: int) -> Palette:
    """Runs the quantizer named by ``token`` on whichever input it consumes."""
    kind = PRECLUSTERERS.get(token)
    if kind is None:
        raise InvalidParameterError(
            f"unknown preclustering method '{token}' (expected one of {', '.join(PRECLUSTERERS)})"
        )
    if kind == "coarse":
        return _COARSE[token](build_coarse_histogram(pixels), k)
    if kind == "pixels":
        return octree_quantize(pixels, k)
    return _EXACT[token](hist, k)


__all__ = [
    "PRECLUSTERERS", "precluster", "CoarseHistogram", "ColorBox", "build_coarse_histogram",
    "mediancut", "wan", "wu", "otto", "binary_split", "octree_quantize",
]
