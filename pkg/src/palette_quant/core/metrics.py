"""Pixel mapping and distortion metrics."""

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..errors import EmptyInputError, InvalidParameterError
from ..imaging.imageio import RawImage
from ..utils.helpers import make_rng, round_half_up
from ..utils.logging import Icons, pretty_log
from .histogram import HashParams, index_colors
from .kmeans import nearest_centers
from .palette import Palette

MAPPING_SEED = 0
CSV_FIELDS = [
    "image", "method", "k", "run", "seed", "sampling", "mse", "psnr",
    "iterations", "ndc_per_point_iter", "time_ms", "actual_k", "flags",
]


@dataclass
class MappedImage:
    indices: np.ndarray     # palette index per pixel, row-major
    quantized: RawImage     # 8-bit rendering of the palette colors
    reconstruction: np.ndarray  # real-valued palette color per pixel
    unique_colors: int
    ndc: int


def map_pixels(img: RawImage, palette: Palette) -> MappedImage:
    """Maps every pixel to its exact nearest palette color, each unique color searched once."""
    centers = getattr(palette, "centers", palette)
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    if centers.shape[0] == 0:
        raise EmptyInputError("cannot map pixels onto an empty palette")
    params = HashParams.draw(img.pixel_count, make_rng(MAPPING_SEED))
    first, _, inverse = index_colors(img.pixels, params)
    uniq = img.pixels[first].astype(np.float64)
    labels, ndc = nearest_centers(uniq, centers)
    indices = labels[inverse]
    render = round_half_up(centers)
    quantized = RawImage(width=img.width, height=img.height, pixels=render[indices])
    pretty_log("Pixel Map", f"{uniq.shape[0]} unique -> {centers.shape[0]} colors", icon=Icons.MAP)
    return MappedImage(
        indices=indices,
        quantized=quantized,
        reconstruction=centers[indices],
        unique_colors=int(uniq.shape[0]),
        ndc=ndc,
    )


def _as_pixels(img) -> np.ndarray:
    if isinstance(img, RawImage):
        return img.pixels.astype(np.float64)
    return np.asarray(img, dtype=np.float64).reshape(-1, 3)


def mse(orig, quant) -> float:
    """Mean over pixels of the squared RGB distance."""
    a, b = _as_pixels(orig), _as_pixels(quant)
    if a.shape != b.shape:
        raise InvalidParameterError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]} pixels")
    if isinstance(orig, RawImage) and isinstance(quant, RawImage):
        if (orig.width, orig.height) != (quant.width, quant.height):
            raise InvalidParameterError(
                f"dimension mismatch: {orig.width}x{orig.height} vs {quant.width}x{quant.height}"
            )
    diff = a - b
    sq = diff * diff
    return float(np.mean(sq[:, 0] + sq[:, 1] + sq[:, 2]))


def psnr(mse_value: float) -> float:
    if mse_value < 0:
        raise InvalidParameterError(f"MSE must be >= 0, got {mse_value}")
    if mse_value == 0:
        return math.inf
    return 20.0 * math.log10(255.0 / math.sqrt(mse_value))


def format_float(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return repr(float(value))


@dataclass
class QuantReport:
    method: str
    k_requested: int
    k_actual: int
    mse: float
    psnr: float
    iterations: int = 0
    ndc_per_point_iter: float = 0.0
    time_ms: float = 0.0
    seed: Optional[int] = None
    sampling: str = "unique"
    image: str = ""
    mse_rendered: float = 0.0
    repairs: int = 0
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["psnr"] = "inf" if math.isinf(self.psnr) else self.psnr
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def csv_row(self, run: int = 0, record_time: bool = True, rendered: bool = False) -> Dict[str, str]:
        row = {
            "image": self.image,
            "method": self.method,
            "k": str(self.k_requested),
            "run": str(run),
            "seed": "" if self.seed is None else str(self.seed),
            "sampling": self.sampling,
            "mse": format_float(self.mse),
            "psnr": format_float(self.psnr),
            "iterations": str(self.iterations),
            "ndc_per_point_iter": format_float(self.ndc_per_point_iter),
            "time_ms": f"{self.time_ms:.3f}" if record_time else "",
            "actual_k": str(self.k_actual),
            "flags": ";".join(self.flags),
        }
        if rendered:
            row["mse_rendered"] = format_float(self.mse_rendered)
        return row
