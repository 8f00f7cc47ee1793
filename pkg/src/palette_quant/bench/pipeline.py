"""Single-image pipeline: sample -> histogram -> seed/precluster -> optional refine -> map -> metrics."""

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..core.histogram import (
    SamplingMode, WeightedHistogram, build_histogram, clustering_data, dump_histogram_csv, sample_pixels,
)
from ..core.initializers import INITIALIZERS, SeedConfig, initialize
from ..core.kmeans import ClusterState, Termination, kmeans_full, wsm
from ..core.metrics import MappedImage, QuantReport, map_pixels, mse, psnr
from ..core.palette import Palette
from ..errors import InvalidParameterError
from ..imaging.imageio import RawImage, load_image, save_image, write_palette
from ..preclusterers import PRECLUSTERERS, precluster
from ..utils.helpers import squared_distances
from ..utils.logging import Icons, pretty_log
from .reporting import format_report

logger = logging.getLogger("PaletteQuant")

REFINERS = ("wsm", "km")


@dataclass(frozen=True)
class MethodSpec:
    refiner: Optional[str]   # None for a standalone preclusterer
    seed_token: str

    @property
    def name(self) -> str:
        return self.seed_token if self.refiner is None else f"{self.refiner}-{self.seed_token}"


def parse_method(method: str, init: Optional[str] = None) -> MethodSpec:
    method = method.strip().lower()
    init = init.strip().lower() if init else None
    refiner, _, tail = method.partition("-")
    if refiner in REFINERS:
        token = tail or init
        if token is None:
            raise InvalidParameterError(f"method '{method}' needs an initializer (--init <tok>)")
        if tail and init and init != tail:
            raise InvalidParameterError(f"conflicting initializers '{tail}' and '{init}'")
        if token not in INITIALIZERS and token not in PRECLUSTERERS:
            raise InvalidParameterError(f"unknown initializer '{token}'")
        return MethodSpec(refiner=refiner, seed_token=token)
    if method in PRECLUSTERERS:
        if init:
            raise InvalidParameterError(f"--init '{init}' needs a refining method such as 'wsm', not '{method}'")
        return MethodSpec(refiner=None, seed_token=method)
    raise InvalidParameterError(f"unknown method '{method}'")


def pad_centers(centers: np.ndarray, hist: WeightedHistogram, k: int) -> np.ndarray:
    """Extends a short center list to k by maximin selection over the histogram."""
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    if centers.shape[0] >= k:
        return centers
    d2 = squared_distances(hist.colors, centers).min(axis=1)
    extra = []
    while centers.shape[0] + len(extra) < k:
        nxt = int(np.argmax(d2))
        extra.append(hist.colors[nxt])
        d2 = np.minimum(d2, squared_distances(hist.colors, hist.colors[nxt].reshape(1, 3))[:, 0])
    return np.vstack([centers, np.asarray(extra)])


@dataclass
class PipelineResult:
    palette: Palette
    report: QuantReport
    mapped: MappedImage
    hist: WeightedHistogram
    state: Optional[ClusterState] = None


def run_pipeline(
    img: RawImage,
    spec: MethodSpec,
    k: int,
    seed: Optional[int] = 0,
    sampling: SamplingMode = SamplingMode.UNIQUE,
    term: Termination = Termination(),
    image_name: str = "",
) -> PipelineResult:
    sampling = SamplingMode(sampling)
    start = time.perf_counter()
    pixels = sample_pixels(img, sampling)
    hist = build_histogram(pixels, seed)
    flags = []
    state = None

    if spec.refiner is None:
        palette = precluster(spec.seed_token, pixels, hist, k)
    else:
        if k > len(hist):
            raise InvalidParameterError(f"K={k} exceeds the number of distinct colors N'={len(hist)}")
        if spec.seed_token in INITIALIZERS:
            centers = initialize(spec.seed_token, hist, SeedConfig(k=k, seed=seed))
        else:
            seed_palette = precluster(spec.seed_token, pixels, hist, k)
            centers = seed_palette.centers
            if seed_palette.is_short:
                centers = pad_centers(centers, hist, k)
                flags.append("padded")
        if spec.refiner == "wsm":
            data = hist if sampling.unique else clustering_data(pixels, sampling, seed)
            state = wsm(data, centers, term)
        else:
            state = kmeans_full(pixels, centers, term)
        palette = Palette(state.centers, requested_k=k)
        if state.repairs:
            flags.append("repaired")
        if state.sse_increases:
            flags.append("sse_increase")

    if palette.is_short:
        logger.warning(f"{spec.name}: palette has {len(palette)} of {k} requested colors")
    mapped = map_pixels(img, palette)
    elapsed_ms = (time.perf_counter() - start) * 1000.0

    mse_value = mse(img, mapped.reconstruction)
    report = QuantReport(
        method=spec.name,
        k_requested=k,
        k_actual=len(palette),
        mse=mse_value,
        psnr=psnr(mse_value),
        iterations=state.iterations if state else 0,
        ndc_per_point_iter=state.ndc_per_point_iter if state else 0.0,
        time_ms=elapsed_ms,
        seed=seed,
        sampling=sampling.value,
        image=image_name,
        mse_rendered=mse(img, mapped.quantized),
        repairs=state.repairs if state else 0,
        flags=list(palette.flags) + flags,
    )
    pretty_log(
        "Quantized",
        f"{spec.name} K={k} mse={report.mse:.3f} psnr={report.psnr:.2f}dB {elapsed_ms:.0f}ms",
        icon=Icons.METRIC,
    )
    return PipelineResult(palette=palette, report=report, mapped=mapped, hist=hist, state=state)


def run_quantize(config) -> QuantReport:
    """Quantizes one image file per ``QuantConfig`` and writes every requested artifact."""
    spec = parse_method(config.method, config.init)
    img = load_image(config.input)
    result = run_pipeline(
        img, spec, config.k, seed=config.seed, sampling=config.sampling,
        term=config.termination, image_name=config.input.name,
    )
    save_image(result.mapped.quantized, config.output)
    if config.palette_out:
        write_palette(result.palette, config.palette_out)
    if config.histogram_out:
        dump_histogram_csv(result.hist, config.histogram_out)
    text = format_report(result.report, config.report.value)
    if config.report_out:
        Path(config.report_out).write_text(text + "\n")
    else:
        print(text, flush=True)
    return result.report
