"""Benchmark driver: every (image, method, k, run) cell, run concurrently in worker threads."""

import asyncio
import logging
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from tabulate import tabulate

from ..config import BenchConfig
from ..core.histogram import SamplingMode, build_histogram, sample_pixels
from ..core.initializers import SeedConfig, init_forgy
from ..core.kmeans import Termination, kmeans_full, wsm
from ..core.metrics import CSV_FIELDS, QuantReport
from ..errors import QuantError
from ..imaging.imageio import RawImage, load_image
from ..utils.logging import Icons, pretty_log, run_id_context
from .pipeline import MethodSpec, parse_method, run_pipeline
from .ranking import RankTable, mean_cells, mse_improvement, rank_aggregate, render_improvement
from .reporting import write_rows

logger = logging.getLogger("PaletteQuant")

NDC_FIELDS = ["image", "k", "method", "ndc_per_point_iter", "iterations", "time_ms", "sse", "repairs"]
SCALING_FIELDS = ["image", "method", "k", "median_time_ms", "ratio_to_first"]


@dataclass(frozen=True)
class BenchCell:
    image: str
    method: str
    k: int
    run: int
    seed: int


@dataclass
class BenchResult:
    rows: List[Dict[str, str]]
    ranking: Optional[RankTable] = None
    improvement: Dict = field(default_factory=dict)
    failures: int = 0


def _error_row(cell: BenchCell, sampling: SamplingMode, message: str) -> Dict[str, str]:
    row = {f: "" for f in CSV_FIELDS}
    row.update(
        image=cell.image, method=cell.method, k=str(cell.k), run=str(cell.run),
        seed=str(cell.seed), sampling=sampling.value, flags=f"error:{message}".replace(",", ";"),
    )
    return row


def enumerate_cells(config: BenchConfig, names: Sequence[str]) -> List[BenchCell]:
    return [
        BenchCell(image=name, method=method, k=k, run=run, seed=config.seed_base + run)
        for name in names
        for method in config.methods
        for k in config.ks
        for run in range(config.runs)
    ]


def _run_cell(img: RawImage, spec: MethodSpec, cell: BenchCell, config: BenchConfig) -> QuantReport:
    run_id_context.set(f"{cell.image}:{cell.method}:{cell.k}:{cell.run}")
    return run_pipeline(
        img, spec, cell.k, seed=cell.seed, sampling=config.sampling,
        term=config.termination, image_name=cell.image,
    ).report


async def run_bench(config: BenchConfig, write: bool = True) -> BenchResult:
    specs = {m: parse_method(m) for m in config.methods}
    images: Dict[str, Optional[RawImage]] = {}
    load_errors: Dict[str, str] = {}
    for path in config.images:
        name = Path(path).name
        try:
            images[name] = await asyncio.to_thread(load_image, path)
        except (QuantError, OSError) as e:
            logger.error(f"Cannot load {path}: {e}")
            load_errors[name] = str(e)
            images[name] = None

    pretty_log("Bench", icon=Icons.BENCH, special_marker="SECTION_START")
    cells = enumerate_cells(config, list(images))
    pretty_log("Bench", f"{len(cells)} cells on {len(images)} images, jobs={config.jobs}", icon=Icons.BENCH)

    sem = asyncio.Semaphore(config.jobs)

    async def process(cell: BenchCell):
        img = images[cell.image]
        if img is None:
            return _error_row(cell, config.sampling, load_errors[cell.image]), False
        async with sem:
            try:
                report = await asyncio.to_thread(_run_cell, img, specs[cell.method], cell, config)
            except (QuantError, ValueError) as e:
                pretty_log("Cell Failed", f"{cell.image} {cell.method} K={cell.k}: {e}", icon=Icons.FAIL, level="WARN")
                return _error_row(cell, config.sampling, str(e)), False
            except Exception as e:
                logger.exception(f"Unexpected failure in {cell.image} {cell.method} K={cell.k} run {cell.run}")
                return _error_row(cell, config.sampling, f"{type(e).__name__}: {e}"), False
        row = report.csv_row(run=cell.run, record_time=config.record_times, rendered=config.rendered_mse)
        row["method"] = cell.method
        return row, True

    outcomes = await asyncio.gather(*(process(c) for c in cells))
    rows = sorted(
        (row for row, _ in outcomes),
        key=lambda r: (r["image"], r["method"], int(r["k"]), int(r["run"])),
    )
    failures = sum(1 for _, ok in outcomes if not ok)
    if write:
        fields = CSV_FIELDS + ["mse_rendered"] if config.rendered_mse else CSV_FIELDS
        write_rows(config.csv_path, rows, fields)

    ok_rows = [r for r in rows if r["mse"] != ""]
    result = BenchResult(rows=rows, failures=failures)
    if ok_rows:
        cells_mean = mean_cells(ok_rows)
        criteria = ("mse", "time_ms") if config.record_times else ("mse",)
        result.ranking = rank_aggregate(cells_mean, criteria)
        result.improvement = mse_improvement(cells_mean)
    if failures:
        logger.warning(f"{failures} of {len(cells)} benchmark cells failed")
    pretty_log("Bench Done", f"{len(rows)} rows, {failures} failed", icon=Icons.OK if not failures else Icons.WARN)
    pretty_log("Bench", icon=Icons.BENCH, special_marker="SECTION_END")
    return result


def render_bench_summary(result: BenchResult) -> str:
    parts = []
    if result.ranking is not None:
        parts.append(result.ranking.render())
    if result.improvement:
        parts.append(render_improvement(result.improvement))
    return "\n\n".join(parts)


def run_ndc_comparison(
    images: Sequence[Path],
    ks: Sequence[int],
    iterations: int = 20,
    seed: int = 0,
    sampling: SamplingMode = SamplingMode.NONE,
    out_path: Optional[Path] = None,
) -> List[Dict[str, str]]:
    """Runs conventional k-means and WSM from the same Forgy seeds for a fixed iteration count."""
    term = Termination(fixed_iterations=iterations)
    rows = []
    pretty_log("NDC Study", icon=Icons.METRIC, special_marker="SECTION_START")
    for path in images:
        img = load_image(path)
        pixels = sample_pixels(img, SamplingMode.TWO_TO_ONE if SamplingMode(sampling).subsamples else SamplingMode.NONE)
        hist = build_histogram(pixels, seed)
        for k in ks:
            init = init_forgy(hist, SeedConfig(k=k, seed=seed))
            for name, runner in (("km", lambda: kmeans_full(pixels, init, term)), ("wsm", lambda: wsm(hist, init, term))):
                start = time.perf_counter()
                state = runner()
                elapsed = (time.perf_counter() - start) * 1000.0
                rows.append({
                    "image": Path(path).name, "k": str(k), "method": name,
                    "ndc_per_point_iter": f"{state.ndc_per_point_iter:.4f}",
                    "iterations": str(state.iterations),
                    "time_ms": f"{elapsed:.3f}", "sse": repr(state.sse / state.weight_total), "repairs": str(state.repairs),
                })
                pretty_log("NDC", f"{Path(path).name} K={k} {name}: {state.ndc_per_point_iter:.2f}/pt/it", icon=Icons.METRIC)
    if out_path is not None:
        write_rows(out_path, rows, NDC_FIELDS)
    pretty_log("NDC Study", icon=Icons.METRIC, special_marker="SECTION_END")
    return rows


def run_scaling(
    image: Path,
    ks: Sequence[int],
    runs: int = 3,
    method: str = "wsm-fgy",
    seed: int = 0,
    sampling: SamplingMode = SamplingMode.UNIQUE,
    term: Termination = Termination(),
    out_path: Optional[Path] = None,
) -> List[Dict[str, str]]:
    """Median pipeline wall time per K and its ratio to the first K."""
    spec = parse_method(method)
    img = load_image(image)
    rows = []
    first = None
    pretty_log("Scaling", icon=Icons.TIMER, special_marker="SECTION_START")
    for k in ks:
        times = [
            run_pipeline(img, spec, k, seed=seed + r, sampling=sampling, term=term).report.time_ms
            for r in range(runs)
        ]
        med = statistics.median(times)
        first = med if first is None else first
        rows.append({
            "image": Path(image).name, "method": spec.name, "k": str(k),
            "median_time_ms": f"{med:.3f}", "ratio_to_first": f"{med / first:.4f}",
        })
        pretty_log("Scaling", f"K={k} median={med:.1f}ms x{med / first:.2f}", icon=Icons.TIMER)
    if out_path is not None:
        write_rows(out_path, rows, SCALING_FIELDS)
    pretty_log("Scaling", icon=Icons.TIMER, special_marker="SECTION_END")
    return rows


def render_ndc_summary(rows: Sequence[Dict[str, str]]) -> str:
    """One line per (image, k) with both methods side by side and the KM:WSM ratios."""
    paired: Dict = {}
    for row in rows:
        paired.setdefault((row["image"], int(row["k"])), {})[row["method"]] = row
    table = []
    for (image, k), by in sorted(paired.items()):
        km, ws = by.get("km"), by.get("wsm")
        if km is None or ws is None:
            continue
        ndc_km, ndc_ws = float(km["ndc_per_point_iter"]), float(ws["ndc_per_point_iter"])
        t_km, t_ws = float(km["time_ms"]), float(ws["time_ms"])
        table.append([
            image, k, ndc_km, ndc_ws, ndc_km / ndc_ws if ndc_ws else float("inf"),
            t_km, t_ws, t_km / t_ws if t_ws else float("inf"),
        ])
    return tabulate(
        table,
        headers=["Image", "K", "NDC KM", "NDC WSM", "NDC ratio", "ms KM", "ms WSM", "Time ratio"],
        floatfmt=".2f",
    )
