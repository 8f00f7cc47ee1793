import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

from .core.histogram import SamplingMode
from .core.kmeans import Termination
from .errors import InvalidParameterError

LOG_NAME = "palette-quant.log"


def default_home() -> Path:
    return Path(os.getenv("PALETTE_QUANT_HOME", Path.home() / ".palette_quant"))


class ReportFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


@dataclass(frozen=True)
class QuantConfig:
    input: Path
    output: Path
    k: int
    method: str
    init: Optional[str] = None
    sampling: SamplingMode = SamplingMode.UNIQUE
    seed: Optional[int] = 0
    termination: Termination = field(default_factory=Termination)
    palette_out: Optional[Path] = None
    histogram_out: Optional[Path] = None
    report: ReportFormat = ReportFormat.JSON
    report_out: Optional[Path] = None

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParameterError(f"--colors must be >= 1, got {self.k}")
        object.__setattr__(self, "sampling", SamplingMode(self.sampling))
        object.__setattr__(self, "report", ReportFormat(self.report))


@dataclass(frozen=True)
class BenchConfig:
    images: Tuple[Path, ...]
    methods: Tuple[str, ...]
    ks: Tuple[int, ...]
    csv_path: Path
    runs: int = 1
    seed_base: int = 0
    sampling: SamplingMode = SamplingMode.UNIQUE
    termination: Termination = field(default_factory=Termination)
    jobs: int = 1
    record_times: bool = True
    rendered_mse: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise InvalidParameterError(f"--runs must be >= 1, got {self.runs}")
        if not self.methods:
            raise InvalidParameterError("at least one method is required")
        if not self.ks or any(k < 1 for k in self.ks):
            raise InvalidParameterError(f"every k must be >= 1, got {list(self.ks)}")
        if not self.images:
            raise InvalidParameterError("no input images found")
        if self.jobs < 1:
            raise InvalidParameterError(f"--jobs must be >= 1, got {self.jobs}")
        object.__setattr__(self, "sampling", SamplingMode(self.sampling))


def discover_images(directory: Path) -> List[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise InvalidParameterError(f"image directory not found: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in (".png", ".ppm"))


def parse_int_list(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise InvalidParameterError(f"expected a comma-separated integer list, got '{text}'") from None


def parse_token_list(text: str) -> Tuple[str, ...]:
    return tuple(v.strip().lower() for v in text.split(",") if v.strip())
