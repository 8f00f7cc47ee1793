"""Rank aggregation across benchmark cells."""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata
from tabulate import tabulate

from ..errors import InvalidParameterError
from ..utils.logging import Icons, pretty_log

logger = logging.getLogger("PaletteQuant")

CRITERIA = ("mse", "time_ms", "iterations")
CRITERION_LABELS = {"mse": "MSE", "time_ms": "Time", "iterations": "Iters"}


@dataclass(frozen=True)
class CellResult:
    """Mean outcome of one (image, method, k) cell over its runs."""
    image: str
    method: str
    k: int
    mse: float
    time_ms: float = float("nan")
    iterations: float = float("nan")


@dataclass
class RankTable:
    methods: List[str]
    ks: List[int]
    criteria: List[str]
    # criterion -> method -> k -> mean rank over images
    ranks: Dict[str, Dict[str, Dict[int, float]]] = field(default_factory=dict)
    excluded: List[Tuple[str, int]] = field(default_factory=list)

    def mean_rank(self, criterion: str, method: str) -> float:
        per_k = self.ranks[criterion][method]
        return float(np.mean([per_k[k] for k in self.ks if k in per_k]))

    def overall(self, method: str) -> float:
        """Equal-weight mean of the per-criterion mean ranks."""
        return float(np.mean([self.mean_rank(c, method) for c in self.criteria]))

    def render(self) -> str:
        headers = ["Method"]
        for c in self.criteria:
            label = CRITERION_LABELS.get(c, c)
            headers += [f"{label} K={k}" for k in self.ks] + [f"{label} mean"]
        headers.append("Overall")
        rows = []
        for m in sorted(self.methods, key=self.overall):
            row = [m]
            for c in self.criteria:
                row += [self.ranks[c][m].get(k, float("nan")) for k in self.ks]
                row.append(self.mean_rank(c, m))
            row.append(self.overall(m))
            rows.append(row)
        return tabulate(rows, headers=headers, floatfmt=".2f")


def midranks(values: Sequence[float]) -> np.ndarray:
    """Rank 1 is best (smallest); ties share the mean of the positions they span."""
    return rankdata(np.asarray(values, dtype=np.float64), method="average")


def _complete_groups(cells: Iterable[CellResult], methods: Sequence[str]):
    groups: Dict[Tuple[str, int], Dict[str, CellResult]] = defaultdict(dict)
    for cell in cells:
        groups[(cell.image, cell.k)][cell.method] = cell
    complete, excluded = {}, []
    for key in sorted(groups):
        have = groups[key]
        missing = [m for m in methods if m not in have]
        if missing:
            logger.warning(f"Excluding image '{key[0]}' at K={key[1]} from ranking: missing {', '.join(missing)}")
            excluded.append(key)
            continue
        complete[key] = have
    return complete, excluded


def rank_aggregate(cells: Sequence[CellResult], criteria: Sequence[str] = ("mse", "time_ms")) -> RankTable:
    for c in criteria:
        if c not in CRITERIA:
            raise InvalidParameterError(f"unknown ranking criterion '{c}'")
    methods = sorted({c.method for c in cells})
    ks = sorted({c.k for c in cells})
    complete, excluded = _complete_groups(cells, methods)

    table = RankTable(methods=methods, ks=[], criteria=list(criteria), excluded=excluded)
    collected: Dict[str, Dict[str, Dict[int, List[float]]]] = {
        c: {m: defaultdict(list) for m in methods} for c in criteria
    }
    for (image, k), by_method in complete.items():
        for c in criteria:
            values = [getattr(by_method[m], c) for m in methods]
            if any(np.isnan(values)):
                continue
            for m, r in zip(methods, midranks(values)):
                collected[c][m][k].append(float(r))

    table.ks = [k for k in ks if any(collected[c][m].get(k) for c in criteria for m in methods)]
    table.ranks = {
        c: {m: {k: float(np.mean(v)) for k, v in collected[c][m].items() if v} for m in methods}
        for c in criteria
    }
    pretty_log("Ranking", f"{len(methods)} methods over {len(complete)} image/K groups", icon=Icons.RANK)
    return table


def mean_cells(rows: Iterable[Mapping]) -> List[CellResult]:
    """Averages successful run rows (dicts with image, method, k, mse, time_ms, iterations) per cell."""
    acc: Dict[Tuple[str, str, int], List[Mapping]] = defaultdict(list)
    for row in rows:
        acc[(row["image"], row["method"], int(row["k"]))].append(row)
    cells = []
    for (image, method, k), group in sorted(acc.items()):
        def avg(key):
            vals = [float(r[key]) for r in group if r.get(key) not in (None, "")]
            return float(np.mean(vals)) if vals else float("nan")
        cells.append(CellResult(image=image, method=method, k=k,
                                mse=avg("mse"), time_ms=avg("time_ms"), iterations=avg("iterations")))
    return cells


def mse_improvement(cells: Sequence[CellResult]) -> Dict[Tuple[str, int], float]:
    """Mean percent MSE reduction of wsm-<x> over <x>, keyed by (x, k), averaged over images."""
    by_key = {(c.image, c.method, c.k): c for c in cells}
    acc: Dict[Tuple[str, int], List[float]] = defaultdict(list)
    for (image, method, k), cell in by_key.items():
        if not method.startswith("wsm-"):
            continue
        base = by_key.get((image, method[4:], k))
        if base is None or base.mse <= 0:
            continue
        acc[(method[4:], k)].append(100.0 * (base.mse - cell.mse) / base.mse)
    return {key: float(np.mean(v)) for key, v in sorted(acc.items())}


def render_improvement(improvement: Mapping[Tuple[str, int], float]) -> str:
    ks = sorted({k for _, k in improvement})
    names = sorted({x for x, _ in improvement})
    rows = [[x] + [improvement.get((x, k), float("nan")) for k in ks] for x in names]
    return tabulate(rows, headers=["Preclusterer"] + [f"K={k} %" for k in ks], floatfmt=".1f")
