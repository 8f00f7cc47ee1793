import csv
import io
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..core.metrics import CSV_FIELDS, QuantReport
from ..errors import InvalidParameterError
from ..utils.logging import Icons, pretty_log


def write_rows(path, rows: Iterable[Mapping], fields: Sequence[str] = CSV_FIELDS) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({f: row.get(f, "") for f in fields})
            count += 1
    pretty_log("CSV Written", f"{count} rows -> {path}", icon=Icons.IMG_WRITE)
    return count


def format_report(report: QuantReport, fmt: str) -> str:
    if fmt == "json":
        return report.to_json()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerow(report.csv_row())
        return buf.getvalue().rstrip("\n")
    raise InvalidParameterError(f"unknown report format '{fmt}'")
