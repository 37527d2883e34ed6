"""Tabular results with metadata; CSV and JSON emission.

CSV: RFC-4180, header row with unit-suffixed names, fixed scientific
notation with 16 significant digits (stable golden files, round-trips to
1e-12).  JSON: records array plus a metadata object carrying the full
resolved configuration and convention flags.
"""

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from fluxbic.errors import UnitError

_FLOAT_FORMAT = "%.15e"


@dataclass
class Dataset:
    columns: list[str]
    rows: list[list]
    metadata: dict = field(default_factory=dict)

    @staticmethod
    def from_records(records: list[dict], metadata: dict | None = None) -> "Dataset":
        if not records:
            raise UnitError("dataset must be nonempty")
        columns: list[str] = []
        for rec in records:
            for key in rec:
                if key not in columns:
                    columns.append(key)
        rows = [[rec.get(col) for col in columns] for rec in records]
        return Dataset(columns=columns, rows=rows, metadata=dict(metadata or {}))

    def records(self) -> list[dict]:
        return [dict(zip(self.columns, row)) for row in self.rows]


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return _FLOAT_FORMAT % value
    return str(value)


def to_csv_text(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    writer.writerow(dataset.columns)
    for row in dataset.rows:
        writer.writerow([_format_cell(v) for v in row])
    return buf.getvalue()


def to_json_text(dataset: Dataset) -> str:
    payload = {"metadata": dataset.metadata, "records": dataset.records()}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def emit_dataset(dataset: Dataset, fmt: str, path: str | Path) -> Path:
    """Write the dataset as CSV or JSON; returns the written path."""
    if not dataset.rows:
        raise UnitError("refusing to emit an empty dataset")
    if fmt not in ("csv", "json"):
        raise UnitError(f"unknown output format {fmt!r}")
    text = to_csv_text(dataset) if fmt == "csv" else to_json_text(dataset)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc
    return path


def read_dataset(path: str | Path) -> Dataset:
    """Read back an emitted file (format inferred from the suffix)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        payload = json.loads(text)
        return Dataset.from_records(payload["records"], payload.get("metadata"))
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    rows = []
    for raw in reader:
        row = []
        for cell in raw:
            if cell == "":
                row.append(None)
            else:
                try:
                    row.append(float(cell))
                except ValueError:
                    row.append(cell)
        rows.append(row)
    return Dataset(columns=header, rows=rows)
