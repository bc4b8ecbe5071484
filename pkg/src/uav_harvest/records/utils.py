from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np


def _format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(float(value))
    return str(value)


def write_csv(
    path: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    *,
    metadata: Mapping[str, Any] | None = None,
) -> Path:
    """Write comma-separated rows (UTF-8, LF) after optional ``# key: value`` lines."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as handle:
        for key, value in (metadata or {}).items():
            handle.write(f"# {key}: {value}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(cell) for cell in row])
    return target


def read_csv_rows(path: str | Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Read a file written by ``write_csv``; returns (metadata, rows)."""
    metadata: dict[str, str] = {}
    body: list[str] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("# ") and not body:
            key, _, value = line[2:].partition(": ")
            metadata[key] = value
            continue
        body.append(line)
    return metadata, list(csv.DictReader(body))


def height_grid(h_min: float, h_max: float, step: float) -> np.ndarray:
    """Inclusive grid ``h_min, h_min + step, ...`` not exceeding ``h_max``."""
    if step <= 0:
        raise ValueError("step must be positive")
    if h_min > h_max:
        raise ValueError(f"h_min={h_min} exceeds h_max={h_max}")
    count = math.floor((h_max - h_min) / step + 1e-9) + 1
    return h_min + step * np.arange(count, dtype=np.float64)


def relative_gap(value: float, reference: float) -> float:
    if math.isinf(value) and math.isinf(reference):
        return 0.0
    if value == reference:
        return 0.0
    if math.isinf(value) or math.isinf(reference):
        return math.inf
    return abs(value - reference) / max(abs(reference), abs(value))


__all__ = ["write_csv", "read_csv_rows", "height_grid", "relative_gap"]
