"""CSV conventions shared by every feature, score and report file.

Header row first, ``clip_id`` (or ``subject_id``) in column one, floats with
10 significant digits, ``\\n`` line endings.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.10g}"


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_feature_csv(path) -> tuple[list[str], list[str], np.ndarray]:
    """Return (column names without the id, ids, value matrix)."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        ids, values = [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            values.append([float(c) for c in row[1:]])
    X = np.asarray(values, dtype=np.float64).reshape(len(ids), len(header) - 1)
    return header[1:], ids, X


def read_dict_rows(path) -> list[dict[str, str]]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
