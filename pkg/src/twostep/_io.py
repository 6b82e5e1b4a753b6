from __future__ import annotations

import csv
from collections.abc import Iterable, Sequence
from pathlib import Path


def fmt(x) -> str:
    """Shortest round-tripping text for floats; everything else via str."""
    if hasattr(x, "item"):
        x = x.item()
    if isinstance(x, float):
        return float.__repr__(x)
    return str(x)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]
