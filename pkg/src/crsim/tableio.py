"""Result tables and their CSV form.

A table file starts with ``# key: value`` metadata lines, then one header row
of column names, then data rows. Floats are written with ``repr`` so a
write/read round trip is bit-exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class ResultTable:
    columns: dict[str, np.ndarray]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"columns have unequal lengths: {sorted(lengths)}")
        for key in self.metadata:
            if "\n" in key or ":" in key:
                raise ValueError(f"bad metadata key {key!r}")

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def select(self, names) -> "ResultTable":
        return ResultTable({n: self.columns[n] for n in names}, dict(self.metadata))

    def to_csv(self) -> str:
        lines = [f"# {k}: {v}" for k, v in self.metadata.items()]
        names = list(self.columns)
        lines.append(",".join(names))
        cols = [self.columns[n] for n in names]
        for i in range(self.n_rows):
            lines.append(",".join(repr(float(c[i])) for c in cols))
        return "\n".join(lines) + "\n"


def write_csv(table: ResultTable, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table.to_csv())


def parse_csv(text: str) -> ResultTable:
    metadata: dict[str, str] = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, value = lines[i][1:].strip().partition(":")
        metadata[key.strip()] = value.strip()
        i += 1
    if i >= len(lines):
        raise ValueError("table has no header row")
    names = lines[i].split(",")
    rows = [line.split(",") for line in lines[i + 1:] if line.strip()]
    for r in rows:
        if len(r) != len(names):
            raise ValueError(f"row has {len(r)} fields, header has {len(names)}")
    data = np.array([[float(x) for x in r] for r in rows]).reshape(len(rows), len(names))
    return ResultTable({n: data[:, j] for j, n in enumerate(names)}, metadata)


def read_csv(path: str | Path) -> ResultTable:
    return parse_csv(Path(path).read_text())
