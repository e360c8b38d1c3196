"""Result tables and their CSV serialization.

A CSV file starts with ``#`` metadata lines (schema id, table kind, plot
hints, the resolved configuration), followed by a header row and data
rows. Floats are written with ``repr`` so identical inputs give identical
bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

CSV_SCHEMA = "sep3d-csv/1"


@dataclass
class ResultTable:
    kind: str
    columns: tuple
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def as_dicts(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]


def format_value(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    if hasattr(x, "item"):
        return format_value(x.item())
    return str(x)


def parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def render_csv(table: ResultTable, config_text: str = "") -> str:
    lines = [f"# schema: {CSV_SCHEMA}", f"# table: {table.kind}"]
    for key, value in table.metadata.items():
        lines.append(f"# {key}: {value}")
    for line in config_text.splitlines():
        lines.append(f"# config: {line}".rstrip())
    lines.append(",".join(table.columns))
    for row in table.rows:
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(table: ResultTable, path, config_text: str = "") -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_csv(table, config_text))
    return path


def read_csv(path) -> tuple[ResultTable, str]:
    """Read a table written by :func:`write_csv`; returns the table and the embedded config."""
    meta, config, header, rows = {}, [], None, []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(":")
                value = value[1:] if value.startswith(" ") else value
                if key == "config":
                    config.append(value)
                else:
                    meta[key] = value
            elif header is None:
                header = tuple(line.split(","))
            elif line:
                rows.append(tuple(parse_value(v) for v in line.split(",")))
    if meta.get("schema") != CSV_SCHEMA or header is None:
        raise ValueError(f"{path}: not a {CSV_SCHEMA} file")
    kind = meta.pop("table", "")
    meta.pop("schema")
    return ResultTable(kind, header, rows, meta), "\n".join(config) + ("\n" if config else "")
