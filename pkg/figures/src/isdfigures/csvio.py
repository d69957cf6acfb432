"""Reader for the simulation toolkit's CSV dialect.

Comma separated, one header row, '#' comment lines, '.' decimal separator.
"""

from __future__ import annotations

import numpy as np

__all__ = ["MissingColumn", "read_table"]


class MissingColumn(KeyError):
    def __init__(self, column, path):
        super().__init__(f"column {column!r} not present in {path}")
        self.column = column


def read_table(path) -> dict:
    """Columns of a dialect CSV as a {name: array-or-list} mapping."""
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    if header is None:
        return {}
    cols = {}
    for k, name in enumerate(header):
        vals = [r[k] for r in rows]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = vals
    return cols


def require(table: dict, columns, path):
    for c in columns:
        if c not in table:
            raise MissingColumn(c, path)
