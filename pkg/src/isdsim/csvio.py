"""CSV dialect shared by every command-line output.

Comma separated, one header row, '.' decimal separator, scientific notation
for magnitudes below 1e-3.  Every file starts with comment lines embedding the
tool version and the configuration hash so identical configurations rerun to
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json

from . import __version__

__all__ = ["config_hash", "fmt", "write_csv", "read_csv"]


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) or (hasattr(x, "dtype") and getattr(x, "dtype").kind in "iu"):
        return str(int(x))
    v = float(x)
    if v == 0.0:
        return "0"
    if abs(v) < 1e-3:
        return f"{v:.10e}"
    return f"{v:.10g}"


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_csv(path, header, rows, config: dict | None = None):
    with open(path, "w") as fh:
        fh.write(f"# isdsim {__version__}\n")
        if config is not None:
            fh.write(f"# config {config_hash(config)}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_csv(path):
    """Header list and rows (as strings) of a dialect file, skipping comments."""
    header, rows = None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    return header, rows
