"""Persistence: JSONL result records, canonical CSV tables, binary field dumps.

CSV numbers are written with 17 significant digits, '.' decimal separator and
'\\n' line endings, so identical floats serialize to identical bytes on every
platform.  Binary dumps are row-major little-endian float64 with a JSON
sidecar describing grid, scale and seed.
"""

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "ResultRecord",
    "fmt_float",
    "write_csv",
    "read_csv",
    "append_record",
    "read_records",
    "write_field_dump",
    "read_field_dump",
]

PACKAGE_VERSION = "0.1.0"


def fmt_float(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass
class ResultRecord:
    config_hash: str
    module: str
    operation: str
    inputs_digest: str
    outputs: dict
    wall_time: float
    version: str = PACKAGE_VERSION
    error: str | None = None
    created: float = field(default_factory=time.time)

    def to_json(self):
        payload = {
            "config_hash": self.config_hash,
            "module": self.module,
            "operation": self.operation,
            "inputs_digest": self.inputs_digest,
            "outputs": self.outputs,
            "wall_time": self.wall_time,
            "version": self.version,
            "error": self.error,
            "created": self.created,
        }
        return json.dumps(payload, sort_keys=True)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt_float(v) if not isinstance(v, str) else v for v in row))
    path.write_text("\n".join(lines) + "\n", newline="\n")


def read_csv(path):
    lines = Path(path).read_text().strip().split("\n")
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        parsed = []
        for c in cells:
            try:
                parsed.append(float(c))
            except ValueError:
                parsed.append(c)
        rows.append(parsed)
    return header, rows


def append_record(path, record):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a") as fh:
        fh.write(record.to_json() + "\n")


def read_records(path):
    """Records plus a list of undecodable lines (kept for partial reports)."""
    path = Path(path)
    records, corrupt = [], []
    if not path.exists():
        return records, corrupt
    for i, line in enumerate(path.read_text().splitlines()):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError:
            corrupt.append((i + 1, line[:80]))
    return records, corrupt


def write_field_dump(path, values, meta):
    """Flat binary (row-major float64, little-endian) plus JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.ascontiguousarray(values, dtype="<f8")
    arr.tofile(path)
    sidecar = dict(meta)
    sidecar["shape"] = list(arr.shape)
    sidecar["dtype"] = "<f8"
    sidecar["order"] = "C"
    Path(str(path) + ".json").write_text(json.dumps(sidecar, sort_keys=True, indent=1))


def read_field_dump(path):
    meta = json.loads(Path(str(path) + ".json").read_text())
    arr = np.fromfile(path, dtype="<f8").reshape(meta["shape"])
    return arr, meta
