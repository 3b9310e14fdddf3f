"""Deterministic report emission: JSON summary, CSV tables, runinfo sidecar.

The report JSON and the CSV tables are byte-identical across reruns of the
same config (sorted keys, 17-significant-digit floats, no volatile
content); wall time and version stamps go to a separate runinfo file that
is excluded from the determinism contract.  All writes are atomic
(write-temp-rename).
"""

from __future__ import annotations

import hashlib
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np


class ReportIOError(OSError):
    """Report files could not be written."""


def format_float(x: float) -> str:
    """17-significant-digit decimal that round-trips float64 exactly."""
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"non-finite float in report: {x}")
    s = format(x, ".17g")
    if not any(c in s for c in ".eE"):
        s += ".0"
    return s


def jsonsafe(x):
    """Replace non-finite floats by None, recursively (reports stay JSON)."""
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: jsonsafe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonsafe(v) for v in x]
    return x


def _dump(obj, pieces, indent):
    pad = "  " * indent
    if obj is None:
        pieces.append("null")
    elif obj is True:
        pieces.append("true")
    elif obj is False:
        pieces.append("false")
    elif isinstance(obj, int):
        pieces.append(str(obj))
    elif isinstance(obj, float):
        pieces.append(format_float(obj))
    elif isinstance(obj, str):
        import json as _json

        pieces.append(_json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            pieces.append("{}")
            return
        pieces.append("{\n")
        keys = sorted(obj, key=str)
        for i, k in enumerate(keys):
            pieces.append(f'{pad}  "{k}": ')
            _dump(obj[k], pieces, indent + 1)
            pieces.append(",\n" if i + 1 < len(keys) else "\n")
        pieces.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not len(obj):
            pieces.append("[]")
            return
        pieces.append("[\n")
        for i, v in enumerate(obj):
            pieces.append(pad + "  ")
            _dump(v, pieces, indent + 1)
            pieces.append(",\n" if i + 1 < len(obj) else "\n")
        pieces.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} into a report")


def canonical_json(obj) -> str:
    """Sorted-key JSON with deterministic float formatting."""
    pieces: list[str] = []
    _dump(obj, pieces, 0)
    return "".join(pieces) + "\n"


def content_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def atomic_write_text(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(d, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
    except OSError as e:
        raise ReportIOError(f"cannot write {path}: {e}") from e


def _csv_cell(x) -> str:
    if isinstance(x, np.generic):
        x = x.item()
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""  # missing value
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format_float(x)
    if isinstance(x, int):
        return str(x)
    s = str(x)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def table_to_csv(headers, rows) -> str:
    lines = [",".join(headers)]
    for row in rows:
        lines.append(",".join(_csv_cell(c) for c in row))
    return "\n".join(lines) + "\n"


def _parse_cell(s: str):
    if s == "":
        return None
    if s == "true":
        return True
    if s == "false":
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def csv_to_table(text: str):
    lines = text.splitlines()
    headers = lines[0].split(",")
    rows = [[_parse_cell(c) for c in line.split(",")] for line in lines[1:] if line]
    return headers, rows


@dataclass
class ExperimentReport:
    """Everything one experiment run produced.

    results: scalar summary values; checks: one entry per pass/fail with
    its tolerance; tables: name -> (headers, rows), emitted as CSVs.
    """

    experiment: str
    config: dict
    results: dict
    checks: list
    tables: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def all_passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def summary_lines(self):
        out = []
        for c in self.checks:
            status = "PASS" if c["passed"] else "FAIL"
            out.append(f"[{status}] {self.experiment}: {c['name']} ({c['detail']})")
        return out


def emit_report(report: ExperimentReport, outdir: str, prefix: str) -> dict:
    """Write report files; returns {kind: path}.

    <prefix>.report.json and the CSVs are deterministic; wall time and
    version stamps go to <prefix>.runinfo.json.
    """
    paths = {}
    table_files = {}
    for name, (headers, rows) in sorted(report.tables.items()):
        fname = f"{prefix}.{name}.csv"
        atomic_write_text(os.path.join(outdir, fname), table_to_csv(headers, rows))
        table_files[name] = fname
        paths[f"table:{name}"] = os.path.join(outdir, fname)
    doc = {
        "experiment": report.experiment,
        "config": jsonsafe(report.config),
        "content_hash": content_hash(jsonsafe(report.config)),
        "results": jsonsafe(report.results),
        "checks": jsonsafe(report.checks),
        "tables": table_files,
    }
    rpath = os.path.join(outdir, f"{prefix}.report.json")
    atomic_write_text(rpath, canonical_json(doc))
    paths["report"] = rpath
    import platform
    import time as _time

    import numpy as _np

    runinfo = {
        "wall_time_s": report.wall_time_s,
        "written_at": _time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "python": platform.python_version(),
        "numpy": _np.__version__,
    }
    ipath = os.path.join(outdir, f"{prefix}.runinfo.json")
    atomic_write_text(ipath, canonical_json(runinfo))
    paths["runinfo"] = ipath
    return paths


def parse_report(report_path: str) -> ExperimentReport:
    """Read an emitted report (JSON + CSV tables) back into an object."""
    import json as _json

    with open(report_path, "r", encoding="utf-8") as fh:
        doc = _json.load(fh)
    outdir = os.path.dirname(os.path.abspath(report_path))
    tables = {}
    for name, fname in doc.get("tables", {}).items():
        with open(os.path.join(outdir, fname), "r", encoding="utf-8") as fh:
            tables[name] = csv_to_table(fh.read())
    return ExperimentReport(
        experiment=doc["experiment"],
        config=doc["config"],
        results=doc["results"],
        checks=doc["checks"],
        tables=tables,
    )
