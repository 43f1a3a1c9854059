"""Report emission: metric CSVs, loss traces, config snapshot, summary JSON, figures."""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

SUMMARY_SCHEMA_VERSION = 1


@dataclass
class Report:
    experiment_id: str
    seed: int
    config: dict = field(default_factory=dict)
    config_hash: str = ""
    tables: dict = field(default_factory=dict)  # name -> list of row dicts
    traces: dict = field(default_factory=dict)  # name -> list of per-epoch losses
    times: dict = field(default_factory=dict)  # stage -> seconds
    extra: dict = field(default_factory=dict)

    def add_table(self, name: str, rows) -> None:
        self.tables[name] = [dict(r) for r in rows]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(v, sort_keys=True)
    return str(v)


def csv_text(rows: list[dict]) -> str:
    """RFC-4180 CSV with a header row; columns in first-seen order across rows."""
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    if cols:
        w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def trace_text(losses) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["epoch", "loss"])
    for i, v in enumerate(losses, 1):
        w.writerow([i, repr(float(v))])
    return buf.getvalue()


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8", newline="")
    return path


def emit_report(report: Report, out_dir, figures: bool = True) -> dict:
    """Write every table and trace, the config snapshot and ``summary.json``.

    Returns the summary dict (also written). File names embed the experiment id
    and seed. Wall-clock times live only in the summary, so CSV bodies are
    reproducible byte for byte.
    """
    from ..config import config_hash, dump_config

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise PermissionError(f"report directory {out} is not writable")
    stem = f"{report.experiment_id}_seed{report.seed}"
    paths = {}
    for name, rows in report.tables.items():
        paths[f"table:{name}"] = str(_write(out / f"{stem}_{name}.csv", csv_text(rows)))
    for name, losses in report.traces.items():
        paths[f"trace:{name}"] = str(_write(out / f"{stem}_loss_{name}.csv", trace_text(losses)))
    if report.config:
        paths["config"] = str(_write(out / f"{stem}_config.yaml", dump_config(report.config)))
    if figures:
        from .plotting import render_figures
        for key, p in render_figures(report, out, stem).items():
            paths[f"figure:{key}"] = str(p)
    summary = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "experiment_id": report.experiment_id,
        "seed": report.seed,
        "config_hash": report.config_hash or (config_hash(report.config) if report.config else ""),
        "tables": {name: {"rows": len(rows)} for name, rows in report.tables.items()},
        "times_s": report.times,
        "artifacts": paths,
        "extra": report.extra,
    }
    (out / f"{stem}_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=str),
                                               encoding="utf-8")
    return summary
