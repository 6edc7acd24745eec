"""Experiment reports: CSV, JSON and a single log-log SVG."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .fitting import fit_log2

CSV_COLUMNS = ("a", "alpha", "a2_log2", "quantity_log2", "oracle_log2", "cpu_ms")


@dataclass
class ExperimentReport:
    name: str
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    slope: float | None = None
    intercept: float | None = None
    residual: float | None = None
    assertions: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    started: float = field(default_factory=time.time)
    finished: float | None = None

    def add_row(self, a: int, alpha: float, a2_log2, quantity_log2, oracle_log2=None, cpu_ms=0.0, **extra):
        self.rows.append({
            "a": a, "alpha": alpha, "a2_log2": a2_log2, "quantity_log2": quantity_log2,
            "oracle_log2": oracle_log2, "cpu_ms": cpu_ms, "extra": extra,
        })
        self.rows.sort(key=lambda r: r["a"])

    def fit(self):
        """Slope of quantity_log2 against a = log2(1/alpha); needs 3 rows."""
        if len(self.rows) >= 3:
            self.slope, self.intercept, self.residual = fit_log2(
                [r["a"] for r in self.rows], [r["quantity_log2"] for r in self.rows])
        return self.slope

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(**d)


def _csv_cell(v):
    return "" if v is None else repr(v) if isinstance(v, float) else str(v)


def write_csv(report: ExperimentReport, path: Path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(CSV_COLUMNS)
        for r in report.rows:
            wr.writerow([_csv_cell(r[c]) for c in CSV_COLUMNS])


def write_svg(report: ExperimentReport, path: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = [r["a"] for r in report.rows]
    ys = [r["quantity_log2"] for r in report.rows]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(xs, ys, color="k", s=18, label=report.name)
    if report.slope is not None:
        ax.plot(xs, [report.slope * x + report.intercept for x in xs], "r-",
                label=f"slope {report.slope:.3f}")
    ax.set_xlabel("log2(1/alpha)")
    ax.set_ylabel("log2 quantity")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def emit_report(report: ExperimentReport, out_dir, formats=("csv", "json")) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        p = out / f"{report.name}.{fmt}"
        if fmt == "csv":
            write_csv(report, p)
        elif fmt == "json":
            p.write_text(json.dumps(report.to_dict(), indent=2, default=_json_default))
        elif fmt == "svg":
            write_svg(report, p)
        else:
            raise ValueError(f"unknown format {fmt!r}")
        written.append(p)
    return written


def _json_default(o):
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    return str(o)


def load_report(path) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(Path(path).read_text()))
