"""Report assembly and plot-data emission (JSON report, CSV tables, optional SVG)."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import UnknownTable

REPORT_NAME = "report.json"


@dataclass
class Report:
    version: str
    subcommand: str
    config: dict
    scalars: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    timings: dict | None = None

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> dict:
        out = {
            "version": self.version,
            "subcommand": self.subcommand,
            "config": self.config,
            "scalars": self.scalars,
            "tables": self.tables,
            "verdicts": self.verdicts,
            "passed": self.passed,
        }
        if self.timings is not None:
            out["timings"] = self.timings
        return out


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def dumps(report: Report) -> str:
    return json.dumps(_plain(report.to_dict()), indent=2, sort_keys=True) + "\n"


def write_report(report: Report, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / REPORT_NAME
    path.write_text(dumps(report))
    return path


def table_csv(table: dict) -> str:
    cols = list(table)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in zip(*(table[c] for c in cols)):
        writer.writerow(["%.17g" % v for v in row])
    return buf.getvalue()


def _svg(name: str, table: dict, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cols = list(table)
    x = np.asarray(table[cols[0]], float)
    with matplotlib.rc_context({"svg.hashsalt": "qccomp", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for c in cols[1:]:
            ax.plot(x, np.asarray(table[c], float), label=c)
        ax.set_xlabel(cols[0])
        ax.set_title(name)
        ax.legend()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def emit_plot_data(report: Report, which: str, out_dir: str | Path, svg: bool = False) -> list[Path]:
    """Write <out>/tables/<which>.csv (and .svg)."""
    table = report.tables.get(which)
    if not table:
        raise UnknownTable(which)
    tdir = Path(out_dir) / "tables"
    tdir.mkdir(parents=True, exist_ok=True)
    paths = [tdir / f"{which}.csv"]
    paths[0].write_text(table_csv(table))
    if svg:
        paths.append(tdir / f"{which}.svg")
        _svg(which, table, paths[1])
    return paths
