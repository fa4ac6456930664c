"""Experiment reports: deterministic JSON/CSV artifacts and console rendering.

``report.json`` holds the config echo, dataset digests, per-arm details and
every result table. Each table is also written as ``<table>.csv``. Wall-clock
time goes to ``timing.json`` so the other files are byte-reproducible.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional
import csv
import json
import logging

from rich.console import Console
from rich.table import Table

from ..errors import DataError

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
TIMING_FILE = "timing.json"


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(path: Path, rows: List[Dict[str, Any]]) -> Path:
    """CSV with columns in first-seen order across ``rows``."""
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    return path


@dataclass
class ExperimentReport:
    """Self-contained result of one experiment invocation."""
    experiment: str
    config: Dict[str, Any]
    digests: Dict[str, str] = field(default_factory=dict)
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    arms: List[Dict[str, Any]] = field(default_factory=list)
    wall_clock: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "digests": self.digests,
            "tables": self.tables,
            "arms": self.arms,
        }

    def save(self, directory: Path) -> Path:
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / REPORT_FILE
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        for name, rows in self.tables.items():
            write_table(directory / f"{name}.csv", rows)
        if self.wall_clock is not None:
            (directory / TIMING_FILE).write_text(
                json.dumps({"wall_clock_seconds": self.wall_clock}, indent=2) + "\n"
            )
        logger.info(f"Wrote {self.experiment} report to {directory}")
        return path

    @classmethod
    def load(cls, path: Path) -> "ExperimentReport":
        """Load ``report.json`` (or the directory containing it)."""
        if path.is_dir():
            path = path / REPORT_FILE
        if not path.exists():
            raise DataError(f"No report at {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise DataError(f"Malformed report {path}: {e}") from e
        timing = path.parent / TIMING_FILE
        wall_clock = None
        if timing.exists():
            wall_clock = json.loads(timing.read_text()).get("wall_clock_seconds")
        return cls(
            experiment=data["experiment"],
            config=data.get("config", {}),
            digests=data.get("digests", {}),
            tables=data.get("tables", {}),
            arms=data.get("arms", []),
            wall_clock=wall_clock,
        )


def render_table(console: Console, title: str, rows: List[Dict[str, Any]]) -> None:
    if not rows:
        console.print(f"[dim]{title}: no rows[/dim]")
        return
    table = Table(title=title)
    columns = list(rows[0])
    for column in columns:
        table.add_column(column)
    for row in rows:
        table.add_row(
            *[f"{row.get(c):.4f}" if isinstance(row.get(c), float) else _cell(row.get(c))
              for c in columns]
        )
    console.print(table)


def render_report(report: ExperimentReport, console: Optional[Console] = None) -> None:
    """Print every table of ``report`` except per-sample ones."""
    console = console or Console()
    console.print(f"[bold]{report.experiment}[/bold]")
    for arm, digest in sorted(report.digests.items()):
        console.print(f"  [dim]{arm}: {digest[:16]}[/dim]")
    for name, rows in report.tables.items():
        if name.endswith("per_sample"):
            console.print(f"[dim]{name}: {len(rows)} rows (see {name}.csv)[/dim]")
            continue
        render_table(console, name, rows)
    if report.wall_clock is not None:
        console.print(f"[dim]wall clock: {report.wall_clock:.1f}s[/dim]")
