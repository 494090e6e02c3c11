"""Render solver CSV logs into convergence, error, and comparison figures.

This package is deliberately decoupled from the solver: the only contract is
the CSV schema below plus the run-file naming convention
``{game}__{link}{param}__n{partitions}__s{seed}.csv``.  Inputs are read-only
and, for fixed inputs and options, output bytes are reproducible (image
timestamps are suppressed).
"""

from __future__ import annotations

import csv
import glob as globlib
import re
from dataclasses import dataclass
from pathlib import Path
from statistics import mean

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "frcfr-plots"  # reproducible SVG ids

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["CSV_SCHEMA", "SchemaError", "PlotJob", "RunLog", "load_runs", "render"]

CSV_SCHEMA = (
    "iteration,player,exploitability_milli,avg_regret_p1,avg_regret_p2,"
    "err_sum_p1,err_sum_p2,bound_p1,bound_p2,wall_ms"
)

_NAME_RE = re.compile(
    r"^(?P<game>.+)__(?P<family>poly|exp)(?P<param>[0-9.eE+-]+)"
    r"__n(?P<partitions>\d+)__s(?P<seed>\d+)\.csv$"
)

KINDS = ("convergence", "error", "final_bars")


class SchemaError(ValueError):
    """Input file does not match the expected CSV schema."""


@dataclass
class RunLog:
    """One parsed run CSV plus whatever its file name says about the config."""

    path: Path
    columns: dict[str, list[float]]
    game: str | None = None
    family: str | None = None
    param: float | None = None
    partitions: int | None = None
    seed: int | None = None

    @property
    def label(self) -> str:
        if self.family is None:
            return self.path.stem
        return f"{self.family}{self.param:g} n={self.partitions} s={self.seed}"


@dataclass(frozen=True)
class PlotJob:
    """What to render: input glob, figure kind, output path, axis options."""

    pattern: str
    kind: str
    out: str
    loglog: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")


def read_run(path: str | Path) -> RunLog:
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        expected = CSV_SCHEMA.split(",")
        if header != expected:
            missing = sorted(set(expected) - set(header or []))
            extra = sorted(set(header or []) - set(expected))
            raise SchemaError(
                f"{path.name}: header mismatch (missing columns: {missing or 'none'}, "
                f"unexpected columns: {extra or 'none'})"
            )
        columns: dict[str, list[float]] = {name: [] for name in expected}
        for row in reader:
            if not row:
                continue
            if int(float(row[0])) < 0:
                continue  # error-flagged row from an aborted run
            for name, value in zip(expected, row):
                columns[name].append(float(value))
    log = RunLog(path=path, columns=columns)
    m = _NAME_RE.match(path.name)
    if m:
        log.game = m.group("game")
        log.family = m.group("family")
        log.param = float(m.group("param"))
        log.partitions = int(m.group("partitions"))
        log.seed = int(m.group("seed"))
    return log


def load_runs(pattern: str) -> list[RunLog]:
    paths = sorted(globlib.glob(pattern))
    runs = [read_run(p) for p in paths if not Path(p).name == "summary.csv"]
    if not runs:
        raise FileNotFoundError(f"no run CSVs match {pattern!r}")
    return runs


def _mean_series(runs: list[RunLog], column: str) -> tuple[list[float], list[float]]:
    """Mean of a column across runs, grouped by iteration."""
    by_iter: dict[float, list[float]] = {}
    for run in runs:
        for it, v in zip(run.columns["iteration"], run.columns[column]):
            by_iter.setdefault(it, []).append(v)
    xs = sorted(by_iter)
    return xs, [mean(by_iter[x]) for x in xs]


def _save(fig, out: str | Path) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Date": None} if out.suffix == ".svg" else {}
    fig.savefig(out, metadata=metadata)
    plt.close(fig)
    return out


def _render_convergence(runs: list[RunLog], job: PlotJob) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for run in runs:
        ax.plot(
            run.columns["iteration"], run.columns["exploitability_milli"],
            ".", markersize=3, alpha=0.5,
        )
    xs, ys = _mean_series(runs, "exploitability_milli")
    ax.plot(xs, ys, "-", color="black", linewidth=1.5, label="mean over runs")
    if job.loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("exploitability (milli)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, job.out)


def _render_error(runs: list[RunLog], job: PlotJob) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for column, color in (("err_sum_p1", "tab:blue"), ("err_sum_p2", "tab:orange")):
        for run in runs:
            ax.plot(
                run.columns["iteration"], run.columns[column],
                ".", markersize=3, alpha=0.4, color=color,
            )
        xs, ys = _mean_series(runs, column)
        ax.plot(xs, ys, "-", color=color, linewidth=1.5, label=column)
    if job.loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("cumulative estimation error")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, job.out)


def _render_final_bars(runs: list[RunLog], job: PlotJob) -> Path:
    groups: dict[tuple[str, int], list[float]] = {}
    for run in runs:
        family = run.family or "unknown"
        partitions = run.partitions if run.partitions is not None else -1
        final = run.columns["exploitability_milli"][-1]
        groups.setdefault((family, partitions), []).append(final)
    partitions = sorted({k[1] for k in groups})
    families = sorted({k[0] for k in groups})
    width = 0.8 / len(families)
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, family in enumerate(families):
        xs, hs = [], []
        for j, n in enumerate(partitions):
            if (family, n) in groups:
                xs.append(j + i * width)
                hs.append(mean(groups[(family, n)]))
        ax.bar(xs, hs, width=width, label=family)
    ax.set_xticks([j + width * (len(families) - 1) / 2 for j in range(len(partitions))])
    ax.set_xticklabels([str(n) for n in partitions])
    ax.set_xlabel("partitions")
    ax.set_ylabel("final exploitability (milli), mean over runs")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, job.out)


def render(job: PlotJob) -> Path:
    """Render one figure, returning the output path."""
    runs = load_runs(job.pattern)
    if job.kind == "convergence":
        return _render_convergence(runs, job)
    if job.kind == "error":
        return _render_error(runs, job)
    return _render_final_bars(runs, job)
