"""Batch renderer for frcfr experiment CSV logs."""

from .render import CSV_SCHEMA, PlotJob, RunLog, SchemaError, load_runs, render

__version__ = "0.1.0"
