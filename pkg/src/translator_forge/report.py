"""Residual reports: summaries, JSON serialization, baseline comparison.

A report is a flat record of named residuals measured on one grid.  The
JSON layout is stable (sorted keys, fixed float formatting via repr) so
that two runs over the same inputs produce bit-identical files.

Baselines map residual names to either a grid-tracking bound

    {"c_h2": C}     -> tolerance 2 * C * h^2,  h = max(h_u, h_v)

or an absolute one for identities that hold to rounding:

    {"abs": tol}    -> tolerance tol.

Residuals with no baseline entry fall back to C = 100.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .grid import ComplexGrid, RealField

DEFAULT_C = 100.0
BASELINE_ENV = "TRANSLATOR_FORGE_BASELINE"


@dataclass(frozen=True)
class ResidualSummary:
    """Scalar summary of one residual field."""

    max: float
    l2: float
    nodes: int

    def as_dict(self) -> dict:
        return {"max": self.max, "l2": self.l2, "nodes": self.nodes}


def summarize(res: RealField) -> ResidualSummary:
    g = res.grid
    vals = np.abs(np.asarray(res.values)[g.mask])
    area = g.h_u * g.h_v
    return ResidualSummary(
        max=float(vals.max()) if vals.size else 0.0,
        l2=float(math.sqrt(float(np.sum(vals ** 2)) * area)),
        nodes=int(vals.size),
    )


def summarize_value(value: float, nodes: int = 1) -> ResidualSummary:
    """Wrap an already-scalar residual (e.g. a loop-closure max)."""
    v = float(abs(value))
    return ResidualSummary(max=v, l2=v, nodes=nodes)


@dataclass
class ResidualReport:
    example: str
    grid: ComplexGrid
    residuals: dict[str, ResidualSummary] = field(default_factory=dict)
    convergence: dict[str, float] = field(default_factory=dict)

    def add(self, name: str, res: RealField | ResidualSummary | float) -> ResidualSummary:
        if isinstance(res, RealField):
            summary = summarize(res)
        elif isinstance(res, ResidualSummary):
            summary = res
        else:
            summary = summarize_value(res)
        self.residuals[name] = summary
        return summary

    def to_json_dict(self) -> dict:
        return {
            "example": self.example,
            "grid": {
                "h_u": self.grid.h_u,
                "h_v": self.grid.h_v,
                "n_u": self.grid.n_u,
                "n_v": self.grid.n_v,
            },
            "residuals": {k: v.as_dict() for k, v in self.residuals.items()},
            "convergence": dict(self.convergence),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    def write(self, path: str | os.PathLike) -> None:
        atomic_write_text(path, self.to_json())


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _packaged_baseline_path() -> str:
    return os.path.join(os.path.dirname(__file__), "baselines.json")


def load_baselines(path: str | os.PathLike | None = None) -> dict:
    """Load the baseline table, honouring the environment override."""
    if path is None:
        path = os.environ.get(BASELINE_ENV) or _packaged_baseline_path()
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"baseline file {path} must hold a JSON object")
    return data


def tolerance_for(example: str, residual: str, h: float,
                  baselines: dict | None = None,
                  default_c: float = DEFAULT_C) -> float:
    """Allowed residual magnitude for a given mesh width."""
    entry = None
    if baselines:
        entry = baselines.get(example, {}).get(residual)
    if entry is None:
        return 2.0 * default_c * h * h
    if "abs" in entry:
        return float(entry["abs"])
    if "c_h2" in entry:
        return 2.0 * float(entry["c_h2"]) * h * h
    raise ValueError(f"baseline entry for {example}/{residual} has neither "
                     f"'abs' nor 'c_h2': {entry!r}")


@dataclass(frozen=True)
class Evaluation:
    passed: bool
    failures: dict[str, tuple[float, float]]  # name -> (value, tolerance)


def evaluate_report(report: ResidualReport,
                    baselines: dict | None = None) -> Evaluation:
    if baselines is None:
        baselines = load_baselines()
    h = max(report.grid.h_u, report.grid.h_v)
    failures = {}
    for name, summary in report.residuals.items():
        tol = tolerance_for(report.example, name, h, baselines)
        if summary.max > tol:
            failures[name] = (summary.max, tol)
    return Evaluation(passed=not failures, failures=failures)


def observed_order(hs, errs) -> float | str:
    """Least-squares slope of log(err) against log(h).

    Returns "exact" when every error is at rounding level, since a slope
    through noise means nothing there.
    """
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if hs.shape != errs.shape or hs.size < 2:
        raise ValueError("need matching h and error sequences, length >= 2")
    if np.any(errs < 0):
        raise ValueError("errors must be non-negative")
    if np.all(errs < 1e-13):
        return "exact"
    if np.any(errs == 0):
        errs = np.maximum(errs, 1e-300)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    return float(slope)
