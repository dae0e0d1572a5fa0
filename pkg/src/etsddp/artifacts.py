"""Artifact writers for solver runs.

All files are UTF-8 with LF line endings and floats printed with repr()
(shortest round-trip), so identical inputs produce byte-identical files.
Wall-clock timing is reported on stdout and in the comparison table only;
report JSON stays timing-free so repeated seeded runs match exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .ets import ComparisonRecord
from .solver import SolveReport, Trajectory


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(path: str | Path, traj: Trajectory) -> None:
    xs, us = traj.states, traj.controls
    lines = ["t,px,py,theta,v,omega,a"]
    for t in range(xs.shape[0]):
        cells = [str(t)] + [_fmt(v) for v in xs[t]]
        if t < us.shape[0]:
            cells += [_fmt(v) for v in us[t]]
        else:
            cells += ["", ""]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_cost_history_csv(path: str | Path, cost_history: Iterable[float],
                           comparison_history: Optional[Iterable[float]] = None) -> None:
    costs = list(cost_history)
    comps = list(comparison_history) if comparison_history is not None else costs
    lines = ["iter,cost,comparison_cost"]
    for i, (c, m) in enumerate(zip(costs, comps)):
        lines.append(f"{i},{_fmt(c)},{_fmt(m)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_comparison_csv(path: str | Path, records: Iterable[ComparisonRecord]) -> None:
    lines = ["method,iterations,ms_per_iter,total_s,cost"]
    for rec in records:
        lines.append(",".join([
            rec.method,
            str(rec.iterations),
            _fmt(rec.seconds_per_iteration * 1e3),
            _fmt(rec.total_seconds),
            _fmt(rec.final_cost),
        ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def report_dict(report: SolveReport, method: str) -> dict:
    out = {
        "method": method,
        "converged": report.converged,
        "iterations": report.iterations,
        "final_cost": report.final_cost,
        "cost_history": [float(c) for c in report.cost_history],
        "terminal_state": [float(v) for v in report.trajectory.states[-1]],
    }
    if report.comparison_history is not None:
        out["final_comparison_cost"] = float(report.comparison_history[-1])
        out["comparison_history"] = [float(c) for c in report.comparison_history]
    if report.terminal_mahalanobis is not None:
        out["terminal_mahalanobis"] = float(report.terminal_mahalanobis)
    return out


def write_report_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def trajectory_lists(traj: Trajectory) -> dict:
    return {"states": np.asarray(traj.states).tolist(),
            "controls": np.asarray(traj.controls).tolist()}
