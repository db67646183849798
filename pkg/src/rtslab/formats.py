"""Output files of the grid command: runs.csv, cells.csv and report.json."""

from __future__ import annotations

import csv
import io
import json
import math

from . import __version__
from .config import ALGORITHMS, DISTANCES, FITNESSES, POLICIES, name_of
from .experiments import Report

RUNS_HEADER = ("protocol,algorithm,policy,distance,n,mu,w,run_index,seed,status,generations,"
               "lone,best_branch0,best_branch1,min_branch_best").split(",")
CELLS_HEADER = ("protocol,algorithm,policy,distance,n,mu,w,runs,success_count,mean_generations,"
                "std_generations,lone_count,mean_min_branch_best,std_min_branch_best").split(",")


def fmt(value) -> str:
    """Decimal text; floats use the shortest representation that round-trips."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _prefix(report: Report) -> list:
    s = report.spec
    return [s.protocol.value, name_of(ALGORITHMS, s.algorithm), name_of(POLICIES, s.policy),
            name_of(DISTANCES, s.distance), s.n]


def _write(header, rows) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for row in rows:
        out.writerow([fmt(v) for v in row])
    return buf.getvalue()


def runs_csv(report: Report) -> str:
    head = _prefix(report)
    rows = []
    for c in report.cells:
        for rec in c.records:
            r = rec.result
            rows.append(head + [c.mu, c.w, rec.run_index, rec.seed, r.status.name.lower(),
                                r.generations, r.lone_occurred, r.best_branch0, r.best_branch1,
                                r.min_branch_best])
    return _write(RUNS_HEADER, rows)


def _cell_values(c) -> list:
    return [c.runs, c.success_count, c.mean_generations, c.std_generations, c.lone_count,
            c.mean_min_branch_best, c.std_min_branch_best]


def cells_csv(report: Report) -> str:
    """One row per completed cell; failed cells appear only in report.json."""
    head = _prefix(report)
    rows = [head + [c.mu, c.w] + _cell_values(c) for c in report.cells if not c.failed]
    return _write(CELLS_HEADER, rows)


def _json_number(v):
    return None if isinstance(v, float) and math.isnan(v) else v


def report_json(report: Report) -> str:
    s = report.spec
    cells = []
    for c in report.cells:
        entry = {"mu": c.mu, "w": c.w, "failed": c.failed}
        if c.failed:
            entry["error"] = c.error
        else:
            entry.update(zip(CELLS_HEADER[7:], map(_json_number, _cell_values(c))))
        cells.append(entry)
    doc = {
        "tool": "rtslab",
        "version": __version__,
        "spec": {
            "protocol": s.protocol.value, "algorithm": name_of(ALGORITHMS, s.algorithm),
            "policy": name_of(POLICIES, s.policy), "distance": name_of(DISTANCES, s.distance),
            "fitness": name_of(FITNESSES, s.fitness), "n": s.n, "mu": list(s.mu_list),
            "w": list(s.w_list), "runs": s.runs, "budget": s.budget.value,
            "master_seed": s.master_seed,
        },
        "cells": cells,
    }
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"
