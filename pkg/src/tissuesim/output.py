"""CSV serialization of snapshots, timeseries and campaign reports.

All files are plain CSV with a small ``# key = value`` preamble, columns in a
fixed order, 17-significant-digit scientific notation and LF line endings, so
that two identical runs produce byte-identical files and golden-file diffs
stay meaningful.  Writes go to a temporary name in the target directory and
are renamed into place; no output file is ever left half-written.
"""

from __future__ import annotations

import os
import tempfile

from .diagnostics import EnergyLedger
from .grid import Grid
from .harness import BenchReport, EpsReport, SweepReport
from .stepper import State

_LEDGER_COLUMNS = (
    "t", "mass", "n_min", "n_max", "c_min", "c_max", "d_min", "d_max",
    "v_sq", "grad_v_sq", "t_v_sq", "t_grad_v_sq", "entropy_rate",
    "excess", "segregation", "comp_resid", "comp_t2",
    "dt_used", "newton_iters", "clamped_cells", "cutoff_activations",
)


def fmt(x) -> str:
    """Full-precision scientific notation (17 significant digits)."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    return f"{float(x):.16e}"


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _grid_descriptor(grid: Grid) -> str:
    cells = "x".join(str(c) for c in grid.cells)
    extents = "x".join(repr(e) for e in grid.extents)
    return f"{grid.dim}D {cells} cells on {extents}"


def write_snapshot(path: str, state: State, cfg_hash: str) -> None:
    """One row per cell: coordinates, n, n1, n2, c, d, p, v."""
    grid = state.grid
    lines = [
        f"# time = {fmt(state.t)}",
        f"# gamma = {fmt(state.gamma)}",
        f"# grid = {_grid_descriptor(grid)}",
        f"# config = {cfg_hash}",
    ]
    coord_names = ("x",) if grid.dim == 1 else ("x", "y")
    lines.append(",".join(coord_names + ("n", "n1", "n2", "c", "d", "p", "v")))
    coords = grid.coordinate_fields()
    n = state.n.values
    n1 = state.n1.values
    n2 = state.n2.values
    c = state.c.values
    d = state.d.values
    p = state.p.values
    v = state.v.values
    for idx in _cell_order(grid):
        row = [fmt(coords[ax][idx]) for ax in range(grid.dim)]
        row += [fmt(n[idx]), fmt(n1[idx]), fmt(n2[idx]), fmt(c[idx]),
                fmt(d[idx]), fmt(p[idx]), fmt(v[idx])]
        lines.append(",".join(row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _cell_order(grid: Grid):
    if grid.dim == 1:
        for i in range(grid.cells[0]):
            yield (i,)
    else:
        for i in range(grid.cells[0]):
            for j in range(grid.cells[1]):
                yield (i, j)


def write_timeseries(path: str, ledger: EnergyLedger, cfg_hash: str) -> None:
    lines = [f"# config = {cfg_hash}", ",".join(_LEDGER_COLUMNS)]
    for row in ledger.rows:
        lines.append(",".join(fmt(getattr(row, col)) for col in _LEDGER_COLUMNS))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_sweep_report(path: str, report: SweepReport) -> None:
    """Per-gamma aggregates plus the consecutive-pair v distances.

    Wall-clock timings are intentionally not serialized (they would break
    byte-identical reruns); callers print them to the console instead.
    """
    lines = [
        f"# tau = {fmt(report.tau)}",
        f"# delta = {fmt(report.delta)}",
        "gamma,config,ok,h7_pass,h7_ratio,energy,excess_max,seg_integral,"
        "comp_integral,fraction_gap,dist_to_next",
    ]
    for i, e in enumerate(report.entries):
        dist = report.distances[i] if i < len(report.distances) else float("nan")
        h7 = "" if e.h7_pass is None else ("1" if e.h7_pass else "0")
        lines.append(",".join([
            fmt(e.gamma), e.cfg_hash, "1" if e.ok else "0", h7, fmt(e.h7_ratio),
            fmt(e.energy), fmt(e.excess_max), fmt(e.seg_integral),
            fmt(e.comp_integral), fmt(e.fraction_gap), fmt(dist),
        ]))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_eps_report(path: str, report: EpsReport) -> None:
    lines = ["eps,config,ok,distance,cutoff_activations,min_density,barrier"]
    for e in report.entries:
        lines.append(",".join([
            fmt(e.eps), e.cfg_hash, "1" if e.ok else "0", fmt(e.distance),
            str(e.cutoff_activations), fmt(e.min_density), fmt(e.barrier),
        ]))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_bench_report(path: str, report: BenchReport) -> None:
    lines = [
        f"# gamma = {fmt(report.gamma)}",
        "cells,h,l1_error,rel_error,order,mass_drift",
    ]
    for r in report.rows:
        lines.append(",".join([
            str(r.cells), fmt(r.h), fmt(r.l1_error), fmt(r.rel_error),
            fmt(r.order), fmt(r.mass_drift),
        ]))
    _atomic_write(path, "\n".join(lines) + "\n")
