"""Run orchestration: drive the integrator, stream diagnostics, export.

``series.csv`` is the single source of truth for a run; one row per
observer tick with the exact column order

    t, E_s, E_p, E, xi, mu_total, stilde, mass_G, phi_min, phi_max, u_min,
    stilde_l2_accum, area, perimeter, centroid_x, centroid_y

(geometry columns are nan on 3D grids, where interface extraction is out of
scope).  Every row must satisfy the monitored bounds or the run fails with
the first violated invariant named.  Floats are written with ``repr`` so the
file is byte-identical across reruns and round-trips exactly.

Field snapshots use legacy VTK STRUCTURED_POINTS ASCII, x-fastest ordering,
one SCALARS block per field, to stay diff-able and externally readable.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .config import RunConfig, build_initial_state
from .diagnostics import (
    EnergyReport,
    EnvelopeParams,
    energy_report,
    envelope_check,
    envelope_params,
    export_measure_density,
    volume_drift_bound,
)
from .errors import InvariantViolation
from .geometry import extract_contour
from .grid import ScalarField
from .physics import ModelParams, SimState, Variant
from .stepping import run_until

__all__ = [
    "SERIES_COLUMNS",
    "SeriesRow",
    "RunResult",
    "run_simulation",
    "write_vtk",
    "read_vtk",
    "write_contour_csv",
]

SERIES_COLUMNS = (
    "t", "E_s", "E_p", "E", "xi", "mu_total", "stilde", "mass_G",
    "phi_min", "phi_max", "u_min", "stilde_l2_accum",
    "area", "perimeter", "centroid_x", "centroid_y",
)


@dataclass
class SeriesRow:
    report: EnergyReport
    area: float
    perimeter: float
    centroid: tuple[float, float]

    def values(self) -> list[float]:
        r = self.report
        return [
            r.t, r.E_s, r.E_p, r.E, r.xi, r.mu_total, r.stilde, r.mass_G,
            r.phi_min, r.phi_max, r.u_min, r.stilde_l2_accum,
            self.area, self.perimeter, self.centroid[0], self.centroid[1],
        ]


@dataclass
class RunResult:
    state: SimState
    rows: list[SeriesRow]
    envelopes: EnvelopeParams
    e0: float


class _Monitor:
    """Per-record invariant checks; raises with the first failure named."""

    def __init__(self, env: EnvelopeParams, params: ModelParams, omega: float):
        self.env = env
        self.params = params
        self.omega = omega
        self.e0: float | None = None
        self.prev_e: float | None = None
        self.prev_steps = 0
        self.gamma_off = (
            params.variant is Variant.CONST_GAMMA and params.gamma_const == 0.0
        )

    def check(self, state: SimState, report: EnergyReport) -> None:
        p = self.params
        if self.e0 is None:
            self.e0 = report.E
            self.prev_e = report.E

        envelope = envelope_check(state, self.env, p)
        if not envelope.passed:
            raise InvariantViolation(
                f"envelope bound violated at t = {report.t:.6g}: margins "
                f"phi_upper = {envelope.margin_phi_upper:.3e}, "
                f"phi_lower = {envelope.margin_phi_lower:.3e}, "
                f"u = {envelope.margin_u:.3e}"
            )

        s_cap = p.alpha * self.omega / (
            3.0 if p.variant is not Variant.S_OLD else 1.0
        )
        if abs(report.stilde) > s_cap + 1e-12 and p.alpha > 0.0:
            raise InvariantViolation(
                f"nonlocal term out of bounds at t = {report.t:.6g}: "
                f"|S| = {abs(report.stilde):.6g} > {s_cap:.6g}"
            )

        if self.gamma_off:
            # per-step tolerance 1e-10 E(0), scaled by the steps since the
            # last record so the check matches the step-level statement
            n_steps = max(1, state.steps - self.prev_steps)
            if report.E > self.prev_e + n_steps * 1e-10 * self.e0:
                raise InvariantViolation(
                    f"energy increased at t = {report.t:.6g} in a gamma = 0 run: "
                    f"E = {report.E:.12g} > previous {self.prev_e:.12g} "
                    f"+ {n_steps} * 1e-10 * E(0)"
                )
        growth = math.exp(-2.0 * p.m_gamma ** 2 * report.t) * report.E
        if growth > 1.05 * self.e0 + 1e-300:
            raise InvariantViolation(
                f"energy growth bound violated at t = {report.t:.6g}: "
                f"exp(-2 M^2 t) E = {growth:.6g} > 1.05 E(0) = {1.05 * self.e0:.6g}"
            )
        if p.alpha > 0.0 and p.variant is not Variant.S_OLD:
            drift = volume_drift_bound(report, self.e0, p)
            if not drift.passed:
                raise InvariantViolation(
                    f"volume drift bound violated at t = {report.t:.6g}: "
                    f"drift = {drift.drift:.6g} > 1.05 * {drift.bound:.6g}"
                )
        self.prev_e = report.E
        self.prev_steps = state.steps


def _format_row(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def run_simulation(
    config: RunConfig,
    out_dir: str | os.PathLike | None = None,
    threads: int = 1,
) -> RunResult:
    """Run a configured simulation, streaming rows to ``series.csv``.

    ``threads`` is accepted for interface compatibility and validated, but
    never influences numerics; all reductions are fixed-order.
    """
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    state = build_initial_state(config)
    params = config.params
    env = envelope_params(state.phi, state.u, params)
    monitor = _Monitor(env, params, config.grid.volume)
    is_2d = config.grid.ndim == 2

    rows: list[SeriesRow] = []
    csv_path = None
    csv_fh = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, "series.csv")
        csv_fh = open(csv_path, "w", encoding="utf-8", newline="\n")
        csv_fh.write(",".join(SERIES_COLUMNS) + "\n")

    snapshot_counter = 0

    def observe(s: SimState) -> None:
        nonlocal snapshot_counter
        report = energy_report(s, params)
        if is_2d:
            curve = extract_contour(s.phi)
            row = SeriesRow(report, curve.area, curve.perimeter, curve.centroid)
        else:
            nan = float("nan")
            row = SeriesRow(report, nan, nan, (nan, nan))
        rows.append(row)
        if csv_fh is not None:
            csv_fh.write(_format_row(row.values()) + "\n")
        monitor.check(s, report)
        if (
            out_dir is not None
            and config.output.snapshots == "vtk"
            and config.output.snapshot_every > 0
            and len(rows) % config.output.snapshot_every == 0
        ):
            _write_snapshot(s, params, config, out_dir, snapshot_counter)
            snapshot_counter += 1

    try:
        state = run_until(
            state, params, config.policy, config.t_end,
            cadence=config.cadence, observer=observe,
        )
    finally:
        if csv_fh is not None:
            csv_fh.close()  # partial diagnostics survive failures

    if out_dir is not None:
        if config.output.snapshots == "vtk":
            _write_snapshot(state, params, config, out_dir, None)
        if is_2d:
            write_contour_csv(
                os.path.join(out_dir, "contour.csv"), extract_contour(state.phi)
            )
        _write_summary(os.path.join(out_dir, "summary.json"), state, config, rows)

    return RunResult(state=state, rows=rows, envelopes=env,
                     e0=rows[0].report.E if rows else float("nan"))


def _write_summary(path: str, state: SimState, config: RunConfig, rows) -> None:
    last = rows[-1] if rows else None
    doc = {
        "t_final": state.t,
        "grid": {"dims": list(config.grid.dims),
                 "lengths": list(config.grid.lengths)},
        "epsilon": config.params.epsilon,
        "alpha": config.params.alpha,
        "variant": config.params.variant.value,
        "rows": len(rows),
    }
    if last is not None:
        doc["final"] = dict(zip(SERIES_COLUMNS, last.values()))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _write_snapshot(state, params, config, out_dir, index) -> None:
    tag = "final" if index is None else f"{index:05d}"
    fields = {}
    for name in config.output.fields:
        if name == "phi":
            fields["phi"] = state.phi
        elif name == "u":
            fields["u"] = state.u
        elif name == "measure":
            fields["measure"] = export_measure_density(state, params)
    write_vtk(
        os.path.join(out_dir, f"snapshot_{tag}.vtk"),
        fields,
        title=f"t = {state.t!r}",
    )


def write_vtk(path, fields: dict[str, ScalarField], title: str = "phasedrop") -> None:
    """Legacy STRUCTURED_POINTS writer; values stream x-fastest."""
    if not fields:
        raise ValueError("write_vtk needs at least one field")
    grid = next(iter(fields.values())).grid
    dims3 = tuple(grid.dims) + (1,) * (3 - grid.ndim)
    spacing3 = tuple(grid.spacing) + (1.0,) * (3 - grid.ndim)
    origin3 = tuple(h / 2.0 for h in grid.spacing) + (0.0,) * (3 - grid.ndim)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title + "\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_POINTS\n")
        fh.write("DIMENSIONS {} {} {}\n".format(*dims3))
        fh.write("ORIGIN {} {} {}\n".format(*(repr(v) for v in origin3)))
        fh.write("SPACING {} {} {}\n".format(*(repr(v) for v in spacing3)))
        fh.write(f"POINT_DATA {grid.n_cells}\n")
        for name, field in fields.items():
            if field.grid != grid:
                raise ValueError("all snapshot fields must share one grid")
            fh.write(f"SCALARS {name} double 1\n")
            fh.write("LOOKUP_TABLE default\n")
            flat = field.values.ravel(order="F")  # axis 0 (x) fastest
            for start in range(0, flat.size, 6):
                fh.write(
                    " ".join(repr(float(v)) for v in flat[start:start + 6]) + "\n"
                )


def read_vtk(path) -> dict[str, ScalarField]:
    """Read back the subset of legacy VTK this package writes."""
    from .grid import make_grid

    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    header = {ln.split()[0]: ln for ln in lines if ln.strip()}
    dims3 = tuple(int(x) for x in header["DIMENSIONS"].split()[1:4])
    spacing3 = tuple(float(x) for x in header["SPACING"].split()[1:4])
    ndim = 2 if dims3[2] == 1 else 3
    dims = dims3[:ndim]
    lengths = tuple(d * h for d, h in zip(dims, spacing3[:ndim]))
    grid = make_grid(dims, lengths)

    fields: dict[str, ScalarField] = {}
    i = 0
    while i < len(lines):
        if lines[i].startswith("SCALARS"):
            name = lines[i].split()[1]
            i += 2  # skip LOOKUP_TABLE
            values: list[float] = []
            while i < len(lines) and len(values) < grid.n_cells:
                values.extend(float(v) for v in lines[i].split())
                i += 1
            arr = np.asarray(values).reshape(dims, order="F")
            fields[name] = ScalarField(grid, arr)
        else:
            i += 1
    return fields


def write_contour_csv(path, curve) -> None:
    """Vertex list export: one row per vertex, loops indexed."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("loop,x,y\n")
        for loop_index, loop in enumerate(curve.polylines):
            for x, y in loop:
                fh.write(f"{loop_index},{float(x)!r},{float(y)!r}\n")
