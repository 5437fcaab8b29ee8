"""Parameter sweeps and oracle comparisons over stored run artifacts.

Sweep aggregation is a pure function of the per-member artifacts (each
member writes its own ``series.csv``/``contour.csv``), so re-running the
aggregation over stored outputs reproduces the report bit for bit.  Members
are independent runs and may execute in worker processes; the aggregation
order is fixed by the parameter list.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig, apply_overrides, parse_config
from .errors import ComparisonFailure, ConfigError
from .geometry import InterfaceCurve, hausdorff_to_circle
from .oracle import (
    OracleTrajectory,
    forced_circle_trajectory,
    mcf_radius,
    radial_coupled_solve,
)
from .physics import Variant
from .runner import SERIES_COLUMNS, run_simulation

__all__ = [
    "SweepReport",
    "resolve_oracle_kind",
    "oracle_radius_series",
    "sweep_epsilon",
    "aggregate_epsilon",
    "sweep_alpha",
    "aggregate_alpha",
    "compare_oracle",
    "read_series",
    "read_contour",
]

COMPARISON_WINDOW = 0.3  # droplet radius must stay below this fraction of L


def read_series(path) -> dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != SERIES_COLUMNS:
            raise ValueError(f"unexpected series.csv columns in {path}")
        rows = [[float(v) for v in row] for row in reader]
    data = np.asarray(rows) if rows else np.zeros((0, len(SERIES_COLUMNS)))
    return {name: data[:, i] for i, name in enumerate(SERIES_COLUMNS)}


def read_contour(path) -> InterfaceCurve:
    loops: dict[int, list[tuple[float, float]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for loop_id, x, y in reader:
            loops.setdefault(int(loop_id), []).append((float(x), float(y)))
    polylines = [np.asarray(loops[k]) for k in sorted(loops)]
    return InterfaceCurve(polylines=polylines)


@dataclass
class SweepReport:
    """Per-value terminal errors, orders of convergence, bound verdicts."""

    parameter: str
    values: list[float]
    errors: dict[str, list[float]] = field(default_factory=dict)
    eoc: dict[str, list[float]] = field(default_factory=dict)
    verdicts: dict[str, bool] = field(default_factory=dict)

    def compute_eoc(self) -> None:
        """EOC_i = log(e_{i+1}/e_i) / log(p_{i+1}/p_i) per successive pair."""
        self.eoc = {}
        for name, errs in self.errors.items():
            out = []
            for (p0, p1), (e0, e1) in zip(
                zip(self.values, self.values[1:]), zip(errs, errs[1:])
            ):
                if e0 > 0.0 and e1 > 0.0 and p0 > 0.0 and p1 > 0.0 and p0 != p1:
                    out.append(math.log(e1 / e0) / math.log(p1 / p0))
                else:
                    out.append(float("nan"))
            self.eoc[name] = out

    def mean_eoc(self, name: str) -> float:
        vals = [v for v in self.eoc.get(name, []) if not math.isnan(v)]
        return sum(vals) / len(vals) if vals else float("nan")

    def write_csv(self, path) -> None:
        names = sorted(self.errors)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            header = [self.parameter]
            for n in names:
                header += [n, f"eoc_{n}"]
            fh.write(",".join(header) + "\n")
            for i, v in enumerate(self.values):
                row = [repr(float(v))]
                for n in names:
                    row.append(repr(float(self.errors[n][i])))
                    eoc = self.eoc.get(n, [])
                    row.append(repr(float(eoc[i - 1])) if 0 < i <= len(eoc) else "")
                fh.write(",".join(row) + "\n")


def resolve_oracle_kind(config: RunConfig) -> str:
    """Map 'auto' to the natural oracle for the configured model."""
    kind = config.compare.oracle
    if kind != "auto":
        return kind
    p = config.params
    if p.variant is Variant.CONST_GAMMA:
        if p.gamma_const == 0.0 and p.alpha == 0.0:
            return "mcf"
        return "forced"
    return "coupled"


def _oracle_trajectory(config: RunConfig, kind: str, t_end: float) -> OracleTrajectory:
    p = config.params
    r0 = config.phi_init.radius
    n = config.grid.ndim
    if kind == "forced":
        return forced_circle_trajectory(
            r0, p.gamma_const, p.alpha, n=n, dt=1e-4, t_end=t_end
        )
    if kind == "coupled":
        cmp_opts = config.compare
        r_max = cmp_opts.r_max or 3.2 * r0
        dr = cmp_opts.dr or r0 / 60.0
        dt = cmp_opts.dt or 1e-5
        if config.u_init.kind != "const":
            raise ComparisonFailure(
                "coupled oracle comparison needs radially symmetric initial "
                "data (u init must be const)"
            )
        return radial_coupled_solve(
            r0, config.u_init.value, p, r_max=r_max, dr=dr, dt=dt, t_end=t_end, n=n
        )
    raise ValueError(f"no trajectory oracle for kind {kind!r}")


def oracle_radius_series(config: RunConfig, kind: str, times: np.ndarray) -> np.ndarray:
    """Oracle radius at each requested time."""
    t_end = float(times[-1]) if len(times) else 0.0
    if kind == "mcf":
        return np.asarray(
            [mcf_radius(config.phi_init.radius, t, n=config.grid.ndim) for t in times]
        )
    traj = _oracle_trajectory(config, kind, t_end)
    if traj.extinct and t_end > traj.times[-1]:
        raise ComparisonFailure(
            f"oracle went extinct at t = {traj.times[-1]:.6g}, before the "
            f"comparison horizon {t_end:.6g}"
        )
    return traj.radius_at(times)


def _member_dir(out_dir: str, tag: str, value: float) -> str:
    return os.path.join(out_dir, f"{tag}_{value:g}")


def _run_member(args) -> str:
    text, out_dir, threads = args
    config = parse_config(text)
    run_simulation(config, out_dir, threads=1)
    return out_dir


def _run_members(jobs, threads: int) -> None:
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            list(pool.map(_run_member, jobs))
    else:
        for job in jobs:
            _run_member(job)


def _epsilon_members(
    base_text: str,
    eps_list: list[float],
    out_dir: str,
    grids: list[list[int]] | None,
    eps_h_ratio: float,
):
    """Member configs of an epsilon sweep, validated for resolution."""
    if len(eps_list) < 3:
        raise ConfigError("epsilon sweep needs at least 3 values (EOC undefined)")
    base = parse_config(base_text)
    if base.grid.ndim != 2:
        raise ConfigError("epsilon sweep scores extracted interfaces: 2D only")
    members = []
    for i, eps in enumerate(eps_list):
        if grids is not None:
            dims = grids[i]
        else:
            dims = [
                max(8, int(math.ceil(ell * eps_h_ratio / eps)))
                for ell in base.grid.lengths
            ]
        text = apply_overrides(base_text, [
            f"model.epsilon={eps!r}",
            "grid.dims=" + ",".join(str(d) for d in dims),
        ])
        member = parse_config(text)
        h_max = max(member.grid.spacing)
        if eps / h_max < eps_h_ratio - 1e-12:
            raise ConfigError(
                f"under-resolved sweep member: eps = {eps} on dims {dims} has "
                f"eps/h = {eps / h_max:.2f} < {eps_h_ratio}"
            )
        members.append((eps, _member_dir(out_dir, "eps", eps), member, text))
    return members


def aggregate_epsilon(
    base_text: str,
    eps_list: list[float],
    out_dir: str,
    grids: list[list[int]] | None = None,
    eps_h_ratio: float = 4.0,
) -> SweepReport:
    """Score stored epsilon-sweep artifacts against the oracle.

    Pure function of the per-member ``series.csv``/``contour.csv`` files:
    re-running it over stored outputs reproduces the report exactly.
    """
    members = _epsilon_members(base_text, eps_list, out_dir, grids, eps_h_ratio)
    kind = resolve_oracle_kind(parse_config(base_text))
    report = SweepReport(parameter="epsilon", values=list(eps_list))
    radius_errors = []
    hausdorff_errors = []
    for eps, d, member, _ in members:
        series = read_series(os.path.join(d, "series.csv"))
        t_final = series["t"][-1]
        r_oracle = float(
            oracle_radius_series(member, kind, np.asarray([t_final]))[0]
        )
        r_sim = math.sqrt(max(series["area"][-1], 0.0) / math.pi)
        radius_errors.append(abs(r_sim - r_oracle))
        curve = read_contour(os.path.join(d, "contour.csv"))
        curve.lengths = tuple(member.grid.lengths)
        hausdorff_errors.append(
            hausdorff_to_circle(curve, member.phi_init.center, r_oracle)
        )
    report.errors["radius_error"] = radius_errors
    report.errors["hausdorff_error"] = hausdorff_errors
    report.compute_eoc()
    report.verdicts["radius_error_decreasing"] = all(
        e1 < e0 for e0, e1 in zip(radius_errors, radius_errors[1:])
    )
    report.write_csv(os.path.join(out_dir, "sweep_epsilon.csv"))
    return report


def sweep_epsilon(
    base_text: str,
    eps_list: list[float],
    out_dir: str,
    grids: list[list[int]] | None = None,
    eps_h_ratio: float = 4.0,
    threads: int = 1,
) -> SweepReport:
    """Refine epsilon (and the grid with it) toward the sharp-interface law.

    Each member runs to the configured t_end and its terminal interface is
    scored against the oracle: equivalent-radius error and torus Hausdorff
    distance to the oracle circle.  At least three epsilon values are
    required so orders of convergence are defined, and every member must
    resolve its interface with eps/h >= 4.
    """
    members = _epsilon_members(base_text, eps_list, out_dir, grids, eps_h_ratio)
    _run_members([(text, d, 1) for _, d, _, text in members], threads)
    return aggregate_epsilon(base_text, eps_list, out_dir, grids, eps_h_ratio)


def _alpha_members(base_text: str, alpha_list: list[float], out_dir: str):
    if len(alpha_list) < 3:
        raise ConfigError("alpha sweep needs at least 3 values (EOC undefined)")
    return [
        (
            alpha,
            _member_dir(out_dir, "alpha", alpha),
            apply_overrides(base_text, [f"model.alpha={alpha!r}"]),
        )
        for alpha in alpha_list
    ]


def aggregate_alpha(
    base_text: str,
    alpha_list: list[float],
    out_dir: str,
    drift_slack: float = 1.05,
    accum_spread_limit: float = 3.0,
) -> SweepReport:
    """Score stored alpha-sweep artifacts: drift bounds, drift scaling, and
    the alpha-independence of the accumulated squared nonlocal term.

    Pure function of the stored per-member ``series.csv`` files.
    """
    base = parse_config(base_text)
    dirs = [(a, d) for a, d, _ in _alpha_members(base_text, alpha_list, out_dir)]

    report = SweepReport(parameter="alpha", values=list(alpha_list))
    drifts = []
    accums = []
    bounds_ok = True
    for alpha, d in dirs:
        series = read_series(os.path.join(d, "series.csv"))
        mass = series["mass_G"]
        drift_t = np.abs(mass - mass[0])
        drifts.append(float(drift_t.max()))
        accums.append(float(series["stilde_l2_accum"][-1]))
        if alpha > 0.0:
            e0 = series["E"][0]
            m_gamma = base.params.with_(alpha=alpha).m_gamma
            bound_t = np.sqrt(
                (2.0 / alpha) * np.exp(2.0 * m_gamma ** 2 * series["t"]) * e0
            )
            bounds_ok = bounds_ok and bool(
                np.all(drift_t <= drift_slack * bound_t)
            )

    # admissibility of the initial data, from any member's first record
    first = read_series(os.path.join(dirs[0][1], "series.csv"))
    omega = base.grid.volume
    vacancy = 1.0 - 6.0 / omega * first["mass_G"][0]
    report.verdicts["initial_vacancy_ok"] = bool(vacancy >= 0.5)

    report.errors["max_drift"] = drifts
    report.errors["stilde_l2_accum"] = accums
    report.compute_eoc()
    report.verdicts["drift_bounds_hold"] = bounds_ok
    positive = [a for a in accums if a > 0.0]
    spread = (max(positive) / min(positive)) if positive else float("nan")
    report.verdicts["accum_spread_ok"] = bool(
        positive and spread <= accum_spread_limit
    )
    report.write_csv(os.path.join(out_dir, "sweep_alpha.csv"))
    return report


def sweep_alpha(
    base_text: str,
    alpha_list: list[float],
    out_dir: str,
    threads: int = 1,
    drift_slack: float = 1.05,
    accum_spread_limit: float = 3.0,
) -> SweepReport:
    """Run the volume-penalty sweep, then aggregate its artifacts.

    The initial droplet must leave a definite fraction of the domain empty
    (aggregation checks 1 - 6/|Omega| * int G(phi_0) >= 0.5), which is the
    regime where the accumulated penalty is expected to be alpha-independent.
    """
    members = _alpha_members(base_text, alpha_list, out_dir)
    _run_members([(text, d, 1) for _, d, text in members], threads)
    return aggregate_alpha(
        base_text, alpha_list, out_dir,
        drift_slack=drift_slack, accum_spread_limit=accum_spread_limit,
    )


def compare_oracle(
    config: RunConfig,
    out_dir: str,
    oracle_kind: str | None = None,
    tolerance: float | None = None,
    threads: int = 1,
) -> dict[str, float]:
    """Time-aligned radius comparison of a phase-field run against its oracle.

    Writes ``comparison.csv`` (t, r_sim, r_oracle, deviation) next to the
    run artifacts; raises ComparisonFailure when the droplet leaves the
    validity window (R > 0.3 L) or the deviation exceeds the tolerance.
    Partial output is retained either way.
    """
    kind = oracle_kind or resolve_oracle_kind(config)
    tol = tolerance if tolerance is not None else config.compare.tolerance
    if config.phi_init.kind != "disk":
        raise ComparisonFailure("oracle comparison needs a radially symmetric "
                                "(disk) initial condition")

    run_simulation(config, out_dir, threads=threads)
    series = read_series(os.path.join(out_dir, "series.csv"))
    times = series["t"]
    r_sim = np.sqrt(np.maximum(series["area"], 0.0) / math.pi)

    window = COMPARISON_WINDOW * min(config.grid.lengths)
    inside = r_sim <= window
    cut = len(times) if inside.all() else int(np.argmin(inside))
    r_oracle = oracle_radius_series(config, kind, times[:cut])
    deviation = np.abs(r_sim[:cut] - r_oracle)

    path = os.path.join(out_dir, "comparison.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,r_sim,r_oracle,deviation\n")
        for i in range(cut):
            fh.write(
                f"{float(times[i])!r},{float(r_sim[i])!r},{float(r_oracle[i])!r},"
                f"{float(deviation[i])!r}\n"
            )

    if cut < len(times):
        raise ComparisonFailure(
            f"comparison window violated at t = {times[cut]:.6g}: "
            f"radius {r_sim[cut]:.4g} > {window:.4g}; partial output kept"
        )
    result = {
        "max_deviation": float(deviation.max()) if cut else float("nan"),
        "terminal_deviation": float(deviation[-1]) if cut else float("nan"),
        "tolerance": tol,
    }
    if result["max_deviation"] > tol:
        raise ComparisonFailure(
            f"oracle deviation {result['max_deviation']:.4g} exceeds "
            f"tolerance {tol:.4g} ({kind} oracle)"
        )
    return result
