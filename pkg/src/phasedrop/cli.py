"""Command line driver.

Subcommands: run | sweep-eps | sweep-alpha | compare-oracle | extract.
Exit codes: 0 success, 2 config error, 3 invariant failure, 4 numerical
failure, 5 comparison failure.  ``--threads`` may parallelize independent
sweep members but never changes any numerical result.
"""

from __future__ import annotations

import argparse
import sys

from .config import apply_overrides, parse_config
from .errors import (
    ComparisonFailure,
    ConfigError,
    InvariantViolation,
    NumericalFailure,
)
from .geometry import extract_contour, radius_from_area
from .runner import read_vtk, run_simulation, write_contour_csv

EXIT_CODES = {
    ConfigError: 2,
    InvariantViolation: 3,
    NumericalFailure: 4,
    ComparisonFailure: 5,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to run config")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument(
        "--override", action="append", default=[], metavar="SECTION.KEY=VALUE",
        help="override a config entry (repeatable)",
    )
    parser.add_argument(
        "--threads", type=int, default=1,
        help="worker processes for independent runs; results do not depend on it",
    )


def _load_config(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        text = fh.read()
    text = apply_overrides(text, args.override)
    return text, parse_config(text)


def _float_list(raw: str) -> list[float]:
    vals = [float(s) for s in raw.split(",") if s.strip()]
    if not vals:
        raise ConfigError(f"expected a comma-separated list, got {raw!r}")
    return vals


def _grids_list(raw: str) -> list[list[int]]:
    out = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            out.append([int(s) for s in chunk.split("x")])
        except ValueError:
            raise ConfigError(
                f"--grids entries must look like 128x128, got {chunk!r}"
            )
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="phasedrop",
        description="Phase-field droplet simulation with sharp-interface oracles",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured simulation")
    _add_common(p_run)

    p_eps = sub.add_parser("sweep-eps", help="interface-width convergence sweep")
    _add_common(p_eps)
    p_eps.add_argument("--eps", required=True,
                       help="comma list of interface widths, e.g. 0.04,0.02,0.01")
    p_eps.add_argument("--grids", default=None,
                       help="per-eps grid dims, e.g. 128x128;256x256;512x512")
    p_eps.add_argument("--eps-h-ratio", type=float, default=4.0,
                       help="minimum eps/h resolution (default 4)")

    p_alpha = sub.add_parser("sweep-alpha", help="volume-penalty sweep")
    _add_common(p_alpha)
    p_alpha.add_argument("--alphas", required=True,
                         help="comma list of penalty strengths")

    p_cmp = sub.add_parser("compare-oracle",
                           help="compare a run against its sharp-interface oracle")
    _add_common(p_cmp)
    p_cmp.add_argument("--oracle", default=None,
                       choices=["auto", "mcf", "forced", "coupled"])
    p_cmp.add_argument("--tolerance", type=float, default=None)

    p_ext = sub.add_parser("extract",
                           help="extract the phi = 1/2 contour to CSV")
    _add_common(p_ext)
    p_ext.add_argument("--snapshot", default=None,
                       help="read phi from a stored VTK snapshot instead of "
                            "building the configured initial condition")
    p_ext.add_argument("--level", type=float, default=0.5)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except tuple(EXIT_CODES) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CODES[type(exc)]


def _dispatch(args) -> int:
    import os

    if args.threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {args.threads}")
    os.makedirs(args.out, exist_ok=True)

    if args.command == "run":
        _, config = _load_config(args)
        result = run_simulation(config, args.out, threads=args.threads)
        print(f"run complete: t = {result.state.t!r}, "
              f"{len(result.rows)} records -> {args.out}/series.csv")
        return 0

    if args.command == "sweep-eps":
        from .sweeps import sweep_epsilon

        text, _ = _load_config(args)
        grids = _grids_list(args.grids) if args.grids else None
        eps_list = _float_list(args.eps)
        if grids is not None and len(grids) != len(eps_list):
            raise ConfigError("--grids must list one WxH entry per --eps value")
        report = sweep_epsilon(
            text, eps_list, args.out, grids=grids,
            eps_h_ratio=args.eps_h_ratio, threads=args.threads,
        )
        for i, eps in enumerate(report.values):
            print(f"eps = {eps:g}: radius error = "
                  f"{report.errors['radius_error'][i]:.4e}, hausdorff = "
                  f"{report.errors['hausdorff_error'][i]:.4e}")
        print(f"radius-error EOC per pair: "
              f"{['%.2f' % v for v in report.eoc['radius_error']]}")
        return 0

    if args.command == "sweep-alpha":
        from .sweeps import sweep_alpha

        text, _ = _load_config(args)
        report = sweep_alpha(text, _float_list(args.alphas), args.out,
                             threads=args.threads)
        for i, alpha in enumerate(report.values):
            print(f"alpha = {alpha:g}: max drift = "
                  f"{report.errors['max_drift'][i]:.4e}, "
                  f"int S^2 dt = {report.errors['stilde_l2_accum'][i]:.4e}")
        print(f"verdicts: {report.verdicts}")
        if not report.verdicts.get("drift_bounds_hold", False):
            raise InvariantViolation("volume drift exceeded its energy bound")
        return 0

    if args.command == "compare-oracle":
        from .sweeps import compare_oracle

        _, config = _load_config(args)
        result = compare_oracle(
            config, args.out, oracle_kind=args.oracle,
            tolerance=args.tolerance, threads=args.threads,
        )
        print(f"comparison passed: max deviation = "
              f"{result['max_deviation']:.4e} <= {result['tolerance']:.4e}")
        return 0

    if args.command == "extract":
        from .config import build_phi0

        _, config = _load_config(args)
        if args.snapshot:
            fields = read_vtk(args.snapshot)
            if "phi" not in fields:
                raise ConfigError(f"snapshot {args.snapshot} holds no phi field")
            phi = fields["phi"]
        else:
            phi = build_phi0(config.grid, config.phi_init, config.params)
        curve = extract_contour(phi, level=args.level)
        path = os.path.join(args.out, "contour.csv")
        write_contour_csv(path, curve)
        print(f"extracted {len(curve.polylines)} loop(s): area = {curve.area!r}, "
              f"perimeter = {curve.perimeter!r}, "
              f"equivalent radius = {radius_from_area(curve)!r} -> {path}")
        return 0

    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
