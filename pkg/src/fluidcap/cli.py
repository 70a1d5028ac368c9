"""Command-line interface: scenario generation, solving, sweeps, and bounds.

Exit codes: 0 on success, 2 on configuration errors (including argument
parsing), 3 on solver nonconvergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .capacity import c0_large_m
from .channel import ScenarioDims, random_scenario, read_scenario, write_scenario
from .errors import ConfigError, NonconvergenceError
from .harness import SWEEP_PARAMS, SweepSpec, emit, run_sweep, sweep_metadata
from .solvers import ALGORITHMS, run_algorithm
from .waterfill import capacity_approx, capacity_upper_bound


def _add_dims_options(parser: argparse.ArgumentParser) -> None:
    defaults = ScenarioDims()
    parser.add_argument("--U", type=int, default=defaults.U, help="number of users")
    parser.add_argument("--M", type=int, default=defaults.M, help="BS antenna count")
    parser.add_argument("--N", type=int, default=defaults.N, help="antennas per user")
    parser.add_argument("--L", type=int, default=defaults.L, help="paths per user")
    parser.add_argument("--W", type=float, default=defaults.W, help="aperture length (wavelengths)")
    parser.add_argument("--K", type=int, default=defaults.K, help="aperture quantization level")
    parser.add_argument("--snr-db", type=float, default=defaults.snr_db, help="SNR in dB")


def _dims_from_args(args) -> ScenarioDims:
    return ScenarioDims(U=args.U, M=args.M, N=args.N, L=args.L, W=args.W, K=args.K,
                        snr_db=args.snr_db)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluidcap",
        description="Uplink sum-capacity simulator for repositionable-antenna terminals",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random scenario as JSON")
    gen.add_argument("--seed", type=int, default=0)
    _add_dims_options(gen)
    gen.add_argument("--out", default="-", help="output path, '-' for stdout")

    solve = sub.add_parser("solve", help="run one solver on a saved scenario")
    solve.add_argument("--scenario", required=True, help="scenario JSON path")
    solve.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    solve.add_argument("--tau", type=float, default=2.0, help="rank-one penalty factor")
    solve.add_argument("--K", type=int, default=None,
                       help="override every user's quantization level")
    solve.add_argument("--step", type=float, default=None,
                       help="search step for the exhaustive benchmarks (default W/K)")

    sweep = sub.add_parser("sweep", help="Monte Carlo sweep over one parameter")
    sweep.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    sweep.add_argument("--values", required=True, help="comma-separated swept values")
    sweep.add_argument("--trials", type=int, default=100)
    sweep.add_argument("--algorithms", required=True, help="comma-separated algorithm names")
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--out", required=True, help="output file path")
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep.add_argument("--tau", type=float, default=2.0)
    sweep.add_argument("--step", type=float, default=None)
    sweep.add_argument("--no-plot", action="store_true",
                       help="skip rendering the companion figure")
    _add_dims_options(sweep)

    bound = sub.add_parser("bound", help="evaluate a capacity bound on a saved scenario")
    bound.add_argument("--scenario", required=True)
    bound.add_argument("--kind", required=True, choices=("ub", "approx", "c0"))
    return parser


def _cmd_gen(args) -> int:
    scenario = random_scenario(args.seed, _dims_from_args(args))
    if args.out == "-":
        write_scenario(scenario, sys.stdout)
    else:
        write_scenario(scenario, args.out)
        print(f"wrote scenario to {args.out}")
    return 0


def _load_scenario(path, k_override=None):
    scenario = read_scenario(path)
    if k_override is not None:
        users = tuple(dataclasses.replace(u, K=k_override) for u in scenario.users)
        scenario = dataclasses.replace(scenario, users=users)
    return scenario


def _cmd_solve(args) -> int:
    scenario = _load_scenario(args.scenario, args.K)
    report = run_algorithm(args.algorithm, scenario, tau=args.tau, step=args.step)
    print(f"algorithm {args.algorithm}: capacity {report.capacity_bits:.9f} bits/s/Hz")
    for u, pos in enumerate(report.positions):
        coords = ", ".join(f"{x:.6g}" for x in np.asarray(pos))
        print(f"user {u + 1} positions (wavelengths): {coords}")
    print(
        f"iterations {report.iterations}, runtime {report.runtime_ms:.1f} ms, "
        f"max rank residual {report.max_rank_residual():.3g}"
    )
    return 0


def _cmd_sweep(args) -> int:
    values = []
    for item in args.values.split(","):
        item = item.strip()
        if not item:
            continue
        values.append(int(item) if args.param in ("M", "N", "U", "L") else float(item))
    algorithms = tuple(a.strip() for a in args.algorithms.split(",") if a.strip())
    spec = SweepSpec(
        param=args.param,
        values=tuple(values),
        trials=args.trials,
        base=_dims_from_args(args),
        algorithms=algorithms,
        seed=args.seed,
        tau=args.tau,
        step=args.step,
    )
    rows = run_sweep(spec)
    emit(rows, args.out, args.format, metadata=sweep_metadata(spec))
    print(f"wrote {len(rows)} rows to {args.out}")
    if not args.no_plot:
        from .plotting import render_sweep_figure

        fig_path = str(Path(args.out).with_suffix(".png"))
        render_sweep_figure(rows, fig_path, args.param)
        print(f"wrote figure to {fig_path}")
    return 0


def _cmd_bound(args) -> int:
    scenario = _load_scenario(args.scenario)
    if args.kind == "ub":
        value = capacity_upper_bound(scenario)
    elif args.kind == "approx":
        value = capacity_approx(scenario)
    else:
        if scenario.U != 1:
            raise ConfigError("the large-array limit applies to single-user scenarios")
        value = c0_large_m(scenario.users[0], scenario.M)
    print(f"{value:.12g}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"gen": _cmd_gen, "solve": _cmd_solve, "sweep": _cmd_sweep, "bound": _cmd_bound}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NonconvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
