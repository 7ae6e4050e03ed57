"""Command-line interface.

Subcommands: ``assoc``, ``test``, ``cond-assoc``, ``cond-test``, ``simulate``.
Test and association commands emit a JSON report; curve and power commands emit
CSV tables. Reports are byte-stable given identical inputs, seed, and version:
wall time goes to stderr only. Exit codes: 0 ok, 2 usage, 3 data, 4 numerical.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__, io
from .assoc import profile_association
from .cond import SmootherConfig, cond_association, cond_independence_test
from .core import DistanceMatrix, PairedDataset, as_metric_objects
from .metrics import METRIC_NAMES, resolve_metric, tag_for_metric
from .perm import independence_test
from .sim import POWER_TABLE_HEADER, SETTINGS, SimulationConfig, power_curve
from .validation import DataError, NumericalError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

_READERS = {
    "vector": io.read_vectors_csv,
    "unit_vector": io.read_vectors_csv,
    "spd_matrix": io.read_spd_csv,
    "quantile_grid": io.read_quantile_csv,
}


def _default_threads() -> int:
    env = os.environ.get("PROFASSOC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DataError(f"PROFASSOC_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _add_common(parser):
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed; drawn and recorded if omitted")
    parser.add_argument("--threads", type=int, default=None, help="worker count for Monte-Carlo loops")


def _add_metric_args(parser):
    parser.add_argument("--metric-x", default=None, help=f"one of: {', '.join(METRIC_NAMES)}")
    parser.add_argument("--metric-y", default=None)
    parser.add_argument("--alpha-x", type=float, default=None, help="exponent for spd_power on the x side")
    parser.add_argument("--alpha-y", type=float, default=None, help="exponent for spd_power on the y side")


def _add_input_args(parser):
    parser.add_argument("--x", help="object CSV for the x sample")
    parser.add_argument("--y", help="object CSV for the y sample")
    parser.add_argument("--dx", help="precomputed distance CSV for the x sample")
    parser.add_argument("--dy", help="precomputed distance CSV for the y sample")
    _add_metric_args(parser)


def _add_smoother_args(parser):
    parser.add_argument("--z", required=True, help="covariate CSV (single column)")
    parser.add_argument("--kernel", default="epanechnikov", choices=["epanechnikov", "triangular", "quartic"])
    parser.add_argument(
        "--bandwidth",
        type=float,
        default=None,
        help="fixed bandwidth h; default is the rate rule with scale std(z)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="profassoc",
        description="Association and independence testing for random objects in metric spaces",
    )
    parser.add_argument("--version", action="version", version=f"profassoc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_assoc = sub.add_parser("assoc", help="profile association of a paired sample")
    _add_input_args(p_assoc)
    _add_common(p_assoc)

    p_test = sub.add_parser("test", help="half-permutation independence test")
    _add_input_args(p_test)
    p_test.add_argument("--permutations", type=int, default=500)
    p_test.add_argument("--alpha", type=float, default=0.05)
    _add_common(p_test)

    p_ca = sub.add_parser("cond-assoc", help="conditional association curve along a covariate")
    _add_input_args(p_ca)
    _add_smoother_args(p_ca)
    p_ca.add_argument("--grid", default="50", help="grid size, or lo:hi:count for an explicit grid")
    _add_common(p_ca)

    p_ct = sub.add_parser("cond-test", help="conditional independence test given a covariate")
    _add_input_args(p_ct)
    _add_smoother_args(p_ct)
    p_ct.add_argument("--permutations", type=int, default=500)
    p_ct.add_argument("--alpha", type=float, default=0.05)
    _add_common(p_ct)

    p_sim = sub.add_parser("simulate", help="Monte-Carlo level/power table for a synthetic setting")
    p_sim.add_argument("--setting", required=True)
    p_sim.add_argument("--n", type=int, default=200)
    p_sim.add_argument("--rho-grid", default="0,0.5,1", help="comma-separated dependence levels")
    p_sim.add_argument("--p", type=int, default=None, help="object dimension where applicable")
    p_sim.add_argument("--mc-runs", type=int, default=200)
    p_sim.add_argument("--permutations", type=int, default=199)
    p_sim.add_argument("--alpha", type=float, default=0.05)
    _add_common(p_sim)

    return parser


def _load_column(obj_path, dist_path, metric_name, alpha, side: str):
    if (obj_path is None) == (dist_path is None):
        raise DataError(f"give exactly one of --{side} or --d{side}")
    if dist_path is not None:
        matrix = io.read_distance_csv(dist_path)
        return matrix, None, io.file_fingerprint(dist_path, matrix.n)
    if metric_name is None:
        raise DataError(f"--metric-{side} is required with --{side}")
    mid = resolve_metric(metric_name, alpha)
    tag = tag_for_metric(mid)
    data = _READERS[tag](obj_path)
    objects = as_metric_objects(data, tag)
    return objects, mid, io.file_fingerprint(obj_path, len(objects))


def _build_dataset(args, need_z: bool = False):
    x_col, mx, fp_x = _load_column(args.x, args.dx, args.metric_x, args.alpha_x, "x")
    y_col, my, fp_y = _load_column(args.y, args.dy, args.metric_y, args.alpha_y, "y")
    inputs = {"x": fp_x, "y": fp_y}
    z = None
    if need_z:
        z = io.read_covariate_csv(args.z)
        inputs["z"] = io.file_fingerprint(args.z, int(z.shape[0]))
    ds = PairedDataset(x_col, y_col, z=z, metric_x=mx, metric_y=my)
    return ds, inputs


def _metric_name(mid) -> str | None:
    if mid is None:
        return "precomputed"
    return mid.name if mid.alpha is None else f"{mid.name}(alpha={mid.alpha})"


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report(command: str, inputs: dict, params: dict, result: dict) -> str:
    return (
        io.dump_json(
            {
                "command": command,
                "version": __version__,
                "inputs": inputs,
                "params": params,
                "result": result,
            }
        )
        + "\n"
    )


def _seed_or_draw(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


def cmd_assoc(args) -> int:
    ds, inputs = _build_dataset(args)
    report = profile_association(ds)
    params = {"metric_x": _metric_name(ds.metric_x), "metric_y": _metric_name(ds.metric_y)}
    result = {"d_n": report.d_n, "normalized": report.normalized, "n": report.n}
    _emit(args, _report("assoc", inputs, params, result))
    display = min(report.normalized, 1.0)  # display clip only; stored value is exact
    print(f"n={report.n} normalized association={display:.4f} ({report.elapsed:.3f}s)", file=sys.stderr)
    return EXIT_OK


def cmd_test(args) -> int:
    if args.permutations < 1:
        raise DataError(f"--permutations must be >= 1, got {args.permutations}")
    ds, inputs = _build_dataset(args)
    seed = _seed_or_draw(args)
    start = time.perf_counter()
    result = independence_test(ds, n_permutations=args.permutations, alpha=args.alpha, seed=seed)
    elapsed = time.perf_counter() - start
    params = {
        "metric_x": _metric_name(ds.metric_x),
        "metric_y": _metric_name(ds.metric_y),
        "n_permutations": args.permutations,
        "alpha": args.alpha,
        "seed": seed,
    }
    payload = {
        "statistic": result.statistic,
        "p_value": result.p_value,
        "reject": result.reject,
        "n": ds.n,
        "replicates": list(result.replicates),
    }
    _emit(args, _report("test", inputs, params, payload))
    print(f"p={result.p_value:.4f} reject={result.reject} ({elapsed:.3f}s)", file=sys.stderr)
    return EXIT_OK


def _parse_grid(spec: str, z: np.ndarray):
    from .cond import default_z_grid

    parts = spec.split(":")
    if len(parts) == 1:
        try:
            size = int(parts[0])
        except ValueError:
            raise DataError(f"--grid must be an integer or lo:hi:count, got {spec!r}") from None
        return default_z_grid(z, size)
    if len(parts) != 3:
        raise DataError(f"--grid must be an integer or lo:hi:count, got {spec!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise DataError(f"--grid must be an integer or lo:hi:count, got {spec!r}") from None
    if count < 1 or not hi > lo:
        raise DataError(f"--grid bounds must satisfy lo < hi and count >= 1, got {spec!r}")
    return np.linspace(lo, hi, count)


def _smoother_config(args) -> SmootherConfig:
    if args.bandwidth is not None:
        return SmootherConfig(kernel=args.kernel, bandwidth=args.bandwidth, bandwidth_rule="fixed")
    return SmootherConfig(kernel=args.kernel)


def cmd_cond_assoc(args) -> int:
    ds, _ = _build_dataset(args, need_z=True)
    cfg = _smoother_config(args)
    grid = _parse_grid(args.grid, ds.z)
    start = time.perf_counter()
    curve = cond_association(ds, z_grid=grid, cfg=cfg)
    elapsed = time.perf_counter() - start
    lines = ["z,value,normalized_value"]
    for z, val, normed in zip(curve.z_grid, curve.values, curve.normalized_values):
        lines.append(f"{io.format_float(z)},{io.format_float(val)},{io.format_float(normed)}")
    _emit(args, "\n".join(lines) + "\n")
    print(f"curve on {curve.z_grid.size} grid points ({elapsed:.3f}s)", file=sys.stderr)
    return EXIT_OK


def cmd_cond_test(args) -> int:
    if args.permutations < 1:
        raise DataError(f"--permutations must be >= 1, got {args.permutations}")
    ds, inputs = _build_dataset(args, need_z=True)
    cfg = _smoother_config(args)
    seed = _seed_or_draw(args)
    start = time.perf_counter()
    result = cond_independence_test(ds, cfg=cfg, n_permutations=args.permutations, alpha=args.alpha, seed=seed)
    elapsed = time.perf_counter() - start
    params = {
        "metric_x": _metric_name(ds.metric_x),
        "metric_y": _metric_name(ds.metric_y),
        "kernel": cfg.kernel,
        "bandwidth_rule": cfg.bandwidth_rule,
        "bandwidth": cfg.bandwidth,
        "n_permutations": args.permutations,
        "alpha": args.alpha,
        "seed": seed,
    }
    payload = {
        "statistic": result.statistic,
        "p_value": result.p_value,
        "reject": result.reject,
        "n": ds.n,
        "replicates": list(result.replicates),
    }
    _emit(args, _report("cond-test", inputs, params, payload))
    print(f"p={result.p_value:.4f} reject={result.reject} ({elapsed:.3f}s)", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        rho_grid = [float(tok) for tok in args.rho_grid.split(",") if tok.strip()]
    except ValueError:
        raise DataError(f"--rho-grid must be comma-separated numbers, got {args.rho_grid!r}") from None
    if not rho_grid:
        raise DataError("--rho-grid is empty")
    if args.permutations < 1:
        raise DataError(f"--permutations must be >= 1, got {args.permutations}")
    if args.setting not in SETTINGS:
        raise DataError(
            f"unknown setting {args.setting!r}; valid settings: {', '.join(sorted(SETTINGS))}"
        )
    seed = _seed_or_draw(args)
    cfg = SimulationConfig(
        setting=args.setting,
        n=args.n,
        p=args.p,
        mc_runs=args.mc_runs,
        alpha=args.alpha,
        seed=seed,
        n_permutations=args.permutations,
    )
    threads = args.threads if args.threads is not None else _default_threads()
    start = time.perf_counter()
    table = power_curve(cfg, rho_grid, n_jobs=threads)
    elapsed = time.perf_counter() - start
    lines = [",".join(POWER_TABLE_HEADER)]
    for rho, rate, runs, n, alpha, setting, table_seed in table.rows():
        lines.append(
            f"{io.format_float(rho)},{io.format_float(rate)},{runs},{n},{io.format_float(alpha)},{setting},{table_seed}"
        )
    _emit(args, "\n".join(lines) + "\n")
    print(f"{len(rho_grid)} grid points x {args.mc_runs} runs ({elapsed:.1f}s)", file=sys.stderr)
    return EXIT_OK


_HANDLERS = {
    "assoc": cmd_assoc,
    "test": cmd_test,
    "cond-assoc": cmd_cond_assoc,
    "cond-test": cmd_cond_test,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entrypoint():  # console-script shim
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
