"""Command-line interface: ``kcde <subcommand> [flags]``.

Exit codes: 0 success, 2 input error, 3 numerical failure.  Options may also
come from a JSON file given with ``--config``; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .bandwidth import BgkConfig, parse_bandwidth_spec
from .benchmark import ExperimentConfig, rows_to_csv, run_experiment, summary_json
from .distributions import FAMILIES, model_select, reports_to_csv
from .errors import DegenerateSampleError, NumericalError
from .estimator import KcdeModel, fit_kcde, staircase_cdf
from .kernels import Kernel
from .sampler import DEFAULT_TABLE_SIZE, build_lookup, series_to_csv, simulate
from .timeseries import (aggregate, drop_zeros, ingest_csv, read_values, replace_zeros, summary_stats,
                         wet_period_filter)

log = logging.getLogger("kcde")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
DEFAULT_SEED = 0


class InputError(ValueError):
    pass


def build_hash() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], cwd=here, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return "unknown"


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_model(path) -> KcdeModel:
    if not path:
        raise InputError("--model is required")
    with open(path) as fh:
        return KcdeModel.from_json(fh.read())


def _seed(args) -> int:
    if args.seed is None:
        log.info("no --seed given; using default seed %d", DEFAULT_SEED)
        return DEFAULT_SEED
    return int(args.seed)


def _bgk_config(args) -> BgkConfig:
    return BgkConfig.from_dict(args.bgk or {}) if getattr(args, "bgk", None) else BgkConfig()


# --- subcommands ------------------------------------------------------------------


def cmd_fit(args) -> int:
    if not args.input:
        raise InputError("--input is required")
    x = read_values(args.input, args.column)
    if x.size == 0:
        raise DegenerateSampleError("empty sample")
    correction = {"auto": None, "on": True, "off": False}[args.boundary_correction]
    model = fit_kcde(x, args.kernel or "bitriangular", parse_bandwidth_spec(args.bandwidth or "bgk"),
                     boundary_correction=correction, bgk_config=_bgk_config(args))
    bw = model.bandwidth
    report = {
        "h": model.h, "n": model.n, "pAtZero": model.p_at_zero, "kernel": model.kernel.value,
        "bandwidthMethod": bw.method, "converged": bw.converged, "iterations": bw.iterations,
    }
    if args.output:
        write_atomic(args.output, model.to_json(indent=1) + "\n")
        sys.stdout.write(json.dumps(report) + "\n")
    else:
        sys.stdout.write(json.dumps({"model": model.to_dict(), "report": report}) + "\n")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = _load_model(args.model)
    points_path = args.points or args.input
    if not points_path:
        raise InputError("--points is required")
    z = read_values(points_path, args.column)
    if z.size == 0:
        raise InputError("no evaluation points")
    F, f, S = model.cdf(z), model.pdf(z), staircase_cdf(model.sorted_sample, z)
    if args.format == "json":
        text = json.dumps({"z": z.tolist(), "cdf": F.tolist(), "pdf": f.tolist(), "staircase": S.tolist()}) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z", "cdf", "pdf", "staircase"])
        for row in zip(z, F, f, S):
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
    write_atomic(args.output, text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _load_model(args.model)
    n = int(args.n) if args.n is not None else model.n
    table = build_lookup(model, int(args.table_size or DEFAULT_TABLE_SIZE))
    z = simulate(table, n, _seed(args))
    if args.format == "json":
        text = json.dumps({"amount_mm": z.tolist()}) + "\n"
    else:
        text = series_to_csv(z)
    write_atomic(args.output, text)
    return EXIT_OK


def cmd_select(args) -> int:
    if not args.input:
        raise InputError("--input is required")
    x = read_values(args.input, args.column)
    if x.size == 0:
        raise DegenerateSampleError("empty sample")
    families = [f.strip() for f in (args.families or ",".join(FAMILIES)).split(",") if f.strip()]
    sel = model_select(x, families)
    if args.format == "json":
        text = json.dumps(sel.to_dict(), indent=1) + "\n"
    else:
        text = reports_to_csv(sel.ranking(args.criterion))
    for fam, msg in sel.failures.items():
        log.warning("%s: %s", fam, msg)
    write_atomic(args.output, text)
    return EXIT_OK


def cmd_bench(args) -> int:
    exp_keys = dict(args.experiment or {})
    if args.seed is not None:
        exp_keys["seed"] = int(args.seed)
    if args.kernel:
        exp_keys["kernels"] = [k.strip() for k in args.kernel.split(",")]
    if args.bandwidth:
        exp_keys["bandwidth_methods"] = [b.strip() for b in args.bandwidth.split(",")]
    if args.quick:
        exp_keys.setdefault("replicates", 20)
        exp_keys.setdefault("sizes", [100, 500])
    config = ExperimentConfig.from_dict(exp_keys)
    log.info("bench: %d models x %d sizes x %d replicates (seed %d)", len(config.models), len(config.sizes),
             config.replicates, config.seed)
    rows = run_experiment(config, jobs=int(args.jobs or 1))
    write_atomic(args.output, rows_to_csv(rows))
    if args.summary:
        write_atomic(args.summary, summary_json(rows, indent=1) + "\n")
    return EXIT_OK


def cmd_aggregate(args) -> int:
    if not args.input:
        raise InputError("--input is required")
    ts = ingest_csv(args.input)
    if args.wet_filter:
        ts = wet_period_filter(ts)
    out = aggregate(ts, args.window)
    if args.drop_zeros:
        out, removed = drop_zeros(out)
        log.info("removed %d zero windows", removed)
    elif args.replace_zeros is not None:
        out = replace_zeros(out, float(args.replace_zeros))
    write_atomic(args.output, out.to_csv(with_coverage=args.with_coverage))
    return EXIT_OK


def cmd_stats(args) -> int:
    if not args.input:
        raise InputError("--input is required")
    x = read_values(args.input, args.column)
    removed = 0
    if args.drop_zeros:
        removed = int(np.count_nonzero(x == 0))
        x = x[x > 0]
    stats = summary_stats(x, removed)
    if args.format == "json":
        text = json.dumps(stats.to_dict()) + "\n"
    elif args.format == "csv":
        d = stats.to_dict()
        text = ",".join(d) + "\n" + ",".join(repr(v) for v in d.values()) + "\n"
    else:
        text = stats.table() + "\n" + json.dumps(stats.to_dict()) + "\n"
    write_atomic(args.output, text)
    return EXIT_OK


# --- parser -----------------------------------------------------------------------


def _shared() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--input", "-i")
    p.add_argument("--output", "-o")
    p.add_argument("--kernel", type=lambda s: Kernel.parse(s).value if "," not in s else s)
    p.add_argument("--bandwidth")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=["csv", "json", "table"])
    p.add_argument("--config", help="JSON file with option values; explicit flags win")
    p.add_argument("--column", help="value column of the input CSV")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kcde", description="Kernel CDF estimation, simulation and fitting.")
    parser.add_argument("--version", action="version", version=f"kcde {__version__} (build {build_hash()})")
    sub = parser.add_subparsers(dest="command", required=True)
    shared = _shared()

    p = sub.add_parser("fit", parents=[shared], help="fit a kernel CDF estimate")
    p.add_argument("--boundary-correction", choices=["auto", "on", "off"], default="auto")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", parents=[shared], help="evaluate a fitted model at points")
    p.add_argument("--model", "-m")
    p.add_argument("--points")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", parents=[shared], help="inverse-transform simulation from a model")
    p.add_argument("--model", "-m")
    p.add_argument("--n", type=int)
    p.add_argument("--table-size", type=int, default=DEFAULT_TABLE_SIZE)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("select", parents=[shared], help="fit parametric families and rank them")
    p.add_argument("--families", help=f"comma-separated subset of {','.join(FAMILIES)}")
    p.add_argument("--criterion", choices=["aic", "bic", "nll"], default="bic")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("bench", parents=[shared], help="synthetic KCDE vs staircase benchmark")
    p.add_argument("--quick", action="store_true", help="20 replicates, N in {100, 500}")
    p.add_argument("--summary", help="path for the per-cell summary JSON")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("aggregate", parents=[shared], help="aggregate a timestamped series")
    p.add_argument("--window", choices=["daily", "weekly", "monthly", "seasonal"], required=False)
    p.add_argument("--no-wet-filter", dest="wet_filter", action="store_false")
    p.add_argument("--drop-zeros", action="store_true")
    p.add_argument("--replace-zeros", type=float)
    p.add_argument("--with-coverage", action="store_true")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("stats", parents=[shared], help="summary statistics of a series")
    p.add_argument("--drop-zeros", action="store_true")
    p.set_defaults(func=cmd_stats)
    return parser


def _merge_config(parser: argparse.ArgumentParser, args, argv) -> None:
    if not args.config:
        return
    with open(args.config) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: {exc}") from None
    if not isinstance(data, dict):
        raise InputError(f"{args.config}: expected a JSON object")
    given = {a.split("=")[0] for a in argv if a.startswith("-")}
    sub = parser._subparsers._group_actions[0].choices[args.command]
    by_dest = {a.dest: a for a in sub._actions}
    experiment = {}
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest == "bgk":
            args.bgk = value
            if args.command == "bench":
                experiment["bgk"] = value
            continue
        action = by_dest.get(dest)
        if action is None or dest in ("config", "help"):
            if args.command == "bench":
                experiment[key] = value
                continue
            raise InputError(f"{args.config}: unknown option {key!r}")
        if any(opt in given for opt in action.option_strings):
            continue
        setattr(args, dest, value)
    args.experiment = experiment


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    args.bgk = None
    args.experiment = None
    try:
        _merge_config(parser, args, argv)
        if args.command == "aggregate" and not args.window:
            raise InputError("--window is required")
        return args.func(args)
    except (NumericalError, ArithmeticError) as exc:
        print(f"kcde: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"kcde: error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
