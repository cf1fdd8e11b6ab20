"""Command-line interface: build, search, theory, optimize, experiment, compare.

Exit codes: 0 ok, 1 usage or invalid configuration, 2 bad input data
(missing table directory, corrupt table file), 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

from . import baselines, experiment, optimizer, storage, theory
from .core import FUNCTIONS, ConfigError, SpaceParams
from .offline import build_tables
from .online import batch_search, search
from .theory import TheoryInputs

log = logging.getLogger("rainbowdp")

DEFAULT_SEED = 0
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3
SUMMARY_NAME = "build_summary.json"
SEARCH_FIELDS = ("target", "found", "success", "invocations", "alarms", "false_alarms", "iteration_found",
                 "table_index")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- output helpers -----------------------------------------------------------

def _emit(rows: list[dict], fmt: str, out=None, fields=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        doc = rows[0] if len(rows) == 1 else rows
        out.write(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    elif fmt == "csv":
        fields = fields or list(rows[0]) if rows else []
        w = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    else:
        for k, r in enumerate(rows):
            if k:
                out.write("\n")
            width = max(len(key) for key in r)
            for key, v in r.items():
                out.write(f"{key:<{width}}  {_human(v)}\n")


def _json_default(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return str(v)


def _human(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if v is None:
        return "-"
    return str(v)


def _write(text_fn, path):
    """Run ``text_fn(stream)`` against a file or stdout."""
    if path is None:
        text_fn(sys.stdout)
        return
    buf = io.StringIO()
    text_fn(buf)
    Path(path).write_text(buf.getvalue())


def hex_width(n_bits: int) -> int:
    return -(-n_bits // 4)


def format_hex(x: int, n_bits: int) -> str:
    return format(x, f"0{hex_width(n_bits)}x")


def parse_hex(text: str, n_bits: int) -> int:
    try:
        v = int(text.lower().removeprefix("0x"), 16)
    except ValueError:
        raise ConfigError(f"target {text!r} is not hexadecimal") from None
    if v >> n_bits:
        raise ConfigError(f"target {text!r} does not fit in {n_bits} bits")
    return v


# -- parameter flags ----------------------------------------------------------

def _add_space_flags(p, required=True):
    p.add_argument("--n-bits", type=int, required=required, help="search space width, N = 2^n")
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--k-bits", type=int, help="DP width, t = 2^k")
    g.add_argument("--t", type=int, help="expected chain length (power of two)")
    p.add_argument("--c", type=float, default=None, help="chain-length bound ratio")
    p.add_argument("--tables", type=int, default=None, dest="l", help="number of tables l")
    p.add_argument("--m0", type=int, default=None, help="start points per table")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--fn", default="md5-trunc", choices=sorted(FUNCTIONS))


def _k_bits(args) -> int:
    if args.k_bits is not None:
        return args.k_bits
    t = args.t
    if t is None or t < 1 or t & (t - 1):
        raise ConfigError(f"--t must be a power of two, got {t}")
    return t.bit_length() - 1


def _params(args) -> SpaceParams:
    for name in ("c", "l", "m0"):
        if getattr(args, name) is None:
            raise ConfigError(f"--{'tables' if name == 'l' else name} is required")
    return SpaceParams.create(args.n_bits, _k_bits(args), args.c, args.l, args.m0, args.seed, args.fn)


# -- subcommands --------------------------------------------------------------

def cmd_build(args) -> int:
    params = _params(args)
    out = Path(args.out)
    if out.exists() and not out.is_dir():
        raise ConfigError(f"--out {out} exists and is not a directory")
    tables = build_tables(params, args.workers, args.scheme)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for tb in tables:
        path = out / f"table_{tb.table_index:04d}.rdpt"
        storage.save(tb, path)
        files.append(path.name)
    summary = {
        "params": asdict(params),
        "N": params.N,
        "t": params.t,
        "files": files,
        "chains_stored": sum(tb.m0 for tb in tables),
        "precomp_invocations": sum(tb.precomp_invocations for tb in tables),
    }
    summary["precomp_coefficient"] = summary["precomp_invocations"] / params.N
    (out / SUMMARY_NAME).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    row = {k: v for k, v in summary.items() if k not in ("params", "files")} | {"tables": len(files), "out": str(out)}
    _write(lambda s: _emit([row], args.format, s), args.output)
    return EXIT_OK


def load_table_dir(path) -> list:
    d = Path(path)
    if not d.is_dir():
        raise FileNotFoundError(f"table directory {d} not found")
    files = sorted(d.glob("*.rdpt"))
    if not files:
        raise FileNotFoundError(f"no .rdpt files in {d}")
    return [storage.load(f) for f in files]


def _outcome_row(o, n_bits: int) -> dict:
    return {
        "target": format_hex(o.target, n_bits),
        "found": format_hex(o.found, n_bits) if o.found is not None else "",
        "success": int(o.success),
        "invocations": o.counters.f_invocations,
        "alarms": o.counters.alarms,
        "false_alarms": o.counters.false_alarms,
        "iteration_found": o.found_at[1] if o.found_at else "",
        "table_index": o.found_at[0] if o.found_at else "",
    }


def cmd_search(args) -> int:
    if (args.target is None) == (args.target_count is None):
        raise UsageError("give exactly one of --target or --target-count")
    tables = load_table_dir(args.tables)
    p = tables[0].params
    if args.target is not None:
        y = parse_hex(args.target, p.n_bits)
        outcomes = [search(y, tables, early_break=args.early_break)]
    else:
        if args.target_count < 1:
            raise ConfigError("--target-count must be >= 1")
        xs, ys = experiment.make_targets(p.N, p.n_bits, p.fid, args.target_count, args.target_seed)
        outcomes, _ = batch_search(ys, tables, workers=args.workers, early_break=args.early_break,
                                   planted=xs if args.success == "planted" else None)
    rows = [_outcome_row(o, p.n_bits) for o in outcomes]
    _write(lambda s: _emit(rows, args.format, s, SEARCH_FIELDS), args.output)
    return EXIT_OK


def _theory_inputs(args) -> TheoryInputs:
    if args.dpc is not None:
        if args.n_bits is not None or args.m0 is not None:
            raise UsageError("--dpc excludes --n-bits/--m0")
        if args.c is None or args.l is None:
            raise ConfigError("--dpc needs --c and --tables")
        return TheoryInputs.from_coefficients(args.l, args.c, args.dpc)
    if args.n_bits is None:
        raise UsageError("give --n-bits/--k-bits/--c/--tables/--m0 or --dpc/--c/--tables")
    return TheoryInputs.from_params(_params(args))


def cmd_theory(args) -> int:
    ti = _theory_inputs(args)
    if ti.t is None:
        row = {
            "H": ti.H,
            "D_pc": ti.d_pc,
            "success_p": theory.success_prob(ti),
            "D_tcr": theory.tradeoff_coefficient(ti),
        }
    else:
        row = asdict(theory.report(ti))
    _write(lambda s: _emit([row], args.format, s), args.output)
    return EXIT_OK


def _opt_row(r: optimizer.OptimizationResult) -> dict:
    return {
        "D_pc": r.D_pc,
        "target_p": r.target_p,
        "feasible": r.feasible,
        "l": r.l if r.feasible else None,
        "c": r.c if r.feasible else None,
        "achieved_p": r.achieved_p if r.feasible else None,
        "D_tcr": r.D_tcr if r.feasible else None,
        "dominated": r.dominated,
    }


def cmd_optimize(args) -> int:
    if args.l_max < 1:
        raise ConfigError("--l-max must be >= 1")
    for p in args.p:
        if not 0 < p < 1:
            raise ConfigError(f"--p must lie in (0, 1), got {p}")
    for d in args.dpc:
        if d <= 0:
            raise ConfigError(f"--dpc must be positive, got {d}")
    results = optimizer.optimize_grid(args.dpc, args.p, args.l_max)
    rows = [_opt_row(r) for r in results]
    if args.candidates:
        rows = [_opt_row(c) | {"best": c.l == r.l and r.feasible}
                for r in results for c in r.candidates]
    _write(lambda s: _emit(rows, args.format, s), args.output)
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.paper_config:
        if any(getattr(args, k) is not None for k in ("n_bits", "k_bits", "t", "c", "l", "m0")):
            raise UsageError("--paper-config excludes explicit space flags")
        params = experiment.REFERENCE_PARAMS
        n_targets = args.targets or experiment.REFERENCE_TARGETS
    else:
        if args.n_bits is None:
            raise UsageError("give --paper-config or the space flags")
        params = _params(args)
        n_targets = args.targets or 1000
    report = experiment.run_experiment(params, n_targets, args.target_seed, args.workers,
                                       args.early_break, success=args.success)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        experiment.write_summary(report, out / "summary.json")
        experiment.write_targets_csv(report.outcomes, out / "targets.csv", hex_width(params.n_bits))
    if args.format == "json":
        _write(lambda s: s.write(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n"), args.output)
    else:
        rows = [{"quantity": k, "measured": report.measured[k], "predicted": report.predicted[k],
                 "relative_delta": report.relative_deltas[k]} for k in experiment.FIELDS]
        rows.append({"quantity": "any_preimage_rate", "measured": report.measured["any_preimage_rate"],
                     "predicted": None, "relative_delta": None})
        if args.format == "csv":
            _write(lambda s: _emit(rows, "csv", s), args.output)
        else:
            def human(s):
                s.write(f"{'quantity':<26}{'measured':>16}{'predicted':>16}{'delta':>10}\n")
                for r in rows:
                    d = r["relative_delta"]
                    s.write(f"{r['quantity']:<26}{r['measured']:>16.6g}{_human(r['predicted']):>16}"
                            f"{(f'{d:+.2%}' if d is not None else '-'):>10}\n")
            _write(human, args.output)
    return EXIT_OK


def cmd_compare(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    known = ("rainbow_dp",) + baselines.METHODS
    bad = [m for m in methods if m not in known]
    if bad or not methods:
        raise ConfigError(f"unknown methods {bad}; choose from {','.join(known)}")
    if args.targets < 1:
        raise ConfigError("--targets must be >= 1")
    configs = experiment.matched_configs(args.n_bits, args.k_bits, methods, args.seed, args.fn)
    rows, reference = experiment.compare_methods(configs, args.targets, args.target_seed)
    ref = {(r.method, r.p): r for r in reference}
    out = []
    for r in rows:
        quoted = [f"p={p:.2f}:{v.D_tcr}" for (m, p), v in ref.items() if m == r.method]
        out.append({
            "method": r.method,
            "memory": r.memory,
            "precomp_coefficient": r.d_pc,
            "success_rate": r.success_rate,
            "mean_online_invocations": r.mean_online_invocations,
            "mean_false_alarms": r.mean_false_alarms,
            "measured_tm2": r.tm2,
            "published_tm2": ";".join(quoted),
        })
    _write(lambda s: _emit(out, args.format, s), args.output)
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="rainbowdp", description="rainbow distinguished-point time-memory tradeoff toolkit")
    top.add_argument("-v", "--verbose", action="store_true")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--format", choices=("human", "json", "csv"), default="human")
        p.add_argument("--output", default=None, help="write the report here instead of stdout")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("build", help="build and save precomputation tables")
    _add_space_flags(p)
    p.add_argument("--out", required=True, help="directory for the .rdpt files")
    p.add_argument("--scheme", choices=("mixed", "sequential"), default="mixed")
    common(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("search", help="invert targets against saved tables")
    p.add_argument("--tables", required=True, help="directory of .rdpt files")
    p.add_argument("--target", help="target image, hexadecimal")
    p.add_argument("--target-count", type=int)
    p.add_argument("--target-seed", type=int, default=1)
    p.add_argument("--success", choices=("planted", "any"), default="planted",
                   help="with --target-count: count only the drawn pre-image, or any pre-image")
    p.add_argument("--early-break", action="store_true", help="stop each online chain at its first DP")
    common(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("theory", help="analytic predictions")
    _add_space_flags(p, required=False)
    p.add_argument("--dpc", type=float, help="coefficient form: precomputation coefficient")
    common(p)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("optimize", help="best (l, c) for a budget and success target")
    p.add_argument("--dpc", type=float, nargs="+", required=True)
    p.add_argument("--p", type=float, nargs="+", required=True)
    p.add_argument("--l-max", type=int, default=8)
    p.add_argument("--candidates", action="store_true", help="list every l instead of the optimum")
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("experiment", help="measure against theory")
    _add_space_flags(p, required=False)
    p.add_argument("--paper-config", action="store_true",
                   help="N=2^24, m0=262144, t=512, l=1, c=1.8, 3000 targets")
    p.add_argument("--targets", type=int, default=None)
    p.add_argument("--target-seed", type=int, default=1)
    p.add_argument("--success", choices=("planted", "any"), default="planted")
    p.add_argument("--early-break", action="store_true")
    p.add_argument("--out", help="directory for summary.json and targets.csv")
    common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("compare", help="rainbow-DP against classic methods at matched memory")
    p.add_argument("--methods", default="rainbow_dp,rainbow,hellman,hellman_dp")
    p.add_argument("--n-bits", type=int, default=20)
    p.add_argument("--k-bits", type=int, default=6)
    p.add_argument("--targets", type=int, default=500)
    p.add_argument("--target-seed", type=int, default=1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--fn", default="md5-trunc", choices=sorted(FUNCTIONS))
    common(p)
    p.set_defaults(func=cmd_compare)
    return top


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"rainbowdp: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "workers", 1) < 1:
            raise ConfigError("--workers must be >= 1")
        return args.func(args)
    except (UsageError, ConfigError) as e:
        print(f"rainbowdp: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except storage.TableFormatError as e:
        print(f"rainbowdp: corrupt table (field {e.field}): {e}", file=sys.stderr)
        return EXIT_DATA
    except (FileNotFoundError, NotADirectoryError) as e:
        print(f"rainbowdp: error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:
        log.debug("failure", exc_info=True)
        print(f"rainbowdp: runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
