"""Command-line front end.

Subcommands: ``run`` (execute a netlist's analysis directives), ``bench``
(frequency/temperature sweeps of the bundled rectifier bench), ``dc-sweep``
(bench DC transfer curves) and ``device-curves`` (Id-Vds tables from a model
card).  Exit codes: 0 success, 1 parse/validate/usage failure, 2 solver
non-convergence.  Diagnostics go to stderr, summaries to stdout.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import rectifier
from .analysis import write_csv
from .device import derive_params, eval_mosfet
from .netlist import (
    DcSweepDirective,
    NetlistError,
    OpDirective,
    TempDirective,
    parse_netlist,
    parse_number,
    validate,
)
from .rectifier import BenchConfig, compare, run_bench
from .solver import (
    NonConvergenceError,
    SingularMatrixError,
    SolverOptions,
    TransientNonConvergence,
    build_graph,
    dc_sweep,
    solve_dc,
    solve_transient,
)

_FMT = "{:.8e}"


class _ArgumentParser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors, per the CLI contract.

    Also treats ``-200u``-style engineering numbers as values, not options.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = re.compile(r"^-\d")

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _eng(text: str) -> float:
    try:
        return parse_number(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _eng_list(text: str) -> list[float]:
    try:
        return [parse_number(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _atomic_write(path: Path, writer) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        writer(fh)
    os.replace(tmp, path)


def _solver_options(args) -> SolverOptions:
    opts = SolverOptions()
    for flag, attr in (
        ("reltol", "reltol"),
        ("abstol", "abstol_i"),
        ("vntol", "vntol"),
        ("gmin", "gmin"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(opts, attr, value)
    return opts


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--reltol", type=_eng, help="relative tolerance (default 1e-3)")
    p.add_argument("--abstol", type=_eng, help="absolute current tolerance (default 1p)")
    p.add_argument("--vntol", type=_eng, help="voltage tolerance (default 1u)")
    p.add_argument("--gmin", type=_eng, help="minimum conductance (default 1p)")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="amps", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="parse a netlist and execute its directives")
    p_run.add_argument("netlist", help="netlist file")
    p_run.add_argument("-o", "--out", help="output CSV path (single analysis) or directory")
    p_run.add_argument("--temp", type=_eng_list, help="temperature override list, degC")
    _add_solver_flags(p_run)

    p_bench = sub.add_parser("bench", help="rectifier bench frequency/temperature sweep")
    p_bench.add_argument("--freq", type=_eng_list, default=[1e3, 1e4, 1e5, 1e6, 1e7, 1e8])
    p_bench.add_argument("--temp", type=_eng_list, default=[25.0])
    p_bench.add_argument("--amp", type=_eng, default=400e-6, help="input p-p amplitude (A)")
    p_bench.add_argument("--steps-per-period", type=int, default=1000)
    p_bench.add_argument("--periods", type=int, default=20)
    p_bench.add_argument("-o", "--out", default=".", help="output directory")
    p_bench.add_argument("--workers", type=int, default=1)
    _add_solver_flags(p_bench)

    p_dc = sub.add_parser("dc-sweep", help="bench DC transfer curve per temperature")
    p_dc.add_argument("--source", default="IIN")
    p_dc.add_argument("--from", dest="start", type=_eng, required=True)
    p_dc.add_argument("--to", dest="stop", type=_eng, required=True)
    p_dc.add_argument("--step", type=_eng, required=True)
    p_dc.add_argument("--temp", type=_eng_list, default=[25.0])
    p_dc.add_argument("--amp", type=_eng, default=400e-6)
    p_dc.add_argument("-o", "--out", default=".", help="output directory")
    _add_solver_flags(p_dc)

    p_dev = sub.add_parser("device-curves", help="Id-Vds CSV from a model card")
    p_dev.add_argument("--model", required=True)
    p_dev.add_argument("--cards", help="netlist file holding .MODEL cards (default: bundled)")
    p_dev.add_argument("--polarity", choices=["NMOS", "PMOS"], help="sanity check only")
    p_dev.add_argument("--vgs", type=_eng_list, default=[0.5, 1.0, 1.5])
    p_dev.add_argument("--vds-from", type=_eng, default=0.0)
    p_dev.add_argument("--vds-to", type=_eng, default=1.5)
    p_dev.add_argument("--vds-step", type=_eng, default=0.01)
    p_dev.add_argument("--w", type=_eng, default=1.5e-6)
    p_dev.add_argument("--l", type=_eng, default=0.15e-6)
    p_dev.add_argument("--temp", type=_eng, default=27.0)
    p_dev.add_argument("-o", "--out", default="device_curves.csv")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "run": cmd_run,
        "bench": cmd_bench,
        "dc-sweep": cmd_dc_sweep,
        "device-curves": cmd_device_curves,
    }
    try:
        return handlers[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _write_op_csv(fh, graph, op) -> None:
    fh.write("name,value,unit\n")
    for j in range(1, graph.n + 1):
        fh.write(f"v({graph.node_names[j]}),{_FMT.format(op.voltages[j - 1])},V\n")
    for k, src in enumerate(graph.vsources):
        fh.write(f"i({src.name}),{_FMT.format(op.branch_currents[k])},A\n")


def _write_sweep_csv(fh, graph, source_name, curve) -> None:
    cols = [f"v({graph.node_names[j]})" for j in range(1, graph.n + 1)]
    cols += [f"i({src.name})" for src in graph.vsources]
    fh.write(f"{source_name}," + ",".join(cols) + "\n")
    for value, op in curve:
        row = [_FMT.format(value)]
        row += [_FMT.format(v) for v in op.voltages]
        row += [_FMT.format(i) for i in op.branch_currents]
        fh.write(",".join(row) + "\n")


def cmd_run(args) -> int:
    path = Path(args.netlist)
    try:
        text = path.read_text()
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        return 1
    try:
        doc = parse_netlist(text)
    except NetlistError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return 1
    diags = validate(doc)
    for d in diags:
        print(f"{path}: {d.severity}: {d.message} [{d.location}]", file=sys.stderr)
    if any(d.severity == "error" for d in diags):
        return 1
    opts = _solver_options(args)

    analyses = [d for d in doc.directives if not isinstance(d, TempDirective)]
    jobs = []  # (directive, temp)
    temps = list(args.temp) if args.temp else [27.0]
    forced = args.temp is not None
    current = temps
    for d in doc.directives:
        if isinstance(d, TempDirective):
            if not forced:
                current = list(d.temps)
            continue
        for t in current:
            jobs.append((d, t))
    if not jobs:
        print(f"{path}: no analysis directives", file=sys.stderr)
        return 1

    single = len(jobs) == 1 and args.out and not Path(args.out).is_dir()
    outdir = Path(args.out) if (args.out and not single) else path.parent
    graphs: dict[float, object] = {}
    for idx, (directive, temp) in enumerate(jobs, start=1):
        if temp not in graphs:
            graphs[temp] = build_graph(doc, temp)
        graph = graphs[temp]
        kind = type(directive).__name__.replace("Directive", "").lower()
        if single:
            out_path = Path(args.out)
        else:
            suffix = f"_t{temp:g}" if len({t for _, t in jobs}) > 1 else ""
            out_path = outdir / f"{path.stem}_{idx}_{kind}{suffix}.csv"
        started = time.perf_counter()
        try:
            if isinstance(directive, OpDirective):
                op = solve_dc(graph, opts)
                _atomic_write(out_path, lambda fh: _write_op_csv(fh, graph, op))
                points = 1
            elif isinstance(directive, DcSweepDirective):
                curve = dc_sweep(
                    graph, directive.source, directive.start, directive.stop,
                    directive.step, opts,
                )
                if not all(op.converged for _, op in curve):
                    bad = sum(1 for _, op in curve if not op.converged)
                    print(f"{out_path.name}: {bad} non-converged points", file=sys.stderr)
                _atomic_write(
                    out_path,
                    lambda fh: _write_sweep_csv(fh, graph, directive.source, curve),
                )
                points = len(curve)
            else:
                from .solver import TransientOptions

                topts = TransientOptions(tstep=directive.tstep, tstop=directive.tstop)
                ws = solve_transient(graph, topts, opts)
                _atomic_write(out_path, lambda fh: write_csv(ws, fh))
                points = ws.stats["steps"] + 1
        except KeyError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            return 1
        except (NonConvergenceError, SingularMatrixError, TransientNonConvergence) as exc:
            print(f"{path}: {kind} at {temp:g} degC failed: {exc}", file=sys.stderr)
            return 2
        elapsed = time.perf_counter() - started
        print(f"{kind}: {points} points, {elapsed:.2f} s -> {out_path}")
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def _bench_point(cfg: BenchConfig, opts: SolverOptions, outdir: Path):
    name = f"bench_f{cfg.frequency:.0f}_t{cfg.temp:g}.csv"
    try:
        ws = run_bench(cfg, opts)
        report = compare(ws, cfg)
        _atomic_write(outdir / name, lambda fh: write_csv(ws, fh))
        return (cfg, name, report, "ok")
    except (NonConvergenceError, SingularMatrixError, TransientNonConvergence) as exc:
        return (cfg, name, None, f"failed: {type(exc).__name__}")


def cmd_bench(args) -> int:
    if any(f <= 0 for f in args.freq):
        print("amps bench: error: frequencies must be > 0", file=sys.stderr)
        return 1
    if args.amp <= 0:
        print("amps bench: error: amplitude must be > 0", file=sys.stderr)
        return 1
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    opts = _solver_options(args)
    configs = [
        BenchConfig(
            amplitude_pp=args.amp,
            frequency=f,
            temp=t,
            periods=args.periods,
            steps_per_period=args.steps_per_period,
        )
        for f in args.freq
        for t in args.temp
    ]
    started = time.perf_counter()
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(lambda c: _bench_point(c, opts, outdir), configs))
    else:
        results = [_bench_point(c, opts, outdir) for c in configs]

    def write_report(fh):
        fh.write(
            "freq,temp,rms_error_plus,rms_error_minus,peak_error_plus,"
            "peak_error_minus,zero_crossing_width,dc_power,status\n"
        )
        for cfg, _, report, status in results:
            head = f"{cfg.frequency!r},{cfg.temp!r},"
            if report is None:
                fh.write(head + "nan,nan,nan,nan,nan,nan," + status + "\n")
            else:
                vals = (
                    report.rms_error_plus,
                    report.rms_error_minus,
                    report.peak_error_plus,
                    report.peak_error_minus,
                    report.zero_crossing_width,
                    report.dc_power,
                )
                fh.write(head + ",".join(_FMT.format(v) for v in vals) + f",{status}\n")

    _atomic_write(outdir / "report.csv", write_report)
    elapsed = time.perf_counter() - started
    ok = sum(1 for r in results if r[3] == "ok")
    for cfg, name, report, status in results:
        detail = f"rms+={report.rms_error_plus:.4f}" if report else status
        print(f"bench f={cfg.frequency:g} T={cfg.temp:g}: {detail} -> {name}")
    print(f"bench: {ok}/{len(results)} points, {elapsed:.1f} s -> {outdir / 'report.csv'}")
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# dc-sweep
# ---------------------------------------------------------------------------


def cmd_dc_sweep(args) -> int:
    if args.step == 0 or (args.stop - args.start) * args.step < 0:
        print("amps dc-sweep: error: step must be nonzero and sign-consistent", file=sys.stderr)
        return 1
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    opts = _solver_options(args)
    for temp in args.temp:
        cfg = BenchConfig(amplitude_pp=args.amp, temp=temp)
        try:
            iin, out_plus, out_minus = rectifier.bench_dc_transfer(
                cfg, args.start, args.stop, args.step, opts, source=args.source
            )
        except KeyError as exc:
            print(f"amps dc-sweep: {exc.args[0]}", file=sys.stderr)
            return 1
        name = f"dcsweep_t{temp:g}.csv"

        def write(fh):
            fh.write("iin,out_plus,out_minus\n")
            for row in zip(iin, out_plus, out_minus):
                fh.write(",".join(_FMT.format(v) for v in row) + "\n")

        _atomic_write(outdir / name, write)
        print(f"dc-sweep T={temp:g}: {len(iin)} points -> {outdir / name}")
    return 0


# ---------------------------------------------------------------------------
# device-curves
# ---------------------------------------------------------------------------


def cmd_device_curves(args) -> int:
    if args.cards:
        try:
            text = Path(args.cards).read_text()
        except OSError as exc:
            print(f"cannot read {args.cards}: {exc}", file=sys.stderr)
            return 1
    else:
        text = "bundled model cards\n" + rectifier.MODEL_CARDS + "\n.END\n"
    try:
        doc = parse_netlist(text)
    except NetlistError as exc:
        print(f"model cards: {exc}", file=sys.stderr)
        return 1
    card = doc.models.get(args.model.upper())
    if card is None:
        print(f"unknown model {args.model}", file=sys.stderr)
        return 1
    if args.polarity and args.polarity != card.polarity:
        print(f"model {card.name} is {card.polarity}, not {args.polarity}", file=sys.stderr)
        return 1
    params = derive_params(card, args.w, args.l, args.temp)
    steps = int(round((args.vds_to - args.vds_from) / args.vds_step))
    vds = args.vds_from + args.vds_step * np.arange(steps + 1)
    sign = 1.0 if card.polarity == "NMOS" else -1.0

    def write(fh):
        header = "vds," + ",".join(f"id_vgs{v:g}" for v in args.vgs)
        fh.write(header + "\n")
        for vd in vds:
            row = [_FMT.format(sign * vd)]
            for vg in args.vgs:
                ev = eval_mosfet(params, sign * vg, sign * vd, 0.0)
                row.append(_FMT.format(ev.id))
            fh.write(",".join(row) + "\n")

    out = Path(args.out)
    _atomic_write(out, write)
    print(f"device-curves {card.name}: {len(vds)} bias rows -> {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
