"""Command-line entry point: ``spike-energetics {cells,simulate,report,sweep,verify}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import warnings

from . import cells, verify
from .energetics import F_ATP_DEFAULT, F_ATP_RANGE, REPORT_COLUMNS, NoSpikesError, energy_report
from .integrator import (DEFAULT_DT, DEFAULT_DURATION, DEFAULT_TRANSIENT, IntegrationError, Protocol,
                         detect_spikes, integrate, interspike_frequencies, mean_frequency)
from .reference import TABLE3_STIMULUS
from .sweep import DEFAULT_STIMS, DEFAULT_TEMPS, dump_json, parse_axis, run_sweep, write_rows

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3

log = logging.getLogger("spike_energetics")


class UsageError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _cell_ids(text: str | None, default_all: bool = True) -> list[int]:
    if text is None or text == "all":
        if text is None and not default_all:
            raise UsageError("--cell is required")
        return list(cells.CELL_IDS)
    ids = []
    for part in text.split(","):
        cid = int(part)
        cells.registry(cid)
        ids.append(cid)
    return ids


def _protocol(args, cell_id: int) -> Protocol:
    stim = args.stim if args.stim is not None else TABLE3_STIMULUS[cell_id]
    temp = args.temp if args.temp is not None else 36.0
    return Protocol(stim, T=temp, duration=args.duration, dt=args.dt, transient=args.transient)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        rounded = [{k: float(f"{v:.6g}") if isinstance(v, float) else v for k, v in r.items()} for r in rows]
        return json.dumps(rounded, indent=1) + "\n"
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def cmd_cells(args) -> int:
    rows = [cells.registry(cid).to_dict() for cid in _cell_ids(args.cell)]
    _emit(_table(rows, args.format), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    ids = _cell_ids(args.cell, default_all=False)
    if len(ids) != 1:
        raise UsageError("simulate takes exactly one cell")
    cid = ids[0]
    proto = _protocol(args, cid)
    trace = integrate(cells.registry(cid), proto)
    spikes = detect_spikes(trace)
    out = args.out or f"cell{cid}_trace.csv"
    trace.to_csv(out, every=args.every)
    isi = interspike_frequencies(spikes)
    print(f"cell {cid}: {spikes.count} spikes in [{proto.transient:g}, {proto.duration:g}] ms, "
          f"mean frequency {mean_frequency(spikes):.3g} Hz")
    if isi:
        print(f"inter-spike frequency: first {isi[0][1]:.3g} Hz, last {isi[-1][1]:.3g} Hz")
    print(f"trace written to {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = []
    for cid in _cell_ids(args.cell):
        proto = _protocol(args, cid)
        try:
            rep = energy_report(cid, proto, F_ATP=args.fatp, baseline=args.baseline)
        except NoSpikesError:
            rows.append({"cell_id": cid, "stimulus_uA_cm2": proto.I_stim, "temperature_C": proto.T,
                         "status": "no-spikes"})
            continue
        rows.append({**rep.to_dict(), "status": "ok"})
    if args.format == "csv":
        cols = [*REPORT_COLUMNS.values(), "status"]
        rows = [{c: r.get(c, "") for c in cols} for r in rows]
    _emit(_table(rows, args.format), args.out)
    if any(r.get("cell_id") == 7 for r in rows):
        print("note: cell 7 bursts; frequency is all spikes / window, not a burst rate", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    temps = parse_axis(args.temp, 1.0) if args.temp is not None else DEFAULT_TEMPS
    stims = parse_axis(args.stim, 0.25) if args.stim is not None else DEFAULT_STIMS
    if temps.size == 0 or stims.size == 0:
        raise UsageError("empty sweep axis")
    grids = []
    for cid in _cell_ids(args.cell):
        log.info("sweeping cell %d over %d x %d points", cid, temps.size, stims.size)
        grids.append(run_sweep(cid, temps, stims, duration=args.duration, dt=args.dt,
                               transient=args.transient, F_ATP=args.fatp, jobs=args.jobs))
    if args.format == "json":
        _emit(dump_json(grids) + "\n", args.out)
    elif args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_rows(fh, grids)
    else:
        write_rows(sys.stdout, grids)
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = verify.run(quick=args.quick, g_na_factor=args.perturb_gna)
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    for c in failed:
        print(f"  failed: {c.name} ({c.detail})")
    return EXIT_OK if not failed else EXIT_ACCEPTANCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spike-energetics",
                                     description="Spiking dynamics and per-spike energy of ten model cells.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sweep=False):
        p.add_argument("--cell", help="cell id, comma list, or 'all'")
        if sweep:
            p.add_argument("--stim", help="stimulus axis a:b[:step] in uA/cm2 (default 2.25:10:0.25)")
            p.add_argument("--temp", help="temperature axis a:b[:step] in degC (default 20:40:1)")
        else:
            p.add_argument("--stim", type=float, help="step current, uA/cm2 (default: per-cell reference)")
            p.add_argument("--temp", type=float, help="temperature, degC (default 36)")
        p.add_argument("--duration", type=float, default=DEFAULT_DURATION, help="ms")
        p.add_argument("--dt", type=float, default=DEFAULT_DT, help="ms")
        p.add_argument("--transient", type=float, default=DEFAULT_TRANSIENT, help="ms excluded from analysis")
        p.add_argument("--fatp", type=float, default=F_ATP_DEFAULT, help="ATP free energy, kJ/mol")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (0 = all cores)")

    p = sub.add_parser("cells", help="list the cell registry")
    p.add_argument("--cell")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cells)

    p = sub.add_parser("simulate", help="integrate one cell and write its trace")
    common(p)
    p.add_argument("--every", type=int, default=1, help="write every n-th sample")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="per-spike energy report")
    common(p)
    p.add_argument("--baseline", action="store_true", help="subtract resting currents from the loads")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sweep", help="temperature x stimulus grid")
    common(p, sweep=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="check against reference values")
    p.add_argument("--quick", action="store_true", help="cells 1, 5 and 9 only")
    p.add_argument("--perturb-gna", type=float, default=1.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    fatp = getattr(args, "fatp", F_ATP_DEFAULT)
    if not F_ATP_RANGE[0] <= fatp <= F_ATP_RANGE[1]:
        print(f"warning: F_ATP = {fatp} kJ/mol outside [{F_ATP_RANGE[0]:g}, {F_ATP_RANGE[1]:g}]",
              file=sys.stderr)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            return args.func(args)
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
