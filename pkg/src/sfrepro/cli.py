"""Command-line entry point: ``sfrepro <subcommand> ...``."""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .field import WaveContext
from .reproduce import region_quadrature, weight_mm, weight_pm

log = logging.getLogger("sfrepro")


def _int_list(text):
    """``"16,36,64"`` or ``"0:30"`` (inclusive range) or ``"0:30:5"``."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",") if p]


def _scenario(args):
    if args.scenario:
        return harness.load_scenario(args.scenario)
    return harness.build_standard_scenario()


def _report(failures, out):
    for fail in failures:
        log.error("failed: %s", " | ".join(map(str, fail)))
    if failures:
        log.error("%d failure(s); see %s", len(failures), out)
    return 1 if failures else 0


def _print_results(run):
    for r in run.results:
        print(f"{r.frequency:8.1f} Hz  {r.method:4s}  {r.sdr_db:8.3f} dB")


def cmd_run(args):
    sc = _scenario(args)
    if args.dump_fields:
        sc.dump_fields = True
    run = harness.run_scenario(sc, args.out)
    _print_results(run)
    return _report(run.failures, args.out)


def cmd_sweep_freq(args):
    sc = _scenario(args)
    freqs = np.arange(args.start, args.stop + args.step / 2, args.step)
    run = harness.sweep_frequencies(sc, freqs, args.out)
    _print_results(run)
    return _report(run.failures, args.out)


def cmd_sweep_points(args):
    sc = _scenario(args)
    rows, failures = harness.sweep_control_points(sc, args.counts, args.frequency)
    out = Path(args.out)
    harness.write_table(rows, out / "sweep_points.csv", ["count", "method", "sdr_db"])
    harness.write_table(failures, out / "failures.csv", ["count", "frequency_hz", "method", "error"])
    for count, method, value in rows:
        print(f"{count:5d}  {method:4s}  {value:8.3f} dB")
    return _report(failures, out)


def cmd_sweep_order(args):
    sc = _scenario(args)
    rows, failures = harness.sweep_order(sc, args.orders, args.frequency)
    out = Path(args.out)
    harness.write_table(rows, out / "sweep_order.csv", ["order", "method", "sdr_db"])
    harness.write_table(failures, out / "failures.csv", ["order", "frequency_hz", "method", "error"])
    for order, method, value in rows:
        print(f"{order:5d}  {method:4s}  {value:8.3f} dB")
    return _report(failures, out)


def cmd_dump_weights(args):
    sc = _scenario(args)
    ctx = WaveContext.from_frequency(args.frequency, sc.sound_speed)
    region = region_quadrature(sc.region, sc.eval_spacing, sc.weight_rule)
    if args.method == "wpm":
        weight = weight_pm(sc.control(), region, ctx, xi_factor=sc.xi_factor)
    else:
        order = sc.wmm_order if args.order is None else args.order
        weight = weight_mm(region, ctx, order, sc.center)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    weight.to_csv(out)
    print(f"wrote {weight.data.shape[0]}x{weight.data.shape[1]} {args.method} weights to {out}")
    return 0


def cmd_init_scenario(args):
    harness.save_scenario(harness.build_standard_scenario(), args.out)
    print(f"wrote standard scenario to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="sfrepro", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help="output directory"):
        p.add_argument("--scenario", help="scenario JSON (default: standard scenario)")
        p.add_argument("--out", required=True, help=out_help)

    p = sub.add_parser("run", help="run every frequency and method of a scenario")
    common(p)
    p.add_argument("--dump-fields", action="store_true", help="write synthesized fields")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-freq", help="SDR against frequency")
    common(p)
    p.add_argument("--start", type=float, default=100.0)
    p.add_argument("--stop", type=float, default=1500.0)
    p.add_argument("--step", type=float, default=50.0)
    p.set_defaults(func=cmd_sweep_freq)

    p = sub.add_parser("sweep-points", help="SDR of PM and WPM against control-point count")
    common(p)
    p.add_argument("--counts", type=_int_list, default=[16, 36, 64, 100, 144, 196])
    p.add_argument("--frequency", type=float, default=1000.0)
    p.set_defaults(func=cmd_sweep_points)

    p = sub.add_parser("sweep-order", help="SDR of MM and WMM against truncation order")
    common(p)
    p.add_argument("--orders", type=_int_list, default=list(range(0, 31)))
    p.add_argument("--frequency", type=float, default=1000.0)
    p.set_defaults(func=cmd_sweep_order)

    p = sub.add_parser("dump-weights", help="export a weighting matrix as CSV")
    common(p, "output CSV file")
    p.add_argument("--method", choices=("wpm", "wmm"), required=True)
    p.add_argument("--frequency", type=float, default=1000.0)
    p.add_argument("--order", type=int, help="truncation order for wmm weights")
    p.set_defaults(func=cmd_dump_weights)

    p = sub.add_parser("init-scenario", help="write the standard scenario as JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_init_scenario)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
