"""Command line front end: synth, stats, distort, attack, detect, evaluate.

Every subcommand parses flags, calls one library operation and writes the
result.  All randomness comes from ``--seed``; each use derives its own seed
by labeled hashing (``key``, ``sk1``..``sk3``, ``attacker``, ``synth``).
Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from pathlib import Path

from . import attacker, detection, distortion, evaluation, traces
from .keystream import derive_seed, generate_keystream, generate_two_layer, to_hex

log = logging.getLogger("microdistort")


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits: {text}")
    return v


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _name_list(choices):
    def parse(text):
        names = [x.strip() for x in text.split(",") if x.strip()]
        bad = [x for x in names if x not in choices]
        if bad:
            raise argparse.ArgumentTypeError(f"invalid choice(s) {bad}; choose from {choices}")
        return names
    return parse


def _clock_span(text):
    try:
        start, end = text.split("-")
        traces.parse_clock(start), traces.parse_clock(end)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HH:MM-HH:MM, got {text!r}") from None
    return start, end


# --- shared flag groups --------------------------------------------------------

def _common(seed_required=False):
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--seed", type=_u64, required=seed_required, help="master seed (u64)")
    return p


def _trace_flags():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--trace", required=True, help="input CSV with a header row")
    p.add_argument("--column", default="value", help="value column name")
    p.add_argument("--time-column", help="optional timestamp column (int seconds or ISO-8601)")
    p.add_argument("--time-format", help="strptime format for the timestamp column")
    p.add_argument("--preset", choices=sorted(traces.PRESETS), help="dataset defaults")
    p.add_argument("--resolution", type=float, help="physical units per tick")
    p.add_argument("--sample-interval", type=float, help="seconds per sample")
    p.add_argument("--unit", help="unit label")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--clock-window", type=_clock_span, help="keep HH:MM-HH:MM of each day")
    return p


def _preset(args):
    return traces.PRESETS[args.preset] if getattr(args, "preset", None) else traces.PRESETS["synthetic"]


def _load(args):
    pre = _preset(args)
    res = args.resolution if args.resolution is not None else pre.resolution
    interval = args.sample_interval if args.sample_interval is not None else pre.sample_interval
    unit = args.unit if args.unit is not None else pre.unit
    tr = traces.load_trace_csv(args.trace, args.column, res, interval, time_column=args.time_column,
                               delimiter=args.delimiter, unit=unit, time_format=args.time_format)
    if args.clock_window:
        tr = traces.window_by_clock(tr, *args.clock_window)
    return tr


def _write(args, data: bytes | str):
    if isinstance(data, str):
        data = data.encode()
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _epsilon(args):
    return args.epsilon if args.epsilon is not None else _preset(args).epsilon


def _single_key(seed, n):
    return generate_keystream(derive_seed(seed, "key"), n)


def _two_layer_key(args, n):
    s2 = args.seed2 if args.seed2 is not None else args.seed
    s3 = args.seed3 if args.seed3 is not None else args.seed
    return generate_two_layer(derive_seed(args.seed, "sk1"), derive_seed(s2, "sk2"),
                              derive_seed(s3, "sk3"), n)


def _dump_keys(path, key):
    if not path:
        return
    streams = [key] if not hasattr(key, "sk1") else [key.sk1, key.sk2, key.sk3]
    Path(path).write_text("\n".join(to_hex(k) for k in streams) + "\n")


# --- subcommands ----------------------------------------------------------------

def cmd_synth(args):
    kind = args.kind
    if kind in ("uniform", "spikes", "diurnal") and args.seed is None:
        raise _Usage(f"synth --kind {kind} needs --seed")
    seed = None if args.seed is None else derive_seed(args.seed, "synth")
    if kind == "uniform":
        tr = traces.synth_uniform(args.low, args.high, args.n, seed, args.resolution)
    elif kind == "constant":
        tr = traces.synth_constant(args.value, args.n, args.resolution)
    elif kind == "ramp":
        tr = traces.synth_ramp(args.start, args.slope, args.n, args.resolution)
    elif kind == "spikes":
        tr = traces.synth_gradual_spikes(args.n, args.epsilon, seed, resolution=args.resolution)
    else:
        tr = traces.synth_diurnal(args.days, seed, resolution=args.resolution)
    buf = io.StringIO()
    traces.write_trace_csv(tr, buf)
    _write(args, buf.getvalue())


def cmd_stats(args):
    st = traces.trace_stats(_load(args))
    if args.format == "json":
        _write(args, json.dumps(st.as_dict(), indent=2) + "\n")
        return
    unit = f" ({st.unit})" if st.unit else ""
    rows = [("", f"Value{unit}", f"Delta{unit}"), ("Maximum", st.max, st.delta_max),
            ("Minimum", st.min, st.delta_min), ("Average", st.mean, st.delta_mean),
            ("Median", st.median, st.delta_median)]
    lines = [f"{a:<8} {b!s:>18} {c!s:>18}" for a, b, c in
             [(r[0], _g(r[1]), _g(r[2])) for r in rows]]
    lines.append(f"samples: {st.count}")
    _write(args, "\n".join(lines) + "\n")


def _g(x):
    return x if isinstance(x, str) else f"{x:.6g}"


def _emit_trace(args, src, tr):
    buf = io.StringIO()
    traces.rewrite_column(src, buf, args.column, tr, args.delimiter)
    _write(args, buf.getvalue())


def cmd_distort(args):
    tr = _load(args)
    n = len(tr)
    if args.scheme == "physical":
        key = _single_key(args.seed, n)
        out = distortion.distort_physical(tr, key, _epsilon(args))
    elif args.scheme == "lsb":
        key = _single_key(args.seed, n)
        out = distortion.distort_digital_lsb(tr, key)
    else:
        key = _two_layer_key(args, n)
        out = distortion.distort_digital_two_layer(tr, key)
    _dump_keys(args.dump_key, key)
    _emit_trace(args, args.trace, out)


def cmd_attack(args):
    tr = _load(args)
    aseed = derive_seed(args.seed, "attacker")
    if args.kind == "eda":
        out = attacker.attack_eda(tr)
    elif args.kind == "rda":
        out = attacker.attack_rda(tr, _epsilon(args), aseed)
    else:
        out = attacker.attack_lsb_guess(tr, aseed)
    _emit_trace(args, args.trace, out)


def _detector_config(args):
    pre = _preset(args)
    band = None
    if args.band_low is not None or args.band_high is not None:
        if args.band_low is None or args.band_high is None:
            raise _Usage("--band-low and --band-high go together")
        band = (args.band_low, args.band_high)
    dth = args.delta_th if args.delta_th is not None else pre.delta_threshold
    return detection.DetectorConfig(epsilon=_epsilon(args), delta_threshold=dth,
                                    min_evidence=args.min_evidence, band=band)


def cmd_detect(args):
    tr = _load(args)
    n = len(tr) if args.window is None else args.window
    if args.detector == "lsb":
        key = _two_layer_key(args, n) if args.scheme == "two-layer" else _single_key(args.seed, n)
        v = detection.detect_lsb(tr, key, args.t if args.t is not None else n)
    else:
        cfg = _detector_config(args)
        if args.window is not None:
            cfg = detection.DetectorConfig(cfg.epsilon, cfg.delta_threshold, cfg.min_evidence,
                                           args.window, cfg.band)
        v = detection.detect(args.detector, tr, _single_key(args.seed, n), cfg)
    _write(args, json.dumps(v.to_dict()) + "\n")


def cmd_evaluate(args):
    jobs = args.jobs if args.jobs is not None else evaluation.default_jobs()
    attacks = tuple(a for a in args.attack if a != "none")
    reports = []
    if "lsb" in args.detector:
        reports += [evaluation.run_lsb_trials(t, args.trials, args.seed, jobs) for t in sorted(args.n)]
    rest = [d for d in args.detector if d != "lsb"]
    if rest:
        tr = _load(args)
        cfg = _detector_config(args)
        for d in rest:
            base = evaluation.TrialConfig(d, min(args.n), args.trials, cfg, attacks, args.seed,
                                          args.sampling, args.noise_std, not args.unpaired, args.max_n)
            reports += evaluation.sweep(tr, base, args.n, jobs)
    _write(args, evaluation.emit_report(reports, args.format))


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="microdistort", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", metavar="{synth,stats,distort,attack,detect,evaluate}")
    sub.required = True

    p = sub.add_parser("synth", parents=[_common()], help="write a synthetic trace CSV")
    p.add_argument("--kind", choices=["uniform", "constant", "ramp", "spikes", "diurnal"], required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--low", type=float, default=0.0)
    p.add_argument("--high", type=float, default=100.0)
    p.add_argument("--value", type=float, default=0.0)
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--slope", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--days", type=int, default=1)
    p.add_argument("--resolution", type=float, default=0.01)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stats", parents=[_common(), _trace_flags()], help="trace and delta statistics")
    p.add_argument("--format", choices=["table", "json"], default="table")
    p.set_defaults(func=cmd_stats)

    for name, helptext in (("distort", "apply keyed micro-distortion"), ("attack", "forge a stream")):
        p = sub.add_parser(name, parents=[_common(seed_required=True), _trace_flags()], help=helptext)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--scheme", choices=["physical", "lsb", "two-layer"], default="physical")
        p.add_argument("--seed2", type=_u64)
        p.add_argument("--seed3", type=_u64)
        p.add_argument("--dump-key", help="write keystream hex (one line per stream) for debugging")
        if name == "attack":
            p.add_argument("--kind", choices=["eda", "rda", "lsb-guess"], required=True)
            p.set_defaults(func=cmd_attack)
        else:
            p.set_defaults(func=cmd_distort)

    p = sub.add_parser("detect", parents=[_common(seed_required=True), _trace_flags()],
                       help="run one detector on a readings CSV, print verdict JSON")
    p.add_argument("--detector", choices=list(detection.DETECTORS), default="filtered")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta-th", type=float)
    p.add_argument("--min-evidence", type=int)
    p.add_argument("--band-low", type=float)
    p.add_argument("--band-high", type=float)
    p.add_argument("--window", type=int)
    p.add_argument("--t", type=int, help="slots checked by the lsb detector")
    p.add_argument("--scheme", choices=["lsb", "two-layer"], default="lsb", help="key layout for --detector lsb")
    p.add_argument("--seed2", type=_u64)
    p.add_argument("--seed3", type=_u64)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", parents=[_common(seed_required=True)], help="Monte-Carlo FP/FN tables")
    p.add_argument("--trace", help="trace CSV (not needed for --detector lsb)")
    for action in _trace_flags()._actions:
        if action.dest not in ("help", "trace"):
            p._add_action(action)
    p.add_argument("--detector", type=_name_list(detection.DETECTORS), default=["filtered"])
    p.add_argument("--n", type=_int_list, required=True, help="window sizes, comma-separated")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta-th", type=float)
    p.add_argument("--min-evidence", type=int)
    p.add_argument("--band-low", type=float)
    p.add_argument("--band-high", type=float)
    p.add_argument("--attack", type=_name_list(("eda", "rda", "none")), default=["eda", "rda"])
    p.add_argument("--sampling", choices=["random", "disjoint"], default="random")
    p.add_argument("--unpaired", action="store_true", help="draw attack trials independently of FP trials")
    p.add_argument("--noise-std", type=float, default=0.0, help="additive Gaussian noise (units)")
    p.add_argument("--max-n", type=int, help="refuse windows longer than this")
    p.add_argument("--jobs", type=int, help="worker threads (default: all cores)")
    p.add_argument("--format", choices=list(evaluation.FORMATS), default="json")
    p.set_defaults(func=cmd_evaluate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "evaluate" and args.trace is None and args.detector != ["lsb"]:
            raise _Usage("evaluate needs --trace unless --detector lsb")
        args.func(args)
    except _Usage as e:
        ap.print_usage(sys.stderr)
        print(json.dumps({"error": "usage", "message": str(e)}), file=sys.stderr)
        return 2
    except (ValueError, OSError, IndexError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
