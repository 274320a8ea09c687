"""Command-line front end.

Exit status: 0 success, 1 runtime/range error, 2 usage error.
"""

import argparse
import json
import sys

from . import characterization as ch
from .config import RunConfig, config_to_dict, parse_frequency, resolve_config_path
from .dtdc import MODES, convert
from .errors import InvalidConfig, NonPositiveInterval, TdcError, TimeOverflow
from .fine import RNG_ALGORITHM
from .hdlgen import CodegenRequest, emit, write_files
from .timebase import NS, parse_time


class UsageError(Exception):
    pass


def _time(text):
    try:
        return parse_time(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _freq(text):
    try:
        return parse_frequency(text if any(c.isalpha() for c in text) else float(text))
    except (InvalidConfig, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _config_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("converter configuration (overrides --config)")
    g.add_argument("--config", help="JSON run configuration; falls back to $TDC_FORGE_CONFIG")
    g.add_argument("--f-clk", type=_freq, help="clock frequency, e.g. 800MHz or 8e8")
    g.add_argument("--t-clk", type=_time, help="clock period, e.g. 1.25ns (overrides --f-clk)")
    g.add_argument("--lines", type=int, help="parallel delay lines per fine TDC")
    g.add_argument("--taps", type=int, help="buffers per delay line")
    g.add_argument("--cell-delay", type=_time, help="buffer delay, e.g. 62.5ps")
    g.add_argument("--line-offset", type=_time, help="stagger between delay lines, e.g. 15625fs")
    g.add_argument("--counter-width", type=int)
    g.add_argument("--adder-width", type=int)
    g.add_argument("--coarse-width", type=int)
    g.add_argument("--sigma", type=_time, help="Gaussian tap-delay perturbation sigma, e.g. 2ps")
    g.add_argument("--perturbation-seed", type=int)
    g.add_argument("--mode", choices=MODES, help="conversion model (default behavioral)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _config_parser()
    parser = argparse.ArgumentParser(prog="tdc-forge", description="Multiple-delay-line TDC simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="convert one interval, print JSON")
    s.add_argument("--tin", type=_time, help="input interval, e.g. 100ns")
    s.add_argument("--start", type=_time, help="start time (default 0fs)")
    s.add_argument("--event-log", help="structural mode: write the applied-event log (fs,net,level)")

    s = sub.add_parser("sweep", parents=[common], help="transfer-function sweep to CSV")
    s.add_argument("--tmin", type=_time)
    s.add_argument("--tmax", type=_time)
    s.add_argument("--step", type=_time)
    s.add_argument("--phase", type=_time, help="fixed start phase (default 0fs)")
    s.add_argument("--seed", type=int, help="draw a random phase per point instead")
    s.add_argument("--out", required=True)

    s = sub.add_parser("density", parents=[common], help="code-density DNL/INL test to CSV")
    s.add_argument("--tin", type=_time, help="interval converted at every sample (default 100ns)")
    s.add_argument("--samples", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)

    s = sub.add_parser("sensor", parents=[common], help="resistive sensor sweep to CSV")
    s.add_argument("--alpha", type=float, help="fs per Ohm")
    s.add_argument("--rmin", type=float)
    s.add_argument("--rmax", type=float)
    s.add_argument("--points", type=int)
    s.add_argument("--log", action="store_true", default=None, help="logarithmic resistance spacing")
    s.add_argument("--start", type=_time)
    s.add_argument("--out", required=True)

    s = sub.add_parser("codegen", parents=[common], help="emit structural VHDL and manifest.json")
    s.add_argument("--top-name")
    s.add_argument("--out", required=True, help="output directory")
    return parser


def _run_config(args) -> RunConfig:
    path = resolve_config_path(args.config)
    rc = RunConfig.load(path) if path else RunConfig()
    if args.f_clk is not None:
        rc.f_clk, rc.t_clk = args.f_clk, None
    if args.t_clk is not None:
        rc.t_clk = args.t_clk
    if args.coarse_width is not None:
        rc.coarse_width = args.coarse_width
    for flag, key in (
        ("lines", "n_lines"),
        ("taps", "taps_per_line"),
        ("cell_delay", "cell_delay"),
        ("line_offset", "line_offset"),
        ("counter_width", "counter_width"),
        ("adder_width", "adder_width"),
        ("sigma", "perturbation_sigma"),
        ("perturbation_seed", "perturbation_seed"),
    ):
        v = getattr(args, flag)
        if v is not None:
            rc.fine[key] = v
    if args.mode is not None:
        rc.characterization["mode"] = args.mode
    return rc


def _pick(flag, section: dict, key: str, default=None):
    if flag is not None:
        return flag
    return section.get(key, default)


def _write_meta(out: str, command: str, cfg, params: dict) -> None:
    meta = {"command": command, "config": config_to_dict(cfg), "params": params}
    with open(out + ".meta.json", "w", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_simulate(args, rc, cfg) -> int:
    c = rc.characterization
    tin = _pick(args.tin, c, "tin")
    if tin is None:
        raise UsageError("--tin is required")
    start = _pick(args.start, c, "start", 0)
    mode = c.get("mode", "behavioral")
    if args.event_log and mode != "structural":
        raise UsageError("--event-log needs --mode structural")
    if tin <= 0:
        raise NonPositiveInterval(f"--tin must be > 0, got {tin} fs")
    if args.event_log:
        with open(args.event_log, "w", newline="\n") as fh:
            res = convert(start, start + tin, cfg, mode, log_fh=fh)
    else:
        res = convert(start, start + tin, cfg, mode)
    print(json.dumps(res.to_record()))
    return 1 if res.overflow else 0


def cmd_sweep(args, rc, cfg) -> int:
    c = rc.characterization
    t_min, t_max, step = _pick(args.tmin, c, "t_min"), _pick(args.tmax, c, "t_max"), _pick(args.step, c, "step")
    if None in (t_min, t_max, step):
        raise UsageError("sweep needs --tmin, --tmax and --step")
    if step <= 0 or t_max < t_min or t_min <= 0:
        raise UsageError("sweep needs 0 < tmin <= tmax and step > 0")
    seed = _pick(args.seed, c, "seed")
    phase = _pick(args.phase, c, "phase", 0)
    mode = c.get("mode", "behavioral")
    curve = ch.transfer_sweep(cfg, t_min, t_max, step, phase=phase, seed=seed, mode=mode)
    with open(args.out, "w", newline="") as fh:
        curve.write_csv(fh)
    params = {"t_min_fs": t_min, "t_max_fs": t_max, "step_fs": step, "mode": mode}
    params.update({"seed": seed, "rng": RNG_ALGORITHM} if seed is not None else {"phase_fs": phase})
    _write_meta(args.out, "sweep", cfg, params)
    print(f"sweep: {len(curve.points)} points, {len(curve.transitions())} code transitions -> {args.out}")
    return 0


def cmd_density(args, rc, cfg) -> int:
    c = rc.characterization
    tin = _pick(args.tin, c, "tin", 100 * NS)
    samples = _pick(args.samples, c, "samples", 100_000)
    seed = _pick(args.seed, c, "seed", 0)
    if samples < 1 or tin <= 0:
        raise UsageError("density needs --samples >= 1 and --tin > 0")
    mode = c.get("mode", "behavioral")
    rep = ch.code_density(cfg, tin, samples, seed, mode)
    with open(args.out, "w", newline="") as fh:
        rep.write_csv(fh)
    bound = ch.dnl_bound(samples, rep.n_bins)
    _write_meta(
        args.out,
        "density",
        cfg,
        {"t_fixed_fs": tin, "n_samples": samples, "seed": seed, "rng": RNG_ALGORITHM, "mode": mode, "dnl_3sigma_bound": bound},
    )
    print(f"density: {rep.n_bins} bins, max|DNL| = {rep.max_abs_dnl():.4f} (3-sigma bound {bound:.4f}) -> {args.out}")
    return 0


def cmd_sensor(args, rc, cfg) -> int:
    s = rc.sensor
    alpha = _pick(args.alpha, s, "alpha")
    r_min, r_max = _pick(args.rmin, s, "r_min"), _pick(args.rmax, s, "r_max")
    if None in (alpha, r_min, r_max):
        raise UsageError("sensor needs --alpha, --rmin and --rmax")
    points = _pick(args.points, s, "points", 10)
    spacing = "log" if args.log else s.get("spacing", "linear")
    start = _pick(args.start, s, "start", 0)
    mode = rc.characterization.get("mode", "behavioral")
    model = ch.SensorModel(alpha, r_min, r_max)
    rows = ch.sensor_sweep(model, cfg, points, spacing, t_start=start, flag_errors=True, mode=mode)
    with open(args.out, "w", newline="") as fh:
        ch.write_sensor_csv(rows, fh)
    _write_meta(
        args.out,
        "sensor",
        cfg,
        {"alpha_fs_per_ohm": alpha, "r_min": r_min, "r_max": r_max, "points": points, "spacing": spacing, "start_fs": start, "mode": mode},
    )
    flagged = sum(1 for r in rows if r.status != "ok")
    print(f"sensor: {len(rows)} rows, {flagged} flagged -> {args.out}")
    return 0


def cmd_codegen(args, rc, cfg) -> int:
    name = _pick(args.top_name, rc.characterization, "top_name", "dtdc_top")
    files = emit(CodegenRequest(cfg, name))
    write_files(files, args.out)
    m = json.loads(files["manifest.json"])
    print(f"codegen: {len(files)} files, {m['buffers']} buffers, {m['counters']} counters, {m['adders']} adders -> {args.out}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "density": cmd_density,
    "sensor": cmd_sensor,
    "codegen": cmd_codegen,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = _run_config(args)
        cfg = rc.tdc_config()
        return COMMANDS[args.command](args, rc, cfg)
    except (UsageError, ValueError, TimeOverflow) as exc:
        # InvalidConfig, InvalidIdentifier and NonPositiveInterval are ValueErrors
        print(f"{parser.prog} {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2 if exc.filename == resolve_config_path(args.config) else 1
    except (TdcError, OSError) as exc:
        # RangeExceeded and other runtime failures
        print(f"{parser.prog} {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
