"""Command-line driver: ``pqclone {sweep,run,find-layout,compile,calibrate-noise}``."""
from __future__ import annotations

import argparse
import re
import sys
import time
from pathlib import Path

import numpy as np

from .circuit import (DEFAULT_GRID, DEFAULT_TOL, LayoutCacheMissing, LayoutError,
                      circuit_residual, default_layout_path, load_layout, read_layout,
                      search_figure1_layout, verify_layout, write_layout)
from .experiment import SweepConfig, calibrate_noise, run_point, sweep
from .quantum import ray_distance
from .cloning import target_output
from .spin import (SpinSystem, full_experiment_sequence, read_key_values,
                   simulate_sequence, write_sequence)

EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, EXIT_NO_CACHE = 0, 1, 2, 3
HELD_OUT = (np.pi / 6, 0.37)

_PI_FRACTION = re.compile(r"^([+-]?)(\d*\.?\d*)\s*\*?\s*pi(?:\s*/\s*(\d+\.?\d*))?$")


def parse_angle(text: str) -> float:
    """Radians, or a multiple of pi such as ``pi/12``, ``5pi/12``, ``-pi/4``, ``2*pi/3``."""
    t = str(text).strip().lower().replace("π", "pi")
    m = _PI_FRACTION.match(t)
    if m:
        sign, num, den = m.groups()
        value = (float(num) if num else 1.0) * np.pi / (float(den) if den else 1.0)
        return -value if sign == "-" else value
    try:
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}") from None


def _angle_list(text: str) -> tuple[float, ...]:
    return tuple(parse_angle(t) for t in text.split(",") if t.strip())


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key-value file overriding defaults")
    p.add_argument("--theta", type=parse_angle)
    p.add_argument("--theta-start", type=parse_angle)
    p.add_argument("--theta-end", type=parse_angle)
    p.add_argument("--steps", type=int)
    p.add_argument("--sign", choices=["+", "-", "both"])
    p.add_argument("--level", choices=["gate", "pulse", "both"])
    p.add_argument("--delta", type=float, help="rf amplitude error")
    p.add_argument("--epsilon", type=float, help="pseudo-pure polarization")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path")
    p.add_argument("--layout", help="layout cache file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pqclone", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("sweep", help="theta sweep; CSV of efficiencies and fidelities")
    _add_common(p)
    p.add_argument("--report", help="also write the full records as JSON")
    p.add_argument("--workers", type=int, default=1)
    p = sub.add_parser("run", help="detailed report at a single theta")
    _add_common(p)
    p = sub.add_parser("find-layout", help="search for the five-gate circuit layout")
    _add_common(p)
    p.add_argument("--grid", type=_angle_list, default=DEFAULT_GRID)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--force", action="store_true", help="search even if the cache exists")
    p.add_argument("--workers", type=int, default=1)
    p = sub.add_parser("compile", help="write the pulse sequence for one theta")
    _add_common(p)
    p = sub.add_parser("calibrate-noise", help="find the rf error giving ~2%% infidelity")
    _add_common(p)
    p.add_argument("--delta-max", type=float, default=0.1)
    p.add_argument("--step", type=float, default=0.005)
    return parser


_CONFIG_KEYS = {
    "theta_start": parse_angle, "theta_end": parse_angle, "steps": int, "signs": str,
    "level": str, "delta": float, "epsilon": float, "seed": int, "shots": int,
}


def make_config(args) -> SweepConfig:
    values = read_key_values(args.config) if args.config else {}
    spin_keys = {"J_ab", "J_bc", "J_ac", "w_a", "w_b", "w_c"}
    unknown = set(values) - set(_CONFIG_KEYS) - spin_keys - {"theta", "sign"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cfg = SweepConfig(system=SpinSystem.from_mapping(
        {k: v for k, v in values.items() if k in spin_keys}))
    for key, conv in _CONFIG_KEYS.items():
        if key in values:
            setattr(cfg, key, conv(values[key]))
    if "sign" in values:
        cfg.signs = values["sign"]
    flags = {"theta_start": args.theta_start, "theta_end": args.theta_end,
             "steps": args.steps, "signs": args.sign, "level": args.level,
             "delta": args.delta, "epsilon": args.epsilon, "seed": args.seed,
             "shots": args.shots}
    for key, val in flags.items():
        if val is not None:
            setattr(cfg, key, val)
    theta = args.theta if args.theta is not None else (
        parse_angle(values["theta"]) if "theta" in values else None)
    if theta is not None:
        cfg.theta_start = cfg.theta_end = theta
        cfg.steps = 1
    cfg.layout_path = args.layout
    if cfg.signs not in ("+", "-", "both") or cfg.level not in ("gate", "pulse", "both"):
        raise ValueError("invalid sign or level")
    if cfg.steps < 1:
        raise ValueError("steps must be at least 1")
    return cfg


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt_matrix(m) -> str:
    rows = []
    for part, name in ((np.real(m), "re"), (np.imag(m), "im")):
        for k, row in enumerate(part):
            label = name if k == 0 else "  "
            rows.append(f"    {label} [" + " ".join(f"{v:+.6f}" for v in row) + "]")
    return "\n".join(rows)


def cmd_sweep(args) -> int:
    cfg = make_config(args)
    report, problems = sweep(cfg, workers=args.workers)
    _emit(report.to_csv(), args.out)
    if args.report:
        Path(args.report).write_text(report.to_json())
    for p in problems:
        print(f"tolerance violation: {p}", file=sys.stderr)
    return EXIT_TOLERANCE if problems else EXIT_OK


def cmd_run(args) -> int:
    cfg = make_config(args)
    theta = cfg.theta_start
    layout = load_layout(cfg.layout_path) if "pulse" in cfg.levels() else None
    lines, bad = [], False
    for level in cfg.levels():
        for s in cfg.sign_list():
            r = run_point(theta, s, level, cfg.delta if level == "pulse" else 0.0,
                          cfg.epsilon, cfg.system, layout)
            lines.append(f"theta={theta:.10g} sign={s:+d} level={level} delta={r.delta:g}")
            lines.append(f"  gamma_theory={r.gamma_theory:.10f} gamma_est={r.gamma_est:.10f}")
            lines.append(f"  F_b={r.F_b:.10f} F_c={r.F_c:.10f}")
            rec = r.as_dict()
            for key in ("rho_0", "rho_b", "rho_c"):
                m = np.array(rec[key]["re"]) + 1j * np.array(rec[key]["im"])
                lines.append(f"  {key}:")
                lines.append(_fmt_matrix(m))
            if r.failure_state is None:
                lines.append("  failure branch: empty branch")
            else:
                amps = " ".join(f"{v.real:+.6f}{v.imag:+.6f}j" for v in r.failure_state)
                lines.append(f"  failure branch (|00>,|01>,|10>,|11>): {amps}")
            lines.append("  peaks (h f): x y z")
            for obs in ("b", "c"):
                xy, z = r.peaks[(obs, "xy")], r.peaks[(obs, "z")]
                for k, hf in enumerate(((1, 0), (0, 0), (1, 1), (0, 1)), 1):
                    v, w = xy.integrals[hf], z.integrals[hf]
                    lines.append(f"    {obs} peak {k} |{hf[0]}{hf[1]}> "
                                 f"({xy.offsets[hf]:+.2f} Hz): "
                                 f"{v.real:+.6f} {v.imag:+.6f} {w.real:+.6f}")
            if cfg.noise_free and not r.closes():
                bad = True
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_TOLERANCE if bad else EXIT_OK


def cmd_find_layout(args) -> int:
    out = Path(args.out) if args.out else default_layout_path()
    if out.exists() and not args.force:
        circuit, grid, tol = read_layout(out)
        try:
            worst = verify_layout(circuit, tuple(grid or args.grid) + HELD_OUT, args.tol)
        except LayoutError as exc:
            print(f"cache check failed: {exc}", file=sys.stderr)
            return EXIT_TOLERANCE
        print(f"cache verified: {out} (worst residual {worst:.3e})")
        return EXIT_OK
    start = time.perf_counter()
    result = search_figure1_layout(args.grid, args.tol, workers=args.workers)
    wall = time.perf_counter() - start
    print(result.summary())
    print(f"examined {result.examined} candidates in {wall:.1f} s")
    if not result.found:
        return EXIT_TOLERANCE
    for th in HELD_OUT:
        r = circuit_residual(result.circuit, th)
        print(f"held-out theta={th:.6g}: residual {r:.3e} "
              f"{'pass' if r < args.tol else 'FAIL'}")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_layout(out, result.circuit, result.grid, args.tol)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_compile(args) -> int:
    cfg = make_config(args)
    theta = cfg.theta_start
    layout = load_layout(cfg.layout_path)
    bad = False
    for s in cfg.sign_list():
        seq = full_experiment_sequence(theta, s, cfg.system, layout)
        _, u = simulate_sequence(seq, cfg.system)
        dist = ray_distance(u[:, 0], target_output(theta, s))
        ok = dist < 1e-6
        bad |= not ok
        header = (f"theta={theta!r} sign={s:+d} events={len(seq)} "
                  f"duration={seq.total_duration!r} s")
        if args.out:
            path = Path(args.out)
            if len(cfg.sign_list()) > 1:
                path = path.with_name(f"{path.stem}{'+' if s > 0 else '-'}{path.suffix}")
            write_sequence(path, seq, header)
            print(f"wrote {path}")
        else:
            sys.stdout.write(f"# {header}\n")
            from .spin import format_sequence
            sys.stdout.write(format_sequence(seq))
        print(f"sign {s:+d}: total duration {seq.total_duration * 1e3:.4f} ms, "
              f"propagator check {'pass' if ok else 'FAIL'} (ray distance {dist:.2e})",
              file=sys.stderr if not args.out else sys.stdout)
    return EXIT_TOLERANCE if bad else EXIT_OK


def cmd_calibrate_noise(args) -> int:
    cfg = make_config(args)
    layout = load_layout(cfg.layout_path)
    cal = calibrate_noise(delta_max=args.delta_max, step=args.step, grid=cfg.grid(),
                          system=cfg.system, layout=layout, epsilon=cfg.epsilon)
    lines = ["delta,mean_infidelity"] + [f"{d:.4f},{m:.6f}" for d, m in cal.scan]
    _emit("\n".join(lines) + "\n", args.out)
    if not cal.found:
        print(f"no delta <= {args.delta_max} gives mean infidelity in {cal.band}",
              file=sys.stderr)
        return EXIT_TOLERANCE
    print(f"calibrated delta={cal.delta:.6f} mean infidelity={cal.mean_infidelity:.6f}",
          file=sys.stderr)
    for s, (fb, fc) in cal.fidelities_pi4.items():
        print(f"theta=pi/4 sign={s}: F_b={fb:.4f} F_c={fc:.4f}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "sweep": cmd_sweep, "run": cmd_run, "find-layout": cmd_find_layout,
    "compile": cmd_compile, "calibrate-noise": cmd_calibrate_noise,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except LayoutCacheMissing as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CACHE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
