"""Command line front end: run, fit, sweep and recurrence subcommands."""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from .analysis import (
    NoRecurrenceError,
    auto_fit,
    detect_recurrence,
    extrapolate_rate,
    fit_damping_rate,
)
from .convection import BlowupError
from .simulation import EnergyTrace, SimConfig, config_field_types, run

__all__ = ["cli_main", "load_config", "main"]


def load_config(path) -> SimConfig:
    """Parse a flat ``key = value`` file into a SimConfig.

    Keys are exactly the SimConfig field names.  ``L`` is accepted for
    readability but must agree with 2 pi / k.  Blank lines and ``#``
    comments are ignored; unknown or repeated keys are errors.
    """
    types = config_field_types()
    values: dict[str, object] = {}
    length = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key == "L":
                length = float(val)
                continue
            if key not in types:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            if key in values:
                raise ValueError(f"{path}:{lineno}: repeated config key {key!r}")
            try:
                values[key] = types[key](val)
            except ValueError as err:
                raise ValueError(
                    f"{path}:{lineno}: bad value for {key!r}: {val!r}"
                ) from err
    missing = [k for k in ("M", "N", "k", "t_end") if k not in values]
    if missing:
        raise ValueError(f"{path}: missing required keys: {', '.join(missing)}")
    cfg = SimConfig(**values)
    if length is not None and abs(length - cfg.L) > 1e-12 * cfg.L:
        raise ValueError(f"{path}: L = {length!r} conflicts with 2 pi / k = {cfg.L!r}")
    return cfg


def _parse_window(text: str) -> tuple[float, float]:
    a, sep, b = text.partition(":")
    if not sep:
        raise ValueError(f"window must look like 'a:b', got {text!r}")
    return float(a), float(b)


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    trace = run(cfg)
    trace.to_csv(args.out, every=args.every)
    print(f"wrote {args.out} ({len(trace)} rows, final t = {trace.t[-1]:.6g})")
    return 0


def _fit_for(args, trace):
    if args.window:
        return fit_damping_rate(trace, _parse_window(args.window))
    return auto_fit(trace, threshold_factor=args.threshold)


def _cmd_fit(args) -> int:
    trace = EnergyTrace.from_csv(args.trace)
    fit = _fit_for(args, trace)
    print(f"gamma={fit.gamma:.17g} peaks={fit.peaks.shape[0]} "
          f"residual={fit.residual:.17g}")
    return 0


def _cmd_recurrence(args) -> int:
    trace = EnergyTrace.from_csv(args.trace)
    fit = _fit_for(args, trace)
    t_lo, t_hi = detect_recurrence(trace, fit, args.threshold)
    print(f"t_lo={t_lo:.17g} t_hi={t_hi:.17g}")
    return 0


def _cmd_sweep(args) -> int:
    base = load_config(args.config)
    key, sep, tail = args.vary.partition("=")
    key = key.strip()
    if not sep:
        raise ValueError("--vary must look like key=v1,v2,...")
    types = config_field_types()
    if key not in types:
        raise ValueError(f"unknown sweep key {key!r}")
    values = [types[key](v.strip()) for v in tail.split(",") if v.strip()]
    if not values:
        raise ValueError("--vary lists no values")
    configs = [replace(base, **{key: v}) for v in values]
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            traces = list(pool.map(run, configs))
    else:
        traces = [run(c) for c in configs]
    rows = []
    for v, cfg, trace in zip(values, configs, traces):
        fit = auto_fit(trace, threshold_factor=args.threshold)
        print(f"{key}={v} gamma={fit.gamma:.17g} peaks={fit.peaks.shape[0]} "
              f"residual={fit.residual:.17g}")
        rows.append((v, cfg.dx, fit.gamma))
    if args.extrapolate:
        if key != "N":
            raise ValueError("--extrapolate requires sweeping N, since the "
                             "extrapolation is linear in the grid spacing")
        fit = extrapolate_rate([(dxv, g) for _, dxv, g in rows])
        print(f"gamma0={fit.gamma0:.17g} gamma1={fit.gamma1:.17g} "
              f"residual={fit.residual:.17g}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([key, "dx", "gamma"])
            for v, dxv, g in rows:
                w.writerow([v, f"{dxv:.17g}", f"{g:.17g}"])
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vlasolve",
        description="Hermite-moment Vlasov-Poisson(-BGK) solver and analysis tools",
    )
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("run", help="run a configuration and write the energy trace")
    q.add_argument("--config", required=True, help="flat key = value config file")
    q.add_argument("--out", default="trace.csv", help="trace CSV path")
    q.add_argument("--every", type=int, default=1,
                   help="write every k-th row (the last row is always kept)")
    q.set_defaults(func=_cmd_run)

    q = sub.add_parser("fit", help="fit the damping rate of a trace")
    q.add_argument("--trace", required=True, help="trace CSV from 'run'")
    q.add_argument("--window", help="fit window 'a:b' in time (default: automatic)")
    q.add_argument("--threshold", type=float, default=10.0,
                   help="recurrence threshold factor for the automatic window")
    q.set_defaults(func=_cmd_fit)

    q = sub.add_parser("sweep", help="run a family of configs varying one key")
    q.add_argument("--config", required=True)
    q.add_argument("--vary", required=True, metavar="key=v1,v2,...",
                   help="config key and comma-separated values")
    q.add_argument("--extrapolate", action="store_true",
                   help="fit gamma(dx) = gamma0 + gamma1 dx (needs key N)")
    q.add_argument("--threshold", type=float, default=10.0)
    q.add_argument("--out", help="optional summary CSV")
    q.add_argument("--jobs", type=int, default=1, help="parallel runs")
    q.set_defaults(func=_cmd_sweep)

    q = sub.add_parser("recurrence", help="bracket the first echo of a trace")
    q.add_argument("--trace", required=True)
    q.add_argument("--threshold", type=float, default=10.0)
    q.add_argument("--window", help="explicit fit window 'a:b' for the envelope")
    q.set_defaults(func=_cmd_recurrence)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BlowupError as err:
        print(f"error: simulation blew up: {err} "
              f"(step={err.step}, t={err.time})", file=sys.stderr)
        return 1
    except NoRecurrenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


cli_main = main


if __name__ == "__main__":
    sys.exit(main())
