"""Command line front end: ``irs-reconfig <subcommand> [options]``.

Exit codes: 0 success, 1 invalid input, 2 a verify check failed.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from . import io
from .config import ConfigError, ScenarioConfig, documented_defaults
from .overhead import comparison_table
from .protocol import run_protocol, sample_crossing

EXIT_OK, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2


def _parse_set(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _load(args) -> ScenarioConfig:
    overrides = _parse_set(args.set)
    if args.grid_spacing_m is not None:
        overrides["grid.spacing_m"] = repr(args.grid_spacing_m)
    cfg = ScenarioConfig.load(args.config, overrides)
    if cfg.is_large_panel() and not args.enable_28ghz:
        q = cfg.panel().element_count
        raise ConfigError(f"panel has {q} elements; pass --enable-28ghz to run it")
    return cfg


def _finish(args, cfg, name, extra=""):
    io.write_manifest(Path(args.out) / f"{name}.manifest.txt", cfg, args.seed, name, __version__)
    if extra:
        print(extra)


def cmd_snr_sweep(args, cfg):
    axes = ("x", "y", "z") if args.axis == "all" else (args.axis or cfg["sweep.axis"],)
    kind = args.profile or cfg["sweep.profile"]
    delta = cfg["illumination.delta_m"] if args.delta is None else args.delta
    thr = cfg["protocol.gamma_thr_db"]
    out = Path(args.out)
    lines = []
    for axis in axes:
        disp, snr = ex.snr_sweep(cfg, axis, profile_kind=kind, delta_m=delta)
        io.write_csv(out / f"snr_sweep_{axis}.csv", ("displacement_m", "snr_db"), zip(disp, snr))
        if disp.size:
            lines.append(f"{axis}: coverage at {thr} dB = {ex.coverage_width(disp, snr, thr):.3f} m")
    sc = cfg.scenario()
    io.write_profile_csv(out / "profile.csv",
                         ex.design_profile(cfg, kind, 0.0 if kind == "focus" else delta), sc.panel)
    _finish(args, cfg, "snr-sweep", "\n".join(lines))


def cmd_snr_map(args, cfg):
    kind = args.profile or cfg["sweep.profile"]
    grid = ex.snr_map(cfg, kind, args.delta)
    out = Path(args.out)
    io.write_map_csv(out / "snr_map.csv", grid)
    io.write_pgm(out / "snr_map.pgm", grid, cfg["map.db_min"], cfg["map.db_max"])
    _finish(args, cfg, "snr-map", f"map {grid.dims[0]}x{grid.dims[1]}, "
                                  f"peak {float(np.max(grid.snr_db)):.2f} dB")


def cmd_overhead_vs_snr(args, cfg):
    rows = ex.overhead_vs_snr(cfg, n_seeds=args.n_seeds, base_seed=args.seed)
    out = Path(args.out)
    io.write_csv(out / "overhead_vs_snr.csv", ex.OVERHEAD_COLUMNS, rows)
    io.write_csv(out / "overhead_table.csv", ("scheme", "alpha_preclamp", "overhead"),
                 comparison_table(cfg.overhead_params()))
    _finish(args, cfg, "overhead-vs-snr", f"{len(rows)} rows")


def cmd_min_power(args, cfg):
    policies = cfg["experiment.delta_policy"]
    rows = ex.min_power(cfg, policies=policies)
    io.write_csv(Path(args.out) / "min_power.csv", ex.min_power_columns(policies), rows)
    _finish(args, cfg, "min-power", f"{len(rows)} diameters")


def cmd_protocol_sim(args, cfg):
    sc = cfg.scenario()
    blk = cfg.blockage()
    illum = cfg.illumination(args.delta)
    pcfg = cfg.protocol_config(seed=args.seed)
    seg = sample_crossing(blk, cfg["protocol.speed_m_per_s"], args.seed)
    trace = run_protocol(sc, blk, illum, pcfg, seg)
    out = Path(args.out)
    io.write_trace_csv(out / "trace.csv", trace)
    io.write_csv(out / "t_upd.csv", ("index", "t_upd_s"), enumerate(trace.t_upd_samples_s))
    mean = trace.mean_t_upd_s
    _finish(args, cfg, "protocol-sim",
            f"crossing {trace.crossing_time_s:.3f} s, {trace.count('reconfigure')} reconfigurations, "
            f"mean T_upd {'n/a' if math.isnan(mean) else f'{mean:.3f} s'}, "
            f"overhead {trace.overhead_fraction:.6f}")


def cmd_verify(args, cfg):
    checks = ex.verify(cfg, seed=args.seed, phase_offset=args.phase_offset_rad)
    text = "".join(c.line() + "\n" for c in checks)
    failed = [c for c in checks if not c.skipped and not c.passed]
    text += f"{'FAILED' if failed else 'OK'}: {len(failed)} of {len(checks)} checks failed\n"
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify.txt").write_text(text)
    _finish(args, cfg, "verify")
    sys.stdout.write(text)
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_defaults(args, cfg):
    sys.stdout.write(documented_defaults())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value scenario file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=Path("out"))
    common.add_argument("--grid-spacing-m", type=float, help="disc grid spacing override")
    common.add_argument("--enable-28ghz", action="store_true",
                        help="allow panels with more than the default element budget")

    p = argparse.ArgumentParser(prog="irs-reconfig", description="IRS reconfiguration simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.set_defaults(func=fn)
        return s

    s = add("snr-sweep", cmd_snr_sweep, "SNR along a line through the MU")
    s.add_argument("--axis", choices=("x", "y", "z", "all"))
    s.add_argument("--profile", choices=("focus", "wide"))
    s.add_argument("--delta", type=float, help="illumination width in meters")

    s = add("snr-map", cmd_snr_map, "SNR over a plane, CSV and PGM")
    s.add_argument("--profile", choices=("focus", "wide"))
    s.add_argument("--delta", type=float)

    s = add("overhead-vs-snr", cmd_overhead_vs_snr, "Monte Carlo overhead per threshold")
    s.add_argument("--n-seeds", type=int)

    add("min-power", cmd_min_power, "minimum transmit power per blockage diameter")

    s = add("protocol-sim", cmd_protocol_sim, "one blockage crossing, event trace")
    s.add_argument("--delta", type=float)

    s = add("verify", cmd_verify, "model consistency checks")
    s.add_argument("--phase-offset-rad", type=float, default=-math.pi / 2,
                   help="reflection phase offset of the baseband model")

    add("defaults", cmd_defaults, "print the documented default config")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "overhead-vs-snr" and args.n_seeds is not None and args.n_seeds < 1:
            raise ConfigError("--n-seeds must be at least 1")
        cfg = _load(args)
        code = args.func(args, cfg)
    except (ValueError, OSError) as exc:  # ConfigError is a ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
