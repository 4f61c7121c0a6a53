"""``twm`` command-line tool.

Subcommands: ``run`` (one protocol run), ``sweep`` (grid of runs to CSV),
``opfind`` (operational points to CSV), ``twoqubit`` (two-cell runs and
sweeps) and ``figure`` (CSV data bundles for the figure recipes).

Exit codes: 0 success, 2 impossible post-selection, 3 configuration error,
4 no operational point found.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Sequence

from . import config as cfgmod
from .config import ConfigError, SweepConfig
from .core import BathParams, ProtocolParams, QubitState
from .errors import TWMError, ZeroProbability
from .multiqubit import find_operational_points_2q, run_twm_multi, x_state
from .protocol import TIMESERIES_FIELDS, percent_gains, run_twm_single, timeseries
from .shifts import find_operational_points
from .sweep import (
    SWEEP_HEADER,
    TWO_CELL_HEADER,
    cached_model,
    csv_text,
    default_coupling,
    evaluate,
    fmt,
    grid_points,
    resolve_single,
    single_row,
    two_cell_row,
    write_atomic,
)

EXIT_OK, EXIT_ZERO_PROBABILITY, EXIT_CONFIG, EXIT_NO_POINTS = 0, 2, 3, 4

SINGLE_KEYS = ("P0", "Q0sq", "m", "w", "tau", "f")
TWO_CELL_KEYS = ("q", "m1", "m2", "w1", "w2", "tau", "f")


class NoOperationalPoints(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors, not argparse's default exit 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--out", metavar="PATH", help="output CSV (directory for 'figure')")
    common.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                        help="override one parameter (repeatable)")
    common.add_argument("--grid", dest="grids", action="append", default=[], metavar="KEY=START:STOP:COUNT",
                        help="sweep one parameter (repeatable)")
    common.add_argument("--tol", type=float, help="residual tolerance for |epsilon| and |W|")
    common.add_argument("--workers", type=int, help="worker processes for grid evaluation")
    common.add_argument("--write-config", metavar="PATH", help="write the effective config and continue")

    parser = _Parser(prog="twm", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="mode", required=True)
    sub.add_parser("run", parents=[common], help="single protocol run")
    sub.add_parser("sweep", parents=[common], help="grid of protocol runs")
    sub.add_parser("opfind", parents=[common], help="operational-point search")
    sub.add_parser("twoqubit", parents=[common], help="two-cell X-state runs and sweeps")
    fig = sub.add_parser("figure", parents=[common], help="figure data bundle")
    fig.add_argument("name", help="figure name, e.g. fig3")
    return parser


def resolve_config(args: argparse.Namespace) -> SweepConfig:
    base = SweepConfig(mode=args.mode)
    cfg = cfgmod.load(args.config, base) if args.config else base
    cfg = cfg.with_updates(mode=args.mode)
    cfg = cfgmod.apply_overrides(cfg, args.sets, args.grids)
    if args.out is not None:
        cfg = cfg.with_updates(out=args.out)
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigError("--tol must be > 0")
        cfg = cfg.with_updates(tol=args.tol)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = cfg.with_updates(workers=args.workers)
    if args.mode == "figure":
        cfg = cfg.with_updates(figure=args.name)
    return cfg


def _fixed(cfg: SweepConfig, keys: Sequence[str]) -> dict:
    p = {k: cfg.value(k) for k in keys}
    p["tau"] = cfg.tau()
    p.update(gamma=float(cfg.value("gamma")), omega=float(cfg.value("omega")))
    p["J"] = cfg.value("J")
    return p


def _grids(cfg: SweepConfig, allowed: Sequence[str]) -> dict:
    extra = set(cfg.grids) - set(allowed)
    if extra:
        raise ConfigError(f"parameters {sorted(extra)} cannot be swept in mode {cfg.mode!r}")
    return {k: g.values() for k, g in cfg.grids.items()}


def _emit(cfg: SweepConfig, header, rows) -> None:
    text = csv_text(header, rows)
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)


def _cells(cfg: SweepConfig) -> int:
    return int(cfg.value("cells"))


def _report(lines: list[tuple[str, object]]) -> None:
    width = max(len(k) for k, _ in lines)
    for key, value in lines:
        print(f"{key:<{width}}  {fmt(value) if isinstance(value, float) else value}")


def cmd_run(cfg: SweepConfig) -> int:
    if _cells(cfg) == 2:
        return cmd_twoqubit(cfg)
    if _cells(cfg) != 1:
        raise ConfigError("run supports cells=1 or cells=2")
    if cfg.grids:
        raise ConfigError("run takes no --grid; use sweep")
    gamma, f, omega = cfg.bath_values()
    bath = BathParams(gamma, f, omega)
    tau, P0 = cfg.tau(), float(cfg.value("P0"))
    Q0sq, m, w = resolve_single(P0, cfg.value("Q0sq"), cfg.value("m"), cfg.value("w"), tau, bath)
    if math.isnan(m) or math.isnan(w):
        raise ConfigError("no physical strength for the requested symbolic m or w")
    s0 = QubitState.from_coherence(P0, Q0sq)
    out = run_twm_single(s0, bath, ProtocolParams(m, w, tau))
    g, pct = out.gains, percent_gains(out)
    Nm, Nmw, Pi = out.probabilities
    lines = [("P0", P0), ("Q0sq", Q0sq), ("m", m), ("w", w), ("tau", tau), ("f", f), ("gamma", gamma),
             ("omega", omega)]
    for label, b in zip(("R_i", "R_ii", "R_iii", "R_iv"), out.ergotropies):
        lines += [(f"{label}_total", b.total), (f"{label}_inc", b.incoherent), (f"{label}_coh", b.coherent)]
    lines += [("baseline_total", out.baseline.total), ("gain_total", g.total), ("gain_inc", g.incoherent),
              ("gain_coh", g.coherent), ("gain_total_pct", pct.total), ("gain_inc_pct", pct.incoherent),
              ("gain_coh_pct", pct.coherent), ("N_m", Nm), ("N_mw", Nmw), ("probability", Pi),
              ("epsilon", out.epsilon), ("Wshift", out.W),
              ("operational", int(abs(out.epsilon) < cfg.tol and abs(out.W) < cfg.tol))]
    _report(lines)
    if cfg.out:
        points = int(cfg.value("points"))
        t_grid = [tau * k / (points - 1) for k in range(points)] if points > 1 else [0.0]
        rows = timeseries(s0, bath, ProtocolParams(m, w, tau), t_grid)
        write_atomic(cfg.out, csv_text(TIMESERIES_FIELDS, rows))
    return EXIT_OK


def cmd_sweep(cfg: SweepConfig) -> int:
    cells = _cells(cfg)
    if cells not in (1, 2):
        raise ConfigError("sweep supports cells=1 or cells=2")
    keys = SINGLE_KEYS if cells == 1 else TWO_CELL_KEYS
    grids = _grids(cfg, keys)
    if not grids:
        raise ConfigError("sweep needs at least one --grid")
    points = grid_points(_fixed(cfg, keys), grids, keys)
    fn, header = (single_row, SWEEP_HEADER) if cells == 1 else (two_cell_row, TWO_CELL_HEADER)
    _emit(cfg, header, evaluate(fn, points, cfg.tol, cfg.workers))
    return EXIT_OK


def cmd_twoqubit(cfg: SweepConfig) -> int:
    cfg = cfg.with_updates(params={**cfg.params, "cells": 2.0})
    if cfg.grids:
        return cmd_sweep(cfg)
    p = _fixed(cfg, TWO_CELL_KEYS)
    J = default_coupling(p["gamma"], p["omega"]) if p["J"] == "default" else float(p["J"])
    model = cached_model(p["gamma"], float(p["f"]), p["omega"], J)
    m, w = (float(p["m1"]), float(p["m2"])), (float(p["w1"]), float(p["w2"]))
    out = run_twm_multi(model, x_state(float(p["q"])), m, w, p["tau"])
    g = out.gains
    Nm, Nmw, Pi = out.probabilities
    _report([
        ("q", float(p["q"])), ("m1", m[0]), ("m2", m[1]), ("w1", w[0]), ("w2", w[1]), ("tau", p["tau"]),
        ("f", float(p["f"])), ("J", J), ("R_i", out.ergotropies[0].total), ("R_iv", out.ergotropies[3].total),
        ("R_iv_minus_R_i", out.ergotropies[3].total - out.ergotropies[0].total),
        ("gain_total", g.total), ("gain_inc", g.incoherent), ("gain_coh", g.coherent),
        ("N_m", Nm), ("N_mw", Nmw), ("probability", Pi), ("epsilon", out.epsilon), ("Wshift", out.W),
        ("concurrence_final", out.concurrence[0]), ("concurrence_baseline", out.concurrence[1]),
    ])
    if cfg.out:
        _emit(cfg, TWO_CELL_HEADER, [two_cell_row(p, cfg.tol)])
    return EXIT_OK


def _opfind_single(cfg: SweepConfig) -> list[tuple]:
    grids = _grids(cfg, ("P0", "Q0sq", "m", "tau"))
    gamma, f, omega = cfg.bath_values()
    bath = BathParams(gamma, f, omega)
    grid = {k: cfg.value(k) for k in ("P0", "Q0sq", "m")}
    grid["tau"] = cfg.tau()
    grid.update(grids)
    points = find_operational_points(grid, bath, scan=cfg.scan, tol=cfg.tol, workers=cfg.workers)
    return [(p.P0, p.Q0sq, p.m, p.w, p.tau, f, gamma, omega, p.gain, p.gain_inc, p.gain_coh,
             p.probability, p.epsilon, p.W, 1) for p in points]


def _opfind_two_cell(cfg: SweepConfig) -> list[tuple]:
    grids = _grids(cfg, ("q", "m1", "m2", "tau"))
    fixed = _fixed(cfg, TWO_CELL_KEYS)
    J = default_coupling(fixed["gamma"], fixed["omega"]) if fixed["J"] == "default" else float(fixed["J"])
    model = cached_model(fixed["gamma"], float(fixed["f"]), fixed["omega"], J)
    rows = []
    for p in grid_points(fixed, grids, ("q", "m1", "m2", "tau")):
        m = (float(p["m1"]), float(p["m2"]))
        for pt in find_operational_points_2q(model, x_state(float(p["q"])), m, float(p["tau"]),
                                             cfg.resolution, cfg.tol):
            rows.append((math.nan,) * 4 + (pt.tau, float(p["f"]), p["gamma"], p["omega"], pt.gain, pt.gain_inc,
                                           pt.gain_coh, pt.probability, pt.epsilon, pt.W, 1, float(p["q"]),
                                           *pt.m, *pt.w, pt.concurrence_final, pt.concurrence_baseline))
    return rows


def cmd_opfind(cfg: SweepConfig) -> int:
    cells = _cells(cfg)
    if cells == 1:
        rows, header = _opfind_single(cfg), SWEEP_HEADER
    elif cells == 2:
        rows, header = _opfind_two_cell(cfg), TWO_CELL_HEADER
    else:
        raise ConfigError("opfind supports cells=1 or cells=2")
    if not rows:
        raise NoOperationalPoints()
    _emit(cfg, header, rows)
    return EXIT_OK


def cmd_figure(cfg: SweepConfig) -> int:
    from .figures import FIGURES

    name = cfg.figure
    if name not in FIGURES:
        raise ConfigError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    out_dir = cfg.out or os.path.join("figures", name)
    for filename, (header, rows) in FIGURES[name]().items():
        write_atomic(os.path.join(out_dir, filename), csv_text(header, rows))
    print(out_dir)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "opfind": cmd_opfind, "twoqubit": cmd_twoqubit,
            "figure": cmd_figure}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.write_config:
            write_atomic(args.write_config, cfgmod.dumps(cfg))
        return COMMANDS[cfg.mode](cfg)
    except ZeroProbability as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ZERO_PROBABILITY
    except NoOperationalPoints:
        print("no operational points found", file=sys.stderr)
        return EXIT_NO_POINTS
    except (ConfigError, TWMError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
