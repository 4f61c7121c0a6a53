"""Grid evaluation and CSV output for the command-line tool.

Rows are computed by module-level functions so that they can be shipped to
worker processes; results are always written in grid order.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .core import BathParams, ProtocolParams, QubitState, TOL
from .errors import NonPositive, ZeroProbability
from .multiqubit import build_model, run_twm_multi, x_state
from .protocol import run_twm_single
from .shifts import eta_curves, null_energy_w_tilde

SWEEP_HEADER = (
    "P0", "Q0sq", "m", "w", "tau", "f", "gamma", "omega",
    "gain_total", "gain_inc", "gain_coh", "probability", "epsilon", "Wshift", "operational",
)
TWO_CELL_HEADER = SWEEP_HEADER + ("q", "m1", "m2", "w1", "w2", "concurrence_final", "concurrence_baseline")

_NAN_RESULT = (math.nan,) * 6 + (0,)


def resolve_single(P0: float, Q0sq, m, w, tau: float, bath: BathParams):
    """Replace symbolic ``Q0sq``, ``m`` and ``w`` values by numbers (``nan`` if undefined)."""
    if Q0sq == "max":
        Q0sq = P0 * (1.0 - P0)
    if m == "eta2":
        m = eta_curves(P0, bath, tau).eta2
        if not 0.0 <= m <= 1.0:
            m = math.nan
    if w == "tilde":
        w = math.nan if math.isnan(m) else null_energy_w_tilde(P0, m, bath, tau)
        w = math.nan if w is None else w
    return float(Q0sq), float(m), float(w)


def single_row(point: dict, tol: float = TOL) -> tuple:
    """One sweep row for a single qubit; undefined runs give ``nan`` results."""
    bath = BathParams(point["gamma"], point["f"], point["omega"])
    P0, tau = float(point["P0"]), float(point["tau"])
    Q0sq, m, w = resolve_single(P0, point["Q0sq"], point["m"], point["w"], tau, bath)
    head = (P0, Q0sq, m, w, tau, bath.f, bath.gamma, bath.omega)
    if math.isnan(m) or math.isnan(w):
        return head + _NAN_RESULT
    try:
        s0 = QubitState.from_coherence(P0, Q0sq)
        out = run_twm_single(s0, bath, ProtocolParams(m, w, tau))
    except (ZeroProbability, NonPositive):
        return head + _NAN_RESULT
    g = out.gains
    operational = int(abs(out.epsilon) < tol and abs(out.W) < tol)
    return head + (g.total, g.incoherent, g.coherent, out.probability, out.epsilon, out.W, operational)


@lru_cache(maxsize=16)
def cached_model(gamma: float, f: float, omega: float, J: float):
    return build_model(2, omega, J, BathParams(gamma, f, omega))


def default_coupling(gamma: float, omega: float) -> float:
    return 2.0 * omega * gamma


def two_cell_row(point: dict, tol: float = TOL) -> tuple:
    """One sweep row for the two-cell X-state battery."""
    gamma, f, omega = float(point["gamma"]), float(point["f"]), float(point["omega"])
    J = default_coupling(gamma, omega) if point["J"] == "default" else float(point["J"])
    q, tau = float(point["q"]), float(point["tau"])
    m = (float(point["m1"]), float(point["m2"]))
    w = (float(point["w1"]), float(point["w2"]))
    head = (math.nan,) * 4 + (tau, f, gamma, omega)
    tail_in = (q, *m, *w)
    try:
        out = run_twm_multi(cached_model(gamma, f, omega, J), x_state(q), m, w, tau)
    except ZeroProbability:
        return head + _NAN_RESULT + tail_in + (math.nan, math.nan)
    g = out.gains
    operational = int(abs(out.epsilon) < tol and abs(out.W) < tol)
    return (head + (g.total, g.incoherent, g.coherent, out.probability, out.epsilon, out.W, operational)
            + tail_in + out.concurrence)


def grid_points(fixed: dict, grids: dict[str, Sequence[float]], order: Sequence[str]) -> list[dict]:
    """Cartesian product in lexicographic order of ``order`` (first key slowest)."""
    keys = [k for k in order if k in grids]
    points = []
    for combo in itertools.product(*(grids[k] for k in keys)):
        p = dict(fixed)
        p.update(zip(keys, combo))
        points.append(p)
    return points


def _call(args):
    fn, point, tol = args
    return fn(point, tol)


def evaluate(fn: Callable, points: list[dict], tol: float = TOL, workers: int = 1) -> list[tuple]:
    tasks = [(fn, p, tol) for p in points]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_call, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [_call(t) for t in tasks]


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the same directory so no partial file survives."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".twm-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
