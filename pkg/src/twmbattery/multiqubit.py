"""Multi-cell batteries under collective thermal dissipation.

Cells share one reservoir through the collective ladder operators
``S_lower = sum_k |g><e|_k`` and ``S_raise = S_lower^dag``. Unlike the single
qubit, the coupled dynamics has no closed form, so it is integrated with the
adaptive Runge-Kutta kernel in :mod:`twmbattery.integrator`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from . import integrator
from .core import LOWER, TOL, BathParams, HamiltonianSpec, embed
from .ergotropy import ErgotropyBreakdown, breakdown, energy, ergotropy
from .errors import DimensionMismatch, NegativeTime, OutOfRange, TooLarge, ZeroProbability
from .measurement import MeasurementRecord, local_measurement
from .protocol import ProtocolOutcome
from .shifts import shift_report

MAX_CELLS = 6


@dataclass(frozen=True, eq=False)
class CollectiveModel:
    H: HamiltonianSpec
    bath: BathParams
    S_lower: np.ndarray
    S_raise: np.ndarray
    jumps: np.ndarray
    Heff: np.ndarray

    @property
    def n_cells(self) -> int:
        return self.H.n_cells

    @property
    def dim(self) -> int:
        return self.H.dim


def build_model(
    n: int,
    omega: float = 1.0,
    J=None,
    bath: BathParams | None = None,
    max_cells: int = MAX_CELLS,
) -> CollectiveModel:
    """Assemble dense operators for ``n`` cells.

    ``J`` follows :class:`HamiltonianSpec`; ``bath.omega`` is ignored in favour
    of ``omega`` so the gap is set in one place.
    """
    if n > max_cells:
        raise TooLarge(f"n={n} cells exceeds the cap of {max_cells}")
    bath = BathParams() if bath is None else bath
    bath = BathParams(bath.gamma, bath.f, omega)
    H = HamiltonianSpec(n, omega, J)
    S_lower = sum(embed(LOWER, k, n) for k in range(n))
    S_raise = S_lower.conj().T.copy()
    rates = ((bath.gamma * (1.0 - bath.f), S_lower), (bath.gamma * bath.f, S_raise))
    jumps = np.array([math.sqrt(r) * L for r, L in rates if r > 0], dtype=complex)
    Heff = H.matrix - 0.5j * sum(L.conj().T @ L for L in jumps)
    return CollectiveModel(H, bath, S_lower, S_raise, jumps, Heff)


def _check_dim(model: CollectiveModel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (model.dim, model.dim):
        raise DimensionMismatch(f"state {rho.shape} vs model dimension {model.dim}")
    return rho


def lindblad_rhs(model: CollectiveModel, rho) -> np.ndarray:
    """Generator ``-i[H, rho] + D_down[rho] + D_up[rho]`` in commutator form."""
    rho = _check_dim(model, rho)
    H = model.H.matrix
    out = -1j * (H @ rho - rho @ H)
    b = model.bath
    for rate, L in ((b.gamma * (1.0 - b.f), model.S_lower), (b.gamma * b.f, model.S_raise)):
        LdL = L.conj().T @ L
        out += rate * (L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL))
    return out


def integrate(model: CollectiveModel, rho0, t: float, rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """State at time ``t`` from the adaptive Runge-Kutta kernel."""
    if t < 0 or math.isnan(t):
        raise NegativeTime(f"t={t} must be >= 0")
    rho0 = _check_dim(model, rho0)
    rho, _ = integrator.evolve(rho0, model.Heff, model.jumps, float(t), rtol, atol)
    return rho


# -- X-states and entanglement ------------------------------------------------


def _check_q(q: float) -> float:
    if not (0.0 <= q <= 1.0):
        raise OutOfRange(f"q={q} outside [0, 1]")
    return float(q)


def x_state(q: float) -> np.ndarray:
    """Thermally correlated two-cell X-state; ``q`` is the single-cell ground population."""
    q = _check_q(q)
    c = q * q - q / 2
    return np.array(
        [[q / 2, 0, 0, c], [0, q * (1 - q), 0, 0], [0, 0, (1 - q) ** 2, 0], [c, 0, 0, q / 2]],
        dtype=complex,
    )



def x_state_via_unitary(q: float) -> np.ndarray:
    """The same X-state, built by rotating the product of two thermal-like cells."""
    q = _check_q(q)
    gg, ge, eg, ee = np.eye(4, dtype=complex)
    phi_p = (gg + ee) / math.sqrt(2)
    phi_m = (gg - ee) / math.sqrt(2)
    V1 = np.outer(gg, gg) + np.outer(ge, ge) + np.outer(ee, eg) + np.outer(eg, ee)
    V2 = np.outer(phi_p, gg) + np.outer(ge, ge) + np.outer(eg, eg) + np.outer(phi_m, ee)
    U = V2 @ V1
    cell = np.diag([q, 1 - q]).astype(complex)
    return U @ np.kron(cell, cell) @ U.conj().T


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise DimensionMismatch(f"concurrence needs a 4x4 state, got {rho.shape}")
    sy = np.array([[0, -1j], [1j, 0]])
    flip = np.kron(sy, sy)
    rho_tilde = flip @ rho.conj() @ flip
    ev = np.linalg.eigvals(rho @ rho_tilde).real
    lam = np.sort(np.sqrt(np.clip(ev, 0.0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def x_state_concurrence(q: float) -> float:
    """Closed-form concurrence of :func:`x_state`."""
    q = _check_q(q)
    return max(0.0, 2 * q * q - q - 2 * (1 - q) * math.sqrt(q * (1 - q)))


# -- protocol ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PreparedRun:
    """The part of a run that does not depend on the reversal strengths."""

    model: CollectiveModel
    rho0: np.ndarray
    m: tuple[float, ...]
    tau: float
    rho_m0: np.ndarray
    Nm: float
    rho_mtau: np.ndarray
    baseline_state: np.ndarray


def _vector(strengths, n: int, name: str) -> tuple[float, ...]:
    vals = tuple(float(s) for s in np.atleast_1d(strengths))
    if len(vals) != n:
        raise DimensionMismatch(f"{name} has {len(vals)} entries for {n} cells")
    return vals


def prepare(model: CollectiveModel, rho0, m: Sequence[float], tau: float) -> PreparedRun:
    """Weak measurement and dissipation, plus the unmeasured baseline."""
    rho0 = _check_dim(model, rho0)
    m = _vector(m, model.n_cells, "m")
    rho_m0, Nm = local_measurement(rho0, m, "weak")
    return PreparedRun(
        model, rho0, m, float(tau), rho_m0, Nm,
        integrate(model, rho_m0, tau), integrate(model, rho0, tau),
    )


def finish(run: PreparedRun, w: Sequence[float]) -> ProtocolOutcome:
    model = run.model
    w = _vector(w, model.n_cells, "w")
    rho_mw, Nmw = local_measurement(run.rho_mtau, w, "reversal")
    states = (run.rho0, run.rho_m0, run.rho_mtau, rho_mw)
    H = model.H
    conc = None
    if model.n_cells == 2:
        conc = (concurrence(rho_mw), concurrence(run.baseline_state))
    return ProtocolOutcome(
        states=states,
        records=(
            MeasurementRecord("weak", run.m, run.Nm, run.rho0, run.rho_m0),
            MeasurementRecord("reversal", w, Nmw, run.rho_mtau, rho_mw),
        ),
        ergotropies=tuple(breakdown(s, H) for s in states),
        baseline_state=run.baseline_state,
        baseline=breakdown(run.baseline_state, H),
        shifts=shift_report(*states, H),
        H=H,
        concurrence=conc,
    )


def run_twm_multi(model: CollectiveModel, rho0, m: Sequence[float], w: Sequence[float], tau: float) -> ProtocolOutcome:
    """Local weak measurements, collective dissipation, local reversals."""
    return finish(prepare(model, rho0, m, tau), w)


# -- operational points in the (w1, w2) plane -----------------------------------


@dataclass(frozen=True)
class TwoCellPoint:
    m: tuple[float, float]
    w: tuple[float, float]
    tau: float
    gain: float
    gain_inc: float
    gain_coh: float
    probability: float
    epsilon: float
    W: float
    concurrence_final: float
    concurrence_baseline: float

    @property
    def residuals(self) -> tuple[float, float]:
        return abs(self.epsilon), abs(self.W)


class _Shifts(NamedTuple):
    epsilon: float
    W: float


class ShiftEvaluator:
    """Fast energy and ergotropy shifts as functions of ``(w1, w2)``."""

    def __init__(self, run: PreparedRun):
        H = run.model.H
        self.run = run
        self.H = H
        self.base_E = energy(run.rho_m0, H) - energy(run.rho0, H) - energy(run.rho_mtau, H)
        self.base_R = ergotropy(run.rho_m0, H) - ergotropy(run.rho0, H) - ergotropy(run.rho_mtau, H)

    def final(self, w1: float, w2: float) -> np.ndarray | None:
        try:
            rho, _ = local_measurement(self.run.rho_mtau, (w1, w2), "reversal")
        except ZeroProbability:
            return None
        return rho

    def shifts(self, w1: float, w2: float) -> _Shifts:
        rho = self.final(w1, w2)
        if rho is None:
            return _Shifts(math.nan, math.nan)
        return _Shifts(self.base_E + energy(rho, self.H), self.base_R + ergotropy(rho, self.H))

    def eps(self, w1: float, w2: float) -> float:
        return self.shifts(w1, w2).epsilon


def _line_roots(fn, grid: np.ndarray, values: np.ndarray, tol: float) -> list[float]:
    """Zeros of ``fn`` along one grid line, from nodes and sign changes."""
    roots = [float(g) for g, v in zip(grid, values) if abs(v) < tol]
    for k in range(len(grid) - 1):
        a, b = values[k], values[k + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or abs(a) < tol or abs(b) < tol or a * b > 0:
            continue
        roots.append(brentq(fn, grid[k], grid[k + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps))
    return sorted(roots)


class _LostContour(Exception):
    pass


def _contour_w_roots(ev: ShiftEvaluator, grid, E, axis: int, tol: float) -> list[tuple[float, float]]:
    """Walk the energy-null contour along one family of grid lines and bracket W = 0.

    ``axis = 0`` fixes ``w1`` on each line and solves for ``w2``; ``axis = 1``
    swaps the roles.
    """
    h = grid[1] - grid[0]

    def pair(fixed, free):
        return (fixed, free) if axis == 0 else (free, fixed)

    def eps_on_line(fixed):
        return lambda free: ev.eps(*pair(fixed, free))

    lines = []
    for i, fixed in enumerate(grid):
        vals = E[i, :] if axis == 0 else E[:, i]
        lines.append(_line_roots(eps_on_line(fixed), grid, vals, tol))

    def contour_root(fixed, lo, hi):
        fn = eps_on_line(fixed)
        a, b = fn(lo), fn(hi)
        if abs(a) < tol:
            return lo
        if abs(b) < tol:
            return hi
        if not (np.isfinite(a) and np.isfinite(b)) or a * b > 0:
            return None
        return brentq(fn, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)

    found = []
    for i in range(len(grid) - 1):
        for ra in lines[i]:
            Wa = ev.shifts(*pair(grid[i], ra)).W
            if abs(Wa) < tol:
                found.append(pair(grid[i], ra))
            # link to the nearest root on the next line
            if not lines[i + 1]:
                continue
            rb = min(lines[i + 1], key=lambda r: abs(r - ra))
            if abs(rb - ra) > 2 * h:
                continue
            Wb = ev.shifts(*pair(grid[i + 1], rb)).W
            if not (np.isfinite(Wa) and np.isfinite(Wb)) or abs(Wa) < tol or abs(Wb) < tol or Wa * Wb > 0:
                continue
            lo, hi = max(0.0, min(ra, rb) - h), min(1.0, max(ra, rb) + h)

            def W_along(fixed):
                r = contour_root(fixed, lo, hi)
                if r is None:
                    raise _LostContour
                return ev.shifts(*pair(fixed, r)).W

            try:
                fixed = brentq(W_along, grid[i], grid[i + 1], xtol=1e-13, rtol=4 * np.finfo(float).eps)
                r = contour_root(fixed, lo, hi)
            except (_LostContour, ValueError):
                continue
            if r is not None:
                found.append(pair(fixed, r))
    for r in lines[-1]:
        if abs(ev.shifts(*pair(grid[-1], r)).W) < tol:
            found.append(pair(grid[-1], r))
    return found


def find_operational_points_2q(
    model: CollectiveModel,
    rho0,
    m: Sequence[float],
    tau: float,
    resolution: int = 64,
    tol: float = TOL,
) -> list[TwoCellPoint]:
    """Reversal strengths ``(w1, w2)`` with zero energy and ergotropy shift.

    The energy-null contour is located from sign changes on a
    ``resolution x resolution`` grid over ``[0, 1]^2``, scanning both rows and
    columns so that steep branches are not missed. Along each branch the
    ergotropy shift is bracketed and refined by nested root finding.

    Returns
    -------
    list of TwoCellPoint
        Sorted by ``(w1, w2)``; empty when no point exists.
    """
    if model.n_cells != 2:
        raise DimensionMismatch("the (w1, w2) search needs a two-cell model")
    if resolution < 32:
        raise OutOfRange("grid resolution must be at least 32")
    run = prepare(model, rho0, m, tau)
    ev = ShiftEvaluator(run)
    grid = np.linspace(0.0, 1.0, resolution)
    E = np.array([[ev.eps(a, b) for b in grid] for a in grid])
    candidates = _contour_w_roots(ev, grid, E, 0, tol) + _contour_w_roots(ev, grid, E, 1, tol)

    points: list[TwoCellPoint] = []
    for w1, w2 in sorted(candidates):
        if any(abs(w1 - p.w[0]) < 1e-7 and abs(w2 - p.w[1]) < 1e-7 for p in points):
            continue
        out = finish(run, (w1, w2))
        if abs(out.epsilon) >= tol or abs(out.W) >= tol:
            continue
        g = out.gains
        points.append(TwoCellPoint(
            run.m, (float(w1), float(w2)), run.tau, g.total, g.incoherent, g.coherent,
            out.probability, out.epsilon, out.W, *out.concurrence,
        ))
    return points


# -- time series ---------------------------------------------------------------


class MultiSeriesRow(NamedTuple):
    t: float
    series: str
    phase: str
    R: float
    R_inc: float
    R_coh: float
    concurrence: float


MULTI_TIMESERIES_FIELDS = MultiSeriesRow._fields


def _mrow(t, series, phase, rho, model) -> MultiSeriesRow:
    b: ErgotropyBreakdown = breakdown(rho, model.H)
    c = concurrence(rho) if model.n_cells == 2 else math.nan
    return MultiSeriesRow(t, series, phase, b.total, b.incoherent, b.coherent, c)


def _trajectory(model, rho, times, start=0.0):
    """States at the sorted ``times`` (all >= start), integrating piecewise."""
    out, now = [], start
    for t in times:
        rho = integrate(model, rho, t - now)
        now = t
        out.append(rho)
    return out


def multi_timeseries(
    model: CollectiveModel,
    rho0,
    m: Sequence[float] | None,
    w: Sequence[float] | None,
    tau: float,
    t_grid: Iterable[float],
) -> list[MultiSeriesRow]:
    """Baseline and protocol trajectories for a multi-cell battery.

    Jump rows follow the single-qubit convention: two rows at the same time
    tagged ``pre`` and ``post``.
    """
    t = np.asarray(list(t_grid), dtype=float)
    if t.size == 0:
        return []
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise NegativeTime("time grid must be sorted and non-negative")
    rho0 = _check_dim(model, rho0)
    rows = [_mrow(float(ti), "baseline", "free", r, model) for ti, r in zip(t, _trajectory(model, rho0, t))]
    if m is None:
        return rows
    run = prepare(model, rho0, m, tau)
    rho_mw = finish(run, w if w is not None else (0.0,) * model.n_cells).states[3]
    times = sorted(set(t.tolist()) | {x for x in (0.0, tau) if t[0] <= x <= t[-1]})
    before = [x for x in times if 0.0 < x < tau]
    after = [x for x in times if x > tau]
    mid = dict(zip(before, _trajectory(model, run.rho_m0, before)))
    late = dict(zip(after, _trajectory(model, rho_mw, after, start=tau)))
    for ti in times:
        if ti == 0.0:
            rows.append(_mrow(ti, "protocol", "pre", rho0, model))
            rows.append(_mrow(ti, "protocol", "post", run.rho_m0, model))
        if ti == tau:
            rows.append(_mrow(ti, "protocol", "pre", run.rho_mtau, model))
            rows.append(_mrow(ti, "protocol", "post", rho_mw, model))
        elif ti in mid:
            rows.append(_mrow(ti, "protocol", "free", mid[ti], model))
        elif ti in late:
            rows.append(_mrow(ti, "protocol", "free", late[ti], model))
    return rows
