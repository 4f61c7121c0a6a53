"""Energy and ergotropy shifts of the measurement pair, and operational points.

The energy shift ``epsilon`` sums the energy changes of the weak and the
reversal measurement; the ergotropy shift ``W`` sums the matching ergotropy
changes. A parameter set is operational when both vanish, i.e. the
measurements neither inject nor remove net charge.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np
from scipy.optimize import brentq

from .core import TOL, BathParams, QubitState
from .ergotropy import energy, ergotropy, passive_energy, qubit_coherent_ergotropy, qubit_incoherent_ergotropy
from .errors import OutOfRange, ZeroProbability, ZeroTemperature
from .measurement import MIN_PROBABILITY

# w-tilde values this close outside [0, 1] are rounding noise and get clipped
_STRENGTH_SLACK = 1e-12


@dataclass(frozen=True)
class ShiftReport:
    delta_E_m: float
    delta_E_mw: float
    delta_R_m: float
    delta_R_mw: float
    epsilon_passive: float

    @property
    def epsilon(self) -> float:
        return self.delta_E_m + self.delta_E_mw

    @property
    def W(self) -> float:
        return self.delta_R_m + self.delta_R_mw

    def is_operational(self, tol: float = TOL) -> bool:
        return abs(self.epsilon) < tol and abs(self.W) < tol


def _as_matrix(state):
    return state.matrix() if isinstance(state, QubitState) else np.asarray(state, dtype=complex)


def shift_report(rho0, rho_m0, rho_mtau, rho_mw, H) -> ShiftReport:
    """Shifts from the four recorded protocol states.

    ``rho_m0`` is the state right after the weak measurement, ``rho_mtau`` the
    same state after dissipation and ``rho_mw`` the state after the reversal.
    """
    r0, rm0, rmt, rmw = (_as_matrix(s) for s in (rho0, rho_m0, rho_mtau, rho_mw))
    return ShiftReport(
        delta_E_m=energy(rm0, H) - energy(r0, H),
        delta_E_mw=energy(rmw, H) - energy(rmt, H),
        delta_R_m=ergotropy(rm0, H) - ergotropy(r0, H),
        delta_R_mw=ergotropy(rmw, H) - ergotropy(rmt, H),
        epsilon_passive=passive_energy(rm0, H) - passive_energy(r0, H)
        + passive_energy(rmw, H) - passive_energy(rmt, H),
    )


def energy_shift(outcome, H=None) -> float:
    """Net energy shift of a protocol outcome (uses the outcome's own H by default)."""
    return shift_report(*outcome.states, outcome.H if H is None else H).epsilon


def ergotropy_shift(outcome, H=None) -> float:
    return shift_report(*outcome.states, outcome.H if H is None else H).W


# -- single-qubit closed forms -----------------------------------------------


def _decay(bath: BathParams, tau: float) -> float:
    return math.exp(-bath.gamma * tau)


def _populations(P0: float, m: float, w: float, bath: BathParams, tau: float):
    """Excited populations along the protocol and both selection probabilities."""
    f, x = bath.f, _decay(bath, tau)
    Nm = 1.0 - m * P0
    if Nm < MIN_PROBABILITY:
        raise ZeroProbability(f"weak outcome impossible: N_m={Nm:.3g}")
    Pm0 = P0 * (1.0 - m) / Nm
    Pmt = (Pm0 - f) * x + f
    Nmw = 1.0 - w * (1.0 - Pmt)
    if Nmw < MIN_PROBABILITY:
        raise ZeroProbability(f"reversal outcome impossible: N_mw={Nmw:.3g}")
    return Pm0, Pmt, Pmt / Nmw, Nm, Nmw


def energy_shift_closed_form(P0: float, m: float, w: float, bath: BathParams, tau: float) -> float:
    Pm0, Pmt, Pmw, _, _ = _populations(P0, m, w, bath, tau)
    return bath.omega * (Pm0 - P0 + Pmw - Pmt)


def w_tilde_raw(P0: float, m: float, bath: BathParams, tau: float) -> float:
    """Reversal strength cancelling the energy shift, without physicality checks.

    Written in terms of ``x = exp(-gamma tau)`` so that long times do not
    overflow. Returns ``nan`` when the denominator vanishes.
    """
    f, x = bath.f, _decay(bath, tau)
    Nm = 1.0 - m * P0
    Pmt = (P0 * (1.0 - m) / Nm - f) * x + f
    num = Nm * (x * (1.0 - P0 - Nm * (1.0 - f)) + Nm * (Pmt + P0 - 1.0 - f) + 1.0 - P0)
    den = (Nm * (Pmt + P0 - 1.0) + 1.0 - P0) * (Nm * (1.0 - f) * (1.0 - x) + x * (1.0 - P0))
    if abs(den) < 1e-300 or not math.isfinite(den):
        return math.nan
    return num / den


def null_energy_w_tilde(P0: float, m: float, bath: BathParams, tau: float) -> float | None:
    """Reversal strength giving zero net energy shift, or ``None`` if unphysical."""
    if not (0.0 <= m <= 1.0 and 0.0 <= P0 <= 1.0):
        raise OutOfRange(f"P0={P0}, m={m} must lie in [0, 1]")
    if 1.0 - m * P0 < MIN_PROBABILITY:
        return None
    w = w_tilde_raw(P0, m, bath, tau)
    if not math.isfinite(w) or not (-_STRENGTH_SLACK <= w <= 1.0 + _STRENGTH_SLACK):
        return None
    return min(max(w, 0.0), 1.0)


class EtaCurves(NamedTuple):
    eta1: float
    eta2: float
    eta3: float


def eta_curves(P0: float, bath: BathParams, tau: float) -> EtaCurves:
    """Equal strengths ``m = w = eta`` with zero energy shift.

    Values are returned as computed; callers decide whether they lie in [0, 1].
    """
    f, x = bath.f, _decay(bath, tau)
    if P0 == 0:
        return EtaCurves(0.0, math.nan, math.nan)
    eta2 = (f - P0) / ((f - 1.0) * P0)
    den = P0 * ((f + P0 - 1.0) + x * (1.0 - f))
    eta3 = ((f + P0 - 1.0) + x * (P0 - f)) / den if den != 0 else math.nan
    return EtaCurves(0.0, eta2, eta3)


def w_tilde_long_time(P0: float, m: float, f: float) -> float:
    """Limit of the null-shift reversal strength as the dissipation time grows."""
    if f == 0:
        raise ZeroTemperature("long-time limit is degenerate at f = 0")
    Nm = 1.0 - m * P0
    a = (1.0 - P0) * (1.0 - Nm)
    if a == 0:
        return 0.0
    return a / ((1.0 - f) * (a + f * Nm))


class QubitResiduals(NamedTuple):
    epsilon: float
    W: float
    gain_total: float
    gain_inc: float
    gain_coh: float
    probability: float


def _parts(P: float, Q2: float, omega: float) -> tuple[float, float]:
    return qubit_incoherent_ergotropy(P, omega), qubit_coherent_ergotropy(P, Q2, omega)


def qubit_residuals(P0: float, Q0sq: float, m: float, w: float, bath: BathParams, tau: float) -> QubitResiduals:
    """Shifts, gains and success probability of one single-qubit run, in closed form."""
    om, x = bath.omega, _decay(bath, tau)
    Pm0, Pmt, Pmw, Nm, Nmw = _populations(P0, m, w, bath, tau)
    Qm0 = (1.0 - m) * Q0sq / Nm ** 2
    Qmt = Qm0 * x
    Qmw = (1.0 - w) * Qmt / Nmw ** 2
    R = [sum(_parts(P, Q2, om)) for P, Q2 in ((P0, Q0sq), (Pm0, Qm0), (Pmt, Qmt))]
    inc_f, coh_f = _parts(Pmw, Qmw, om)
    inc_b, coh_b = _parts((P0 - bath.f) * x + bath.f, Q0sq * x, om)
    return QubitResiduals(
        epsilon=om * (Pm0 - P0 + Pmw - Pmt),
        W=R[1] - R[0] + inc_f + coh_f - R[2],
        gain_total=inc_f + coh_f - inc_b - coh_b,
        gain_inc=inc_f - inc_b,
        gain_coh=coh_f - coh_b,
        probability=Nm * Nmw,
    )


# -- operational-point search ------------------------------------------------


@dataclass(frozen=True)
class OperationalPoint:
    P0: float
    Q0sq: float
    m: float | tuple[float, ...]
    w: float | tuple[float, ...]
    tau: float
    gain: float
    gain_inc: float
    gain_coh: float
    probability: float
    epsilon: float
    W: float

    @property
    def residuals(self) -> tuple[float, float]:
        return abs(self.epsilon), abs(self.W)


GRID_AXES = ("P0", "Q0sq", "m", "tau")


def _resolve(P0, Q0sq, m, bath, tau):
    """Turn the symbolic grid values ``Q0sq='max'`` and ``m='eta2'`` into numbers."""
    if Q0sq == "max":
        Q0sq = P0 * (1.0 - P0)
    if m == "eta2":
        m = eta_curves(P0, bath, tau).eta2
    return P0, float(Q0sq), float(m), tau


def _evaluate(point, bath):
    """Residuals at ``point`` with ``w = w_tilde``; ``None`` when no physical run exists."""
    P0, Q0sq, m, tau = _resolve(point[0], point[1], point[2], bath, point[3])
    if not (0.0 <= m <= 1.0) or Q0sq > P0 * (1.0 - P0) + TOL:
        return None
    w = null_energy_w_tilde(P0, m, bath, tau)
    if w is None:
        return None
    try:
        res = qubit_residuals(P0, Q0sq, m, w, bath, tau)
    except ZeroProbability:
        return None
    return (P0, Q0sq, m, tau), w, res


def _to_point(resolved, w, res) -> OperationalPoint:
    P0, Q0sq, m, tau = resolved
    return OperationalPoint(P0, Q0sq, m, w, tau, res.gain_total, res.gain_inc, res.gain_coh,
                            res.probability, res.epsilon, res.W)


class _Unbracketed(Exception):
    pass


def _scan_row(args) -> list[OperationalPoint]:
    fixed, scan, values, bath, tol, w_bound = args
    accept = tol if w_bound is None else max(tol, w_bound)

    def point_at(v):
        p = dict(fixed)
        p[scan] = v
        return tuple(p[k] for k in GRID_AXES)

    evals = [_evaluate(point_at(v), bath) for v in values]
    found = []
    for v, ev in zip(values, evals):
        # m = 0 is the trivial no-measurement point, not an operating regime
        if ev is None or (scan == "m" and v == 0):
            continue
        resolved, w, res = ev
        if abs(res.epsilon) < tol and abs(res.W) < accept:
            found.append((v, _to_point(resolved, w, res)))

    for k in range(len(values) - 1):
        a, b = evals[k], evals[k + 1]
        if a is None or b is None or (scan == "m" and (values[k] == 0 or values[k + 1] == 0)):
            continue
        Wa, Wb = a[2].W, b[2].W
        if abs(Wa) < accept or abs(Wb) < accept or Wa * Wb > 0:
            continue

        def W_of(v):
            ev = _evaluate(point_at(v), bath)
            if ev is None:
                raise _Unbracketed
            return ev[2].W

        try:
            v = brentq(W_of, values[k], values[k + 1], xtol=1e-12, rtol=4 * np.finfo(float).eps)
        except (_Unbracketed, ValueError):
            continue
        ev = _evaluate(point_at(v), bath)
        # a sign flip across a Heaviside kink is a jump, not a root
        if ev is not None and abs(ev[2].epsilon) < tol and abs(ev[2].W) < tol:
            found.append((v, _to_point(*ev)))
    found.sort(key=lambda item: item[0])
    return [p for _, p in found]


def _as_list(value):
    if isinstance(value, str) or np.ndim(value) == 0:
        return [value]
    return list(value)


def find_operational_points(
    grid: Mapping[str, object],
    bath: BathParams,
    *,
    scan: str = "m",
    tol: float = TOL,
    w_bound: float | None = None,
    workers: int = 1,
) -> list[OperationalPoint]:
    """Single-qubit parameter sets with zero energy and ergotropy shift.

    Parameters
    ----------
    grid
        Values for ``P0``, ``Q0sq``, ``m`` and ``tau`` (scalars or sequences).
        ``Q0sq='max'`` uses ``P0 (1 - P0)``; ``m='eta2'`` follows the
        equal-strength null-shift curve.
    scan
        Axis along which sign changes of ``W`` are bracketed and refined. The
        remaining axes enumerate independent rows.
    w_bound
        Relaxed mode: accept grid points with ``|W|`` below this bound.

    Returns
    -------
    list of OperationalPoint
        Ordered by row, then by position along the scan axis. Empty when no
        point exists.
    """
    unknown = set(grid) - set(GRID_AXES)
    if unknown:
        raise OutOfRange(f"unknown grid axes {sorted(unknown)}")
    if scan not in GRID_AXES:
        raise OutOfRange(f"scan axis must be one of {GRID_AXES}")
    axes = {"P0": [0.9], "Q0sq": [0.0], "m": [0.4], "tau": [bath.tau_gamma]}
    axes.update({k: _as_list(v) for k, v in grid.items()})
    values = axes[scan]
    if len(values) > 1:
        if any(isinstance(v, str) for v in values):
            raise OutOfRange(f"symbolic values cannot be scanned along {scan!r}")
        values = sorted(float(v) for v in values)
    rows = [dict(zip([k for k in GRID_AXES if k != scan], combo))
            for combo in itertools.product(*(axes[k] for k in GRID_AXES if k != scan))]
    tasks = [(row, scan, values, bath, tol, w_bound) for row in rows]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_scan_row, tasks))
    else:
        chunks = [_scan_row(t) for t in tasks]
    return [p for chunk in chunks for p in chunk]
