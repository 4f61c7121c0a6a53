"""End-to-end two-time weak-measurement runs on a single qubit.

A run is: weak measurement at ``t = 0``, free dissipation for ``tau``, then a
reversal measurement. It is always paired with a baseline that only
dissipates, started from the same initial state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple

import numpy as np

from .core import BathParams, HamiltonianSpec, ProtocolParams, QubitState
from .dynamics import evolve_free
from .ergotropy import ErgotropyBreakdown, qubit_breakdown, qubit_coherent_ergotropy
from .errors import NegativeTime, OutOfRange
from .measurement import MeasurementRecord, reversal_measure, success_probability, weak_measure
from .shifts import ShiftReport, shift_report


@dataclass(frozen=True)
class ProtocolOutcome:
    """Everything recorded during one protocol run.

    ``states`` holds the initial state, the state right after the weak
    measurement, the same state after dissipation and the final state after
    the reversal. Single-qubit runs store :class:`QubitState` values,
    multi-cell runs store density matrices.
    """

    states: tuple
    records: tuple[MeasurementRecord, MeasurementRecord]
    ergotropies: tuple[ErgotropyBreakdown, ...]
    baseline_state: object
    baseline: ErgotropyBreakdown
    shifts: ShiftReport
    H: object
    concurrence: tuple[float, float] | None = field(default=None)

    @property
    def probabilities(self) -> tuple[float, float, float]:
        Nm, Nmw = (r.probability for r in self.records)
        return Nm, Nmw, success_probability(self.records)

    @property
    def probability(self) -> float:
        return self.probabilities[2]

    @property
    def gains(self) -> ErgotropyBreakdown:
        return self.ergotropies[3] - self.baseline

    @property
    def epsilon(self) -> float:
        return self.shifts.epsilon

    @property
    def W(self) -> float:
        return self.shifts.W


def _strengths(params: ProtocolParams) -> tuple[float, float]:
    if isinstance(params.m, tuple) or isinstance(params.w, tuple):
        raise OutOfRange("single-qubit runs take scalar strengths")
    return params.m, params.w


def run_twm_single(s0: QubitState, bath: BathParams, params: ProtocolParams) -> ProtocolOutcome:
    """Run the protocol on one qubit using the closed-form propagator."""
    m, w = _strengths(params)
    s_m0, Nm = weak_measure(s0, m)
    s_mt = evolve_free(s_m0, bath, params.tau)
    s_mw, Nmw = reversal_measure(s_mt, w)
    base = evolve_free(s0, bath, params.tau)
    H = HamiltonianSpec.qubit(bath.omega)
    states = (s0, s_m0, s_mt, s_mw)
    return ProtocolOutcome(
        states=states,
        records=(
            MeasurementRecord("weak", m, Nm, s0, s_m0),
            MeasurementRecord("reversal", w, Nmw, s_mt, s_mw),
        ),
        ergotropies=tuple(qubit_breakdown(s, bath.omega) for s in states),
        baseline_state=base,
        baseline=qubit_breakdown(base, bath.omega),
        shifts=shift_report(*states, H),
        H=H,
    )


def percent_gains(outcome: ProtocolOutcome) -> ErgotropyBreakdown:
    """Gains as percentages of the initial charge.

    The total gain is measured against the total initial ergotropy, each
    component against the matching initial component; ``nan`` where that
    initial value is zero.
    """
    R0, g = outcome.ergotropies[0], outcome.gains

    def pct(x, ref):
        return 100.0 * x / ref if ref > 0 else math.nan

    return ErgotropyBreakdown(pct(g.total, R0.total), pct(g.incoherent, R0.incoherent), pct(g.coherent, R0.coherent))


class CoherentSteps(NamedTuple):
    R_i: float
    R_ii: float
    R_iii: Callable[[float], float]
    R_iv: float


def _coh(N: float, a: float, b2: float, omega: float) -> float:
    """``omega/(2N) (-|a| + sqrt(a^2 + 4 b2))`` with ``a`` and ``b2`` already scaled by ``N``."""
    return 0.5 * omega / N * (-abs(a) + math.sqrt(a * a + 4.0 * b2))


def coherent_steps(s0: QubitState, bath: BathParams, params: ProtocolParams) -> CoherentSteps:
    """Coherent ergotropy at the four protocol steps, from the initial data only."""
    m, w = _strengths(params)
    om, f, g, tau = bath.omega, bath.f, bath.gamma, params.tau
    P0, Q2 = s0.P, s0.Q2
    Nm = 1.0 - m * P0
    R_i = qubit_coherent_ergotropy(P0, Q2, om)
    R_ii = _coh(Nm, Nm - 2.0 * P0 * (1.0 - m), (1.0 - m) * Q2, om)
    Pm0 = P0 * (1.0 - m) / Nm
    Qm0 = (1.0 - m) * Q2 / Nm ** 2

    def R_iii(t: float) -> float:
        x = math.exp(-g * t)
        return qubit_coherent_ergotropy((Pm0 - f) * x + f, Qm0 * x, om)

    x = math.exp(-g * tau)
    Pmt = (Pm0 - f) * x + f
    Nmw = 1.0 - w * (1.0 - Pmt)
    R_iv = _coh(Nmw, Nmw - 2.0 * Pmt, (1.0 - w) * Qm0 * x, om)
    return CoherentSteps(R_i, R_ii, R_iii, R_iv)


class SeriesRow(NamedTuple):
    t: float
    series: str
    phase: str
    P: float
    Q2: float
    R: float
    R_inc: float
    R_coh: float


TIMESERIES_FIELDS = SeriesRow._fields


def _row(t, series, phase, s: QubitState, omega) -> SeriesRow:
    b = qubit_breakdown(s, omega)
    return SeriesRow(t, series, phase, s.P, s.Q2, b.total, b.incoherent, b.coherent)


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(list(t_grid), dtype=float)
    if t.size and (np.any(t < 0) or np.any(np.diff(t) < 0)):
        raise NegativeTime("time grid must be sorted and non-negative")
    return t


def timeseries(
    s0: QubitState, bath: BathParams, params: ProtocolParams | None, t_grid: Iterable[float]
) -> list[SeriesRow]:
    """Baseline and (optionally) protocol trajectories on ``t_grid``.

    Measurements appear as two rows at the same time, tagged ``pre`` and
    ``post``; both jump times are inserted when they fall inside the grid
    range. After ``tau`` the protocol state keeps dissipating freely.
    """
    t = _check_grid(t_grid)
    if t.size == 0:
        return []
    om = bath.omega
    rows = [_row(float(ti), "baseline", "free", evolve_free(s0, bath, ti), om) for ti in t]
    if params is None:
        return rows
    m, w = _strengths(params)
    tau = params.tau
    s_m0, _ = weak_measure(s0, m)
    s_mt = evolve_free(s_m0, bath, tau)
    s_mw, _ = reversal_measure(s_mt, w)
    times = sorted(set(t.tolist()) | {x for x in (0.0, tau) if t[0] <= x <= t[-1]})
    for ti in times:
        if ti == 0.0:
            rows.append(_row(ti, "protocol", "pre", s0, om))
            rows.append(_row(ti, "protocol", "post", s_m0, om))
            if tau == 0.0:
                rows.append(_row(ti, "protocol", "post", s_mw, om))
        elif ti < tau:
            rows.append(_row(ti, "protocol", "free", evolve_free(s_m0, bath, ti), om))
        elif ti == tau:
            rows.append(_row(ti, "protocol", "pre", s_mt, om))
            rows.append(_row(ti, "protocol", "post", s_mw, om))
        else:
            rows.append(_row(ti, "protocol", "free", evolve_free(s_mw, bath, ti - tau), om))
    return rows
