"""Closed-form single-qubit thermalization.

The populations relax as ``P(t) = (P0 - f) e^{-gamma t} + f`` and the
coherence as ``Q(t) = Q0 e^{-gamma t / 2 + i omega t}``. These expressions are
the propagator for every single-qubit computation in the package; nothing in
the single-cell path is integrated numerically.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .core import BathParams, QubitState
from .errors import NegativeTime, OutOfRange


def _check_time(t: float) -> None:
    if t < 0 or math.isnan(t):
        raise NegativeTime(f"t={t} must be >= 0")


def population_at(P0: float, bath: BathParams, t: float) -> float:
    return (P0 - bath.f) * math.exp(-bath.gamma * t) + bath.f


def coherence_at(Q0: complex, bath: BathParams, t: float) -> complex:
    return Q0 * cmath.exp(complex(-0.5 * bath.gamma * t, bath.omega * t))


def evolve_free(s0: QubitState, bath: BathParams, t: float) -> QubitState:
    _check_time(t)
    if t == 0:
        return s0
    return QubitState(population_at(s0.P, bath, t), coherence_at(s0.Q, bath, t))


@dataclass(frozen=True)
class FreeEvolution:
    """Analytic trajectory of a freely dissipating qubit."""

    initial: QubitState
    bath: BathParams

    def P(self, t: float) -> float:
        return population_at(self.initial.P, self.bath, t)

    def Q(self, t: float) -> complex:
        return coherence_at(self.initial.Q, self.bath, t)

    def state(self, t: float) -> QubitState:
        return evolve_free(self.initial, self.bath, t)


def free_evolution(s0: QubitState, bath: BathParams) -> FreeEvolution:
    return FreeEvolution(s0, bath)


def thermal_state(f: float) -> QubitState:
    if not (0.0 <= f < 0.5):
        raise OutOfRange(f"f={f} outside [0, 1/2)")
    return QubitState(f, 0j)


def tau_half(P_start: float, bath: BathParams) -> float | None:
    """Time after which the diagonal part of the state is passive (``P = 1/2``).

    Returns ``None`` when ``P_start < 1/2``: the diagonal is already passive and
    never becomes active again under thermalization at ``f < 1/2``.
    """
    if P_start < 0.5:
        return None
    if P_start == 0.5:
        return 0.0
    return -math.log((0.5 - bath.f) / (P_start - bath.f)) / bath.gamma


def lindblad_rhs_single(s: QubitState, bath: BathParams) -> tuple[float, complex]:
    """Time derivatives ``(dP/dt, dQ/dt)`` of the single-qubit master equation."""
    dP = bath.gamma * (bath.f - s.P)
    dQ = -0.5 * s.Q * complex(bath.gamma, -2.0 * bath.omega)
    return dP, dQ
