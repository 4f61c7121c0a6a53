"""Ergotropy and its incoherent / coherent split.

General states go through an eigendecomposition: the passive state pairs the
state's eigenvalues (descending) with the Hamiltonian's levels (ascending).
Bare qubits additionally have closed forms, used by the single-cell protocol
and cross-checked against the general path in the tests.

Threshold gates follow ``Theta(x) = 1 for x >= 0``, so a state sitting exactly
on an activity threshold carries zero incoherent ergotropy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .core import BathParams, QubitState, dephase, hamiltonian_eigh, hamiltonian_matrix, purity
from .errors import DimensionMismatch
from .measurement import n_mw_closed_form


def heaviside(x: float) -> float:
    return 1.0 if x >= 0 else 0.0


@dataclass(frozen=True)
class ErgotropyBreakdown:
    total: float
    incoherent: float
    coherent: float

    def __sub__(self, other: "ErgotropyBreakdown") -> "ErgotropyBreakdown":
        return ErgotropyBreakdown(
            self.total - other.total,
            self.incoherent - other.incoherent,
            self.coherent - other.coherent,
        )


def _spectra(rho, H):
    rho = np.asarray(rho, dtype=complex)
    E, _ = hamiltonian_eigh(H)
    if rho.shape != (len(E), len(E)):
        raise DimensionMismatch(f"state {rho.shape} vs Hamiltonian dimension {len(E)}")
    p = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[::-1]
    return rho, E, p


def passive_energy(rho, H) -> float:
    _, E, p = _spectra(rho, H)
    return float(np.dot(p, E))


def passive_state(rho, H) -> np.ndarray:
    _, E, p = _spectra(rho, H)
    _, V = hamiltonian_eigh(H)
    return (V * p) @ V.conj().T


def energy(rho, H) -> float:
    return float(np.einsum("ij,ji->", np.asarray(rho), hamiltonian_matrix(H)).real)


def ergotropy(rho, H) -> float:
    rho, E, p = _spectra(rho, H)
    value = energy(rho, H) - float(np.dot(p, E))
    return max(value, 0.0)


def incoherent_ergotropy(rho, H) -> float:
    return ergotropy(dephase(rho, H), H)


def coherent_ergotropy(rho, H) -> float:
    return ergotropy(rho, H) - incoherent_ergotropy(rho, H)


def breakdown(rho, H) -> ErgotropyBreakdown:
    total = ergotropy(rho, H)
    inc = incoherent_ergotropy(rho, H)
    return ErgotropyBreakdown(total, inc, total - inc)


# -- bare-qubit closed forms -------------------------------------------------


def qubit_incoherent_ergotropy(P: float, omega: float = 1.0) -> float:
    return omega * (2.0 * P - 1.0) * (1.0 - heaviside(0.5 - P))


def qubit_coherent_ergotropy(P: float, Q2: float, omega: float = 1.0) -> float:
    """Coherent part from the population and ``|Q|^2``."""
    a = 1.0 - 2.0 * P
    return 0.5 * omega * (-abs(a) + math.sqrt(a * a + 4.0 * Q2))


def qubit_coherent_ergotropy_purity(s: QubitState, omega: float = 1.0) -> float:
    """Same quantity written through the purity of the state."""
    psi = math.sqrt(max(2.0 * purity(s) - 1.0, 0.0))
    return 0.5 * omega * (psi - math.sqrt(max(psi * psi - 4.0 * s.Q2, 0.0)))


def qubit_breakdown(s: QubitState, omega: float = 1.0) -> ErgotropyBreakdown:
    inc = qubit_incoherent_ergotropy(s.P, omega)
    coh = qubit_coherent_ergotropy(s.P, s.Q2, omega)
    return ErgotropyBreakdown(inc + coh, inc, coh)


def qubit_ergotropy(s: QubitState, omega: float = 1.0) -> float:
    return qubit_breakdown(s, omega).total


class IncoherentSteps(NamedTuple):
    R_i: float
    R_ii: float
    R_iii: Callable[[float], float]
    R_iv: float


def _decay_factor(bath: BathParams, t: float) -> float:
    return (1.0 - bath.f) * math.exp(-bath.gamma * t) + bath.f


def _post_dissipation_population(P0: float, m: float, bath: BathParams, tau: float) -> float:
    Nm = 1.0 - m * P0
    Pt = (P0 - bath.f) * math.exp(-bath.gamma * tau) + bath.f
    return (Pt - m * _decay_factor(bath, tau) * P0) / Nm


def reversal_threshold_w_prime(P0: float, m: float, bath: BathParams, tau: float) -> float:
    """Reversal strength above which the final diagonal state is active.

    Values <= 0 mean any reversal strength works; values >= 1 mean none does.
    """
    Pm_tau = _post_dissipation_population(P0, m, bath, tau)
    if Pm_tau >= 1.0:
        return -math.inf
    return (1.0 - 2.0 * Pm_tau) / (1.0 - Pm_tau)


def qubit_incoherent_steps(P0: float, m: float, w: float, bath: BathParams, tau: float) -> IncoherentSteps:
    """Incoherent ergotropy at the four protocol steps.

    ``R_iii`` is returned as a function of the elapsed dissipation time.
    """
    om, f, g = bath.omega, bath.f, bath.gamma
    Nm = 1.0 - m * P0
    R_i = om * (2.0 * P0 - 1.0) * (1.0 - heaviside(0.5 - P0))
    inv_P0 = 1.0 / P0 if P0 > 0 else math.inf
    active_after_m = 1.0 - heaviside(m - 2.0 + inv_P0)
    R_ii = om * (1.0 - 2.0 * (1.0 - P0) / Nm) * active_after_m
    Pm0 = (1.0 - m) * P0 / Nm

    if active_after_m:
        t_half = -math.log((0.5 - f) / (Pm0 - f)) / g
    else:
        t_half = 0.0

    def R_iii(t: float) -> float:
        if not active_after_m:
            return 0.0
        return 2.0 * om * ((Pm0 - f) * math.exp(-g * t) + f - 0.5) * (1.0 - heaviside(t - t_half))

    Pm_tau = _post_dissipation_population(P0, m, bath, tau)
    N_mw = n_mw_closed_form(P0, m, w, bath, tau)
    P_mw = Pm_tau / N_mw
    w_prime = reversal_threshold_w_prime(P0, m, bath, tau)
    R_iv = om * (2.0 * P_mw - 1.0) * (1.0 - heaviside(w_prime - w))
    return IncoherentSteps(R_i, R_ii, R_iii, R_iv)
