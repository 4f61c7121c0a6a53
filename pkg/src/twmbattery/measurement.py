"""Selective weak measurements and their reversal.

``M_m = |g><g| + sqrt(1-m) |e><e|`` pulls the state toward the ground level,
``W_w = sqrt(1-w) |g><g| + |e><e|`` toward the excited one. Only the selected
outcome is tracked; the complementary Kraus operators are exposed so that
completeness can be checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .core import BathParams, QubitState
from .dynamics import population_at
from .errors import DimensionMismatch, OutOfRange, ZeroProbability

# probabilities below this are treated as impossible post-selections
MIN_PROBABILITY = 1e-12

Kind = Literal["weak", "reversal"]


def _check(strength: float, name: str) -> float:
    strength = float(strength)
    if not (0.0 <= strength <= 1.0):
        raise OutOfRange(f"{name}={strength} outside [0, 1]")
    return strength


def weak_operator(m: float) -> np.ndarray:
    m = _check(m, "m")
    return np.diag([1.0, math.sqrt(1.0 - m)]).astype(complex)


def weak_complement(m: float) -> np.ndarray:
    """Kraus operator of the discarded weak-measurement outcome."""
    m = _check(m, "m")
    return np.diag([0.0, math.sqrt(m)]).astype(complex)


def reversal_operator(w: float) -> np.ndarray:
    w = _check(w, "w")
    return np.diag([math.sqrt(1.0 - w), 1.0]).astype(complex)


def reversal_complement(w: float) -> np.ndarray:
    w = _check(w, "w")
    return np.diag([math.sqrt(w), 0.0]).astype(complex)


@dataclass(frozen=True)
class MeasurementRecord:
    kind: Kind
    strength: float | tuple[float, ...]
    probability: float
    pre_state: object
    post_state: object


def weak_measure(s: QubitState, m: float) -> tuple[QubitState, float]:
    m = _check(m, "m")
    N = 1.0 - m * s.P
    if N < MIN_PROBABILITY:
        raise ZeroProbability(f"weak outcome impossible: N_m={N:.3g}")
    return QubitState(s.P * (1.0 - m) / N, math.sqrt(1.0 - m) * s.Q / N), N


def reversal_measure(s: QubitState, w: float) -> tuple[QubitState, float]:
    w = _check(w, "w")
    N = 1.0 - w * (1.0 - s.P)
    if N < MIN_PROBABILITY:
        raise ZeroProbability(f"reversal outcome impossible: N_w={N:.3g}")
    return QubitState(s.P / N, math.sqrt(1.0 - w) * s.Q / N), N


def n_mw_closed_form(P0: float, m: float, w: float, bath: BathParams, tau: float) -> float:
    """Reversal-step probability after a weak measurement and dissipation time ``tau``.

    Evaluated from the initial population alone, without building any
    intermediate state.
    """
    Nm = 1.0 - m * P0
    decay = (1.0 - bath.f) * math.exp(-bath.gamma * tau) + bath.f
    return 1.0 - w + w * population_at(P0, bath, tau) / Nm - w * (1.0 - Nm) / Nm * decay


def success_probability(records: Iterable[MeasurementRecord | float]) -> float:
    probs = [r.probability if isinstance(r, MeasurementRecord) else float(r) for r in records]
    if not probs:
        raise ValueError("need at least one measurement record")
    return math.prod(probs)


def local_operator(strengths: Sequence[float], kind: Kind) -> np.ndarray:
    """Tensor product of single-cell weak (or reversal) Kraus operators."""
    if kind not in ("weak", "reversal"):
        raise ValueError(f"unknown measurement kind {kind!r}")
    single = weak_operator if kind == "weak" else reversal_operator
    K = np.ones((1, 1), dtype=complex)
    for s in strengths:
        K = np.kron(K, single(s))
    return K


def local_measurement(rho: np.ndarray, strengths: Sequence[float], kind: Kind) -> tuple[np.ndarray, float]:
    """Apply ``(x)_k K_k`` to ``rho`` and renormalize.

    A zero strength leaves its cell untouched.
    """
    rho = np.asarray(rho, dtype=complex)
    strengths = np.atleast_1d(np.asarray(strengths, dtype=float))
    if rho.shape != (2 ** len(strengths),) * 2:
        raise DimensionMismatch(f"{len(strengths)} strengths for a state of shape {rho.shape}")
    # all operators are diagonal: K rho K^dag = d_i d_j rho_ij
    d = np.diag(local_operator(strengths, kind)).real
    out = rho * np.outer(d, d)
    prob = float(np.trace(out).real)
    if prob < MIN_PROBABILITY:
        raise ZeroProbability(f"{kind} outcome impossible: probability={prob:.3g}")
    out /= prob
    return 0.5 * (out + out.conj().T), prob
