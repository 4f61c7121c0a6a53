"""Pure numpy Dormand-Prince 5(4) integrator for the Lindblad equation.

Mirrors the compiled kernel step for step; it is used when the extension is
not built or when ``TWMBATTERY_BACKEND=python`` is set.
"""
from __future__ import annotations

import numpy as np

from .errors import StepFailure

# Dormand-Prince tableau (autonomous system, so the nodes are not needed)
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
B = A[6]
# fifth-order weights minus embedded fourth-order weights
E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


def rhs(rho: np.ndarray, Heff: np.ndarray, jumps: np.ndarray) -> np.ndarray:
    """``-i (Heff rho - rho Heff^dag) + sum_k L_k rho L_k^dag``."""
    out = -1j * (Heff @ rho - rho @ Heff.conj().T)
    for L in jumps:
        out += L @ rho @ L.conj().T
    return out


def _error_norm(err, y0, y1, rtol, atol) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


# DOPRI5 is stable for |h lambda| up to about 3.3 along both axes
STABILITY_RADIUS = 3.0


def stability_limit(Heff: np.ndarray, jumps: np.ndarray) -> float:
    """Largest step kept inside the stability region for every mode of the generator.

    Without it, a nearly stationary state gives a vanishing error estimate and
    the step grows until round-off in the oscillating modes is amplified.
    """
    bound = 2.0 * np.linalg.norm(Heff, 2) + sum(np.linalg.norm(L, 2) ** 2 for L in jumps)
    return STABILITY_RADIUS / bound if bound > 0 else np.inf


def _initial_step(y0, f0, Heff, jumps, t, rtol, atol) -> float:
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t)
    f1 = rhs(y0 + h0 * f0, Heff, jumps)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t)


def evolve(
    rho0: np.ndarray,
    Heff: np.ndarray,
    jumps: np.ndarray,
    t: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_steps: int = 1_000_000,
) -> tuple[np.ndarray, int]:
    """Integrate from 0 to ``t``; returns the state and the accepted-step count."""
    y = np.array(rho0, dtype=complex, copy=True)
    if t == 0:
        return y, 0
    Heff = np.asarray(Heff, dtype=complex)
    jumps = np.asarray(jumps, dtype=complex)
    k = [None] * 7
    k[0] = rhs(y, Heff, jumps)
    h_max = stability_limit(Heff, jumps)
    h = min(_initial_step(y, k[0], Heff, jumps, t, rtol, atol), h_max)
    now, steps, attempts = 0.0, 0, 0
    while now < t:
        attempts += 1
        if attempts > max_steps:
            raise StepFailure(f"exceeded {max_steps} steps at t={now:.6g}")
        last = now + h >= t
        if last:
            h = t - now
        if h <= 16 * np.finfo(float).eps * max(abs(now), 1.0):
            raise StepFailure(f"step size underflow at t={now:.6g}")
        for i in range(1, 7):
            acc = y.copy()
            for j, a in enumerate(A[i]):
                if a:
                    acc += (h * a) * k[j]
            k[i] = rhs(acc, Heff, jumps)
        y_new = y.copy()
        for j, b in enumerate(B):
            if b:
                y_new += (h * b) * k[j]
        err = sum((h * e) * k[j] for j, e in enumerate(E) if e)
        norm = _error_norm(err, y, y_new, rtol, atol)
        if norm <= 1.0:
            now = t if last else now + h
            y = 0.5 * (y_new + y_new.conj().T)
            steps += 1
            # symmetrization moves y off the last stage point, so re-evaluate
            k[0] = rhs(y, Heff, jumps)
            factor = 10.0 if norm == 0 else min(10.0, max(0.2, 0.9 * norm ** -0.2))
        else:
            factor = max(0.2, 0.9 * norm ** -0.2)
        h = min(h * factor, h_max)
    return y, steps
