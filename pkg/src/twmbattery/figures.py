"""Data recipes for the standard figure set.

Each recipe returns ``{file name: (header, rows)}``; plotting is left to
external tools. Default parameters are ``f = 0.3``,
``gamma = 1e-2``, ``omega = 1``, ``tau = 1/gamma`` and ``J = 2 omega gamma``
unless a recipe says otherwise.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .core import BathParams, HamiltonianSpec, ProtocolParams, QubitState
from .dynamics import evolve_free, tau_half
from .ergotropy import breakdown, qubit_coherent_ergotropy
from .multiqubit import (
    MULTI_TIMESERIES_FIELDS,
    ShiftEvaluator,
    concurrence,
    find_operational_points_2q,
    multi_timeseries,
    prepare,
    x_state,
)
from .protocol import TIMESERIES_FIELDS, timeseries
from .shifts import eta_curves, null_energy_w_tilde
from .sweep import SWEEP_HEADER, TWO_CELL_HEADER, cached_model, default_coupling, grid_points, single_row

GAMMA, F, OMEGA = 0.01, 0.3, 1.0
TAU = 1.0 / GAMMA

Table = tuple[tuple[str, ...], list[tuple]]


def _base(**over) -> dict:
    p = {"P0": 0.9, "Q0sq": 0.0, "m": 0.4, "w": "tilde", "tau": TAU, "f": F, "gamma": GAMMA, "omega": OMEGA}
    p.update(over)
    return p


def _lin(a: float, b: float, n: int) -> list[float]:
    return [float(x) for x in np.linspace(a, b, n)]


def _surface(fixed: dict, grids: dict, order=("P0", "Q0sq", "m", "w", "tau")) -> list[tuple]:
    return [single_row(p) for p in grid_points(fixed, grids, order)]


def _tag(x: float) -> str:
    return f"{x:g}".replace(".", "p")


def fig2() -> dict[str, Table]:
    """Incoherent gain over (P0, m) along w-tilde, for three dissipation times."""
    out = {}
    P0s, ms = _lin(0.01, 0.99, 50), _lin(0.0, 1.0, 51)
    for tau in (TAU / 2, TAU, 10 * TAU):
        out[f"gain_inc_tau{_tag(tau)}.csv"] = (SWEEP_HEADER, _surface(_base(tau=tau), {"P0": P0s, "m": ms}))
    bath = BathParams(GAMMA, F, OMEGA)
    out["eta2.csv"] = (("P0", "eta2"), [(p, eta_curves(p, bath, TAU).eta2) for p in P0s])
    return out


def _qubit_series(P0: float, Q0sq: float, m: float = 0.4) -> list[tuple]:
    bath = BathParams(GAMMA, F, OMEGA)
    w = null_energy_w_tilde(P0, m, bath, TAU)
    s0 = QubitState.from_coherence(P0, Q0sq)
    return list(timeseries(s0, bath, ProtocolParams(m, w, TAU), _lin(0.0, TAU, 201)))


def fig3() -> dict[str, Table]:
    """Incoherent ergotropy with and without the protocol; P0 = 0.9, m = 0.4."""
    return {"timeseries.csv": (TIMESERIES_FIELDS, _qubit_series(0.9, 0.0))}


def fig4() -> dict[str, Table]:
    """Coherent ergotropy over (P, |Q|^2) and free trajectories across that map."""
    rows = []
    for P in _lin(0.0, 1.0, 101):
        for k in range(51):
            Q2 = P * (1 - P) * k / 50
            rows.append((P, Q2, qubit_coherent_ergotropy(P, Q2, OMEGA)))
    bath = BathParams(GAMMA, F, OMEGA)
    traj = []
    for P0 in (0.1, 0.2, 0.4, 0.6, 0.8, 0.9):
        s0 = QubitState.from_coherence(P0, P0 * (1 - P0))
        th = tau_half(P0, bath)
        for t in _lin(0.0, 5 * TAU, 201):
            s = evolve_free(s0, bath, t)
            traj.append((P0, t, s.P, s.Q2, qubit_coherent_ergotropy(s.P, s.Q2, OMEGA),
                         math.nan if th is None else th))
    return {
        "profile.csv": (("P", "Q2", "R_coh"), rows),
        "trajectories.csv": (("P0", "t", "P", "Q2", "R_coh", "tau_half"), traj),
    }


def fig5() -> dict[str, Table]:
    """Coherent gain over (m, |Q0|^2) at tau_gamma for three initial populations."""
    out = {}
    for P0 in (0.4, 0.6, 0.9):
        qs = _lin(0.0, P0 * (1 - P0), 41)
        out[f"gain_coh_P0{_tag(P0)}.csv"] = (SWEEP_HEADER, _surface(_base(P0=P0), {"Q0sq": qs, "m": _lin(0, 1, 51)}))
    return out


def fig6() -> dict[str, Table]:
    """Coherent gain over (tau, m) with maximal initial coherence."""
    out = {}
    for P0 in (0.6, 0.9):
        rows = _surface(_base(P0=P0, Q0sq="max"), {"tau": _lin(0.0, 3 * TAU, 61), "m": _lin(0, 1, 51)},
                        order=("tau", "m"))
        out[f"gain_coh_P0{_tag(P0)}.csv"] = (SWEEP_HEADER, rows)
    return out


def fig7() -> dict[str, Table]:
    """Coherent ergotropy with and without the protocol; |Q0|^2 = 0.0767."""
    return {"timeseries.csv": (TIMESERIES_FIELDS, _qubit_series(0.9, 0.0767))}


_TWO_CELL_CASES = ((0.1, (0.5, 0.6)), (0.9, (0.5, 0.9)))


def _two_cell_points(q, m, f=F):
    model = cached_model(GAMMA, f, OMEGA, default_coupling(GAMMA, OMEGA))
    return model, find_operational_points_2q(model, x_state(q), m, TAU)


def _point_rows(q, f, points):
    return [(math.nan,) * 4 + (p.tau, f, GAMMA, OMEGA, p.gain, p.gain_inc, p.gain_coh, p.probability,
                               p.epsilon, p.W, 1, q, *p.m, *p.w, p.concurrence_final, p.concurrence_baseline)
            for p in points]


def fig8() -> dict[str, Table]:
    """Energy and ergotropy shift maps over (w1, w2) with the operational points."""
    out = {}
    for q, m in _TWO_CELL_CASES:
        model, points = _two_cell_points(q, m)
        ev = ShiftEvaluator(prepare(model, x_state(q), m, TAU))
        ws = _lin(0.0, 1.0, 65)
        rows = [(a, b, *ev.shifts(a, b)) for a in ws for b in ws]
        out[f"shift_map_q{_tag(q)}.csv"] = (("w1", "w2", "epsilon", "Wshift"), rows)
        out[f"operational_q{_tag(q)}.csv"] = (TWO_CELL_HEADER, _point_rows(q, F, points))
    return out


def fig9() -> dict[str, Table]:
    """Gains and success probability over (P0, m), coherent and incoherent, two temperatures."""
    out = {}
    P0s, ms = _lin(0.01, 0.99, 50), _lin(0.0, 1.0, 51)
    for f in (0.3, 0.15):
        for label, Q in (("Qmax", "max"), ("Q0", 0.0)):
            rows = _surface(_base(f=f, Q0sq=Q), {"P0": P0s, "m": ms})
            out[f"performance_f{_tag(f)}_{label}.csv"] = (SWEEP_HEADER, rows)
    return out


def fig10() -> dict[str, Table]:
    """Total ergotropy with and without the protocol; |Q0|^2 = 0.0767."""
    return fig7()


def fig11() -> dict[str, Table]:
    """Ergotropy and concurrence of the X-state family against 1 - q."""
    H = HamiltonianSpec(2, OMEGA, default_coupling(GAMMA, OMEGA))
    rows = []
    for k in range(101):
        q = k / 100
        rho = x_state(q)
        rows.append((1 - q, q, breakdown(rho, H).total, concurrence(rho)))
    return {"xstate.csv": (("one_minus_q", "q", "R", "concurrence"), rows)}


def fig12() -> dict[str, Table]:
    """Free decay of ergotropy and concurrence for q = 0.1 and q = 0.9."""
    out = {}
    model = cached_model(GAMMA, F, OMEGA, default_coupling(GAMMA, OMEGA))
    for q, _ in _TWO_CELL_CASES:
        rows = multi_timeseries(model, x_state(q), None, None, TAU, _lin(0.0, TAU, 101))
        out[f"decay_q{_tag(q)}.csv"] = (MULTI_TIMESERIES_FIELDS, list(rows))
    return out


def fig13() -> dict[str, Table]:
    """Operational points over (q, m2) with m1 = 0.5, at two temperatures.

    The sweep resolution is a coarse choice of ours; pass finer grids through
    ``twm opfind --set cells=2`` for denser surfaces.
    """
    out = {}
    for f in (0.3, 0.15):
        rows = []
        for q in (0.1, 0.3, 0.7, 0.9):
            for m2 in (0.3, 0.6, 0.9):
                _, points = _two_cell_points(q, (0.5, m2), f)
                rows += _point_rows(q, f, points)
        out[f"operational_f{_tag(f)}.csv"] = (TWO_CELL_HEADER, rows)
    return out


def fig14() -> dict[str, Table]:
    """Ergotropy shift over (P0, m) along w-tilde for three temperatures."""
    out = {}
    P0s, ms = _lin(0.01, 0.99, 50), _lin(0.0, 1.0, 51)
    for f in (0.0, 0.15, 0.3):
        for label, Q in (("Qmax", "max"), ("Q0", 0.0)):
            rows = _surface(_base(f=f, Q0sq=Q), {"P0": P0s, "m": ms})
            out[f"shift_f{_tag(f)}_{label}.csv"] = (SWEEP_HEADER, rows)
    return out


# initial (P0, |Q0|^2) pairs for the discharge comparison; 'max' is P0 (1 - P0)
DISCHARGE_STATES = ((1.0, 0.0), (0.9, 0.0), (0.9, "max"), (0.7, "max"), (0.5, "max"), (0.3, 0.0))


def fig15() -> dict[str, Table]:
    """Free discharge of several initial states, showing crossing curves."""
    bath = BathParams(GAMMA, F, OMEGA)
    rows = []
    for P0, Q in DISCHARGE_STATES:
        Q2 = P0 * (1 - P0) if Q == "max" else Q
        s0 = QubitState.from_coherence(P0, Q2)
        for r in timeseries(s0, bath, None, _lin(0.0, 3 * TAU, 151)):
            rows.append((P0, Q2) + tuple(r))
    return {"discharge.csv": (("P0", "Q0sq") + TIMESERIES_FIELDS, rows)}


def fig16() -> dict[str, Table]:
    """Energy shift over (w, tau) at m = 0.5, and along the equal-strength curves."""
    out = {}
    for P0 in (0.4, 0.8, 0.9):
        rows = _surface(_base(P0=P0, Q0sq="max", m=0.5), {"w": _lin(0.0, 1.0, 51), "tau": _lin(0.0, 3 * TAU, 61)},
                        order=("w", "tau"))
        out[f"energy_shift_P0{_tag(P0)}.csv"] = (SWEEP_HEADER, rows)
    bath = BathParams(GAMMA, F, OMEGA)
    rows = []
    for P0 in _lin(0.01, 0.99, 50):
        for tau in _lin(0.0, 3 * TAU, 61):
            eta = eta_curves(P0, bath, tau)
            rows.append((P0, tau, eta.eta1, eta.eta2, eta.eta3))
    out["eta_curves.csv"] = (("P0", "tau", "eta1", "eta2", "eta3"), rows)
    return out


def fig17() -> dict[str, Table]:
    """Ergotropy parts and concurrence with and without the protocol at the operational points."""
    out = {}
    for q, m in _TWO_CELL_CASES:
        model, points = _two_cell_points(q, m)
        if not points:
            continue
        # the point closest to the reference reversal strengths
        target = (0.21, 0.21) if q < 0.5 else (0.97, 0.17)
        p = min(points, key=lambda p: (p.w[0] - target[0]) ** 2 + (p.w[1] - target[1]) ** 2)
        rows = multi_timeseries(model, x_state(q), m, p.w, TAU, _lin(0.0, TAU, 101))
        out[f"protocol_q{_tag(q)}.csv"] = (MULTI_TIMESERIES_FIELDS, list(rows))
    return out


FIGURES: dict[str, Callable[[], dict[str, Table]]] = {
    f"fig{k}": globals()[f"fig{k}"] for k in range(2, 18)
}
