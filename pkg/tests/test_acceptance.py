"""Exit criteria, one test per item; each prints a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary section lists
every criterion with the values that decided it.
"""
import math
import time

import numpy as np
import pytest

import oracles
from twmbattery import (
    BathParams,
    HamiltonianSpec,
    ProtocolParams,
    QubitState,
    ZeroProbability,
    breakdown,
    build_model,
    cli,
    concurrence,
    ergotropy,
    eta_curves,
    find_operational_points,
    find_operational_points_2q,
    integrate,
    lindblad_rhs,
    n_mw_closed_form,
    null_energy_w_tilde,
    qubit_breakdown,
    run_twm_multi,
    run_twm_single,
    x_state,
)

pytestmark = pytest.mark.acceptance

GAMMA, F, OMEGA = 0.01, 0.3, 1.0
BATH = BathParams(GAMMA, F, OMEGA)
TAU = 1.0 / GAMMA
DRAWS = 10_000


def test_criterion_1_incoherent_reference(criterion):
    c = criterion(1, "incoherent reference run")
    s0 = QubitState(0.9)
    start = time.perf_counter()
    w = null_energy_w_tilde(0.9, 0.4, BATH, TAU)
    out = run_twm_single(s0, BATH, ProtocolParams(0.4, w, TAU))
    elapsed = time.perf_counter() - start
    gain = out.gains.incoherent
    c.check(abs(w - 0.2) <= 0.02, f"w~={w:.5f}")
    c.check(abs(gain - 0.071 * OMEGA) <= 0.003 * OMEGA, f"gain_inc={gain:.5f}")
    c.check(elapsed < 0.1, f"runtime={elapsed * 1e3:.2f} ms")
    c.finish()


def test_criterion_2_coherent_reference(criterion):
    c = criterion(2, "coherent reference run at the operational point")
    grid = {"P0": 0.9, "Q0sq": 0.0767, "m": np.linspace(0.0, 0.95, 20)}
    points = [p for p in find_operational_points(grid, BATH) if abs(p.m - 0.4) < 0.05]
    c.check(bool(points), f"{len(points)} operational point(s) near m=0.4")
    if points:
        p = points[0]
        out = run_twm_single(QubitState.from_coherence(0.9, 0.0767), BATH, ProtocolParams(p.m, p.w, TAU))
        g = out.gains
        c.check(abs(g.coherent - 0.005) <= 0.001, f"gain_coh={g.coherent:.5f} (m={p.m:.6f}, w={p.w:.5f})")
        c.check(abs(g.total - 0.076) <= 0.003, f"gain={g.total:.5f}")
        c.check(abs(out.probability - 0.57) <= 0.01, f"Pi={out.probability:.5f}")
        c.check(abs(out.epsilon) < 1e-9 * OMEGA and abs(out.W) < 1e-9 * OMEGA,
                f"|eps|={abs(out.epsilon):.1e}, |W|={abs(out.W):.1e}")
    c.finish()


def test_criterion_3_x_state_statics(criterion):
    c = criterion(3, "X-state ergotropy and entanglement")
    H = HamiltonianSpec(2, OMEGA, 2 * OMEGA * GAMMA)
    qs = [k / 100 for k in range(101)]
    dev = max(abs(breakdown(x_state(q), H).total - OMEGA * abs(1 - 2 * q)) for q in qs)
    c.check(dev < 1e-12, f"max|R - w|1-2q||={dev:.1e}")
    c09 = concurrence(x_state(0.9))
    c.check(abs(c09 - 0.66) <= 0.005, f"C(0.9)={c09:.4f}")
    low = [(q, concurrence(x_state(q))) for q in qs if q <= 0.7]
    entangled = [(q, v) for q, v in low if v > 0]
    c.check(not entangled, "C=0 for all q<=0.7" if not entangled
            else "C>0 at q<=0.7: " + ", ".join(f"C({q:.2f})={v:.5f}" for q, v in entangled))
    high = [concurrence(x_state(q)) for q in qs if q >= 0.71]
    c.check(min(high) > 0, f"min C(q>=0.71)={min(high):.5f}")
    c.finish()


def test_criterion_4_two_cell_runs(criterion):
    c = criterion(4, "two-cell operational points")
    model = build_model(2, OMEGA, 2 * OMEGA * GAMMA, BATH)
    start = time.perf_counter()
    cases = (
        (0.1, (0.5, 0.6), (0.21, 0.21), 0.049, 0.005, 0.37, 0.02),
        (0.9, (0.5, 0.9), (0.97, 0.17), 0.61, 0.03, 0.09, 0.01),
    )
    for q, m, target, gain, gtol, prob, ptol in cases:
        points = find_operational_points_2q(model, x_state(q), m, TAU)
        if not points:
            c.check(False, f"q={q}: no operational point")
            continue
        p = min(points, key=lambda p: math.dist(p.w, target))
        c.check(math.dist(p.w, target) <= 0.03, f"q={q}: w=({p.w[0]:.4f}, {p.w[1]:.4f})")
        c.check(abs(p.gain - gain) <= gtol * OMEGA, f"q={q}: gain={p.gain:.5f}")
        c.check(abs(p.probability - prob) <= ptol, f"q={q}: Pi={p.probability:.5f}")
        if q == 0.9:
            out = run_twm_multi(model, x_state(q), m, p.w, TAU)
            dR = out.ergotropies[3].total - out.ergotropies[0].total
            c.check(abs(dR - 0.003 * OMEGA) <= 0.002 * OMEGA, f"R_iv-R_i={dR:.5f}")
    elapsed = time.perf_counter() - start
    c.check(elapsed < 30, f"runtime={elapsed:.2f} s")
    c.finish()


def test_criterion_5_oracle_equivalences(criterion):
    c = criterion(5, "oracle equivalences")
    rng = np.random.default_rng(2024)

    # (a) closed-form reversal probability against the trace computation
    worst = 0.0
    for _ in range(DRAWS):
        P0, m, w, f, tau = rng.random(), 0.99 * rng.random(), rng.random(), 0.49 * rng.random(), 2000 * rng.random()
        ref = oracles.trace_n_mw(P0, m, w, GAMMA, f, tau)
        worst = max(worst, abs(n_mw_closed_form(P0, m, w, BathParams(GAMMA, f), tau) - ref))
    c.check(worst < 1e-12, f"(a) max|N_mw diff|={worst:.1e}")

    # (b) null-shift reversal strength against a bisection root
    worst, compared = 0.0, 0
    for _ in range(1000):
        P0, m, f, tau = rng.random(), rng.random(), 0.49 * rng.random(), 2000 * rng.random()
        w = null_energy_w_tilde(P0, m, BathParams(GAMMA, f), tau)
        root = oracles.bisect_w(P0, m, GAMMA, f, tau)
        if w is None or root is None:
            continue
        compared += 1
        worst = max(worst, abs(w - root))
    c.check(worst < 1e-10 and compared > 100, f"(b) max|w~ - bisection|={worst:.1e} over {compared}")

    # (c) equal-strength curves cancel the energy shift
    worst, compared = 0.0, 0
    for _ in range(DRAWS):
        P0, f, tau = 0.01 + 0.99 * rng.random(), 0.49 * rng.random(), 2000 * rng.random()
        for e in eta_curves(P0, BathParams(GAMMA, f), tau)[1:]:
            if not (math.isfinite(e) and 0 <= e <= 1):
                continue
            # skip draws where one ulp of the strength already moves the shift past the bound
            if not oracles.well_conditioned(P0, e, e, GAMMA, f, tau, 1e-10):
                continue
            compared += 1
            worst = max(worst, abs(oracles.trace_epsilon(P0, e, e, GAMMA, f, tau)))
    c.check(worst < 1e-10 and compared > 1000, f"(c) max|eps(eta)|={worst:.1e} over {compared}")

    # (d) hand-coded X-state equations against the generic generator
    model = build_model(2, OMEGA, 2 * OMEGA * GAMMA, BATH)
    worst = 0.0
    for _ in range(DRAWS):
        rho = oracles.random_x_state(rng)
        ref = oracles.x_state_rhs(rho, GAMMA, F, OMEGA, 2 * OMEGA * GAMMA)
        worst = max(worst, float(np.max(np.abs(lindblad_rhs(model, rho) - ref))))
    c.check(worst < 1e-12, f"(d) max|rhs diff|={worst:.1e}")

    # (e) single-cell integrator against the analytic propagator
    single = build_model(1, OMEGA, None, BATH)
    worst = 0.0
    for _ in range(5):
        P = rng.random()
        rho0 = oracles.qubit_matrix(P, 0.9 * math.sqrt(P * (1 - P)) * np.exp(2j * math.pi * rng.random()))
        for gt in np.linspace(0, 10, 21):
            ref = oracles.analytic_propagate(rho0, GAMMA, F, OMEGA, gt / GAMMA)
            worst = max(worst, float(np.max(np.abs(integrate(single, rho0, gt / GAMMA) - ref))))
    c.check(worst < 1e-8, f"(e) max|integrator - analytic|={worst:.1e}")

    # (f) no random unitary extracts more than the ergotropy
    H = oracles.two_cell_hamiltonian(OMEGA, 2 * OMEGA * GAMMA)
    Hs = HamiltonianSpec(2, OMEGA, 2 * OMEGA * GAMMA)
    excess = -math.inf
    for _ in range(3):
        rho = oracles.random_density_matrix(rng, 4)
        excess = max(excess, oracles.best_unitary_work(rho, H, rng, 100_000) - breakdown(rho, Hs).total)
    c.check(excess <= 1e-6, f"(f) best unitary - ergotropy={excess:.1e}")
    c.finish()


def test_criterion_6_structural_invariants(criterion):
    c = criterion(6, "structural invariants")
    rng = np.random.default_rng(7)
    H2 = HamiltonianSpec(2, OMEGA, 2 * OMEGA * GAMMA)
    H1 = HamiltonianSpec.qubit(OMEGA)

    worst = 0.0
    for _ in range(DRAWS):
        rho = oracles.random_density_matrix(rng, 4)
        b = breakdown(rho, H2)
        worst = max(worst, abs(b.total - b.incoherent - b.coherent))
        P = rng.random()
        s = QubitState(P, math.sqrt(P * (1 - P)) * rng.random() * np.exp(2j * math.pi * rng.random()))
        # closed-form parts must add up to the eigen-decomposition ergotropy
        b = qubit_breakdown(s)
        worst = max(worst, abs(ergotropy(s.matrix(), H1) - b.incoherent - b.coherent))
    c.check(worst < 1e-10, f"closure {worst:.1e}")

    worst = 0.0
    for _ in range(DRAWS):
        P = rng.random()
        Q = math.sqrt(P * (1 - P)) * rng.random() * np.exp(2j * math.pi * rng.random())
        worst = max(worst, abs(qubit_breakdown(QubitState(P, Q)).coherent
                               - qubit_breakdown(QubitState(1 - P, Q)).coherent))
    c.check(worst < 1e-12, f"P<->1-P symmetry {worst:.1e}")

    worst = 0.0
    for _ in range(DRAWS):
        P0, m, w, frac = rng.random(), 0.95 * rng.random(), rng.random(), rng.random()
        try:
            a = run_twm_single(QubitState(P0), BATH, ProtocolParams(m, w, TAU)).probability
        except ZeroProbability:
            continue
        b = run_twm_single(QubitState.from_coherence(P0, frac * P0 * (1 - P0)), BATH,
                           ProtocolParams(m, w, TAU)).probability
        worst = max(worst, abs(a - b))
    c.check(worst < 1e-12, f"Pi invariance under Q0 {worst:.1e}")

    model = build_model(2, OMEGA, 2 * OMEGA * GAMMA, BATH)
    tr = herm = 0.0
    neg = math.inf
    for _ in range(5):
        rho0 = oracles.random_density_matrix(rng, 4)
        for gt in np.linspace(0, 10, 11):
            rho = integrate(model, rho0, gt / GAMMA)
            tr = max(tr, abs(np.trace(rho) - 1))
            herm = max(herm, float(np.max(np.abs(rho - rho.conj().T))))
            neg = min(neg, float(np.linalg.eigvalsh(rho).min()))
    c.check(tr < 1e-8 and herm < 1e-8 and neg > -1e-8, f"trace {tr:.1e}, hermiticity {herm:.1e}, min eig {neg:.1e}")

    off = 0.0
    for q in (0.1, 0.5, 0.9):
        for gt in np.linspace(0, 10, 11):
            rho = integrate(model, x_state(q), gt / GAMMA)
            off = max(off, float(np.max(np.abs(rho[~oracles.X_MASK]))))
    c.check(off < 1e-10, f"X-structure {off:.1e}")

    singlet = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)
    rho = np.outer(singlet, singlet.conj())
    drift = max(float(np.max(np.abs(integrate(model, rho, gt / GAMMA) - rho))) for gt in (1.0, 5.0, 10.0))
    c.check(drift < 1e-10, f"singlet drift {drift:.1e}")
    c.finish()


def test_criterion_7_zero_temperature_control(criterion, tmp_path, capsys):
    c = criterion(7, "zero-temperature negative control")
    grid = {"P0": np.linspace(0.05, 0.95, 19), "Q0sq": "max", "m": np.linspace(0.0, 1.0, 41)}
    points = find_operational_points(grid, BathParams(GAMMA, 0.0, OMEGA))
    c.check(points == [], f"finder returned {len(points)} points")
    code = cli.main(["opfind", "--set", "f=0", "--set", "Q0sq=max", "--grid", "P0=0.05:0.95:19",
                     "--grid", "m=0:1:41", "--out", str(tmp_path / "op.csv")])
    capsys.readouterr()
    c.check(code == 4, f"exit code {code}")
    c.finish()


def test_criterion_8_determinism(criterion, tmp_path, capsys):
    c = criterion(8, "sweep determinism across worker counts")
    blobs = {}
    for workers in (1, 2, 4):
        path = tmp_path / f"sweep_{workers}.csv"
        code = cli.main(["sweep", "--set", "Q0sq=max", "--grid", "P0=0.3:0.99:8", "--grid", "m=0:0.95:6",
                         "--workers", str(workers), "--out", str(path)])
        c.check(code == 0, f"workers={workers} exit {code}")
        blobs[workers] = path.read_bytes()
    capsys.readouterr()
    same = len(set(blobs.values())) == 1
    c.check(same, f"byte-identical across workers {sorted(blobs)}")
    c.finish()
