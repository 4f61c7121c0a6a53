import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from twmbattery import (
    BathParams,
    DimensionMismatch,
    HamiltonianSpec,
    ProtocolParams,
    QubitState,
    breakdown,
    coherent_ergotropy,
    ergotropy,
    incoherent_ergotropy,
    null_energy_w_tilde,
    qubit_breakdown,
    qubit_incoherent_steps,
    reversal_threshold_w_prime,
    run_twm_single,
    ZeroProbability,
)
from twmbattery.ergotropy import (
    heaviside,
    passive_state,
    qubit_coherent_ergotropy,
    qubit_coherent_ergotropy_purity,
    qubit_incoherent_ergotropy,
)

H1 = HamiltonianSpec.qubit()
H2 = HamiltonianSpec(2, 1.0, 0.02)
BATH = BathParams()


@st.composite
def states(draw):
    P = draw(st.floats(0.0, 1.0))
    r = draw(st.floats(0.0, 1.0)) * math.sqrt(P * (1 - P))
    phase = draw(st.floats(0.0, 2 * math.pi))
    return QubitState(P, r * complex(math.cos(phase), math.sin(phase)))


def test_heaviside_tie_is_one():
    assert heaviside(0.0) == 1.0
    assert heaviside(-1e-300) == 0.0


def test_half_population_has_no_incoherent_ergotropy():
    assert qubit_incoherent_ergotropy(0.5) == 0.0
    assert qubit_incoherent_ergotropy(0.9) == pytest.approx(0.8)
    assert qubit_incoherent_ergotropy(0.2) == 0.0


def test_pure_excited_state():
    b = qubit_breakdown(QubitState(1.0))
    assert (b.total, b.incoherent, b.coherent) == (1.0, 1.0, 0.0)


def test_maximally_coherent_state_is_all_coherent():
    b = qubit_breakdown(QubitState(0.5, 0.5))
    assert b.incoherent == 0.0
    assert b.coherent == pytest.approx(0.5)


@given(states(), st.floats(0.1, 3.0))
def test_qubit_closed_form_matches_general(s, omega):
    H = HamiltonianSpec.qubit(omega)
    b, ref = qubit_breakdown(s, omega), breakdown(s.matrix(), H)
    assert b.total == pytest.approx(ref.total, abs=1e-12)
    assert b.incoherent == pytest.approx(ref.incoherent, abs=1e-12)
    assert b.coherent == pytest.approx(ref.coherent, abs=1e-12)


@given(states())
def test_two_coherent_closed_forms_agree(s):
    assert abs(qubit_coherent_ergotropy(s.P, s.Q2) - qubit_coherent_ergotropy_purity(s)) < 1e-12


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 2 * math.pi))
def test_coherent_symmetries(P, frac, phase):
    Q = math.sqrt(frac * P * (1 - P)) * complex(math.cos(phase), math.sin(phase))
    a = qubit_breakdown(QubitState(P, Q)).coherent
    assert a == pytest.approx(qubit_breakdown(QubitState(1 - P, Q)).coherent, abs=1e-14)
    assert a == pytest.approx(qubit_breakdown(QubitState(P, Q.conjugate())).coherent, abs=1e-14)


@given(states())
def test_qubit_components_nonnegative(s):
    b = qubit_breakdown(s)
    assert b.total >= 0 and b.incoherent >= 0 and b.coherent >= -1e-15
    assert b.total == pytest.approx(b.incoherent + b.coherent, abs=1e-15)


def test_coherent_part_is_convex_in_population():
    h = 1e-4
    Q2 = 0.01
    for P in np.linspace(0.15, 0.85, 57):
        if abs(P - 0.5) < 2 * h:
            continue
        second = (qubit_coherent_ergotropy(P + h, Q2) - 2 * qubit_coherent_ergotropy(P, Q2)
                  + qubit_coherent_ergotropy(P - h, Q2)) / h ** 2
        assert second > 0


def test_closure_random_four_by_four():
    rng = np.random.default_rng(5)
    for _ in range(500):
        rho = oracles.random_density_matrix(rng, 4)
        b = breakdown(rho, H2)
        assert abs(b.total - b.incoherent - b.coherent) < 1e-10
        assert b.coherent >= -1e-12 and b.incoherent >= 0


def test_passive_state_has_no_ergotropy():
    rng = np.random.default_rng(6)
    rho = oracles.random_density_matrix(rng, 4)
    sigma = passive_state(rho, H2)
    assert ergotropy(sigma, H2) < 1e-12
    assert np.allclose(np.linalg.eigvalsh(sigma), np.linalg.eigvalsh(rho), atol=1e-12)


def test_random_unitaries_do_not_beat_ergotropy():
    rng = np.random.default_rng(7)
    H = oracles.two_cell_hamiltonian(1.0, 0.02)
    for _ in range(3):
        rho = oracles.random_density_matrix(rng, 4)
        assert oracles.best_unitary_work(rho, H, rng, 20_000) <= ergotropy(rho, H2) + 1e-6


def test_degenerate_ties_do_not_matter():
    # ge and eg share the energy omega when J = 0
    H = HamiltonianSpec(2, 1.0)
    rho = np.diag([0.1, 0.3, 0.3, 0.3]).astype(complex)
    perm = np.eye(4)[[0, 2, 1, 3]]
    assert ergotropy(rho, H) == pytest.approx(ergotropy(perm @ rho @ perm.T, H), abs=1e-15)
    assert ergotropy(rho, H) == pytest.approx(0.3 * 2 - 0.1 * 2, abs=1e-15)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        ergotropy(np.eye(2) / 2, H2)


def test_incoherent_plus_coherent_general():
    rho = QubitState(0.7, 0.3).matrix()
    assert ergotropy(rho, H1) == pytest.approx(incoherent_ergotropy(rho, H1) + coherent_ergotropy(rho, H1))


def test_w_prime_boundaries():
    # P_m(tau) = 1/2 exactly when the post-measurement state sits at 1/2 with tau = 0
    assert reversal_threshold_w_prime(0.5, 0.0, BATH, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert reversal_threshold_w_prime(0.9, 0.0, BATH, 0.0) < 0
    assert reversal_threshold_w_prime(1.0, 0.0, BATH, 0.0) == -math.inf


def test_w_tilde_exceeds_w_prime_for_reference_run():
    tau = BATH.tau_gamma
    w = null_energy_w_tilde(0.9, 0.4, BATH, tau)
    w_prime = reversal_threshold_w_prime(0.9, 0.4, BATH, tau)
    assert w > w_prime
    assert qubit_incoherent_steps(0.9, 0.4, w, BATH, tau).R_iv > 0


@given(st.floats(0.0, 1.0), st.floats(0.0, 0.95), st.floats(0.0, 1.0), st.floats(0.0, 500.0))
def test_incoherent_steps_match_states(P0, m, w, tau):
    try:
        out = run_twm_single(QubitState(P0), BATH, ProtocolParams(m, w, tau))
    except ZeroProbability:
        return
    steps = qubit_incoherent_steps(P0, m, w, BATH, tau)
    R = [b.incoherent for b in out.ergotropies]
    # thresholds are compared by different algebra; skip points sitting on one
    if min(abs(s.P - 0.5) for s in out.states) < 1e-9:
        return
    assert steps.R_i == pytest.approx(R[0], abs=1e-10)
    assert steps.R_ii == pytest.approx(R[1], abs=1e-10)
    assert steps.R_iii(tau) == pytest.approx(R[2], abs=1e-10)
    assert steps.R_iv == pytest.approx(R[3], abs=1e-10)
