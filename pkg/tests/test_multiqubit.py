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
    OutOfRange,
    ProtocolParams,
    QubitState,
    TooLarge,
    build_model,
    concurrence,
    ergotropy,
    find_operational_points_2q,
    integrate,
    lindblad_rhs,
    run_twm_multi,
    run_twm_single,
    x_state,
)
from twmbattery.multiqubit import MULTI_TIMESERIES_FIELDS, multi_timeseries, x_state_concurrence, x_state_via_unitary

BATH = BathParams(0.01, 0.3)
J = 0.02
MODEL = build_model(2, 1.0, J, BATH)
SINGLET = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)


def test_ladder_operators_adjoint():
    assert np.array_equal(MODEL.S_raise, MODEL.S_lower.conj().T)


def test_generator_is_trace_free():
    rng = np.random.default_rng(8)
    for _ in range(50):
        A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        A = A + A.conj().T
        A /= np.trace(A).real
        assert abs(np.trace(lindblad_rhs(MODEL, A))) < 1e-14


def test_generator_matches_x_state_equations():
    rng = np.random.default_rng(9)
    for _ in range(1000):
        rho = oracles.random_x_state(rng)
        ref = oracles.x_state_rhs(rho, BATH.gamma, BATH.f, 1.0, J)
        assert np.max(np.abs(lindblad_rhs(MODEL, rho) - ref)) < 1e-12


def test_single_cell_generator_gives_thermalization():
    model = build_model(1, 1.0, None, BATH)
    d = lindblad_rhs(model, oracles.qubit_matrix(0.9))
    assert d[1, 1].real == pytest.approx(BATH.gamma * (BATH.f - 0.9), abs=1e-15)
    assert np.max(np.abs(lindblad_rhs(model, oracles.qubit_matrix(BATH.f)))) < 1e-16


def test_too_many_cells():
    with pytest.raises(TooLarge):
        build_model(7)
    build_model(3, 1.0, 0.01, BATH)


def test_hamiltonian_shared_with_core():
    assert np.allclose(MODEL.H.matrix, oracles.two_cell_hamiltonian(1.0, J))


@given(st.floats(0.0, 1.0))
def test_x_state_entries_and_validity(q):
    rho = x_state(q)
    assert np.allclose(rho, oracles.x_state_entries(q), atol=1e-15)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-15)
    assert np.linalg.eigvalsh(rho).min() > -1e-12


@given(st.floats(0.0, 1.0))
def test_x_state_unitary_preparation(q):
    assert np.allclose(x_state_via_unitary(q), x_state(q), atol=1e-14)


def test_x_state_range():
    with pytest.raises(OutOfRange):
        x_state(1.2)


@given(st.floats(0.0, 1.0))
def test_concurrence_closed_form(q):
    assert concurrence(x_state(q)) == pytest.approx(x_state_concurrence(q), abs=1e-7)


def test_concurrence_reference_states():
    bell = np.zeros((4, 4), dtype=complex)
    bell[np.ix_([0, 3], [0, 3])] = 0.5
    assert concurrence(bell) == pytest.approx(1.0, abs=1e-12)
    assert concurrence(np.eye(4) / 4) == 0.0
    with pytest.raises(DimensionMismatch):
        concurrence(np.eye(2) / 2)


@given(st.floats(0.0, 0.5))
def test_ergotropy_mirror_symmetry(x):
    H = HamiltonianSpec(2, 1.0)
    assert ergotropy(x_state(0.5 - x), H) == pytest.approx(ergotropy(x_state(0.5 + x), H), abs=1e-12)


def test_singlet_is_dark():
    rho = np.outer(SINGLET, SINGLET.conj())
    assert np.max(np.abs(lindblad_rhs(MODEL, rho))) < 1e-15
    assert np.max(np.abs(integrate(MODEL, rho, 1000.0) - rho)) < 1e-10


@pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
def test_integration_keeps_x_structure(q):
    for gt in (0.5, 2.0, 10.0):
        rho = integrate(MODEL, x_state(q), gt / BATH.gamma)
        assert np.max(np.abs(rho[~oracles.X_MASK])) < 1e-10


def test_integration_preserves_state_properties():
    rng = np.random.default_rng(10)
    for _ in range(3):
        rho0 = oracles.random_density_matrix(rng, 4)
        for gt in (1.0, 5.0, 10.0):
            rho = integrate(MODEL, rho0, gt / BATH.gamma)
            assert abs(np.trace(rho) - 1) < 1e-9
            assert np.max(np.abs(rho - rho.conj().T)) < 1e-9
            assert np.linalg.eigvalsh(rho).min() > -1e-8


def test_single_cell_protocol_matches_closed_form():
    model = build_model(1, 1.0, None, BATH)
    s0 = QubitState.from_coherence(0.9, 0.0767)
    single = run_twm_single(s0, BATH, ProtocolParams(0.4, 0.2, 100.0))
    multi = run_twm_multi(model, s0.matrix(), (0.4,), (0.2,), 100.0)
    assert multi.probability == pytest.approx(single.probability, abs=1e-12)
    assert multi.gains.total == pytest.approx(single.gains.total, abs=1e-8)
    assert multi.gains.coherent == pytest.approx(single.gains.coherent, abs=1e-8)
    assert multi.epsilon == pytest.approx(single.epsilon, abs=1e-8)
    assert multi.concurrence is None


def test_two_cell_run_reports_concurrence():
    out = run_twm_multi(MODEL, x_state(0.9), (0.5, 0.9), (0.97, 0.17), 100.0)
    c_final, c_base = out.concurrence
    assert 0.0 <= c_final <= 1.0 and 0.0 <= c_base <= 1.0
    assert out.gains.total == pytest.approx(out.gains.incoherent + out.gains.coherent, abs=1e-10)


def test_strength_count_checked():
    with pytest.raises(DimensionMismatch):
        run_twm_multi(MODEL, x_state(0.1), (0.5,), (0.2, 0.2), 10.0)


def test_no_measurement_gives_trivial_point():
    points = find_operational_points_2q(MODEL, x_state(0.1), (0.0, 0.0), 100.0)
    assert any(p.w == pytest.approx((0.0, 0.0), abs=1e-9) for p in points)
    p = min(points, key=lambda p: p.w[0] ** 2 + p.w[1] ** 2)
    assert abs(p.W) < 1e-9 and abs(p.gain) < 1e-9


def test_finder_requires_two_cells_and_resolution():
    with pytest.raises(DimensionMismatch):
        find_operational_points_2q(build_model(1, 1.0, None, BATH), np.eye(2) / 2, (0.1,), 1.0)
    with pytest.raises(OutOfRange):
        find_operational_points_2q(MODEL, x_state(0.1), (0.5, 0.6), 100.0, resolution=8)


def test_multi_timeseries_rows():
    rows = multi_timeseries(MODEL, x_state(0.1), (0.5, 0.6), (0.21, 0.21), 100.0, [0.0, 50.0, 100.0, 150.0])
    assert rows[0]._fields == MULTI_TIMESERIES_FIELDS
    proto = [r for r in rows if r.series == "protocol"]
    assert [r.phase for r in proto if r.t == 0.0] == ["pre", "post"]
    assert [r.phase for r in proto if r.t == 100.0] == ["pre", "post"]
    assert [r.phase for r in proto if r.t in (50.0, 150.0)] == ["free", "free"]
