import numpy as np
import pytest
from conftest import decode
from hypothesis import given
from hypothesis import strategies as st

from hybrid_io.hamiltonian import solve_effective_interface
from hybrid_io.interface import analyze_in_basis
from hybrid_io.linalg import SWAP, is_unitary, ket, random_state
from hybrid_io.ls import (
    AlgorithmError,
    build_s_n,
    build_t_n,
    build_w_n,
    build_w_n_via_adjoint,
    leaked_superposition,
    ls_leakage_trace,
    run_ls,
    run_ls_via_adjoint,
)
from hybrid_io.sampling import feasible_unitary_with_beta
from hybrid_io.sequence import ApplyInterface, Swap, input_state, register_vector, run_sequence

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _random_u(seed, lo=0.05, hi=0.95):
    rng = np.random.default_rng(seed)
    return analyze_in_basis(feasible_unitary_with_beta(rng.uniform(lo, hi), rng)), rng


def test_zero_registers_is_one_interface_use(rng):
    u, _ = _random_u(1)
    seq = build_s_n(u, 0)
    assert seq.steps == (ApplyInterface(),)


def test_two_register_expansion_matches_frozen(frozen):
    for case in frozen["ls_leakage"]:
        u = analyze_in_basis(decode(case["u"]))
        psi = run_sequence(build_s_n(u, 2), u.matrix_elements, input_state(0, 1, 2))
        assert np.allclose(psi, decode(case["n2_state"]), atol=1e-12)


def test_zero_branch_is_fixed(rng):
    u, _ = _random_u(2)
    psi = run_sequence(build_s_n(u, 2), u.matrix_elements, input_state(1, 0, 2))
    assert np.allclose(psi, np.kron(ket("0"), register_vector([u.psi0] * 3)), atol=1e-12)


def test_measured_leakage_matches_frozen_dense_simulation(frozen):
    for case in frozen["ls_leakage"]:
        u = analyze_in_basis(decode(case["u"]))
        for n, xi in enumerate(case["xi"]):
            assert abs(run_ls(u, n).xi_measured - xi) <= 1e-12
            assert abs(xi - u.beta ** (n + 1)) <= 1e-12


@given(seeds, st.integers(min_value=0, max_value=5))
def test_w_n_images_and_unitarity(seed, n):
    u, _ = _random_u(seed)
    w = build_w_n(u, n)
    assert np.max(np.abs(w.conj().T @ w - np.eye(w.shape[0]))) <= 1e-10
    sigma = leaked_superposition(u, n)
    sigma = sigma / np.linalg.norm(sigma)
    assert np.allclose(w @ register_vector([u.psi0] * (n + 1)), ket("0" * (n + 1)), atol=1e-12)
    assert np.allclose(w @ sigma, ket("1" + "0" * n), atol=1e-12)


def test_w0_two_level_case():
    # psi0 = |0>: W_0 fixes |0> and sends psi1 to |1>
    u = analyze_in_basis(SWAP)
    w = build_w_n(u, 0)
    assert np.allclose(w @ ket("0"), ket("0"))
    assert np.allclose(w @ u.psi1, ket("1"))


def test_zero_input_transfers_exactly(rng):
    u, _ = _random_u(3)
    rep = run_ls(u, 3, (1.0, 0.0))
    assert rep.fidelity_to_ideal == pytest.approx(1.0, abs=1e-12)
    assert not rep.xi_observable


def test_effective_interface_example():
    sol = solve_effective_interface(1.0, 1.0)
    u = analyze_in_basis(sol.u_eff())
    assert abs(run_ls(u, 5).xi_measured - 0.125) <= 1e-9


@given(seeds, st.integers(min_value=1, max_value=8))
def test_leakage_law(seed, n):
    u, rng = _random_u(seed)
    ab = tuple(random_state(2, rng))
    rep = run_ls(u, n, ab)
    assert abs(rep.xi_measured - u.beta ** (n + 1)) <= 1e-9
    assert rep.amplitude_defect <= 1e-9
    assert abs(np.linalg.norm(rep.final_state) - 1) <= 1e-10
    assert rep.residual_state_g.is_normalized()


def test_leakage_trace_matches_statevector(rng):
    u, _ = _random_u(4)
    trace = ls_leakage_trace(u, 5)
    for n in range(5):
        assert abs(trace[n] - run_ls(u, n).xi_measured) <= 1e-12


def test_beta_one_is_rejected():
    with pytest.raises(AlgorithmError):
        build_w_n(analyze_in_basis(np.eye(4)), 2)


def test_t_n_program_layout(rng):
    u, _ = _random_u(5)
    seq = build_t_n(u, 3)
    assert seq.interface_uses() == 4 and seq.register_count == 3


def test_adjoint_collection_uses_only_interface_and_swaps(rng):
    u, _ = _random_u(6)
    seq = build_w_n_via_adjoint(u, 3)
    assert all(isinstance(s, (ApplyInterface, Swap)) for s in seq.steps)
    assert any(s.adjoint for s in seq.steps if isinstance(s, ApplyInterface))


@given(seeds, st.integers(min_value=1, max_value=4))
def test_adjoint_collection_leakage(seed, n):
    u, rng = _random_u(seed)
    ab = tuple(random_state(2, rng))
    assert abs(run_ls_via_adjoint(u, n, ab).xi_measured - u.beta ** (n + 1)) <= 1e-9


def test_adjoint_collection_matches_unitary_collection_when_exact(rng):
    u = analyze_in_basis(SWAP)
    ab = tuple(random_state(2, rng))
    a, b = run_ls(u, 2, ab), run_ls_via_adjoint(u, 2, ab)
    assert a.fidelity_to_ideal == pytest.approx(1.0, abs=1e-9)
    assert b.fidelity_to_ideal == pytest.approx(1.0, abs=1e-9)


def test_adjoint_collection_leaves_a_term_of_order_xi(rng):
    # the undone interaction also acts on the leaked |1>_S part, so the
    # collected state deviates from the unitary collection by O(b xi)
    for n in (1, 2, 3):
        u = analyze_in_basis(feasible_unitary_with_beta(0.6, rng))
        ab = tuple(random_state(2, rng))
        ref, adj = run_ls(u, n, ab), run_ls_via_adjoint(u, n, ab)
        xi = 0.6 ** (n + 1)
        assert adj.fidelity_to_ideal < ref.fidelity_to_ideal
        assert adj.fidelity_to_ideal >= (1 - 2 * abs(ab[1]) * xi) ** 2 - 1e-12


def test_constructed_collector_is_unitary_for_large_registers(rng):
    u, _ = _random_u(7)
    assert is_unitary(build_w_n(u, 8))
