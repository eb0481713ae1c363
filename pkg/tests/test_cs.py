import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybrid_io.cs import (
    AlgorithmError,
    CsStepState,
    R,
    Regime,
    build_cs_sequence,
    cs_bounds,
    cs_initialize,
    cs_step,
    gamma_form,
    initial_state,
    next_state,
    regime,
    run_cs,
    step_states,
)
from hybrid_io.interface import analyze_in_basis
from hybrid_io.linalg import SWAP, is_unitary, ket, orthocomplement, random_state
from hybrid_io.sampling import complete_columns, feasible_unitary_with_beta, random_feasible_unitary
from hybrid_io.sequence import ApplyInterface, GateSequence, I, RegisterUnitary, run_sequence

seeds = st.integers(min_value=0, max_value=2**32 - 1)
regimes = st.sampled_from(["B0", "A", "B1", "B2"])


def regime_a(beta: float, rng) -> np.ndarray:
    psi0 = random_state(2, rng)
    psi1 = orthocomplement(psi0)
    col2 = np.concatenate([math.sqrt(1 - beta**2) * psi1, beta * psi0])
    return complete_columns({0: np.concatenate([psi0, np.zeros(2)]), 2: col2}, rng)


def b2_instance(omega: float, overlap: float, rng) -> np.ndarray:
    """beta = 1, given omega and |<psi0|phi>|."""
    psi0 = random_state(2, rng)
    p0 = orthocomplement(psi0)
    phi = overlap * psi0 + math.sqrt(1 - overlap**2) * p0
    cols = {
        0: np.concatenate([psi0, np.zeros(2)]),
        2: np.concatenate([np.zeros(2), phi]),
        3: np.concatenate([math.sqrt(1 - omega**2) * p0, omega * orthocomplement(phi)]),
    }
    return complete_columns(cols, rng)


def test_initial_eta_for_beta_half_root_two(rng):
    u = analyze_in_basis(feasible_unitary_with_beta(1 / math.sqrt(2), rng))
    assert initial_state(u).eta == pytest.approx(math.sqrt(3) / 2, abs=1e-12)


def test_beta_zero_is_exact_after_two_uses():
    u = analyze_in_basis(SWAP)
    assert initial_state(u).eta == pytest.approx(1.0)
    rep = run_cs(u, 2, (0.6, 0.8))
    assert rep.xi_measured <= 1e-12 and rep.fidelity_to_ideal == pytest.approx(1.0, abs=1e-12)


@given(seeds, regimes)
def test_statevector_has_the_recursion_form(seed, reg):
    rng = np.random.default_rng(seed)
    u = analyze_in_basis(random_feasible_unitary(rng, reg))
    a, b = random_state(2, rng)
    s, psi = cs_initialize(u, (a, b))
    for _ in range(6):
        assert np.allclose(psi, gamma_form(s, a, b), atol=1e-10)
        assert abs(np.linalg.norm(psi) - 1) <= 1e-10
        s, psi = cs_step(u, s, psi)


@given(seeds, regimes)
def test_recursion_matches_statevector(seed, reg):
    rng = np.random.default_rng(seed)
    u = analyze_in_basis(random_feasible_unitary(rng, reg))
    s, psi = cs_initialize(u, (0.0, 1.0))
    prev = s.eta
    for _ in range(10):
        assert abs(abs(psi[1]) - s.eta) <= 1e-9
        assert abs(np.linalg.norm(psi[4:]) - s.xi) <= 1e-9
        assert s.norm_defect <= 1e-10
        assert is_unitary(s.step_unitary)
        s, psi = cs_step(u, s, psi)
        assert s.eta >= prev - 1e-12
        prev = s.eta


@given(seeds)
def test_regime_a_is_a_pure_power(seed):
    rng = np.random.default_rng(seed)
    beta = rng.uniform(0.1, 0.9)
    u = analyze_in_basis(regime_a(beta, rng))
    assert regime(u) is Regime.A
    for s in step_states(u, 12):
        assert s.mu1 <= 1e-12
        assert abs(s.xi - beta**s.k) <= 1e-9
    b = cs_bounds(u, 7)
    assert b.lower == b.upper


def test_regime_a_six_uses(rng):
    u = analyze_in_basis(regime_a(1 / math.sqrt(2), rng))
    assert run_cs(u, 6).xi_measured == pytest.approx(0.125, abs=1e-9)


def test_zero_input_ends_in_all_zero_state(rng):
    u = analyze_in_basis(random_feasible_unitary(rng, "B0"))
    rep = run_cs(u, 5, (1.0, 0.0))
    assert np.allclose(rep.final_state, ket("000"), atol=1e-12)


@given(seeds)
def test_b0_sandwich(seed):
    rng = np.random.default_rng(seed)
    u = analyze_in_basis(random_feasible_unitary(rng, "B0"))
    rep = run_cs(u, 12)
    for n, xi in zip(range(2, 13), rep.xi_trace):
        lo = min(u.beta**n, u.beta**2 * u.omega ** (n - 2))
        hi = max(u.beta**n, u.beta**2 * u.omega ** (n - 2))
        assert lo - 1e-9 <= xi <= hi + 1e-9


def test_b2_upper_bound_example(rng):
    u = analyze_in_basis(b2_instance(0.8, 0.5, rng))
    assert regime(u) is Regime.B2
    assert u.beta == pytest.approx(1.0) and u.omega == pytest.approx(0.8)
    assert abs(u.overlap_psi0_phi) == pytest.approx(0.5)
    b = cs_bounds(u, 6)
    assert b.upper == pytest.approx(0.73, abs=1e-12)
    assert b.lower == pytest.approx(0.8**4, abs=1e-12)


def _b1_state(u, xi, k, rng):
    m1 = random_state(2, rng)
    return CsStepState(k, math.sqrt(1 - xi**2), 0.0, xi, orthocomplement(m1), m1)


def test_b1_two_step_recursion_from_forced_branch(rng):
    """mu0 = 0 at step k: one step revives mu0 by |<psi0|phi'>|, two steps shrink xi by the base."""
    for _ in range(20):
        u = analyze_in_basis(random_feasible_unitary(rng, "B1"))
        x2 = abs(u.overlap_psi0_phi) ** 2
        s = _b1_state(u, 0.3, 4, rng)
        s1 = next_state(u, s)
        assert s1.mu0 == pytest.approx(s.mu1 * abs(np.vdot(u.psi0, u.phi_prime)), abs=1e-12)
        s2 = next_state(u, s1)
        assert s2.xi == pytest.approx(s.xi * math.sqrt(u.beta**2 + (1 - u.beta**2) * x2), abs=1e-12)


def test_b1_revival_against_statevector(rng):
    u = analyze_in_basis(random_feasible_unitary(rng, "B1"))
    s = _b1_state(u, 0.4, 3, rng)
    psi = gamma_form(s, 0.0, 1.0)
    nxt = next_state(u, s)
    seq = GateSequence((ApplyInterface(), RegisterUnitary(nxt.step_unitary, (I, R))), 1)
    out = run_sequence(seq, u.matrix_elements, psi)
    # after the step unitary the |1>_S|0>_I block carries mu0
    assert np.linalg.norm(out[4:6]) == pytest.approx(nxt.mu0, abs=1e-10)
    assert nxt.mu0 == pytest.approx(0.4 * abs(np.vdot(u.psi0, u.phi_prime)), abs=1e-10)


def test_b1_stated_upper_bound_is_exceeded():
    """Measured leakage sits above beta^2 base^((n-2)/4) on some instances (odd n especially)."""
    rng = np.random.default_rng(7)
    exceeded = set()
    for _ in range(300):
        u = analyze_in_basis(random_feasible_unitary(rng, "B1"))
        for s in step_states(u, 12):
            if s.xi > cs_bounds(u, s.k).upper + 1e-9:
                exceeded.add(s.k)
    assert 3 in exceeded and 5 in exceeded


def test_b1_pairwise_law_holds():
    """Observed replacement: xi(n) <= (beta^2 + (1 - beta^2) x^2)^((floor(n/2) + 1) / 2)."""
    rng = np.random.default_rng(11)
    for _ in range(500):
        u = analyze_in_basis(random_feasible_unitary(rng, "B1"))
        base = u.beta**2 + (1 - u.beta**2) * abs(u.overlap_psi0_phi) ** 2
        for s in step_states(u, 14):
            assert s.xi <= base ** ((s.k // 2 + 1) / 2) + 1e-9


def test_b2_upper_and_lower_bounds_hold():
    rng = np.random.default_rng(13)
    for _ in range(300):
        u = analyze_in_basis(random_feasible_unitary(rng, "B2"))
        for s in step_states(u, 12):
            b = cs_bounds(u, s.k)
            assert b.lower - 1e-9 <= s.xi <= b.upper + 1e-9


def test_memory_is_one_register_qubit(rng):
    u = analyze_in_basis(random_feasible_unitary(rng, "B0"))
    seq = build_cs_sequence(u, 12)
    assert seq.register_count == 1 and run_cs(u, 12).final_state.size == 8
    assert seq.interface_uses() == 12


def test_non_exploitable_interface_is_rejected():
    with pytest.raises(AlgorithmError):
        run_cs(analyze_in_basis(np.eye(4)), 4)
    with pytest.raises(ValueError):
        step_states(analyze_in_basis(SWAP), 1)


def test_final_state_holds_the_transferred_qubit(rng):
    u = analyze_in_basis(random_feasible_unitary(rng, "B0"))
    a, b = random_state(2, rng)
    rep = run_cs(u, 12, (a, b))
    assert rep.amplitude_defect <= 1e-9
    assert rep.fidelity_to_ideal >= 1 - 2 * rep.xi_measured
