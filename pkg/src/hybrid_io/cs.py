"""Output transfer with a single register qubit (state dimension 8).

After step k >= 2 the state has the form

    a|000> + b*eta|001> + b*(mu0 |1>_S|0>_I|m0>_R + mu1 |1>_S|1>_I|m1>_R)

and one more interface use followed by a step unitary on I and R moves part
of the |1>_S amplitude into the |001> component. ``eta`` never decreases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .interface import DEGENERACY_TOL, InterfaceAnalysis
from .linalg import ZERO_TOL, complete_to_unitary, ket, orthocomplement
from .ls import AlgorithmError
from .sequence import (
    ApplyInterface,
    GateSequence,
    I,
    RegisterUnitary,
    Swap,
    input_state,
    register,
    run_sequence,
)
from .transfer import TransferReport, leaked_norm, make_report

R = register(1)
ETA_TOL = 1e-12
ORTHO_TOL = 1e-8
_ZERO2 = np.zeros(2, dtype=complex)


@dataclass(frozen=True)
class CsStepState:
    k: int
    eta: float
    mu0: float
    mu1: float
    mu0_register_state: np.ndarray
    mu1_register_state: np.ndarray
    eta_vector: Optional[np.ndarray] = field(default=None, repr=False)
    step_unitary: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def xi(self) -> float:
        # equals sqrt(1 - eta^2) but stays accurate when xi is tiny
        return float(np.hypot(self.mu0, self.mu1))

    @property
    def norm_defect(self) -> float:
        return abs(self.eta**2 + self.mu0**2 + self.mu1**2 - 1.0)


class Regime(str, Enum):
    A = "A"
    B0 = "B0"
    B1 = "B1"
    B2 = "B2"
    NOT_EXPLOITABLE = "not_exploitable"


@dataclass(frozen=True)
class CsBounds:
    regime: Regime
    lower: float
    upper: float


def _require_exploitable(u: InterfaceAnalysis) -> None:
    if not u.exploitable:
        raise AlgorithmError("interface is not exploitable")


def _unit(v: Optional[np.ndarray]) -> np.ndarray:
    return _ZERO2 if v is None else v


def _split(nu: np.ndarray, q0: np.ndarray, q1: Optional[np.ndarray]):
    """Split ``nu`` into its part in span{q0, q1} and the rest.

    Returns (mu0, |mu0>, mu1, nu1_unit) where |mu0> holds the coordinates of
    the projected part along (q0, q1).
    """
    c0 = np.vdot(q0, nu)
    c1 = np.vdot(q1, nu) if q1 is not None else 0j
    proj = c0 * q0 + (c1 * q1 if q1 is not None else 0)
    mu0 = float(np.sqrt(abs(c0) ** 2 + abs(c1) ** 2))
    mu0_state = np.array([c0, c1], dtype=complex) / mu0 if mu0 > ZERO_TOL else ket("0")
    rest = nu - proj
    mu1 = float(np.linalg.norm(rest))
    nu1 = rest / mu1 if mu1 > ZERO_TOL else None
    if nu1 is None:
        mu1 = 0.0
    return mu0, mu0_state, mu1, nu1


def _step_unitary(q0, q1, nu1, mu1_state) -> np.ndarray:
    sources = [q0]
    targets = [ket("00")]
    if q1 is not None:
        sources.append(q1)
        targets.append(ket("01"))
    if nu1 is not None:
        sources.append(nu1)
        targets.append(np.kron(ket("1"), mu1_state))
    src = np.column_stack(sources)
    if np.max(np.abs(src.conj().T @ src - np.eye(len(sources)))) > ORTHO_TOL:
        raise AlgorithmError("step unitary sources lost orthogonality")
    # re-orthonormalize to absorb rounding before the exact completion
    q, _ = np.linalg.qr(src)
    q = q * (np.diag(q.conj().T @ src) / np.abs(np.diag(q.conj().T @ src)))
    return complete_to_unitary(list(q.T), targets)


def _finish_state(k, eta, q0, q1, eta_vec, nu) -> CsStepState:
    mu0, mu0_state, mu1, nu1 = _split(nu, q0, q1)
    mu1_state = orthocomplement(mu0_state)
    w = _step_unitary(q0, q1, nu1, mu1_state)
    return CsStepState(k, eta, mu0, mu1, mu0_state, mu1_state, eta_vec, w)


def initial_state(u: InterfaceAnalysis) -> CsStepState:
    """Recursion state after the first two interface uses."""
    _require_exploitable(u)
    psi0, psi1, phi = u.psi0, u.psi1, _unit(u.phi)
    alpha, beta = u.alpha, u.beta
    eta_vec = alpha * (np.kron(psi0, psi1) + beta * np.kron(psi1, phi))
    eta = float(np.linalg.norm(eta_vec))
    q0 = np.kron(psi0, psi0)
    q1 = eta_vec / eta if eta > ETA_TOL else None
    nu = beta**2 * np.kron(phi, phi)
    return _finish_state(2, eta, q0, q1, q1, nu)


def next_state(u: InterfaceAnalysis, s: CsStepState) -> CsStepState:
    """Recursion state one interface use later."""
    psi0, psi1 = u.psi0, u.psi1
    zeta = u.alpha * s.mu0 * s.mu0_register_state + u.gamma * s.mu1 * s.mu1_register_state
    eta_vec = s.eta * np.kron(psi0, ket("1")) + np.kron(psi1, zeta)
    eta = float(np.sqrt(s.eta**2 + (u.alpha * s.mu0) ** 2 + (abs(u.gamma) * s.mu1) ** 2))
    q0 = np.kron(psi0, ket("0"))
    q1 = eta_vec / np.linalg.norm(eta_vec) if eta > ETA_TOL else None
    nu = u.beta * s.mu0 * np.kron(_unit(u.phi), s.mu0_register_state) + u.omega * s.mu1 * np.kron(
        _unit(u.phi_prime), s.mu1_register_state
    )
    return _finish_state(s.k + 1, eta, q0, q1, q1, nu)


def build_s_1(u: InterfaceAnalysis) -> GateSequence:
    return GateSequence((ApplyInterface(), Swap(I, R), ApplyInterface()), 1)


def cs_initialize(u: InterfaceAnalysis, amplitudes: tuple[complex, complex] = (0.0, 1.0)):
    """Two interface uses and the first step unitary.

    Returns (step state at k = 2, statevector on S, I, R).
    """
    s = initial_state(u)
    a, b = amplitudes
    psi = run_sequence(build_s_1(u), u.matrix_elements, input_state(a, b, 1))
    psi = run_sequence(GateSequence((RegisterUnitary(s.step_unitary, (I, R), "W_2"),), 1), u.matrix_elements, psi)
    return s, psi


def cs_step(u: InterfaceAnalysis, s: CsStepState, psi: np.ndarray):
    """One more interface use followed by the next step unitary."""
    nxt = next_state(u, s)
    seq = GateSequence((ApplyInterface(), RegisterUnitary(nxt.step_unitary, (I, R), f"W_{nxt.k}")), 1)
    return nxt, run_sequence(seq, u.matrix_elements, psi)


def step_states(u: InterfaceAnalysis, n_uses: int) -> list[CsStepState]:
    """Recursion states for k = 2..n_uses."""
    if n_uses < 2:
        raise ValueError("at least two interface uses are required")
    states = [initial_state(u)]
    while states[-1].k < n_uses:
        states.append(next_state(u, states[-1]))
    return states


def build_cs_sequence(u: InterfaceAnalysis, n_uses: int) -> GateSequence:
    """Complete program: two uses, step unitaries, and a final swap(I, R)."""
    states = step_states(u, n_uses)
    steps = list(build_s_1(u).steps) + [RegisterUnitary(states[0].step_unitary, (I, R), "W_2")]
    for s in states[1:]:
        steps += [ApplyInterface(), RegisterUnitary(s.step_unitary, (I, R), f"W_{s.k}")]
    steps.append(Swap(I, R))
    return GateSequence(tuple(steps), 1)


def gamma_form(u_state: CsStepState, a: complex, b: complex) -> np.ndarray:
    """Ideal statevector after step k, from the recursion values."""
    s = u_state
    psi = a * ket("000") + b * s.eta * ket("001")
    psi = psi + b * s.mu0 * np.kron(ket("10"), s.mu0_register_state)
    return psi + b * s.mu1 * np.kron(ket("11"), s.mu1_register_state)


def run_cs(u: InterfaceAnalysis, n_uses: int, amplitudes: tuple[complex, complex] = (0.0, 1.0)) -> TransferReport:
    """Simulate the program, recording xi after every step k = 2..n."""
    _require_exploitable(u)
    if n_uses < 2:
        raise ValueError("at least two interface uses are required")
    a, b = amplitudes
    s, psi = cs_initialize(u, (a, b))
    trace_meas, trace_rec = [], []

    def record(st, state):
        trace_rec.append(st.xi)
        trace_meas.append(leaked_norm(state) / abs(b) if abs(b) > 1e-12 else st.xi)

    record(s, psi)
    while s.k < n_uses:
        s, psi = cs_step(u, s, psi)
        record(s, psi)
    psi = run_sequence(GateSequence((Swap(I, R),), 1), u.matrix_elements, psi)
    return make_report(psi, a, b, s.xi, tuple(trace_meas), tuple(trace_rec))


def regime(u: InterfaceAnalysis) -> Regime:
    if not u.exploitable:
        return Regime.NOT_EXPLOITABLE
    one = 1.0 - DEGENERACY_TOL
    if abs(u.overlap_psi0_phi) >= one:
        return Regime.A
    if u.beta < one and u.omega < one:
        return Regime.B0
    if u.beta < one:
        return Regime.B1
    return Regime.B2


def cs_bounds(u: InterfaceAnalysis, n_uses: int) -> CsBounds:
    """Closed-form lower and upper bounds on xi after ``n_uses`` interface uses."""
    reg = regime(u)
    n = n_uses
    beta, omega = u.beta, u.omega
    x2 = abs(u.overlap_psi0_phi) ** 2
    if reg is Regime.A:
        lo = hi = beta**n
    elif reg is Regime.B0:
        pair = (beta**n, beta**2 * omega ** (n - 2))
        lo, hi = min(pair), max(pair)
    elif reg is Regime.B1:
        lo = beta**n
        hi = beta**2 * (beta**2 + (1 - beta**2) * x2) ** ((n - 2) / 4)
    elif reg is Regime.B2:
        lo = omega ** (n - 2)
        hi = (omega**2 + (1 - omega**2) * x2) ** ((n - 2) / 4)
    else:
        lo = hi = 1.0
    return CsBounds(reg, float(lo), float(hi))
