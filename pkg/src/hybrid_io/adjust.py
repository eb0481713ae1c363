"""Free evolution of S between interface uses, and its compensation.

When the feasible S basis diagonalizes H_S, waiting for t'_k only multiplies
the |1>_S branch by e^{-i theta_k} with theta_k = (E_1 - E_0) t'_k. New
|0>_S amplitude produced by the next interface use then carries the
cumulative phase e^{-i Theta_k}, and always sits on |psi1>_I, so the
rotation V(Theta_k) = |psi0><psi0| + e^{i Theta_k}|psi1><psi1| undoes it.
In LS the rotation is applied to the register that just received I.

Three modes are provided for LS and CS programs with waits:

``none``     no rotations, collecting unitaries of the H_S-free program
``rotate``   rotations, collecting unitaries of the H_S-free program
``adapted``  rotations, collecting unitaries rebuilt for the actual
             (phase-modified) register content
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import cs as cs_mod
from .cs import ETA_TOL, R, _split, _step_unitary, regime
from .interface import InterfaceAnalysis
from .linalg import (
    ZERO_TOL,
    complete_to_unitary,
    expm_hermitian,
    is_hermitian,
    ket,
    orthocomplement,
)
from .ls import AlgorithmError, _require_beta_below_one, build_w_n, run_ls
from .sequence import (
    ApplyInterface,
    GateSequence,
    I,
    RegisterUnitary,
    Swap,
    Wait,
    input_state,
    register,
    register_vector,
    run_sequence,
)
from .transfer import TransferReport, make_report

MODES = ("none", "rotate", "adapted")


class PhaseAdjustmentError(ValueError):
    """H_S is not diagonal in the feasible S basis."""


def phase_angles(hs_eigengap: float, off_durations: Sequence[float]) -> np.ndarray:
    """theta_k = (E_1 - E_0) t'_k."""
    return hs_eigengap * np.asarray(off_durations, dtype=float)


def basis_hamiltonian(u: InterfaceAnalysis, hs_eigengap: float, h_s: Optional[np.ndarray] = None) -> np.ndarray:
    """H_S written in the feasible S basis, diag(0, gap) when ``h_s`` is omitted."""
    if h_s is None:
        return np.diag([0.0, hs_eigengap]).astype(complex)
    h_s = np.asarray(h_s, dtype=complex)
    if h_s.shape != (2, 2) or not is_hermitian(h_s):
        raise PhaseAdjustmentError("H_S must be a Hermitian 2x2 matrix")
    b = u.basis.basis_s
    return b.conj().T @ h_s @ b


def check_diagonal(u: InterfaceAnalysis, h_s: np.ndarray, off_durations: Sequence[float]) -> float:
    """Eigengap E_1 - E_0 of H_S in the feasible basis.

    Raises unless every wait propagator e^{-i H_S t'} is diagonal there.
    """
    hb = basis_hamiltonian(u, 0.0, h_s)
    for t in off_durations:
        p = expm_hermitian(hb, t)
        if abs(p[0, 1]) > ZERO_TOL or abs(p[1, 0]) > ZERO_TOL:
            raise PhaseAdjustmentError(f"e^(-i H_S t') is not diagonal in the feasible basis for t' = {t}")
    return float((hb[1, 1] - hb[0, 0]).real)


def phase_rotation(u: InterfaceAnalysis, theta: float) -> np.ndarray:
    """|psi0><psi0| + e^{i theta}|psi1><psi1|."""
    if u.psi1 is None:
        raise AlgorithmError("psi1 is undefined for this interface")
    p0, p1 = u.psi0, u.psi1
    return np.outer(p0, p0.conj()) + np.exp(1j * theta) * np.outer(p1, p1.conj())


def hs_phase_adjustment(
    u: InterfaceAnalysis,
    hs_eigengap: float,
    off_durations: Sequence[float],
    h_s: Optional[np.ndarray] = None,
) -> list[np.ndarray]:
    """Rotations V(Theta_k) for the cumulative phases Theta_k = theta_1 + ... + theta_k.

    With ``h_s`` given, its diagonality in the feasible basis is checked and
    its eigengap is used instead of ``hs_eigengap``.
    """
    if h_s is not None:
        hs_eigengap = check_diagonal(u, h_s, off_durations)
    cumulative = np.cumsum(phase_angles(hs_eigengap, off_durations))
    return [phase_rotation(u, th) for th in cumulative]


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")


# --- LS ------------------------------------------------------------------------


def _ls_interaction(u: InterfaceAnalysis, n: int, durations, rotations, mode: str) -> list:
    steps: list = [ApplyInterface()]
    for k in range(1, n + 1):
        steps += [Wait(float(durations[k - 1])), Swap(I, register(k))]
        if mode != "none" and k >= 2:
            steps.append(RegisterUnitary(rotations[k - 2], (register(k),), f"V_{k - 1}"))
        steps.append(ApplyInterface())
    if mode != "none" and n >= 1:
        steps.append(RegisterUnitary(rotations[n - 1], (I,), f"V_{n}"))
    return steps


def build_ls_with_waits(
    u: InterfaceAnalysis,
    n_registers: int,
    off_durations: Sequence[float],
    hs_eigengap: float,
    mode: str = "adapted",
) -> GateSequence:
    """LS program with a wait after each of the first N interface uses."""
    _check_mode(mode)
    _require_beta_below_one(u)
    n = n_registers
    if len(off_durations) != n:
        raise ValueError(f"expected {n} off durations, got {len(off_durations)}")
    rotations = hs_phase_adjustment(u, hs_eigengap, off_durations)
    steps = _ls_interaction(u, n, off_durations, rotations, mode)
    targets = tuple([I] + [register(k) for k in range(1, n + 1)])
    if mode == "adapted":
        # the |0>_S branch of the b = 1 run is the superposition to collect
        pre = GateSequence(tuple(steps), n)
        psi = run_sequence(pre, u.matrix_elements, input_state(0.0, 1.0, n), basis_hamiltonian(u, hs_eigengap))
        sigma = psi[: psi.size // 2]
        sigma = sigma / np.linalg.norm(sigma)
        zero_src = register_vector([u.psi0] * (n + 1))
        w = complete_to_unitary([zero_src, sigma], [ket("0" * (n + 1)), ket("1" + "0" * n)])
    else:
        w = build_w_n(u, n)
    steps.append(RegisterUnitary(w, targets, "W_N"))
    return GateSequence(tuple(steps), n)


def run_ls_with_waits(
    u: InterfaceAnalysis,
    n_registers: int,
    off_durations: Sequence[float],
    hs_eigengap: float,
    amplitudes: tuple[complex, complex] = (0.0, 1.0),
    mode: str = "adapted",
) -> TransferReport:
    a, b = amplitudes
    seq = build_ls_with_waits(u, n_registers, off_durations, hs_eigengap, mode)
    psi = run_sequence(seq, u.matrix_elements, input_state(a, b, n_registers), basis_hamiltonian(u, hs_eigengap))
    return make_report(psi, a, b, u.beta ** (n_registers + 1))


# --- CS ------------------------------------------------------------------------


def _rebuilt_step(u: InterfaceAnalysis, psi: np.ndarray, k: int) -> np.ndarray:
    """Step unitary collecting the |0>_S branch of the b = 1 state ``psi``."""
    zero, one = psi[:4], psi[4:]
    q0 = np.kron(u.psi0, u.psi0 if k == 2 else ket("0"))
    eta_vec = zero - np.vdot(q0, zero) * q0
    eta = np.linalg.norm(eta_vec)
    q1 = eta_vec / eta if eta > ETA_TOL else None
    _, mu0_state, _, nu1 = _split(one, q0, q1)
    return _step_unitary(q0, q1, nu1, orthocomplement(mu0_state))


def build_cs_with_waits(
    u: InterfaceAnalysis,
    n_uses: int,
    off_durations: Sequence[float],
    hs_eigengap: float,
    mode: str = "adapted",
) -> GateSequence:
    """CS program with a wait after each of the first n - 1 interface uses."""
    _check_mode(mode)
    if not u.exploitable:
        raise AlgorithmError("interface is not exploitable")
    if n_uses < 2:
        raise ValueError("at least two interface uses are required")
    if len(off_durations) != n_uses - 1:
        raise ValueError(f"expected {n_uses - 1} off durations, got {len(off_durations)}")
    thetas = np.cumsum(phase_angles(hs_eigengap, off_durations))
    use_v = mode != "none" and u.psi1 is not None
    h_b = basis_hamiltonian(u, hs_eigengap)
    free = cs_mod.step_states(u, n_uses) if mode != "adapted" else None

    steps: list = [ApplyInterface(), Wait(float(off_durations[0])), Swap(I, R), ApplyInterface()]
    psi = run_sequence(GateSequence(tuple(steps), 1), u.matrix_elements, input_state(0.0, 1.0, 1), h_b)
    for k in range(2, n_uses + 1):
        block: list = []
        if use_v:
            block.append(RegisterUnitary(phase_rotation(u, thetas[k - 2]), (I,), f"V_{k - 1}"))
        if mode == "adapted":
            # rebuild W_k for the state actually reached by the b = 1 run
            cur = run_sequence(GateSequence(tuple(block), 1), u.matrix_elements, psi)
            w = _rebuilt_step(u, cur, k)
        else:
            w = free[k - 2].step_unitary
        block.append(RegisterUnitary(w, (I, R), f"W_{k}"))
        if k < n_uses:
            block += [Wait(float(off_durations[k - 1])), ApplyInterface()]
        psi = run_sequence(GateSequence(tuple(block), 1), u.matrix_elements, psi, h_b)
        steps += block
    steps.append(Swap(I, R))
    return GateSequence(tuple(steps), 1)


def run_cs_with_waits(
    u: InterfaceAnalysis,
    n_uses: int,
    off_durations: Sequence[float],
    hs_eigengap: float,
    amplitudes: tuple[complex, complex] = (0.0, 1.0),
    mode: str = "adapted",
) -> TransferReport:
    a, b = amplitudes
    seq = build_cs_with_waits(u, n_uses, off_durations, hs_eigengap, mode)
    psi = run_sequence(seq, u.matrix_elements, input_state(a, b, 1), basis_hamiltonian(u, hs_eigengap))
    return make_report(psi, a, b, cs_mod.step_states(u, n_uses)[-1].xi)


# --- comparison ------------------------------------------------------------------


def branch_fidelity(reference: np.ndarray, state: np.ndarray) -> float:
    """Agreement of the |0>_S branches of two final states.

    |<p|q>|^2 / max(|p|, |q|)^4 for the unnormalized branches p and q; equal
    to 1 exactly when the branches coincide up to a global phase.
    """
    half = reference.size // 2
    p, q = reference[:half], state[:half]
    scale = max(np.linalg.norm(p), np.linalg.norm(q)) ** 2
    if scale < ZERO_TOL:
        return 1.0
    return float(abs(np.vdot(p, q)) ** 2 / scale**2)


@dataclass(frozen=True)
class AdjustmentComparison:
    fidelity: float
    xi_free: float
    xi_adjusted: float
    regime: str

    @property
    def xi_gap(self) -> float:
        return abs(self.xi_free - self.xi_adjusted)


def compare_with_free(
    u: InterfaceAnalysis,
    algorithm: str,
    n: int,
    off_durations: Sequence[float],
    hs_eigengap: float,
    amplitudes: tuple[complex, complex],
    mode: str = "adapted",
) -> AdjustmentComparison:
    """Run the H_S-free program and the program with waits side by side.

    ``n`` is the register count for LS and the number of uses for CS.
    """
    if algorithm == "ls":
        free = run_ls(u, n, amplitudes)
        adj = run_ls_with_waits(u, n, off_durations, hs_eigengap, amplitudes, mode)
        reg = "ls"
    elif algorithm == "cs":
        free = cs_mod.run_cs(u, n, amplitudes)
        adj = run_cs_with_waits(u, n, off_durations, hs_eigengap, amplitudes, mode)
        reg = regime(u).value
    else:
        raise ValueError("algorithm must be 'ls' or 'cs'")
    return AdjustmentComparison(
        branch_fidelity(free.final_state, adj.final_state), free.xi_measured, adj.xi_measured, reg
    )


def final_phase_mismatch(free: TransferReport, other: TransferReport) -> float:
    """arg of the |1>_I success amplitude relative to the H_S-free run, in [0, 2 pi)."""
    c_free, c_other = free.success_amplitudes[1], other.success_amplitudes[1]
    if abs(c_free) < ZERO_TOL or abs(c_other) < ZERO_TOL:
        return 0.0
    return float(np.angle(c_other / c_free) % (2 * np.pi))
