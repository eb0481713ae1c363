"""Output transfer with a register that grows by one qubit per interface use."""

from __future__ import annotations

import numpy as np

from .interface import InterfaceAnalysis
from .linalg import complete_to_unitary, ket
from .sequence import (
    ApplyInterface,
    GateSequence,
    I,
    RegisterUnitary,
    Swap,
    input_state,
    register,
    register_vector,
    run_sequence,
)
from .transfer import TransferReport, make_report

BETA_ONE_TOL = 1e-12


class AlgorithmError(ValueError):
    """The interface does not meet an algorithm's precondition."""


def _require_u_star(u: InterfaceAnalysis) -> None:
    if not u.in_u_star:
        raise AlgorithmError("interface is not in feasible form in the given basis")


def _require_beta_below_one(u: InterfaceAnalysis) -> None:
    _require_u_star(u)
    if u.beta >= 1.0 - BETA_ONE_TOL or u.psi1 is None:
        raise AlgorithmError("beta = 1: the register cannot absorb the leaked amplitude")


def build_s_n(u: InterfaceAnalysis, n_registers: int, has_rs: bool = False) -> GateSequence:
    """U, swap(I,R_1), U, swap(I,R_2), ..., swap(I,R_N), U."""
    _require_u_star(u)
    if n_registers < 0:
        raise ValueError("register count must be non-negative")
    steps = [ApplyInterface()]
    for k in range(1, n_registers + 1):
        steps += [Swap(I, register(k)), ApplyInterface()]
    return GateSequence(tuple(steps), n_registers, has_rs)


def leaked_superposition(u: InterfaceAnalysis, n_registers: int) -> np.ndarray:
    """Unnormalized sum over k of beta^(k-1) phi^(k-1) psi1 psi0^(N+1-k).

    Slot k is R_k for k <= N and I for k = N + 1; the vector is laid out in
    subsystem order I, R_1, ..., R_N.
    """
    n = n_registers
    phi = u.phi if u.phi is not None else np.zeros(2, dtype=complex)
    total = np.zeros(2 ** (n + 1), dtype=complex)
    for k in range(1, n + 2):
        slot = [phi] * (k - 1) + [u.psi1] + [u.psi0] * (n + 1 - k)
        # reorder slots (R_1..R_N, I) into layout order (I, R_1..R_N)
        total += u.beta ** (k - 1) * register_vector([slot[n]] + slot[:n])
    return total


def build_w_n(u: InterfaceAnalysis, n_registers: int) -> np.ndarray:
    """Register unitary collecting the transferred amplitude into I."""
    _require_beta_below_one(u)
    n = n_registers
    zero_src = register_vector([u.psi0] * (n + 1))
    sigma = leaked_superposition(u, n)
    sigma = sigma / np.linalg.norm(sigma)
    targets = [ket("0" * (n + 1)), ket("1" + "0" * n)]
    return complete_to_unitary([zero_src, sigma], targets)


def build_t_n(u: InterfaceAnalysis, n_registers: int) -> GateSequence:
    w = build_w_n(u, n_registers)
    targets = tuple([I] + [register(k) for k in range(1, n_registers + 1)])
    return build_s_n(u, n_registers).then(GateSequence((RegisterUnitary(w, targets, "W_N"),), n_registers))


def run_ls(u: InterfaceAnalysis, n_registers: int, amplitudes: tuple[complex, complex] = (0.0, 1.0)) -> TransferReport:
    """Simulate the full program and measure the leftover leakage."""
    _require_beta_below_one(u)
    if not u.exploitable:
        raise AlgorithmError("interface is not exploitable")
    a, b = amplitudes
    psi = input_state(a, b, n_registers)
    psi = run_sequence(build_t_n(u, n_registers), u.matrix_elements, psi)
    return make_report(psi, a, b, u.beta ** (n_registers + 1))


def build_w_n_via_adjoint(u: InterfaceAnalysis, n_registers: int) -> GateSequence:
    """Inverse of the interaction program applied with R_S in place of S, then swap(R_S, I).

    Uses only U^dagger on (R_S, I) and swaps, on the layout with the extra
    register R_S.
    """
    _require_beta_below_one(u)
    n = n_registers
    rs = 2 + n
    steps = [ApplyInterface(True, (rs, I))]
    for k in range(n, 0, -1):
        steps += [Swap(I, register(k)), ApplyInterface(True, (rs, I))]
    steps.append(Swap(rs, I))
    return GateSequence(tuple(steps), n, has_rs=True)


def run_ls_via_adjoint(
    u: InterfaceAnalysis, n_registers: int, amplitudes: tuple[complex, complex] = (0.0, 1.0)
) -> TransferReport:
    _require_beta_below_one(u)
    a, b = amplitudes
    seq = build_s_n(u, n_registers, has_rs=True).then(build_w_n_via_adjoint(u, n_registers))
    psi = input_state(a, b, n_registers, has_rs=True)
    psi = run_sequence(seq, u.matrix_elements, psi)
    return make_report(psi, a, b, u.beta ** (n_registers + 1))


def ls_leakage_trace(u: InterfaceAnalysis, n_uses: int) -> list[float]:
    """xi after 1..n_uses interface uses, from the |1>_S branch alone.

    Every use meets a fresh |0>_I, and |0>_S|0>_I never leaks back, so the
    leaked branch evolves on S and I only. Exact for any W_N.
    """
    _require_u_star(u)
    m = u.matrix_elements
    amp = 1.0
    out = []
    for _ in range(n_uses):
        # |1>_S|0>_I -> leaked part m[2:4, 2], renormalized direction irrelevant
        amp *= float(np.linalg.norm(m[2:4, 2]))
        out.append(amp)
    return out
