"""Gate programs over S, I, R_1..R_N (and an optional extra register R_S).

Subsystem order in every statevector is S, I, R_1, ..., R_N, R_S.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .linalg import (
    ZERO_TOL,
    DimensionError,
    apply_gate,
    expm_hermitian,
    is_unitary,
    require_unitary,
)

S = 0
I = 1


def register(k: int) -> int:
    """Subsystem index of register qubit R_k (1-based)."""
    return 1 + k


@dataclass(frozen=True)
class ApplyInterface:
    """U (or U^dagger) on a pair of subsystems, (S, I) unless stated."""

    adjoint: bool = False
    targets: tuple[int, int] = (S, I)


@dataclass(frozen=True)
class Swap:
    first: int
    second: int


@dataclass(frozen=True)
class RegisterUnitary:
    matrix: np.ndarray = field(repr=False)
    targets: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))


@dataclass(frozen=True)
class Wait:
    duration: float


Step = Union[ApplyInterface, Swap, RegisterUnitary, Wait]


@dataclass(frozen=True)
class GateSequence:
    steps: tuple[Step, ...]
    register_count: int
    has_rs: bool = False

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        n_sub = self.subsystem_count
        for st in self.steps:
            if isinstance(st, RegisterUnitary):
                if any(t < I or t >= n_sub for t in st.targets):
                    raise DimensionError(f"register unitary targets {st.targets} outside I and R")
                if st.matrix.shape != (2 ** len(st.targets),) * 2:
                    raise DimensionError("register unitary size does not match its targets")
                if not is_unitary(st.matrix):
                    raise ValueError("register unitary is not unitary within 1e-10")
            elif isinstance(st, Swap):
                if not (0 <= st.first < n_sub and 0 <= st.second < n_sub) or st.first == st.second:
                    raise DimensionError(f"invalid swap {st}")
            elif isinstance(st, ApplyInterface):
                if any(t < 0 or t >= n_sub for t in st.targets) or st.targets[0] == st.targets[1]:
                    raise DimensionError(f"invalid interface targets {st.targets}")

    @property
    def subsystem_count(self) -> int:
        return 2 + self.register_count + (1 if self.has_rs else 0)

    @property
    def dims(self) -> tuple[int, ...]:
        return (2,) * self.subsystem_count

    @property
    def rs_index(self) -> Optional[int]:
        return self.subsystem_count - 1 if self.has_rs else None

    def interface_uses(self) -> int:
        return sum(isinstance(s, ApplyInterface) for s in self.steps)

    def then(self, other: "GateSequence") -> "GateSequence":
        if (other.register_count, other.has_rs) != (self.register_count, self.has_rs):
            raise DimensionError("cannot concatenate sequences with different layouts")
        return GateSequence(self.steps + other.steps, self.register_count, self.has_rs)

    def adjoint(self) -> "GateSequence":
        """Inverse program; waits cannot be reversed."""
        out: list[Step] = []
        for st in reversed(self.steps):
            if isinstance(st, ApplyInterface):
                out.append(ApplyInterface(not st.adjoint, st.targets))
            elif isinstance(st, RegisterUnitary):
                out.append(RegisterUnitary(st.matrix.conj().T, st.targets, st.label))
            elif isinstance(st, Swap):
                out.append(st)
            else:
                raise ValueError("a sequence containing Wait steps has no adjoint")
        return GateSequence(tuple(out), self.register_count, self.has_rs)

    def rebased_on_adjoint(self) -> "GateSequence":
        """Same program with the roles of U and U^dagger exchanged.

        A sequence written for the interface V = U^dagger becomes one written
        for U.
        """
        steps = tuple(
            ApplyInterface(not s.adjoint, s.targets) if isinstance(s, ApplyInterface) else s for s in self.steps
        )
        return GateSequence(steps, self.register_count, self.has_rs)

    def with_registers(self, register_count: int, has_rs: bool | None = None) -> "GateSequence":
        """Relabel onto a larger layout; indices of S, I and R_k are unchanged."""
        has_rs = self.has_rs if has_rs is None else has_rs
        if register_count < self.register_count or (self.has_rs and not has_rs):
            raise DimensionError("can only widen a layout")
        if self.has_rs and register_count != self.register_count:
            raise DimensionError("cannot move R_S")
        return GateSequence(self.steps, register_count, has_rs)


def run_sequence(
    seq: GateSequence,
    interface: np.ndarray,
    state: np.ndarray,
    h_s: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Propagate a flat statevector through ``seq``.

    ``interface`` is the 4x4 U in the basis used for the register layout.
    ``h_s`` is the free Hamiltonian of S acting during Wait steps.
    """
    u = require_unitary(interface, name="interface unitary")
    dims = seq.dims
    psi = np.asarray(state, dtype=complex).reshape(-1)
    if psi.size != 2 ** len(dims):
        raise DimensionError("state dimension does not match the sequence layout")
    u_dag = u.conj().T
    swap_gate = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
    for st in seq.steps:
        if isinstance(st, ApplyInterface):
            psi = apply_gate(psi, u_dag if st.adjoint else u, st.targets, dims)
        elif isinstance(st, Swap):
            psi = apply_gate(psi, swap_gate, (st.first, st.second), dims)
        elif isinstance(st, RegisterUnitary):
            psi = apply_gate(psi, st.matrix, st.targets, dims)
        elif isinstance(st, Wait):
            if h_s is not None and st.duration != 0:
                psi = apply_gate(psi, expm_hermitian(h_s, st.duration), (S,), dims)
    return psi


def sequence_unitary(seq: GateSequence, interface: np.ndarray, h_s: Optional[np.ndarray] = None) -> np.ndarray:
    """Dense matrix of the whole program."""
    d = 2**seq.subsystem_count
    eye = np.eye(d, dtype=complex)
    return np.column_stack([run_sequence(seq, interface, eye[:, j], h_s) for j in range(d)])


def input_state(a: complex, b: complex, register_count: int, has_rs: bool = False) -> np.ndarray:
    """(a|0> + b|1>)_S with every other qubit in |0>."""
    if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > ZERO_TOL:
        raise ValueError("input amplitudes are not normalized")
    n_rest = 1 + register_count + (1 if has_rs else 0)
    psi = np.zeros(2 ** (1 + n_rest), dtype=complex)
    psi[0] = a
    psi[2**n_rest] = b
    return psi


def register_vector(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out
