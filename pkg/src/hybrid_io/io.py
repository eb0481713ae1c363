"""Output, target map and input composed into one channel on S and E.

The channel runs an output program T_out on S, I, R, a unitary target U_M
on I and an external system E, and an input program T_in that moves the
result back into S. Its distance to U_M acting directly on S and E is
estimated from the isometry reduction

    distance <= 2 sqrt(1 - min_Psi |F(Psi)|^2),
    F(Psi) = <Psi, 0| (U_M^{IE} T_out)^dagger T_in^dagger U_M^{SE} |Psi, 0>,

and compared with 2 sqrt(1 - Xi^2) where
Xi = -1 + sqrt(1 - xi_out^2) + sqrt(1 - xi_in^2) - xi_out xi_in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from .cs import build_cs_sequence, cs_bounds
from .cs import regime as cs_regime
from .interface import InterfaceAnalysis, analyze_in_basis, feasible_bases
from .linalg import (
    DimensionError,
    X,
    apply_gate,
    haar_unitary,
    is_unitary,
    ket,
    partial_trace,
    random_state,
)
from .ls import BETA_ONE_TOL, build_t_n
from .sampling import complete_columns
from .sequence import GateSequence, I, S, run_sequence

BOUND_SLACK = 1e-7
MAX_DIM_E = 4

Program = Union[GateSequence, np.ndarray]


class BoundViolation(AssertionError):
    """Measured distance exceeds the composition bound."""


def combined_accuracy(xi_out: float, xi_in: float) -> float:
    """Xi for the pair of leakage amplitudes."""
    return -1.0 + math.sqrt(1.0 - xi_out**2) + math.sqrt(1.0 - xi_in**2) - xi_out * xi_in


def composition_bound(xi_out: float, xi_in: float) -> float:
    big_xi = combined_accuracy(xi_out, xi_in)
    if big_xi < 0:
        return 2.0
    return 2.0 * math.sqrt(max(0.0, 1.0 - big_xi**2))


def _program_qubits(p: Program) -> int:
    if isinstance(p, GateSequence):
        return p.subsystem_count
    n = int(round(math.log2(p.shape[0])))
    if p.shape != (2**n, 2**n) or n < 2:
        raise DimensionError("dense programs must act on S, I and whole register qubits")
    return n


@dataclass(frozen=True)
class IoChannel:
    """Output program, target unitary on I and E, input program.

    Programs are gate sequences (run with ``interface``) or dense unitaries on
    S, I, R_1, ..., R_M. The shorter program is padded with idle registers.
    """

    output_seq: Program
    target_map: np.ndarray
    input_seq: Program
    xi_out: float
    xi_in: float
    interface: Optional[np.ndarray] = field(default=None, repr=False)
    dim_e: int = 2

    def __post_init__(self):
        if not (0.0 <= self.xi_out <= 1.0 and 0.0 <= self.xi_in <= 1.0):
            raise ValueError("leakage amplitudes must lie in [0, 1]")
        if not 1 <= self.dim_e <= MAX_DIM_E:
            raise ValueError(f"dim E must be between 1 and {MAX_DIM_E}")
        t = np.array(self.target_map, dtype=complex)
        if t.shape != (2 * self.dim_e,) * 2 or not is_unitary(t):
            raise DimensionError("target map must be a unitary on a qubit and E")
        object.__setattr__(self, "target_map", t)
        for name in ("output_seq", "input_seq"):
            p = getattr(self, name)
            if isinstance(p, GateSequence):
                if p.has_rs:
                    raise DimensionError("channel programs cannot use an extra R_S register")
                if p.interface_uses() and self.interface is None:
                    raise ValueError(f"{name} applies the interface but none was given")
            else:
                p = np.array(p, dtype=complex)
                if not is_unitary(p):
                    raise ValueError(f"{name} is not unitary")
                object.__setattr__(self, name, p)
            _program_qubits(getattr(self, name))

    @property
    def qubit_count(self) -> int:
        """Qubits in S, I and R together."""
        return max(_program_qubits(self.output_seq), _program_qubits(self.input_seq))

    @property
    def dims(self) -> tuple[int, ...]:
        return (2,) * self.qubit_count + (self.dim_e,)

    def bound(self) -> float:
        return composition_bound(self.xi_out, self.xi_in)


def _apply_program(p: Program, block: np.ndarray, n_qubits: int, interface, adjoint: bool = False) -> np.ndarray:
    """Apply ``p`` (padded to ``n_qubits``) to each column of ``block``.

    ``block`` has shape (2**n_qubits, k): the leading qubits of a state whose
    trailing factor (E) is folded into the columns.
    """
    own = _program_qubits(p)
    pad = 2 ** (n_qubits - own)
    cols = block.reshape(2**own, pad * block.shape[1])
    if isinstance(p, GateSequence):
        seq = p.adjoint() if adjoint else p
        out = np.column_stack([run_sequence(seq, interface, cols[:, j]) for j in range(cols.shape[1])])
    else:
        out = (p.conj().T if adjoint else p) @ cols
    return out.reshape(block.shape)


def _on_leading(ch: IoChannel, psi: np.ndarray, p: Program, adjoint: bool = False) -> np.ndarray:
    n = ch.qubit_count
    block = psi.reshape(2**n, ch.dim_e)
    return _apply_program(p, block, n, ch.interface, adjoint).reshape(-1)


def _target_on(ch: IoChannel, psi: np.ndarray, qubit: int, u_m: np.ndarray) -> np.ndarray:
    return apply_gate(psi, u_m, (qubit, ch.qubit_count), ch.dims)


def _embed_input(ch: IoChannel, vec_se: np.ndarray) -> np.ndarray:
    """|x>_SE -> |x>_SE |0>_IR in the layout S, I, R, E."""
    vec_se = np.asarray(vec_se, dtype=complex).reshape(2, ch.dim_e)
    out = np.zeros((2, 2 ** (ch.qubit_count - 1), ch.dim_e), dtype=complex)
    out[:, 0, :] = vec_se
    return out.reshape(-1)


def channel_isometry(ch: IoChannel, u_m: Optional[np.ndarray] = None) -> np.ndarray:
    """Columns are T_in U_M^{IE} T_out |x>_SE |0>_IR for the basis states x."""
    u_m = ch.target_map if u_m is None else u_m
    d = 2 * ch.dim_e
    cols = []
    for j in range(d):
        psi = _embed_input(ch, np.eye(d)[:, j])
        psi = _on_leading(ch, psi, ch.output_seq)
        psi = _target_on(ch, psi, I, u_m)
        psi = _on_leading(ch, psi, ch.input_seq)
        cols.append(psi)
    return np.column_stack(cols)


def _trace_ir(ch: IoChannel, v: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Tr_IR(V X V^dagger) on S and E."""
    d_ir = 2 ** (ch.qubit_count - 1)
    big = v @ x @ v.conj().T
    t = big.reshape(2, d_ir, ch.dim_e, 2, d_ir, ch.dim_e)
    return np.einsum("aibcid->abcd", t).reshape(2 * ch.dim_e, 2 * ch.dim_e)


def compose_phi(ch: IoChannel, state: np.ndarray) -> np.ndarray:
    """Density operator on S and E after output, target map and input.

    ``state`` is a pure state vector or a density matrix on S and E.
    """
    d = 2 * ch.dim_e
    x = np.asarray(state, dtype=complex)
    if x.ndim == 1:
        if x.size != d:
            raise DimensionError(f"input state must have dimension {d}")
        if abs(np.linalg.norm(x) - 1.0) > 1e-10:
            raise ValueError("input state is not normalized")
        x = np.outer(x, x.conj())
    elif x.shape != (d, d):
        raise DimensionError(f"input operator must be {d}x{d}")
    return _trace_ir(ch, channel_isometry(ch), x)


def choi_matrix(ch: IoChannel) -> np.ndarray:
    """sum_ij |i><j| (x) Phi(|i><j|) with the reference factor first."""
    d = 2 * ch.dim_e
    v = channel_isometry(ch)
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            choi += np.kron(e, _trace_ir(ch, v, e))
    return choi


def overlap_operator(ch: IoChannel, u_m: Optional[np.ndarray] = None) -> np.ndarray:
    """Matrix A on S and E with F(Psi) = <Psi| A |Psi>."""
    u_m = ch.target_map if u_m is None else u_m
    d = 2 * ch.dim_e
    first, second = [], []
    for j in range(d):
        psi = _embed_input(ch, np.eye(d)[:, j])
        # U_M on S and E, then the adjoint of the input program
        p2 = _target_on(ch, psi, S, u_m)
        second.append(_on_leading(ch, p2, ch.input_seq, adjoint=True))
        # the output program, then U_M on I and E
        p1 = _on_leading(ch, psi, ch.output_seq)
        first.append(_target_on(ch, p1, I, u_m))
    return np.column_stack(first).conj().T @ np.column_stack(second)


@dataclass(frozen=True)
class BoundReport:
    xi_out: float
    xi_in: float
    Xi: float
    bound: float
    measured_distance: float
    samples: int
    min_abs_overlap: float = 1.0
    converged: bool = True
    minimizer: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def holds(self) -> bool:
        return self.measured_distance <= self.bound + BOUND_SLACK

    @property
    def ratio(self) -> float:
        return self.measured_distance / self.bound if self.bound > 0 else 0.0


def _abs2_form(a: np.ndarray):
    """|z^dag A z / z^dag z|^2 and its gradient in the real coordinates (Re z, Im z)."""
    d = a.shape[0]
    a_dag = a.conj().T

    def f(x):
        z = x[:d] + 1j * x[d:]
        n = np.vdot(z, z).real
        az = a @ z
        v = np.vdot(z, az) / n
        # derivative with respect to conj(z); real gradient is (2 Re, 2 Im)
        dz = (np.conj(v) * (az - v * z) + v * (a_dag @ z - np.conj(v) * z)) / n
        return float(abs(v) ** 2), np.concatenate([2 * dz.real, 2 * dz.imag])

    return f


def min_overlap(a: np.ndarray, starts: int, rng: np.random.Generator, tail: Optional[np.ndarray] = None):
    """Approximate min over unit z of |z^dag A z| by multi-start local search.

    ``tail`` restricts extra starts to a subspace given by its orthonormal
    columns (used for the |1>_S family).
    Returns (value, minimizer, converged).
    """
    d = a.shape[0]
    f = _abs2_form(a)
    best = (np.inf, None, False)
    candidates = [random_state(d, rng) for _ in range(starts)]
    if tail is not None:
        k = tail.shape[1]
        candidates += [tail @ random_state(k, rng) for _ in range(max(4, starts // 4))]
        candidates += [tail[:, j] for j in range(k)]
    for z in candidates:
        x0 = np.concatenate([z.real, z.imag])
        res = minimize(f, x0, jac=True, method="BFGS", options={"gtol": 1e-12, "maxiter": 400})
        if res.fun < best[0]:
            z = res.x[:d] + 1j * res.x[d:]
            best = (float(res.fun), z / np.linalg.norm(z), bool(res.success) or res.fun < 1e-20)
    val, z, ok = best
    return math.sqrt(max(val, 0.0)), z, ok


def verify_composition_bound(
    ch: IoChannel,
    u_m: Optional[np.ndarray] = None,
    sample_budget: int = 16,
    rng: Optional[np.random.Generator] = None,
    strict: bool = False,
) -> BoundReport:
    """Estimate the channel distance and compare it with the bound.

    The minimum over pure |Psi>_SE uses ``sample_budget`` random starts plus
    starts on the |1>_S subspace. With ``strict`` a violation raises.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    u_m = ch.target_map if u_m is None else np.asarray(u_m, dtype=complex)
    if u_m.shape != (2 * ch.dim_e,) * 2 or not is_unitary(u_m):
        raise DimensionError("target must be a unitary on S and E")
    a = overlap_operator(ch, u_m)
    tail = np.eye(2 * ch.dim_e, dtype=complex)[:, ch.dim_e :]
    m, z, ok = min_overlap(a, sample_budget, rng, tail)
    measured = 2.0 * math.sqrt(max(0.0, 1.0 - m**2))
    report = BoundReport(
        xi_out=ch.xi_out,
        xi_in=ch.xi_in,
        Xi=combined_accuracy(ch.xi_out, ch.xi_in),
        bound=ch.bound(),
        measured_distance=measured,
        samples=sample_budget,
        min_abs_overlap=m,
        converged=ok,
        minimizer=z,
    )
    if strict and not report.holds:
        raise BoundViolation(f"measured {measured:.3e} exceeds bound {report.bound:.3e}")
    return report


def leaky_transfer(xi: float, n_registers: int, rng: np.random.Generator) -> np.ndarray:
    """Random unitary on S, I, R_1..R_M with the leaky output form.

    |0,0,0..> is fixed and |1,0,0..> goes to sqrt(1 - xi^2)|0,1,0..> + xi|1>|g>
    with |g> random on I and R; the rest of the unitary is Haar random.
    """
    if not 0.0 <= xi <= 1.0:
        raise ValueError("xi must lie in [0, 1]")
    n = 2 + n_registers
    d = 2**n
    half = d // 2
    g = random_state(half, rng)
    col1 = np.zeros(d, dtype=complex)
    col1[half // 2] = math.sqrt(1.0 - xi**2)
    col1[half:] = xi * g
    return complete_columns({0: np.eye(d, dtype=complex)[:, 0], half: col1}, rng)


def synthetic_channel(
    xi_out: float,
    xi_in: float,
    rng: np.random.Generator,
    target_map: Optional[np.ndarray] = None,
    n_registers: int = 1,
    dim_e: int = 2,
) -> IoChannel:
    """Channel built from random leaky transfers with the given amplitudes."""
    t_out = leaky_transfer(xi_out, n_registers, rng)
    t_in = leaky_transfer(xi_in, n_registers, rng).conj().T
    u_m = haar_unitary(2 * dim_e, rng) if target_map is None else target_map
    return IoChannel(t_out, u_m, t_in, xi_out, xi_in, dim_e=dim_e)


def _random_unitary_from(params: np.ndarray, d: int) -> np.ndarray:
    h = np.zeros((d, d), dtype=complex)
    iu = np.triu_indices(d, 1)
    n_off = len(iu[0])
    h[iu] = params[:n_off] + 1j * params[n_off : 2 * n_off]
    h = h + h.conj().T
    h[np.diag_indices(d)] = params[2 * n_off :]
    return expm(-1j * h)


@dataclass(frozen=True)
class TightnessProbe:
    xi_in: float
    bound: float
    best_distance: float
    best_target: np.ndarray = field(repr=False)

    @property
    def ratio(self) -> float:
        return self.best_distance / self.bound if self.bound > 0 else 1.0


def tightness_probe(
    xi_in: float,
    rng: np.random.Generator,
    random_targets: int = 8,
    refine_iterations: int = 200,
    dim_e: int = 2,
) -> TightnessProbe:
    """Search for a target unitary maximizing the distance at xi_out = 0.

    Candidates are a bit flip on S, random unitaries and a Nelder-Mead
    refinement of the best of them.
    """
    ch = synthetic_channel(0.0, xi_in, rng, dim_e=dim_e)
    d = 2 * dim_e

    def distance(u_m):
        return verify_composition_bound(ch, u_m, sample_budget=6, rng=np.random.default_rng(1)).measured_distance

    cands = [np.kron(X, np.eye(dim_e))] + [haar_unitary(d, rng) for _ in range(random_targets)]
    scores = [distance(u) for u in cands]
    best_i = int(np.argmax(scores))
    best_u, best_d = cands[best_i], scores[best_i]
    if refine_iterations > 0:
        base = best_u

        def neg(p):
            return -distance(base @ _random_unitary_from(p, d))

        res = minimize(neg, np.zeros(d * d), method="Nelder-Mead", options={"maxiter": refine_iterations})
        if -res.fun > best_d:
            best_u, best_d = base @ _random_unitary_from(res.x, d), float(-res.fun)
    return TightnessProbe(xi_in, ch.bound(), best_d, best_u)


# --- input programs from the adjoint interface --------------------------------


class InputDiagnostic(str, Enum):
    OK = "ok"
    NO_COMMON_BASIS = "no_common_feasible_basis"
    CONTROLLED_BLOCK_FORM = "controlled_block_form"
    FIRST_FAMILY_DECOUPLED = "first_family_decoupled"
    INTERFACE_NOT_EXPLOITABLE = "interface_not_exploitable"
    ADJOINT_NOT_EXPLOITABLE = "adjoint_not_exploitable"


@dataclass(frozen=True)
class InputSynthesis:
    """Input program for U built from the output program of U^dagger.

    ``sequence`` is None when no common exploitable basis exists; it is run
    with ``interface`` (U in ``analysis.basis``).
    """

    sequence: Optional[GateSequence]
    diagnostic: InputDiagnostic
    analysis: Optional[InterfaceAnalysis] = None
    adjoint_analysis: Optional[InterfaceAnalysis] = None
    algorithm: str = ""
    xi_in: float = 1.0

    @property
    def interface(self) -> Optional[np.ndarray]:
        return None if self.analysis is None else self.analysis.matrix_elements


def _structure(fwd: InterfaceAnalysis) -> InputDiagnostic:
    """Why a basis feasible for both U and U^dagger is still unusable."""
    m = fwd.matrix_elements
    tol = 1e-9
    first = max(abs(m[0, 1]), abs(m[1, 0]), abs(m[0, 2]), abs(m[0, 3])) < tol
    block = np.max(np.abs(m[:2, 2:])) < tol and np.max(np.abs(m[2:, :2])) < tol
    if block:
        return InputDiagnostic.CONTROLLED_BLOCK_FORM
    if first and abs(m[1, 2]) < tol and abs(m[1, 3]) < tol:
        return InputDiagnostic.FIRST_FAMILY_DECOUPLED
    if not fwd.exploitable:
        return InputDiagnostic.INTERFACE_NOT_EXPLOITABLE
    return InputDiagnostic.ADJOINT_NOT_EXPLOITABLE


def _output_program(a: InterfaceAnalysis, n: int, algorithm: str) -> tuple[GateSequence, float, str]:
    if algorithm == "auto":
        algorithm = "ls" if a.beta < 1.0 - BETA_ONE_TOL else "cs"
    if algorithm == "ls":
        return build_t_n(a, n), a.beta ** (n + 1), "ls"
    uses = max(2, n + 1)
    return build_cs_sequence(a, uses), cs_bounds(a, uses).upper, "cs"


def synthesize_input(u: np.ndarray, n_registers: int = 4, algorithm: str = "auto") -> InputSynthesis:
    """Input program using only U, register unitaries and swaps.

    Looks for a local basis in which both U and U^dagger are exploitable,
    builds the LS (or CS) output program of U^dagger there and returns its
    adjoint rewritten in terms of U. For CS, ``n_registers + 1`` interface
    uses are made and ``xi_in`` is the upper bound for that count.
    """
    u = np.asarray(u, dtype=complex)
    u_dag = u.conj().T
    candidates = feasible_bases(u) + feasible_bases(u_dag)
    seen_any = False
    for c in candidates:
        fwd = analyze_in_basis(u, c.basis)
        bwd = analyze_in_basis(u_dag, c.basis)
        if not (fwd.in_u_star and bwd.in_u_star):
            continue
        seen_any = True
        if not (fwd.exploitable and bwd.exploitable):
            continue
        if algorithm == "ls" and bwd.beta >= 1.0 - BETA_ONE_TOL:
            continue
        seq, xi, alg = _output_program(bwd, n_registers, algorithm)
        if alg == "cs" and cs_regime(bwd).value == "not_exploitable":
            continue
        return InputSynthesis(seq.adjoint().rebased_on_adjoint(), InputDiagnostic.OK, fwd, bwd, alg, float(xi))
    if not seen_any:
        return InputSynthesis(None, InputDiagnostic.NO_COMMON_BASIS)
    for c in candidates:
        fwd = analyze_in_basis(u, c.basis)
        if fwd.in_u_star and analyze_in_basis(u_dag, c.basis).in_u_star:
            return InputSynthesis(None, _structure(fwd), fwd, analyze_in_basis(u_dag, c.basis))
    return InputSynthesis(None, InputDiagnostic.NO_COMMON_BASIS)


def transferred_qubit_state(ch: IoChannel, state_s: np.ndarray) -> np.ndarray:
    """Reduced state of I after the output program alone, input |state>_S."""
    psi = np.kron(np.asarray(state_s, dtype=complex), ket("0" * (ch.qubit_count - 1)))
    psi = _apply_program(ch.output_seq, psi.reshape(-1, 1), ch.qubit_count, ch.interface)[:, 0]
    return partial_trace(psi, [I], (2,) * ch.qubit_count)
