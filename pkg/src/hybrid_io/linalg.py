"""Dense complex linear algebra used throughout the package.

Everything here works on plain numpy arrays. Matrices are 2-D complex arrays,
pure states are 1-D complex arrays whose tensor-factor layout is passed
explicitly as a tuple of subsystem dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

ZERO_TOL = 1e-10
EQ_TOL = 1e-12
COMPLETION_SKIP_TOL = 1e-8


class LinalgError(ValueError):
    """Raised on malformed linear-algebra input."""


class NotHermitianError(LinalgError):
    pass


class NotUnitaryError(LinalgError):
    pass


class DimensionError(LinalgError):
    pass


class NotOrthonormalError(LinalgError):
    pass


@dataclass(frozen=True)
class StateVector:
    """Pure state with an explicit tensor-factor layout."""

    amplitudes: np.ndarray
    subsystem_dims: tuple[int, ...]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        dims = tuple(int(d) for d in self.subsystem_dims)
        if int(np.prod(dims)) != amps.size:
            raise DimensionError(f"subsystem dims {dims} do not multiply to {amps.size}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = ZERO_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def is_unitary(u: np.ndarray, tol: float = ZERO_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return max_abs(u.conj().T @ u - np.eye(u.shape[0])) <= tol


def is_hermitian(h: np.ndarray, tol: float = ZERO_TOL) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    return max_abs(h - h.conj().T) <= tol


def require_unitary(u: np.ndarray, tol: float = ZERO_TOL, name: str = "matrix") -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u, tol):
        raise NotUnitaryError(f"{name} is not unitary within {tol:g}")
    return u


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of matrices or vectors, left factor most significant."""
    if not ops:
        raise DimensionError("tensor needs at least one operand")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def ket(bits: str | Sequence[int]) -> np.ndarray:
    """Computational basis state for a bit string such as "010"."""
    bits = [int(b) for b in bits]
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(map(str, bits)) or "0", 2)] = 1.0
    return v


def _density(state, dims: Sequence[int]) -> np.ndarray:
    if isinstance(state, StateVector):
        dims = state.subsystem_dims
        state = state.amplitudes
    state = np.asarray(state, dtype=complex)
    total = int(np.prod(dims))
    if state.ndim == 1:
        if state.size != total:
            raise DimensionError("state size does not match subsystem dims")
        return np.outer(state, state.conj())
    if state.shape != (total, total):
        raise DimensionError("density operator shape does not match subsystem dims")
    return state


def partial_trace(state, keep: Iterable[int], dims: Sequence[int] | None = None) -> np.ndarray:
    """Reduced density operator on the subsystems listed in ``keep``.

    ``state`` is a StateVector, a 1-D amplitude array or a density matrix.
    Kept subsystems appear in ascending index order in the result.
    """
    if isinstance(state, StateVector):
        dims = state.subsystem_dims
    if dims is None:
        raise DimensionError("subsystem dims are required")
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"invalid subsystem index in {keep} for {n} subsystems")
    traced = [i for i in range(n) if i not in keep]
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1

    if isinstance(state, StateVector):
        state = state.amplitudes
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        if state.size != int(np.prod(dims)):
            raise DimensionError("state size does not match subsystem dims")
        # contract directly on the amplitudes, avoids building the full projector
        psi = np.transpose(state.reshape(dims), keep + traced).reshape(kept_dim, -1)
        return psi @ psi.conj().T

    rho = _density(state, dims).reshape(dims + dims)
    perm = keep + traced
    rho = np.transpose(rho, perm + [p + n for p in perm])
    rest = int(np.prod([dims[t] for t in traced])) if traced else 1
    rho = rho.reshape(kept_dim, rest, kept_dim, rest)
    return np.einsum("ajbj->ab", rho)


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """e^{-i h t} through the spectral decomposition of ``h``."""
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise NotHermitianError("generator is not Hermitian within 1e-10")
    h = 0.5 * (h + h.conj().T)
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


def _check_orthonormal(vectors: np.ndarray, what: str) -> None:
    gram = vectors.conj().T @ vectors
    if max_abs(gram - np.eye(gram.shape[0])) > ZERO_TOL:
        raise NotOrthonormalError(f"{what} vectors are not orthonormal within 1e-10")


def extend_to_basis(columns: np.ndarray) -> np.ndarray:
    """Orthonormal basis whose leading columns are ``columns``.

    The remaining columns come from Gram-Schmidt over the canonical basis in
    index order, skipping candidates whose residual norm is below 1e-8.
    """
    columns = np.asarray(columns, dtype=complex)
    d, m = columns.shape
    q = np.zeros((d, d), dtype=complex)
    q[:, :m] = columns
    k = m
    for j in range(d):
        if k == d:
            break
        # e_j minus its projection, Q^dagger e_j is the conjugated row j
        r = -(q[:, :k] @ q[j, :k].conj())
        r[j] += 1.0
        r -= q[:, :k] @ (q[:, :k].conj().T @ r)
        nrm = np.linalg.norm(r)
        if nrm < COMPLETION_SKIP_TOL:
            continue
        q[:, k] = r / nrm
        k += 1
    if k != d:
        raise NotOrthonormalError("canonical completion failed to span the space")
    return q


def complete_to_unitary(sources: Sequence[np.ndarray], targets: Sequence[np.ndarray]) -> np.ndarray:
    """Unitary U with U @ sources[j] = targets[j].

    Both lists must be orthonormal. The unspecified part of U maps the
    canonical completion of the sources onto the canonical completion of the
    targets, so the result is deterministic.
    """
    if len(sources) != len(targets):
        raise DimensionError("sources and targets differ in length")
    if not sources:
        raise DimensionError("at least one source vector is required")
    s = np.column_stack([np.asarray(v, dtype=complex).reshape(-1) for v in sources])
    t = np.column_stack([np.asarray(v, dtype=complex).reshape(-1) for v in targets])
    if s.shape != t.shape:
        raise DimensionError("source and target vectors differ in dimension")
    _check_orthonormal(s, "source")
    _check_orthonormal(t, "target")
    return extend_to_basis(t) @ extend_to_basis(s).conj().T


def realign(u: np.ndarray, dims: tuple[int, int] = (2, 2)) -> np.ndarray:
    """Realignment of a bipartite operator, rows index A in/out, columns B."""
    da, db = dims
    return np.asarray(u).reshape(da, db, da, db).transpose(0, 2, 1, 3).reshape(da * da, db * db)


def operator_schmidt(u: np.ndarray) -> np.ndarray:
    """Operator Schmidt coefficients of a two-qubit operator, descending."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise DimensionError("operator_schmidt expects a 4x4 matrix")
    return np.linalg.svd(realign(u), compute_uv=False)


def schmidt_number(u: np.ndarray, tol: float = ZERO_TOL) -> int:
    return int(np.sum(operator_schmidt(u) > tol))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def random_state(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def orthocomplement(v: np.ndarray) -> np.ndarray:
    """Unit qubit vector orthogonal to the unit qubit vector ``v``."""
    return np.array([-np.conj(v[1]), np.conj(v[0])], dtype=complex)


def apply_gate(psi: np.ndarray, gate: np.ndarray, targets: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Apply ``gate`` to the listed subsystems of the flat state ``psi``.

    The gate's own tensor order follows the order of ``targets``.
    """
    dims = tuple(dims)
    targets = list(targets)
    k = len(targets)
    tdims = [dims[t] for t in targets]
    tensor_psi = np.asarray(psi, dtype=complex).reshape(dims)
    g = np.asarray(gate, dtype=complex).reshape(tdims + tdims)
    out = np.tensordot(g, tensor_psi, axes=(list(range(k, 2 * k)), targets))
    # tensordot puts the gate's output axes first; move them back in place
    out = np.moveaxis(out, list(range(k)), targets)
    return out.reshape(-1)


def embed_operator(gate: np.ndarray, targets: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Full matrix of ``gate`` acting on ``targets`` and identity elsewhere."""
    total = int(np.prod(dims))
    eye = np.eye(total, dtype=complex)
    cols = [apply_gate(eye[:, j], gate, targets, dims) for j in range(total)]
    return np.column_stack(cols)


def swap_matrix(d: int = 2) -> np.ndarray:
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1.0
    return s


I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
SWAP = swap_matrix(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
