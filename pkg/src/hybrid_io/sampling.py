"""Random interface unitaries with prescribed structure in the computational basis."""

from __future__ import annotations

import numpy as np

from .linalg import haar_unitary, orthocomplement, random_state

REGIMES = ("B0", "A", "B1", "B2")


def complete_columns(fixed: dict[int, np.ndarray], rng: np.random.Generator) -> np.ndarray:
    """Unitary with the given orthonormal columns and Haar-random remaining ones."""
    cols = sorted(fixed)
    f = np.column_stack([fixed[c] for c in cols])
    d = f.shape[0]
    # random unitary on the orthogonal complement of the fixed columns
    proj = np.eye(d) - f @ f.conj().T
    g = proj @ (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    q, _ = np.linalg.qr(np.column_stack([f, g]))
    rest = q[:, len(cols) : d]
    if d > len(cols):
        rest = rest @ haar_unitary(d - len(cols), rng)
    out = np.zeros((d, d), dtype=complex)
    free = [c for c in range(d) if c not in fixed]
    for c in cols:
        out[:, c] = fixed[c]
    for j, c in enumerate(free):
        out[:, c] = rest[:, j]
    return out


def random_feasible_unitary(rng: np.random.Generator, regime: str = "B0") -> np.ndarray:
    """Unitary that is in feasible form in the computational basis.

    ``regime`` selects the structure of the |1>_S columns:
    "B0" generic, "A" with phi parallel to psi0, "B1" with omega = 1 and
    "B2" with beta = 1.
    """
    psi0 = random_state(2, rng)
    fixed = {0: np.concatenate([psi0, np.zeros(2)])}
    if regime == "B1":
        fixed[3] = np.concatenate([np.zeros(2), random_state(2, rng)])
    elif regime == "B2":
        fixed[2] = np.concatenate([np.zeros(2), random_state(2, rng)])
    elif regime == "A":
        beta = rng.uniform(0.05, 0.95)
        alpha = np.sqrt(1 - beta**2)
        psi1 = orthocomplement(psi0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        chi = rng.uniform(0, 2 * np.pi)
        fixed[2] = np.concatenate([alpha * psi1, beta * np.exp(1j * chi) * psi0])
    elif regime != "B0":
        raise ValueError(f"unknown regime {regime!r}")
    return complete_columns(fixed, rng)


def first_family_unitary(rng: np.random.Generator) -> np.ndarray:
    """Phase on |00> and a random unitary on span{|01>, |10>, |11>}.

    Both U and U^dagger are then in feasible form in the computational basis.
    """
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = np.exp(1j * rng.uniform(0, 2 * np.pi))
    u[1:, 1:] = haar_unitary(3, rng)
    return u


def second_family_unitary(rng: np.random.Generator) -> np.ndarray:
    """Block form diag(A, B) with A fixing |0>_I up to phase; a controlled gate."""
    a = np.diag([np.exp(1j * rng.uniform(0, 2 * np.pi)), np.exp(1j * rng.uniform(0, 2 * np.pi))])
    b = haar_unitary(2, rng)
    u = np.zeros((4, 4), dtype=complex)
    u[:2, :2] = a
    u[2:, 2:] = b
    return u


def feasible_unitary_with_beta(beta: float, rng: np.random.Generator) -> np.ndarray:
    """Feasible-form unitary whose beta in the computational basis is ``beta``."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    psi0 = random_state(2, rng)
    psi1 = orthocomplement(psi0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    phi = random_state(2, rng)
    alpha = np.sqrt(1 - beta**2)
    fixed = {0: np.concatenate([psi0, np.zeros(2)]), 2: np.concatenate([alpha * psi1, beta * phi])}
    return complete_columns(fixed, rng)
