"""Feasible-basis search, derived quantities and exploitability of a two-qubit interface.

Index convention: ``u[2*i + j, 2*k + l]`` is the element <i j| U |k l> with the
first factor the physical qubit S and the second the interface qubit I.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import least_squares, minimize

from .linalg import (
    ZERO_TOL,
    DimensionError,
    is_unitary,
    max_abs,
    orthocomplement,
    require_unitary,
    tensor,
)

DEGENERACY_TOL = 1e-9
FEASIBLE_RESIDUAL = 1e-16
_POLY_TOL = 1e-12
_CONTINUUM_STARTS = 64


@dataclass(frozen=True)
class LocalBasis:
    """Columns of ``basis_s`` and ``basis_i`` are the |0>, |1> vectors of S and I."""

    basis_s: np.ndarray
    basis_i: np.ndarray

    def __post_init__(self):
        for name in ("basis_s", "basis_i"):
            m = np.array(getattr(self, name), dtype=complex)
            if m.shape != (2, 2) or not is_unitary(m):
                raise ValueError(f"{name} must be a 2x2 unitary")
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @classmethod
    def computational(cls) -> "LocalBasis":
        return cls(np.eye(2), np.eye(2))

    @classmethod
    def from_vectors(cls, zero_s: np.ndarray, zero_i: np.ndarray) -> "LocalBasis":
        """Basis whose |0> vectors are the given ones, |1> the canonical orthocomplement."""
        cols = []
        for v in (zero_s, zero_i):
            v = _canonical_phase(np.asarray(v, dtype=complex))
            cols.append(np.column_stack([v, orthocomplement(v)]))
        return cls(cols[0], cols[1])

    @property
    def matrix(self) -> np.ndarray:
        return tensor(self.basis_s, self.basis_i)

    def bloch_angles(self) -> tuple[float, float, float, float]:
        """(theta_S, phi_S, theta_I, phi_I) of the two |0> vectors."""
        return (*_bloch(self.basis_s[:, 0]), *_bloch(self.basis_i[:, 0]))


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    k = 0 if abs(v[0]) > 1e-14 else 1
    return v * np.exp(-1j * np.angle(v[k]))


def _bloch(v: np.ndarray) -> tuple[float, float]:
    v = _canonical_phase(v)
    theta = 2.0 * np.arccos(np.clip(abs(v[0]), 0.0, 1.0))
    phi = float(np.angle(v[1]) - np.angle(v[0])) % (2 * np.pi) if abs(v[1]) > 1e-14 else 0.0
    return float(theta), phi


def _from_bloch(theta: float, phi: float) -> np.ndarray:
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=complex)


def _unit_or_none(v: np.ndarray) -> tuple[float, Optional[np.ndarray]]:
    n = float(np.linalg.norm(v))
    return n, (v / n if n > ZERO_TOL else None)


@dataclass(frozen=True)
class InterfaceAnalysis:
    """Matrix elements and derived scalars/states of U in one local basis."""

    matrix_elements: np.ndarray
    basis: LocalBasis
    alpha: float
    beta: float
    gamma: complex
    omega: float
    psi0: np.ndarray
    psi1: Optional[np.ndarray]
    phi: Optional[np.ndarray]
    phi_prime: Optional[np.ndarray]
    overlap_psi0_phi: complex
    unitary: np.ndarray = field(repr=False)

    def element(self, i: int, j: int, k: int, l: int) -> complex:
        return complex(self.matrix_elements[2 * i + j, 2 * k + l])

    @property
    def feasibility_residual(self) -> float:
        """|u_{10,00}|^2 + |u_{11,00}|^2."""
        col = self.matrix_elements[:, 0]
        return float(abs(col[2]) ** 2 + abs(col[3]) ** 2)

    @property
    def in_u_star(self) -> bool:
        return self.feasibility_residual < 1e-16

    @property
    def is_degenerate(self) -> bool:
        """The non-exploitable corner: beta = 1 and (|<psi0|phi>| = 1 or omega = 1)."""
        return degeneracy_reason(self) is not None

    @property
    def exploitable(self) -> bool:
        return self.in_u_star and not self.is_degenerate

    def adjoint(self) -> "InterfaceAnalysis":
        """Analysis of U^dagger in the same local basis."""
        return analyze_in_basis(self.unitary.conj().T, self.basis)


def analyze_in_basis(u: np.ndarray, basis: Optional[LocalBasis] = None) -> InterfaceAnalysis:
    """Matrix elements of ``u`` in ``basis`` and the quantities derived from them."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise DimensionError("interface unitary must be 4x4")
    require_unitary(u, name="interface unitary")
    basis = basis or LocalBasis.computational()
    b = basis.matrix
    m = b.conj().T @ u @ b

    psi0 = m[0:2, 0].copy()
    psi1_t = m[0:2, 2]
    phi_t = m[2:4, 2]
    phi_prime_t = m[2:4, 3]
    gamma_vec = m[0:2, 3]

    alpha, psi1 = _unit_or_none(psi1_t)
    beta, phi = _unit_or_none(phi_t)
    omega, phi_prime = _unit_or_none(phi_prime_t)
    if psi1 is not None:
        gamma = complex(np.vdot(psi1, gamma_vec))
    else:
        g_norm, psi1 = _unit_or_none(gamma_vec)
        gamma = complex(g_norm) if psi1 is not None else 0j
    overlap = complex(np.vdot(psi0, phi)) if phi is not None else 0j

    m.setflags(write=False)
    return InterfaceAnalysis(
        matrix_elements=m,
        basis=basis,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        omega=omega,
        psi0=psi0,
        psi1=psi1,
        phi=phi,
        phi_prime=phi_prime,
        overlap_psi0_phi=overlap,
        unitary=u.copy(),
    )


class FailureReason(str, Enum):
    NO_FEASIBLE_BASIS = "no_feasible_basis"
    CONTROLLED_UNITARY_DEGENERATE = "controlled_unitary_degenerate"
    BETA_ONE_AND_OVERLAP_ONE = "beta_one_and_overlap_one"
    BETA_ONE_AND_OMEGA_ONE = "beta_one_and_omega_one"


def degeneracy_reason(a: InterfaceAnalysis) -> Optional[FailureReason]:
    one = 1.0 - DEGENERACY_TOL
    if a.alpha < ZERO_TOL and abs(a.gamma) < ZERO_TOL:
        return FailureReason.CONTROLLED_UNITARY_DEGENERATE
    if a.beta >= one:
        if abs(a.overlap_psi0_phi) >= one:
            return FailureReason.BETA_ONE_AND_OVERLAP_ONE
        if a.omega >= one:
            return FailureReason.BETA_ONE_AND_OMEGA_ONE
    return None


@dataclass(frozen=True)
class ExploitabilityVerdict:
    in_u_star: bool
    exploitable: bool
    feasible_basis: Optional[LocalBasis]
    failure_reason: Optional[FailureReason]
    analysis: Optional[InterfaceAnalysis] = None


# --- feasible basis search -------------------------------------------------
#
# For |0>_S = a and |1>_S = a_perp the S-block <a_perp| U |a> is a 2x2 matrix
# M(a) on I. A basis is feasible iff M(a) has a kernel vector b, which then
# serves as |0>_I. With a = (1, z), conj(a_perp) = (-z, 1) so M is a quadratic
# polynomial in z and det M(z) a quartic with the point z = inf included
# projectively. Its roots are the candidate S vectors.


def _blocks(u: np.ndarray):
    return [[u[2 * p : 2 * p + 2, 2 * q : 2 * q + 2] for q in range(2)] for p in range(2)]


def _s_block(u: np.ndarray, a: np.ndarray) -> np.ndarray:
    """<a_perp|_S U |a>_S as a 2x2 matrix on I."""
    ap = orthocomplement(a)
    b = _blocks(u)
    return sum(np.conj(ap[p]) * a[q] * b[p][q] for p in range(2) for q in range(2))


def _leak_block(u: np.ndarray, a: np.ndarray) -> np.ndarray:
    """<a_perp|_S U |a_perp>_S; applied to |0>_I it gives the beta-vector."""
    ap = orthocomplement(a)
    b = _blocks(u)
    return sum(np.conj(ap[p]) * ap[q] * b[p][q] for p in range(2) for q in range(2))


def _det_polynomial(u: np.ndarray) -> np.ndarray:
    """Coefficients (ascending powers of z) of det M(1, z), length 5."""
    b = _blocks(u)
    # M(z) = B10 + (B11 - B00) z - B01 z^2
    c = [b[1][0], b[1][1] - b[0][0], -b[0][1]]
    entry = lambda i, j: np.array([c[0][i, j], c[1][i, j], c[2][i, j]])
    poly = np.polynomial.polynomial
    det = poly.polysub(poly.polymul(entry(0, 0), entry(1, 1)), poly.polymul(entry(0, 1), entry(1, 0)))
    out = np.zeros(5, dtype=complex)
    out[: len(det)] = det
    return out


def _candidate_s_vectors(poly: np.ndarray) -> list[np.ndarray]:
    coeffs = poly.copy()
    top = 4
    while top > 0 and abs(coeffs[top]) < _POLY_TOL:
        top -= 1
    vecs = []
    if top > 0:
        for z in np.polynomial.polynomial.polyroots(coeffs[: top + 1]):
            v = np.array([1.0, z], dtype=complex)
            vecs.append(v / np.linalg.norm(v))
    if top < 4:
        # degree drop means roots at infinity, i.e. a = |1>
        vecs.append(np.array([0.0, 1.0], dtype=complex))
    return vecs


def _best_i_vector(u: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Kernel vector of M(a); if M(a) vanishes pick the beta-minimizing one."""
    m = _s_block(u, a)
    _, s, vh = np.linalg.svd(m)
    if s[0] < 1e-7:
        # every b is feasible; beta = |L b| so take the weakest direction of L
        _, _, lvh = np.linalg.svd(_leak_block(u, a))
        return _canonical_phase(lvh[-1].conj())
    return _canonical_phase(vh[-1].conj())


def _residual_angles(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    a = _from_bloch(x[0], x[1])
    b = _from_bloch(x[2], x[3])
    r = _s_block(u, a) @ b
    return np.concatenate([r.real, r.imag])


def _polish(u: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x0 = np.array([*_bloch(a), *_bloch(b)])
    res0 = float(np.sum(_residual_angles(x0, u) ** 2))
    if res0 < 1e-30:
        return a, b
    sol = least_squares(_residual_angles, x0, args=(u,), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if float(np.sum(sol.fun**2)) < res0:
        return _from_bloch(sol.x[0], sol.x[1]), _from_bloch(sol.x[2], sol.x[3])
    return a, b


def _fibonacci_sphere(n: int) -> list[tuple[float, float]]:
    golden = np.pi * (3.0 - np.sqrt(5.0))
    pts = []
    for k in range(n):
        zc = 1.0 - 2.0 * (k + 0.5) / n
        pts.append((float(np.arccos(zc)), float((golden * k) % (2 * np.pi))))
    return pts


def _continuum_candidates(u: np.ndarray) -> list[np.ndarray]:
    """Every S vector is feasible; locally minimize beta from a spherical grid."""

    def beta_of(x):
        a = _from_bloch(x[0], x[1])
        b = _best_i_vector(u, a)
        return float(np.linalg.norm(_leak_block(u, a) @ b))

    out = []
    for theta, phi in _fibonacci_sphere(_CONTINUUM_STARTS):
        sol = minimize(beta_of, np.array([theta, phi]), method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-13})
        out.append(_from_bloch(sol.x[0], sol.x[1]))
    return out


def feasible_bases(u: np.ndarray) -> list[InterfaceAnalysis]:
    """All distinct feasible bases found for ``u``, ordered by (beta, Bloch angles)."""
    u = require_unitary(u, name="interface unitary")
    poly = _det_polynomial(u)
    if max_abs(poly) < _POLY_TOL:
        s_vectors = _continuum_candidates(u)
    else:
        s_vectors = _candidate_s_vectors(poly)

    found: list[InterfaceAnalysis] = []
    for a in s_vectors:
        b = _best_i_vector(u, a)
        a, b = _polish(u, a, b)
        basis = LocalBasis.from_vectors(a, b)
        analysis = analyze_in_basis(u, basis)
        if analysis.feasibility_residual >= FEASIBLE_RESIDUAL:
            continue
        if any(_same_basis(analysis.basis, f.basis) for f in found):
            continue
        found.append(analysis)
    found.sort(key=lambda f: (round(f.beta, 12), tuple(round(x, 12) for x in f.basis.bloch_angles())))
    return found


def _same_basis(p: LocalBasis, q: LocalBasis, tol: float = 1e-9) -> bool:
    return all(
        abs(abs(np.vdot(x[:, 0], y[:, 0])) - 1.0) < tol for x, y in ((p.basis_s, q.basis_s), (p.basis_i, q.basis_i))
    )


def find_feasible_basis(u: np.ndarray) -> Optional[LocalBasis]:
    """A feasible local basis of ``u`` minimizing beta, or None."""
    found = feasible_bases(u)
    return found[0].basis if found else None


def classify(u: np.ndarray) -> ExploitabilityVerdict:
    """Decide membership in U-star and exploitability.

    Among feasible bases the beta-minimizing one is reported; when every
    feasible basis has beta = 1 an exploitable one is preferred if it exists.
    """
    found = feasible_bases(u)
    if not found:
        return ExploitabilityVerdict(False, False, None, FailureReason.NO_FEASIBLE_BASIS)
    chosen = next((f for f in found if f.exploitable), found[0])
    reason = degeneracy_reason(chosen)
    return ExploitabilityVerdict(True, reason is None, chosen.basis, reason, chosen)
