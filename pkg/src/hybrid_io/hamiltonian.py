"""Interface unitaries generated by a physical Hamiltonian, and the switched
sandwich U_eff(tau, T, s) = e^{-i H_on tau} (e^{-i H_S T} (x) e^{i Z s}) e^{-i H_on tau}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .interface import analyze_in_basis, classify
from .linalg import I2, X, Z, expm_hermitian, is_hermitian, schmidt_number, tensor


@dataclass(frozen=True)
class HamiltonianPair:
    h_s: np.ndarray
    h_int: np.ndarray

    def __post_init__(self):
        for name, shape in (("h_s", (2, 2)), ("h_int", (4, 4))):
            m = np.array(getattr(self, name), dtype=complex)
            if m.shape != shape or not is_hermitian(m):
                raise ValueError(f"{name} must be a Hermitian {shape[0]}x{shape[1]} matrix")
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @property
    def h_on(self) -> np.ndarray:
        return tensor(self.h_s, I2) + self.h_int

    @classmethod
    def zz(cls, r: float, g: float) -> "HamiltonianPair":
        """H_S = g Z, H_int = r Z(x)Z."""
        return cls(g * Z, r * tensor(Z, Z))

    @classmethod
    def xx(cls, r: float, g: float) -> "HamiltonianPair":
        """H_S = g Z, H_int = r X(x)X."""
        return cls(g * Z, r * tensor(X, X))


def interface_from_hamiltonian(pair: HamiltonianPair, tau: float) -> np.ndarray:
    if tau < 0:
        raise ValueError("interaction time must be non-negative")
    return expm_hermitian(pair.h_on, tau)


def build_u_eff(pair: HamiltonianPair, tau: float, T: float, s: float) -> np.ndarray:
    """Two switched-on windows around free S evolution and a Z rotation on I."""
    on = expm_hermitian(pair.h_on, tau)
    middle = tensor(expm_hermitian(pair.h_s, T), expm_hermitian(Z, -s))
    return on @ middle @ on


@dataclass(frozen=True)
class ZZVerdict:
    never_exploitable: bool
    max_schmidt_number: int
    all_block_diagonal: bool
    samples: int


def classify_zz_family(r: float, g: float, times: Iterable[float]) -> ZZVerdict:
    """Check block-diagonality, Schmidt number and exploitability over sampled times."""
    pair = HamiltonianPair.zz(r, g)
    exploitable = False
    max_sn = 0
    block = True
    count = 0
    for t in times:
        u = interface_from_hamiltonian(pair, t)
        block &= bool(np.max(np.abs(u[:2, 2:])) <= 1e-12 and np.max(np.abs(u[2:, :2])) <= 1e-12)
        max_sn = max(max_sn, schmidt_number(u))
        exploitable |= classify(u).exploitable
        count += 1
    return ZZVerdict(not exploitable, max_sn, block, count)


@dataclass(frozen=True)
class EffectiveInterfaceSolution:
    """Switching parameters for the XX pair.

    ``predicted_beta`` is r/omega_bar, the value the leakage estimate N* is
    built on. ``interface_beta`` is |g|/omega_bar, what the constructed
    U_eff actually has in the computational basis.
    """

    r: float
    g: float
    tau_star: float
    T_star: float
    s_star: float
    theta_star: float
    omega_bar: float
    predicted_beta: float
    interface_beta: float

    def n_star_for(self, xi_eps: float, beta: float | None = None) -> int:
        """Interface uses needed for beta^N to drop to ``xi_eps``."""
        if not 0 < xi_eps < 1:
            raise ValueError("target leakage must lie in (0, 1)")
        beta = self.predicted_beta if beta is None else beta
        # a tiny slack keeps exact powers of beta from rounding up
        return max(1, math.ceil(math.log(xi_eps) / math.log(beta) - 1e-9))

    def pair(self) -> HamiltonianPair:
        return HamiltonianPair.xx(self.r, self.g)

    def u_eff(self) -> np.ndarray:
        return build_u_eff(self.pair(), self.tau_star, self.T_star, self.s_star)


def omega_fn(r: float, g: float, theta: float) -> float:
    """cos(theta) + (g / omega_bar) sin(theta)."""
    return math.cos(theta) + g / math.hypot(r, g) * math.sin(theta)


def solve_effective_interface(r: float, g: float) -> EffectiveInterfaceSolution:
    """Parameters (tau*, T*, s*) making U_eff of the XX pair exploitable.

    theta* solves tan(theta*) = -omega_bar / g on the branch where theta*/g is
    smallest positive. With e^{-iHt} evolution and e^{+iZs} on I, the corner
    entries <11|U_eff|00> and <00|U_eff|11> are -i(r/omega_bar) Omega(s - gT),
    so the zero is placed at s - gT = theta* with gT + s = 0 mod pi, the
    latter fixing beta. T* is reduced modulo the period pi/|g| of e^{-i g Z T}
    (up to a global sign) to the smallest positive value.
    """
    if r == 0 or g == 0:
        raise ValueError("both r and g must be nonzero")
    wbar = math.hypot(r, g)
    theta = math.atan(-wbar / g)
    while theta / g <= 0:
        theta += math.pi if g > 0 else -math.pi
    s_star = theta / 2
    period = math.pi / abs(g)
    T_star = (-theta / (2 * g)) % period
    if T_star <= 0:
        T_star += period
    return EffectiveInterfaceSolution(
        r=float(r),
        g=float(g),
        tau_star=math.pi / (4 * wbar),
        T_star=T_star,
        s_star=s_star,
        theta_star=theta,
        omega_bar=wbar,
        predicted_beta=abs(r) / wbar,
        interface_beta=abs(g) / wbar,
    )


def closed_form_u_eff(r: float, g: float, T: float, s: float) -> np.ndarray:
    """Entrywise closed form of U_eff at tau = pi / (4 omega_bar) for the XX pair.

    H_on couples |00> with |11> and |01> with |10>; in each pair it reads
    [[g, r], [r, -g]] and the middle factor is diag(e^{-i x}, e^{i x}) with
    x = gT - s for the first pair and x = gT + s for the second. Each 2x2
    block is (1/2) A diag(e^{-ix}, e^{ix}) A with A = I - iH/omega_bar.
    """
    w = math.hypot(r, g)
    p, m = 1 - 1j * g / w, 1 + 1j * g / w
    q = -1j * r / w

    def block(x):
        e0, e1 = np.exp(-1j * x), np.exp(1j * x)
        diag0 = 0.5 * (p * p * e0 + q * q * e1)
        diag1 = 0.5 * (q * q * e0 + m * m * e1)
        off = q * (math.cos(x) - g / w * math.sin(x))
        return diag0, off, diag1

    a0, ao, a1 = block(g * T - s)
    b0, bo, b1 = block(g * T + s)
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0], u[3, 3], u[0, 3], u[3, 0] = a0, a1, ao, ao
    u[1, 1], u[2, 2], u[1, 2], u[2, 1] = b0, b1, bo, bo
    return u


def end_to_end_time_cost(
    sol: EffectiveInterfaceSolution, xi_eps: float, delta_T: float, beta: float | None = None
) -> float:
    """(2 tau* + T* + delta_T) N*, with N* from ``beta`` (default predicted_beta)."""
    return (2 * sol.tau_star + sol.T_star + delta_T) * sol.n_star_for(xi_eps, beta)


def measured_beta(sol: EffectiveInterfaceSolution) -> float:
    return analyze_in_basis(sol.u_eff()).beta
