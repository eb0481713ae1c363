"""Measured quantities of a finished output-transfer run."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import StateVector


@dataclass(frozen=True)
class TransferReport:
    """Outcome of moving (a|0> + b|1>)_S into the interface qubit.

    ``success_amplitudes`` are the coefficients of |0>_S|0>_I|0..> and
    |0>_S|1>_I|0..>; ideally a and b*sqrt(1 - xi^2).
    """

    xi_measured: float
    xi_predicted: float
    fidelity_to_ideal: float
    residual_state_g: Optional[StateVector]
    success_amplitudes: tuple[complex, complex]
    xi_observable: bool
    input_amplitudes: tuple[complex, complex]
    final_state: np.ndarray = field(repr=False)
    xi_trace: tuple[float, ...] = ()
    xi_predicted_trace: tuple[float, ...] = ()

    @property
    def amplitude_defect(self) -> float:
        """|1 - (|c0|^2 + |c1|^2 + |b xi|^2)|, zero when the |0>_S branch is clean."""
        c0, c1 = self.success_amplitudes
        b = self.input_amplitudes[1]
        return abs(1.0 - (abs(c0) ** 2 + abs(c1) ** 2 + abs(b * self.xi_measured) ** 2))


def leaked_norm(psi: np.ndarray) -> float:
    """Norm of the |1>_S component of a state whose first factor is S."""
    half = psi.size // 2
    return float(np.linalg.norm(psi[half:]))


def make_report(
    psi: np.ndarray,
    a: complex,
    b: complex,
    xi_predicted: float,
    xi_trace: tuple[float, ...] = (),
    xi_predicted_trace: tuple[float, ...] = (),
) -> TransferReport:
    psi = np.asarray(psi, dtype=complex)
    n_qubits = int(round(np.log2(psi.size)))
    half = psi.size // 2
    rest = n_qubits - 1
    leak = psi[half:]
    observable = abs(b) > 1e-12
    xi = float(np.linalg.norm(leak)) / abs(b) if observable else float(xi_predicted)
    lnorm = np.linalg.norm(leak)
    g = StateVector(leak / lnorm, (2,) * rest) if lnorm > 1e-12 else None
    # |0>_S |1>_I |0...>: I is the most significant qubit of the remaining ones
    c0 = complex(psi[0])
    c1 = complex(psi[2 ** (rest - 1)])
    fid = float(abs(np.conj(a) * c0 + np.conj(b) * c1) ** 2)
    return TransferReport(
        xi_measured=min(xi, 1.0),
        xi_predicted=float(xi_predicted),
        fidelity_to_ideal=min(fid, 1.0),
        residual_state_g=g,
        success_amplitudes=(c0, c1),
        xi_observable=observable,
        input_amplitudes=(complex(a), complex(b)),
        final_state=psi,
        xi_trace=tuple(xi_trace),
        xi_predicted_trace=tuple(xi_predicted_trace),
    )
