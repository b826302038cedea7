"""GKLS generators and time-ordered propagators.

Generator trajectories are piecewise constant, so the time-ordered
exponential factors exactly into a product of matrix exponentials and no ODE
integrator enters any check.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonHermitianInput
from .matkernel import as_matrix, dagger, frobenius, kron, matrix_exp, trace_norm
from .superop import SuperOp, adjoint, apply, to_choi
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class Lindbladian:
    """Generator data: Hamiltonian, jump operators and nonnegative rates (hbar = 1)."""

    hamiltonian: np.ndarray
    jumps: tuple
    rates: tuple

    def __post_init__(self):
        h = as_matrix(self.hamiltonian)
        scale = max(frobenius(h), 1.0)
        if frobenius(h - dagger(h)) > DEFAULT.hermiticity_rel * scale:
            raise NonHermitianInput("Hamiltonian is not Hermitian within tolerance")
        jumps = tuple(as_matrix(v) for v in self.jumps)
        rates = tuple(float(r) for r in self.rates)
        if len(jumps) != len(rates):
            raise ValueError("jumps and rates differ in length")
        if any(r < 0 for r in rates):
            raise ValueError("rates must be nonnegative")
        if any(v.shape != h.shape for v in jumps):
            raise ValueError("jump operators must match the Hamiltonian dimension")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "rates", rates)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "H": _matrix_to_json(self.hamiltonian),
            "jumps": [_matrix_to_json(v) for v in self.jumps],
            "rates": list(self.rates),
        }

    @staticmethod
    def from_json(data: dict) -> "Lindbladian":
        dim = int(data["dim"])
        h = _matrix_from_json(data["H"], dim)
        jumps = tuple(_matrix_from_json(v, dim) for v in data.get("jumps", []))
        rates = tuple(float(r) for r in data.get("rates", []))
        return Lindbladian(hamiltonian=h, jumps=jumps, rates=rates)


def _matrix_to_json(m: np.ndarray):
    return [[float(z.real), float(z.imag)] for z in m.reshape(-1)]


def _matrix_from_json(entries, dim: int) -> np.ndarray:
    flat = np.array([complex(re, im) for re, im in entries], dtype=np.complex128)
    if flat.size != dim * dim:
        raise ValueError(f"expected {dim * dim} entries, got {flat.size}")
    return flat.reshape(dim, dim)


@dataclass(frozen=True)
class Segment:
    """Constant generator applied for a positive duration."""

    generator: SuperOp
    duration: float

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("segment duration must be positive")


def to_superop(lind: Lindbladian) -> SuperOp:
    """Vectorized generator under column stacking.

    -i (I kron H - H^T kron I)
    + sum_j r_j (conj(V_j) kron V_j - (I kron V_j^dag V_j + (V_j^dag V_j)^T kron I)/2)
    """
    d = lind.dim
    eye = np.eye(d, dtype=np.complex128)
    h = lind.hamiltonian
    gen = -1j * (kron(eye, h) - kron(h.T, eye))
    for v, r in zip(lind.jumps, lind.rates):
        vv = dagger(v) @ v
        gen += r * (kron(np.conj(v), v) - 0.5 * kron(eye, vv) - 0.5 * kron(vv.T, eye))
    return SuperOp(gen)


def propagate(segments) -> SuperOp:
    """Ordered product exp(L_k dt_k) ... exp(L_1 dt_1), later segments applied last."""
    segments = list(segments)
    if not segments:
        raise ValueError("propagate requires at least one segment")
    total = None
    for seg in segments:
        step = matrix_exp(seg.generator.matrix * seg.duration)
        total = step if total is None else step @ total
    return SuperOp(total)


@dataclass(frozen=True)
class CPTPReport:
    trace_preserving_defect: float
    choi_min_eig: float


def check_cptp(phi: SuperOp, tol: Tolerances = DEFAULT) -> CPTPReport:
    """Diagnostic: trace-preservation defect ||phi^dag(I) - I||_1 and Choi minimum."""
    d = phi.dim
    eye = np.eye(d, dtype=np.complex128)
    defect = trace_norm(apply(adjoint(phi), eye) - eye)
    return CPTPReport(trace_preserving_defect=float(defect),
                      choi_min_eig=to_choi(phi).min_eigenvalue)
