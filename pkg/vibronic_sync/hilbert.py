"""
Composite Hilbert space of the exciton-vibration dimer.

Basis ordering is exciton-major, then the Fock number of mode 1, then the
Fock number of mode 2: the flat index of |E_d, n1, n2⟩ is
(d - 1)·(M+1)² + n1·(M+1) + n2. Energies are in cm⁻¹ and the exciton
energies are measured from the electronic midpoint (E1 = -ΔE/2, E2 = +ΔE/2);
only energy differences enter the dynamics.
"""

import enum
import json
import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse
from pydantic import BaseModel, ConfigDict, Field
from scipy import constants

from .errors import (
    BasisMismatchError,
    DimensionOverflowError,
    IndexOutOfRangeError,
    ParameterRegimeWarning,
    SolverFailureError,
)
from .utils import get_logger

logger = get_logger(__name__)

# speed of light in cm/ps; cm⁻¹ × LIGHT_SPEED_CM_PS = cycles per ps
LIGHT_SPEED_CM_PS = constants.c * 1e2 * 1e-12
# cm⁻¹ → rad/ps
KAPPA = 2.0 * constants.pi * LIGHT_SPEED_CM_PS

DEFAULT_MAX_MODE_DIM = 400
PHASE_CONVENTION = "largest-component-real-positive"


class DimerParams(BaseModel):
    """Physical parameters of the exciton-vibration dimer (PE545 defaults)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    delta_e: float = Field(1042.0, ge=0.0, description="Site energy gap e2 - e1 in cm^-1.")
    v: float = Field(92.0, ge=0.0, description="Electronic coupling V in cm^-1 (real, non-negative).")
    omega1: float = Field(1111.0, gt=0.0, description="Frequency of mode 1 in cm^-1.")
    omega2: float = Field(1111.0, gt=0.0, description="Frequency of mode 2 in cm^-1.")
    g1: float = Field(267.1, ge=0.0, description="Exciton-vibration coupling of mode 1 in cm^-1.")
    g2: float = Field(267.1, ge=0.0, description="Exciton-vibration coupling of mode 2 in cm^-1.")
    kbt: float = Field(207.1, gt=0.0, description="Thermal energy k_B T in cm^-1.")
    gamma_th: float = Field(1.0, ge=0.0, description="Mode relaxation rate in ps^-1.")
    gamma_deph: float = Field(10.0, ge=0.0, description="Electronic pure dephasing rate in ps^-1.")
    m_levels: int = Field(8, ge=1, description="Highest Fock level kept per mode (levels 0..M).")

    @property
    def mode_dim(self) -> int:
        return self.m_levels + 1

    @property
    def dimension(self) -> int:
        return 2 * self.mode_dim ** 2

    @property
    def mode_detuning(self) -> float:
        return self.omega2 / self.omega1


class BasisTag(str, enum.Enum):
    LOCAL = "local-exciton-product"
    EIGEN = "system-eigenbasis"


@dataclass(frozen=True, order=True)
class BasisLabel:
    """Label |E_d, n1, n2⟩ of a local product basis vector."""

    exciton_index: int
    n1: int
    n2: int

    def flat_index(self, m_levels: int) -> int:
        n = m_levels + 1
        if self.exciton_index not in (1, 2) or not (0 <= self.n1 < n and 0 <= self.n2 < n):
            raise IndexOutOfRangeError(f"{self} is outside the M={m_levels} basis")
        return (self.exciton_index - 1) * n * n + self.n1 * n + self.n2

    @classmethod
    def from_index(cls, index: int, m_levels: int) -> "BasisLabel":
        n = m_levels + 1
        if not 0 <= index < 2 * n * n:
            raise IndexOutOfRangeError(f"basis index {index} outside dimension {2 * n * n}")
        d, rest = divmod(index, n * n)
        n1, n2 = divmod(rest, n)
        return cls(d + 1, n1, n2)

    def __str__(self) -> str:
        return f"|E{self.exciton_index},{self.n1}{self.n2}>"


def _frozen(matrix) -> np.ndarray:
    array = np.array(matrix, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Operator:
    """Dense operator on the composite space, tagged with its basis."""

    matrix: np.ndarray
    basis_tag: BasisTag = BasisTag.LOCAL
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError(f"operator matrix must be square, got {self.matrix.shape}")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def check_compatible(self, other: "Operator") -> None:
        if self.basis_tag != other.basis_tag:
            raise BasisMismatchError(
                f"cannot combine {self.label or 'operator'} ({self.basis_tag.value}) "
                f"with {other.label or 'operator'} ({other.basis_tag.value})"
            )
        if self.dimension != other.dimension:
            raise BasisMismatchError(f"dimension {self.dimension} != {other.dimension}")

    def __add__(self, other: "Operator") -> "Operator":
        self.check_compatible(other)
        return Operator(self.matrix + other.matrix, self.basis_tag)

    def __sub__(self, other: "Operator") -> "Operator":
        self.check_compatible(other)
        return Operator(self.matrix - other.matrix, self.basis_tag)

    def __matmul__(self, other: "Operator") -> "Operator":
        self.check_compatible(other)
        return Operator(self.matrix @ other.matrix, self.basis_tag)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.matrix * scalar, self.basis_tag, self.label)

    __rmul__ = __mul__

    def dag(self) -> "Operator":
        label = f"{self.label}^dag" if self.label else ""
        return Operator(self.matrix.conj().T, self.basis_tag, label)

    def with_label(self, label: str) -> "Operator":
        return Operator(self.matrix, self.basis_tag, label)

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        scale = max(float(np.max(np.abs(self.matrix))), 1.0)
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) < rtol * scale

    def sparse(self) -> scipy.sparse.csr_array:
        return scipy.sparse.csr_array(self.matrix)


@dataclass(frozen=True)
class OperatorSet:
    """All local-basis operators used by the model and its observables."""

    b1: Operator
    b1_dag: Operator
    b2: Operator
    b2_dag: Operator
    x1: Operator
    x2: Operator
    p1: Operator
    p2: Operator
    n1: Operator
    n2: Operator
    theta1: Operator
    theta2: Operator
    sigma_x: Operator
    sigma_z: Operator
    p00: Operator
    pop_e1: Operator
    pop_e2: Operator
    identity: Operator

    def as_dict(self) -> Dict[str, Operator]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    def __getitem__(self, name: str) -> Operator:
        try:
            return getattr(self, name)
        except AttributeError:
            raise KeyError(name) from None


def mixing_angle(params: DimerParams) -> float:
    """θ = ½·arctan(2V/Δe), π/4 at degenerate sites."""
    if params.delta_e == 0.0:
        return float(np.pi / 4)
    return 0.5 * float(np.arctan(2.0 * params.v / params.delta_e))


def exciton_splitting(params: DimerParams) -> float:
    return float(np.hypot(params.delta_e, 2.0 * params.v))


def thermal_occupation(omega: float, kbt: float) -> float:
    """Mean phonon number (e^{ω/kT} - 1)^-1, finite as kT → 0."""
    x = omega / kbt
    return float(np.exp(-x) / -np.expm1(-x))


def site_rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def build_operators(params: DimerParams, max_mode_dim: int = DEFAULT_MAX_MODE_DIM) -> OperatorSet:
    """
    Build every operator of the model in the local exciton-product basis.

    Args:
        params: Dimer parameters (only the truncation and θ are used)
        max_mode_dim: Upper bound on (M+1)² for the two-mode factor

    Returns:
        OperatorSet: Ladder, quadrature, number, site-projector, excitonic
        and vibrational-ground-state operators
    """
    n = params.mode_dim
    if n * n > max_mode_dim:
        raise DimensionOverflowError(
            f"(M+1)^2 = {n * n} exceeds the configured maximum {max_mode_dim}; lower m_levels"
        )

    b = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1)
    iv = np.eye(n)
    ie = np.eye(2)
    vac = np.zeros((n, n))
    vac[0, 0] = 1.0

    def on_mode1(a):
        return np.kron(ie, np.kron(a, iv))

    def on_mode2(a):
        return np.kron(ie, np.kron(iv, a))

    def on_exciton(a):
        return np.kron(a, np.kron(iv, iv))

    u = site_rotation(mixing_angle(params))
    site1 = np.diag([1.0, 0.0])
    site2 = np.diag([0.0, 1.0])
    theta1 = u @ site1 @ u.T
    theta2 = u @ site2 @ u.T
    sigma_x = np.array([[0.0, 1.0], [1.0, 0.0]])
    sigma_z = np.diag([-1.0, 1.0])

    b1, b2 = on_mode1(b), on_mode2(b)
    ops = {
        "b1": b1,
        "b1_dag": b1.T,
        "b2": b2,
        "b2_dag": b2.T,
        "x1": b1 + b1.T,
        "x2": b2 + b2.T,
        "p1": -1j * (b1 - b1.T),
        "p2": -1j * (b2 - b2.T),
        "n1": b1.T @ b1,
        "n2": b2.T @ b2,
        "theta1": on_exciton(theta1),
        "theta2": on_exciton(theta2),
        "sigma_x": on_exciton(sigma_x),
        "sigma_z": on_exciton(sigma_z),
        "p00": np.kron(ie, np.kron(vac, vac)),
        "pop_e1": on_exciton(np.diag([1.0, 0.0])),
        "pop_e2": on_exciton(np.diag([0.0, 1.0])),
        "identity": np.eye(params.dimension),
    }
    return OperatorSet(**{name: Operator(m, BasisTag.LOCAL, name) for name, m in ops.items()})


def build_hamiltonian(params: DimerParams, ops: Optional[OperatorSet] = None) -> Operator:
    """H = E1|E1⟩⟨E1| + E2|E2⟩⟨E2| + Σ ω_i b_i†b_i + Σ g_i Θ_i X_i, in cm⁻¹."""
    if ops is None:
        ops = build_operators(params)
    half_split = 0.5 * exciton_splitting(params)
    h = (
        -half_split * ops.pop_e1.matrix
        + half_split * ops.pop_e2.matrix
        + params.omega1 * ops.n1.matrix
        + params.omega2 * ops.n2.matrix
        + params.g1 * (ops.theta1.matrix @ ops.x1.matrix)
        + params.g2 * (ops.theta2.matrix @ ops.x2.matrix)
    )
    h = 0.5 * (h + h.conj().T)
    return Operator(h, BasisTag.LOCAL, "H")


@dataclass(frozen=True)
class EigenSystem:
    """Ascending spectrum and orthonormal eigenvectors (columns, local coordinates)."""

    energies: np.ndarray
    vectors: np.ndarray
    phase_convention: str = PHASE_CONVENTION
    m_levels: Optional[int] = None

    def __post_init__(self):
        energies = np.array(self.energies, dtype=float)
        energies.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "vectors", _frozen(self.vectors))

    @property
    def dimension(self) -> int:
        return self.energies.shape[0]

    def check_index(self, *indices: int) -> None:
        for index in indices:
            if not 0 <= index < self.dimension:
                raise IndexOutOfRangeError(
                    f"eigenstate index {index} outside spectrum of size {self.dimension}"
                )

    def gap(self, j: int, k: int) -> float:
        """Ω_kj = ε_k - ε_j in cm⁻¹."""
        self.check_index(j, k)
        return float(self.energies[k] - self.energies[j])

    def frequency_matrix(self) -> np.ndarray:
        """Ω[j, k] = ε_k - ε_j."""
        return self.energies[None, :] - self.energies[:, None]

    def to_basis(self, op: Operator) -> Operator:
        if op.basis_tag == BasisTag.EIGEN:
            return op
        if op.dimension != self.dimension:
            raise BasisMismatchError(f"operator dimension {op.dimension} != {self.dimension}")
        v = self.vectors
        return Operator(v.conj().T @ op.matrix @ v, BasisTag.EIGEN, op.label)

    def to_local(self, op: Operator) -> Operator:
        if op.basis_tag == BasisTag.LOCAL:
            return op
        v = self.vectors
        return Operator(v @ op.matrix @ v.conj().T, BasisTag.LOCAL, op.label)

    def matrix_to_basis(self, matrix: np.ndarray) -> np.ndarray:
        v = self.vectors
        return v.conj().T @ matrix @ v

    def matrix_to_local(self, matrix: np.ndarray) -> np.ndarray:
        v = self.vectors
        return v @ matrix @ v.conj().T

    def to_json(self) -> str:
        payload = {
            "phase_convention": self.phase_convention,
            "m_levels": self.m_levels,
            "basis_ordering": "exciton-major, then n1, then n2",
            "energies": self.energies.tolist(),
            "vectors": [[[z.real, z.imag] for z in row] for row in self.vectors],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "EigenSystem":
        payload = json.loads(text)
        pairs = np.array(payload["vectors"], dtype=float)
        return cls(
            energies=np.array(payload["energies"]),
            vectors=pairs[..., 0] + 1j * pairs[..., 1],
            phase_convention=payload["phase_convention"],
            m_levels=payload.get("m_levels"),
        )


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    fixed = np.array(vectors, dtype=complex)
    for col in range(fixed.shape[1]):
        magnitudes = np.abs(fixed[:, col])
        peak = magnitudes.max()
        # lowest basis index among near-ties
        lead = int(np.flatnonzero(magnitudes >= peak * (1.0 - 1e-10))[0])
        fixed[:, col] *= np.conj(fixed[lead, col]) / abs(fixed[lead, col])
    return fixed


def diagonalise(h: Operator, m_levels: Optional[int] = None) -> EigenSystem:
    """
    Diagonalise a Hermitian Hamiltonian.

    Eigenvalues are returned ascending; each eigenvector is rotated so that its
    largest-magnitude component is real and positive.
    """
    if not h.is_hermitian(1e-10):
        raise SolverFailureError("Hamiltonian is not Hermitian")
    try:
        energies, vectors = scipy.linalg.eigh(h.matrix)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SolverFailureError(f"eigen decomposition failed: {e}") from e

    vectors = _fix_phases(vectors)

    unitarity = np.max(np.abs(vectors.conj().T @ vectors - np.eye(len(energies))))
    if unitarity > 1e-10:
        raise SolverFailureError(f"eigenvectors not orthonormal (defect {unitarity:.2e})")
    residual = np.linalg.norm(h.matrix @ vectors - vectors * energies)
    if residual > 1e-8 * max(np.linalg.norm(h.matrix), 1.0):
        raise SolverFailureError(f"eigen decomposition residual {residual:.2e} too large")

    logger.debug(f"Diagonalised H of dimension {len(energies)}: "
                 f"eps in [{energies[0]:.2f}, {energies[-1]:.2f}] cm^-1")
    return EigenSystem(energies, vectors, PHASE_CONVENTION, m_levels)


@dataclass(frozen=True)
class MatrixElementRow:
    """Frequency and ⟨ψ_k|O|ψ_j⟩ elements of one eigenbasis coherence |ψ_j⟩⟨ψ_k|."""

    j: int
    k: int
    omega_kj: float
    x1: complex
    x2: complex
    sigma_x: complex
    p00: complex

    @property
    def pair(self) -> Tuple[int, int]:
        return (self.j, self.k)

    @property
    def x_product(self) -> complex:
        """X1_kj · conj(X2_kj), independent of eigenvector phases."""
        return self.x1 * np.conj(self.x2)

    def to_dict(self) -> Dict:
        return {
            "pair": [self.j, self.k],
            "omega_kj": self.omega_kj,
            "x1": self.x1.real,
            "x2": self.x2.real,
            "sigma_x": self.sigma_x.real,
            "p00": self.p00.real,
        }


def matrix_element_table(
    eig: EigenSystem, ops: OperatorSet, pairs: Sequence[Tuple[int, int]]
) -> List[MatrixElementRow]:
    rotated = {name: eig.to_basis(ops[name]).matrix for name in ("x1", "x2", "sigma_x", "p00")}
    rows = []
    for j, k in pairs:
        eig.check_index(j, k)
        rows.append(
            MatrixElementRow(
                j=j,
                k=k,
                omega_kj=eig.gap(j, k),
                x1=complex(rotated["x1"][k, j]),
                x2=complex(rotated["x2"][k, j]),
                sigma_x=complex(rotated["sigma_x"][k, j]),
                p00=complex(rotated["p00"][k, j]),
            )
        )
    return rows


def eigenstate_composition(
    eig: EigenSystem, index: int, top: int = 6, m_levels: Optional[int] = None
) -> List[Tuple[BasisLabel, complex]]:
    """Largest |E_d, n1, n2⟩ coefficients of eigenstate ``index``, by magnitude."""
    eig.check_index(index)
    m = m_levels if m_levels is not None else eig.m_levels
    if m is None:
        m = int(round(np.sqrt(eig.dimension / 2))) - 1
    column = eig.vectors[:, index]
    order = np.argsort(-np.abs(column), kind="stable")[:top]
    return [(BasisLabel.from_index(int(i), m), complex(column[i])) for i in order]


def et_amplitude_indicator(params: DimerParams) -> float:
    """
    Estimate of the maximum coherent exciton population oscillation.

    A = 1 / (1 + (Δ / (2 g sin 2θ))²) with Δ = ΔE - ω1. Derived for identical
    modes and couplings; other regimes get a ParameterRegimeWarning.
    """
    if params.omega1 != params.omega2:
        warnings.warn(
            f"ET indicator assumes omega1 == omega2 (got {params.omega1}, {params.omega2})",
            ParameterRegimeWarning,
            stacklevel=2,
        )
    if params.g1 != params.g2:
        warnings.warn(
            f"ET indicator assumes g1 == g2 (got {params.g1}, {params.g2}); using g1",
            ParameterRegimeWarning,
            stacklevel=2,
        )
    detuning = exciton_splitting(params) - params.omega1
    if detuning == 0.0:
        return 1.0
    denominator = 2.0 * params.g1 * np.sin(2.0 * mixing_angle(params))
    if denominator == 0.0:
        return 0.0
    return float(1.0 / (1.0 + (detuning / denominator) ** 2))


def delocalised_params(base: DimerParams, eta: float) -> DimerParams:
    """
    Raise the electronic coupling so that sin 2θ = ``eta`` while the exciton
    splitting, and hence Δ = ΔE - ω, keeps its value in ``base``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    splitting = exciton_splitting(base)
    return base.model_copy(update={
        "v": 0.5 * eta * splitting,
        "delta_e": splitting * float(np.sqrt(1.0 - eta * eta)),
    })
