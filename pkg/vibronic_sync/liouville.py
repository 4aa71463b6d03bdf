"""
Vectorised Liouvillian, its eigenmodes and the eigenbasis (Redfield) form.

Vectorisation stacks columns: vec(ρ)[j + k·D] = ρ_jk, so vec(AXB) = (Bᵀ⊗A)·vec(X)
and

    L = -iκ(I⊗H - Hᵀ⊗I) + Σ_ν Γ_ν (Ō_ν⊗O_ν - ½ I⊗O_ν†O_ν - ½ (O_ν†O_ν)ᵀ⊗I).

Everything here is dense and meant for reduced truncations (D ≤ 60 by default).
"""

import json
import time as wallclock
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .dynamics import (
    DensityMatrix,
    DissipatorSpec,
    PropagationConfig,
    Trajectory,
    check_bases,
    make_recorder,
)
from .errors import BasisMismatchError, MemoryBudgetError, SolverFailureError
from .hilbert import KAPPA, BasisTag, EigenSystem, Operator
from .utils import get_logger

logger = get_logger(__name__)

DEFAULT_MAX_DIM = 60
STATIONARY_TOLERANCE = 1e-8


def vec(matrix: np.ndarray) -> np.ndarray:
    return np.asarray(matrix).reshape(-1, order="F")


def unvec(vector: np.ndarray, dimension: int) -> np.ndarray:
    return np.asarray(vector).reshape(dimension, dimension, order="F")


@dataclass(frozen=True)
class Superoperator:
    matrix: np.ndarray
    basis_tag: BasisTag
    truncation_m: Optional[int]
    dimension: int

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dimension)

    def trace_defect(self) -> float:
        """max |vec(I)†·L|, zero for a trace-preserving generator."""
        identity = vec(np.eye(self.dimension))
        return float(np.max(np.abs(identity.conj() @ self.matrix)))


def build_superoperator(
    h: Operator,
    dissipators: Sequence[DissipatorSpec],
    m_levels: Optional[int] = None,
    max_dim: int = DEFAULT_MAX_DIM,
) -> Superoperator:
    """
    Dense Liouvillian of the Lindblad generator in the basis of ``h``.

    Args:
        h: Hamiltonian in cm⁻¹
        dissipators: Jump operators and rates, in the same basis as ``h``
        m_levels: Truncation the operators were built at, kept for reporting
        max_dim: Largest Hilbert dimension accepted

    Returns:
        Superoperator: D²×D² generator in ps⁻¹
    """
    d = h.dimension
    if d > max_dim:
        raise MemoryBudgetError(
            f"superoperator for D={d} needs {(d * d) ** 2 * 16 / 2**20:.0f} MiB; "
            f"the limit is D={max_dim}. Lower M (M=4 gives D=50)"
        )
    check_bases(h.basis_tag, h, dissipators)
    if m_levels is None:
        m_levels = int(round(np.sqrt(d / 2))) - 1
    eye = np.eye(d)
    hm = h.matrix
    generator = -1j * KAPPA * (np.kron(eye, hm) - np.kron(hm.T, eye))
    for spec in dissipators:
        if spec.rate == 0.0:
            continue
        o = spec.operator.matrix
        odo = o.conj().T @ o
        generator += spec.rate * (np.kron(o.conj(), o) - 0.5 * np.kron(eye, odo) - 0.5 * np.kron(odo.T, eye))
    logger.debug(f"Built {d * d}x{d * d} superoperator at M={m_levels}")
    return Superoperator(generator, h.basis_tag, m_levels, d)


def stationary_state(superop: Superoperator) -> DensityMatrix:
    """Null vector of L normalised to unit trace (one row replaced by the trace condition)."""
    d = superop.dimension
    system = superop.matrix.copy()
    system[0, :] = vec(np.eye(d))
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    try:
        solution = scipy.linalg.solve(system, rhs)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SolverFailureError(f"steady-state solve failed: {e}") from e
    rho = unvec(solution, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho)
    return DensityMatrix(rho, superop.basis_tag, float("inf"))


def _rotation(eig: EigenSystem) -> np.ndarray:
    """W with vec(V†XV) = W·vec(X)."""
    v = eig.vectors
    return np.kron(v.T, v.conj().T)


def to_eigenbasis(superop: Superoperator, eig: EigenSystem) -> np.ndarray:
    if superop.basis_tag == BasisTag.EIGEN:
        return superop.matrix
    if eig.dimension != superop.dimension:
        raise BasisMismatchError(f"eigensystem dimension {eig.dimension} != {superop.dimension}")
    w = _rotation(eig)
    return w @ superop.matrix @ w.conj().T


@dataclass(frozen=True)
class EigenMode:
    eigenvalue: complex
    pair: Tuple[int, int]
    overlap: float
    coupling: Optional[float] = None

    @property
    def decay_rate(self) -> float:
        return float(-self.eigenvalue.real)

    @property
    def frequency_cm1(self) -> float:
        return float(self.eigenvalue.imag / KAPPA)

    @property
    def coherence(self) -> Tuple[int, int]:
        """Dominant eigenbasis pair with the lower index first."""
        return tuple(sorted(self.pair))

    def is_stationary(self) -> bool:
        return abs(self.eigenvalue.real) < STATIONARY_TOLERANCE and abs(self.eigenvalue.imag) < STATIONARY_TOLERANCE

    def to_dict(self) -> Dict:
        entry = {
            "eigenvalue": {"re": self.eigenvalue.real, "im": self.eigenvalue.imag, "im_cm1": self.frequency_cm1},
            "pair": list(self.pair),
            "overlap": self.overlap,
        }
        if self.coupling is not None:
            entry["coupling"] = self.coupling
        return entry


@dataclass
class EigenmodeReport:
    """Liouvillian spectrum (ascending |Re|) and its slowest modes."""

    eigenvalues: np.ndarray
    modes: List[EigenMode]
    truncation_m: Optional[int]
    coupling_operator: Optional[str] = None

    def stationary(self) -> List[EigenMode]:
        return [mode for mode in self.modes if mode.is_stationary()]

    def slowest_oscillatory(self, min_coupling: float = 0.0, min_frequency: float = 1e-6) -> Optional[EigenMode]:
        """Slowest-decaying mode with non-zero frequency whose coupling reaches ``min_coupling``."""
        for mode in self.modes:
            if mode.is_stationary() or abs(mode.eigenvalue.imag) < min_frequency:
                continue
            if mode.coupling is not None and mode.coupling < min_coupling:
                continue
            return mode
        return None

    def conjugation_defect(self) -> float:
        """Largest distance from an oscillatory eigenvalue to the conjugate of its nearest partner."""
        values = self.eigenvalues
        worst = 0.0
        for value in values[np.abs(values.imag) > 1e-9]:
            worst = max(worst, float(np.min(np.abs(values - np.conj(value)))))
        return worst

    def to_dict(self) -> Dict:
        return {
            "truncation_m": self.truncation_m,
            "coupling_operator": self.coupling_operator,
            "eigenvalues": [
                {"re": float(z.real), "im": float(z.imag), "im_cm1": float(z.imag / KAPPA)} for z in self.eigenvalues
            ],
            "modes": [mode.to_dict() for mode in self.modes],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def eigenmode_analysis(
    superop: Superoperator,
    eig: EigenSystem,
    top_k: int = 10,
    coupling_op: Optional[Operator] = None,
) -> EigenmodeReport:
    """
    Full dense eigendecomposition of L.

    Modes are listed by ascending decay rate (|Re λ|, then |Im λ|). The report
    keeps every stationary mode plus the ``top_k`` slowest non-stationary ones,
    each with the eigenbasis element |ψ_j⟩⟨ψ_k| carrying most of its weight.
    """
    started = wallclock.perf_counter()
    try:
        values, vectors = scipy.linalg.eig(superop.matrix)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SolverFailureError(f"Liouvillian eigendecomposition failed: {e}") from e
    if not np.all(np.isfinite(values)):
        raise SolverFailureError("Liouvillian eigendecomposition returned non-finite eigenvalues")

    order = np.lexsort((np.abs(values.imag), np.abs(values.real)))
    values = values[order]
    vectors = vectors[:, order]
    positive = float(np.max(values.real))
    if positive > STATIONARY_TOLERANCE:
        logger.warning(f"Liouvillian has an eigenvalue with positive real part {positive:.2e}")

    d = superop.dimension
    v = eig.vectors if superop.basis_tag == BasisTag.LOCAL else np.eye(d)
    coupling_matrix = None
    if coupling_op is not None:
        coupling_matrix = eig.to_basis(coupling_op).matrix if coupling_op.basis_tag == BasisTag.LOCAL else coupling_op.matrix

    modes = []
    non_stationary = 0
    for i, value in enumerate(values):
        stationary = abs(value.real) < STATIONARY_TOLERANCE and abs(value.imag) < STATIONARY_TOLERANCE
        if not stationary:
            if non_stationary >= top_k:
                break
            non_stationary += 1
        mode = v.conj().T @ unvec(vectors[:, i], d) @ v
        norm = np.linalg.norm(mode)
        weights = np.abs(mode) / norm
        j, k = np.unravel_index(int(np.argmax(weights)), weights.shape)
        coupling = None
        if coupling_matrix is not None:
            coupling = float(abs(np.sum(coupling_matrix.T * mode)) / norm)
        modes.append(EigenMode(complex(value), (int(j), int(k)), float(weights[j, k]), coupling))

    logger.info(
        f"Eigenmode analysis of D={d} Liouvillian at M={superop.truncation_m}: "
        f"{len(values)} eigenvalues in {wallclock.perf_counter() - started:.1f} s"
    )
    return EigenmodeReport(values, modes, superop.truncation_m, coupling_op.label if coupling_op else None)


@dataclass
class RedfieldTensor:
    """
    ρ̇_jk = iκΩ_kj ρ_jk + Σ_αα' R[j, k, α, α'] ρ_αα' in the system eigenbasis.

    ``coherent`` holds iκΩ_kj (ps⁻¹) as a D×D matrix.
    """

    coherent: np.ndarray
    tensor: np.ndarray
    truncation_m: Optional[int] = None
    audit: Dict[str, float] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.coherent.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return self.coherent * rho + np.einsum("jkab,ab->jk", self.tensor, rho)

    def decay_rates(self, pairs: Sequence[Tuple[int, int]]) -> Dict[Tuple[int, int], float]:
        """Self-decay rate -Re R[j, k, j, k] (ps⁻¹) of each coherence."""
        return {(j, k): float(-self.tensor[j, k, j, k].real) for j, k in pairs}

    def coherent_dominance(self, pairs: Sequence[Tuple[int, int]]) -> Dict[Tuple[int, int], float]:
        """|R[j, k, j, k]| / |κΩ_kj|; small values mean the oscillation is coherent."""
        ratios = {}
        for j, k in pairs:
            frequency = abs(self.coherent[j, k])
            ratios[(j, k)] = float(abs(self.tensor[j, k, j, k]) / frequency) if frequency else float("inf")
        return ratios

    def population_sum_rule(self) -> float:
        """max over (α, α') of |Σ_j R[j, j, α, α']|."""
        return float(np.max(np.abs(np.einsum("jjab->ab", self.tensor))))


def redfield_form(superop: Superoperator, eig: EigenSystem, tolerance: float = 1e-10) -> RedfieldTensor:
    """Rotate L to the eigenbasis and split off its coherent diagonal."""
    d = superop.dimension
    rotated = to_eigenbasis(superop, eig)
    coherent = 1j * KAPPA * eig.frequency_matrix()
    residual = rotated - np.diag(vec(coherent))
    tensor = residual.reshape(d, d, d, d, order="F")
    result = RedfieldTensor(coherent, tensor, superop.truncation_m)

    sample = np.random.default_rng(0).normal(size=(d, d)) + 1j * np.random.default_rng(1).normal(size=(d, d))
    sample = sample + sample.conj().T
    reference = unvec(rotated @ vec(sample), d)
    mismatch = float(np.max(np.abs(result.apply(sample) - reference)) / max(np.max(np.abs(reference)), 1.0))
    if mismatch > tolerance:
        raise SolverFailureError(f"Redfield form does not reproduce the Liouvillian (mismatch {mismatch:.2e})")
    result.audit = {"reconstruction_mismatch": mismatch, "population_sum_rule": result.population_sum_rule()}
    return result


def propagate_superoperator(
    superop: Superoperator,
    rho0: DensityMatrix,
    config: PropagationConfig,
    eig: EigenSystem,
    record: Optional[Mapping[str, Operator]] = None,
    max_stored_states: int = 101,
) -> Trajectory:
    """Exact stepping vec ρ(t+dt) = exp(L·dt)·vec ρ(t) on the output grid."""
    if rho0.basis_tag != superop.basis_tag:
        raise BasisMismatchError(f"state is in {rho0.basis_tag.value}, superoperator in {superop.basis_tag.value}")
    started = wallclock.perf_counter()
    d = superop.dimension
    step = scipy.linalg.expm(superop.matrix * config.dt_out)
    recorder = make_recorder(superop.basis_tag, eig, config, record, max_stored_states)
    state = vec(rho0.matrix).astype(complex)
    recorder(0, rho0.matrix)
    for index in range(1, config.n_intervals + 1):
        state = step @ state
        recorder(index, unvec(state, d))
    wall = wallclock.perf_counter() - started
    logger.info(f"Exponential propagation to {config.t_end} ps at D={d}: {wall:.1f} s")
    return recorder.trajectory("eigen-exponential", {"wall_seconds": wall})
