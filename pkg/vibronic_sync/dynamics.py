"""
System states and their time evolution.

The open propagator integrates the Lindblad equation on the density matrix
itself with an adaptive embedded Runge-Kutta pair. Energies enter in cm⁻¹ and
are converted to angular frequencies by KAPPA exactly once, inside the
coherent term; rates are in ps⁻¹ and times in ps.
"""

import enum
import math
import time as wallclock
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Mapping, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import DOP853, RK45

from .errors import (
    BasisMismatchError,
    IndexOutOfRangeError,
    InvariantViolationError,
    SolverFailureError,
    StepSizeUnderflowError,
)
from .hilbert import (
    KAPPA,
    BasisTag,
    DimerParams,
    EigenSystem,
    Operator,
    OperatorSet,
    build_hamiltonian,
    build_operators,
    diagonalise,
    thermal_occupation,
)
from .utils import get_logger

logger = get_logger(__name__)

TRACE_DRIFT_LIMIT = 1e-6
_INTEGRATORS = {"DOP853": DOP853, "RK45": RK45}


class PropagationMethod(str, enum.Enum):
    ADAPTIVE_RK = "adaptive-rk"
    EIGEN_EXPONENTIAL = "eigen-exponential"


class PropagationConfig(BaseModel):
    """Time grid, tolerances and storage policy of one propagation."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    t_end: float = Field(2.0, gt=0.0, description="Final time in ps.")
    dt_out: float = Field(0.001, gt=0.0, description="Output grid spacing in ps.")
    rel_tol: float = Field(1e-8, gt=0.0, le=1e-2, description="Relative integrator tolerance.")
    abs_tol: float = Field(1e-10, gt=0.0, le=1e-2, description="Absolute integrator tolerance.")
    method: PropagationMethod = Field(PropagationMethod.ADAPTIVE_RK, description="Propagation scheme.")
    integrator: Literal["DOP853", "RK45"] = Field("DOP853", description="Embedded Runge-Kutta pair.")
    store_every: int = Field(0, ge=0, description="Keep every n-th full state; 0 picks automatically.")
    tracked_states: int = Field(12, ge=2, description="Lowest eigenstates whose coherences are recorded at full rate.")
    audit_every: int = Field(10, ge=1, description="Positivity spot-check stride over stored states.")

    @model_validator(mode="after")
    def _grid_fits(self):
        if self.dt_out > self.t_end:
            raise ValueError(f"dt_out={self.dt_out} exceeds t_end={self.t_end}")
        return self

    @property
    def n_intervals(self) -> int:
        return int(math.floor(self.t_end / self.dt_out + 1e-9))

    def times(self) -> np.ndarray:
        return np.arange(self.n_intervals + 1) * self.dt_out

    def resolved_store_every(self, max_stored_states: int = 101) -> int:
        if self.store_every:
            return self.store_every
        return max(1, math.ceil((self.n_intervals + 1) / max_stored_states))


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    basis_tag: BasisTag = BasisTag.LOCAL
    time: float = 0.0

    def __post_init__(self):
        array = np.array(self.matrix, dtype=complex)
        array.setflags(write=False)
        object.__setattr__(self, "matrix", array)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix.conj().T, self.matrix)))

    def audit(self) -> Dict[str, float]:
        m = self.matrix
        return {
            "trace_drift": abs(np.trace(m) - 1.0),
            "hermiticity": float(np.max(np.abs(m - m.conj().T))),
            "min_eigenvalue": float(scipy.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]),
        }

    def validate(self, hermiticity: float = 1e-10, trace: float = 1e-8, positivity: float = 1e-7) -> None:
        report = self.audit()
        if report["hermiticity"] > hermiticity:
            raise InvariantViolationError(f"state at t={self.time} not Hermitian ({report['hermiticity']:.2e})")
        if report["trace_drift"] > trace:
            raise InvariantViolationError(f"state at t={self.time} has trace drift {report['trace_drift']:.2e}")
        if report["min_eigenvalue"] < -positivity:
            raise InvariantViolationError(
                f"state at t={self.time} has eigenvalue {report['min_eigenvalue']:.2e}"
            )

    def to_basis(self, eig: EigenSystem) -> "DensityMatrix":
        if self.basis_tag == BasisTag.EIGEN:
            return self
        return DensityMatrix(eig.matrix_to_basis(self.matrix), BasisTag.EIGEN, self.time)

    def to_local(self, eig: EigenSystem) -> "DensityMatrix":
        if self.basis_tag == BasisTag.LOCAL:
            return self
        return DensityMatrix(eig.matrix_to_local(self.matrix), BasisTag.LOCAL, self.time)


@dataclass(frozen=True)
class DissipatorSpec:
    operator: Operator
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"dissipator rate must be non-negative, got {self.rate}")


@dataclass
class Trajectory:
    """
    Time-gridded record of one run.

    Full eigenbasis states are kept every ``store_every`` grid points. At every
    grid point the run also records the eigenbasis block of the lowest
    ``tracked_states`` eigenstates, all eigenbasis populations and the
    expectations of the operators it was asked to record.
    """

    times: np.ndarray
    states: np.ndarray
    state_indices: np.ndarray
    block: np.ndarray
    populations: np.ndarray
    expectations: Dict[str, np.ndarray] = field(default_factory=dict)
    observables: Dict[str, np.ndarray] = field(default_factory=dict)
    audit: Dict[str, float] = field(default_factory=dict)
    method: str = ""

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def tracked_states(self) -> int:
        return self.block.shape[1]

    @property
    def full_rate_states(self) -> bool:
        return len(self.state_indices) == len(self.times)

    def stored_times(self) -> np.ndarray:
        return self.times[self.state_indices]

    def state(self, position: int) -> DensityMatrix:
        index = self.state_indices[position]
        return DensityMatrix(self.states[position], BasisTag.EIGEN, float(self.times[index]))

    def element(self, j: int, k: int) -> np.ndarray:
        """ρ_jk(t) on the full grid."""
        if max(j, k) < self.tracked_states:
            return self.block[:, j, k]
        if self.full_rate_states:
            return self.states[:, j, k]
        raise IndexOutOfRangeError(
            f"element ({j},{k}) was not tracked; raise tracked_states above {max(j, k)}"
        )

    def until(self, t_end: float) -> "Trajectory":
        """The same record cut after the last grid point at or before ``t_end``."""
        n = int(np.searchsorted(self.times, t_end + 1e-9, side="right"))
        if n >= len(self.times):
            return self
        keep = self.state_indices < n
        return Trajectory(
            times=self.times[:n],
            states=self.states[keep],
            state_indices=self.state_indices[keep],
            block=self.block[:n],
            populations=self.populations[:n],
            expectations={name: values[:n] for name, values in self.expectations.items()},
            observables={name: values[:n] for name, values in self.observables.items()},
            audit=dict(self.audit),
            method=self.method,
        )

    def check_grid(self) -> None:
        steps = np.diff(self.times)
        if np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > 1e-12:
            raise InvariantViolationError("trajectory time grid is not strictly increasing and uniform")


def thermal_mode_state(omega: float, kbt: float, m_levels: int) -> np.ndarray:
    """Thermal state of one truncated mode, renormalised over levels 0..M."""
    if omega <= 0 or kbt <= 0:
        raise ValueError("omega and kbt must be positive")
    weights = np.exp(-np.arange(m_levels + 1) * (omega / kbt))
    return np.diag(weights / weights.sum())


def initial_state(
    params: DimerParams,
    eig: Optional[EigenSystem] = None,
    exciton: int = 2,
    basis: BasisTag = BasisTag.LOCAL,
) -> DensityMatrix:
    """
    ρ(0) = |E_d⟩⟨E_d| ⊗ ρ1_th ⊗ ρ2_th with d = ``exciton`` (upper exciton by default).

    Args:
        params: Dimer parameters
        eig: Eigensystem, required when ``basis`` is the eigenbasis
        exciton: Initially occupied exciton, 1 or 2
        basis: Basis of the returned matrix

    Returns:
        DensityMatrix: Unit-trace initial state
    """
    if exciton not in (1, 2):
        raise ValueError(f"exciton must be 1 or 2, got {exciton}")
    electronic = np.zeros((2, 2))
    electronic[exciton - 1, exciton - 1] = 1.0
    rho1 = thermal_mode_state(params.omega1, params.kbt, params.m_levels)
    rho2 = thermal_mode_state(params.omega2, params.kbt, params.m_levels)
    rho = DensityMatrix(np.kron(electronic, np.kron(rho1, rho2)), BasisTag.LOCAL, 0.0)
    if basis == BasisTag.EIGEN:
        if eig is None:
            raise ValueError("an eigensystem is needed for an eigenbasis initial state")
        return rho.to_basis(eig)
    return rho


def eigenstate_projector_state(eig: EigenSystem, j: int, basis: BasisTag = BasisTag.EIGEN) -> DensityMatrix:
    eig.check_index(j)
    rho = np.zeros((eig.dimension, eig.dimension), dtype=complex)
    rho[j, j] = 1.0
    state = DensityMatrix(rho, BasisTag.EIGEN, 0.0)
    return state.to_local(eig) if basis == BasisTag.LOCAL else state


def standard_dissipators(params: DimerParams, ops: Optional[OperatorSet] = None) -> List[DissipatorSpec]:
    """
    Site dephasing plus thermal relaxation and excitation of both modes.

    Site projectors |e_i⟩⟨e_i| are expressed in the exciton basis (Θ_i).
    """
    if ops is None:
        ops = build_operators(params)
    occ1 = thermal_occupation(params.omega1, params.kbt)
    occ2 = thermal_occupation(params.omega2, params.kbt)
    return [
        DissipatorSpec(ops.theta1.with_label("site1_dephasing"), params.gamma_deph),
        DissipatorSpec(ops.theta2.with_label("site2_dephasing"), params.gamma_deph),
        DissipatorSpec(ops.b1.with_label("mode1_relaxation"), params.gamma_th * (1.0 + occ1)),
        DissipatorSpec(ops.b2.with_label("mode2_relaxation"), params.gamma_th * (1.0 + occ2)),
        DissipatorSpec(ops.b1_dag.with_label("mode1_excitation"), params.gamma_th * occ1),
        DissipatorSpec(ops.b2_dag.with_label("mode2_excitation"), params.gamma_th * occ2),
    ]


def rotate_dissipators(dissipators: Sequence[DissipatorSpec], eig: EigenSystem) -> List[DissipatorSpec]:
    return [DissipatorSpec(eig.to_basis(d.operator), d.rate) for d in dissipators]


def check_bases(tag: BasisTag, h: Operator, dissipators: Sequence[DissipatorSpec]) -> None:
    for op in [h] + [d.operator for d in dissipators]:
        if op.basis_tag != tag:
            raise BasisMismatchError(
                f"{op.label or 'operator'} is in {op.basis_tag.value}, state is in {tag.value}"
            )
        if op.dimension != h.dimension:
            raise BasisMismatchError(f"{op.label} has dimension {op.dimension}, expected {h.dimension}")


def lindblad_rhs(rho: DensityMatrix, h: Operator, dissipators: Sequence[DissipatorSpec]) -> np.ndarray:
    """dρ/dt = -iκ[H, ρ] + Σ_ν Γ_ν (O ρ O† - ½{O†O, ρ}), in ps⁻¹."""
    check_bases(rho.basis_tag, h, dissipators)
    r = rho.matrix
    hm = h.matrix
    out = -1j * KAPPA * (hm @ r - r @ hm)
    for d in dissipators:
        if d.rate == 0.0:
            continue
        o = d.operator.matrix
        od = o.conj().T
        odo = od @ o
        out += d.rate * (o @ r @ od - 0.5 * (odo @ r + r @ odo))
    return out


class LindbladKernel:
    """
    Right-hand side of the Lindblad equation for a Hermitian state.

    Uses the effective Hamiltonian K = κH - (i/2)Σ Γ O†O, so that
    dρ/dt = -i(Kρ - ρK†) + Σ Γ OρO†; local-basis operators are kept sparse.
    """

    def __init__(self, h: Operator, dissipators: Sequence[DissipatorSpec], sparse: Optional[bool] = None):
        active = [d for d in dissipators if d.rate > 0.0]
        self.dimension = h.dimension
        if sparse is None:
            sparse = h.basis_tag == BasisTag.LOCAL
        k = KAPPA * h.matrix.astype(complex)
        for d in active:
            o = d.operator.matrix
            k = k - 0.5j * d.rate * (o.conj().T @ o)
        jumps = [np.sqrt(d.rate) * d.operator.matrix for d in active]
        if sparse:
            self.effective = scipy.sparse.csr_array(k)
            self.jumps = [scipy.sparse.csr_array(j) for j in jumps]
        else:
            self.effective = k
            self.jumps = jumps
        self.evaluations = 0

    def apply(self, rho: np.ndarray) -> np.ndarray:
        b = -1j * (self.effective @ rho)
        out = b + b.conj().T
        for jump in self.jumps:
            c = jump @ rho
            out += jump @ c.conj().T
        return out

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        self.evaluations += 1
        rho = y.reshape(self.dimension, self.dimension)
        return self.apply(rho).ravel()


class TrajectoryRecorder:
    """Collects the full-rate records and the thinned states of a run."""

    def __init__(
        self,
        times: np.ndarray,
        to_eigen: Optional[np.ndarray],
        tracked: int,
        store_every: int,
        record: Mapping[str, np.ndarray],
        audit_every: int,
    ):
        n_times = len(times)
        self.times = times
        self.v = to_eigen
        self.tracked = tracked
        self.store_every = store_every
        self.audit_every = audit_every
        self.record_t = {name: np.ascontiguousarray(m.T) for name, m in record.items()}
        self.expectations = {name: np.zeros(n_times, dtype=complex) for name in record}
        self.block = np.zeros((n_times, tracked, tracked), dtype=complex)
        self.populations = None
        self.state_indices = list(range(0, n_times, store_every))
        if self.state_indices[-1] != n_times - 1:
            self.state_indices.append(n_times - 1)
        self._stored = set(self.state_indices)
        self.states: List[np.ndarray] = []
        self.max_trace_drift = 0.0
        self.max_hermiticity = 0.0
        self.min_eigenvalue = np.inf

    def __call__(self, index: int, rho: np.ndarray) -> None:
        dim = rho.shape[0]
        if self.populations is None:
            self.populations = np.zeros((len(self.times), dim))
        drift = abs(np.trace(rho) - 1.0)
        self.max_trace_drift = max(self.max_trace_drift, drift)
        if drift > TRACE_DRIFT_LIMIT:
            raise InvariantViolationError(
                f"trace drifted by {drift:.2e} at t={self.times[index]:.4f} ps"
            )
        for name, op_t in self.record_t.items():
            self.expectations[name][index] = np.sum(op_t * rho)

        if self.v is None:
            rho_v = rho
            self.populations[index] = np.real(np.diag(rho))
            self.block[index] = rho[: self.tracked, : self.tracked]
            full = rho
        else:
            rho_v = rho @ self.v
            self.populations[index] = np.real(np.sum(self.v.conj() * rho_v, axis=0))
            vk = self.v[:, : self.tracked]
            self.block[index] = vk.conj().T @ rho_v[:, : self.tracked]
            full = None

        if index in self._stored:
            if full is None:
                full = self.v.conj().T @ rho_v
            self.states.append(np.array(full))
            hermiticity = float(np.max(np.abs(full - full.conj().T)))
            self.max_hermiticity = max(self.max_hermiticity, hermiticity)
            if (len(self.states) - 1) % self.audit_every == 0 or index == len(self.times) - 1:
                eigenvalue = float(scipy.linalg.eigvalsh(0.5 * (full + full.conj().T))[0])
                self.min_eigenvalue = min(self.min_eigenvalue, eigenvalue)

    def trajectory(self, method: str, extra_audit: Optional[Dict] = None) -> Trajectory:
        audit = {
            "max_trace_drift": float(self.max_trace_drift),
            "max_hermiticity_defect": float(self.max_hermiticity),
            "min_eigenvalue": float(self.min_eigenvalue),
            "stored_states": len(self.states),
        }
        if extra_audit:
            audit.update(extra_audit)
        return Trajectory(
            times=self.times,
            states=np.array(self.states),
            state_indices=np.array(self.state_indices),
            block=self.block,
            populations=self.populations,
            expectations=self.expectations,
            audit=audit,
            method=method,
        )


def _recorded_matrices(record: Optional[Mapping[str, Operator]], tag: BasisTag, eig: EigenSystem) -> Dict[str, np.ndarray]:
    matrices = {}
    for name, op in (record or {}).items():
        if tag == BasisTag.EIGEN:
            matrices[name] = eig.to_basis(op).matrix
        else:
            matrices[name] = eig.to_local(op).matrix
    return matrices


def _tracked(config: PropagationConfig, dimension: int) -> int:
    return min(config.tracked_states, dimension)


def make_recorder(
    working: BasisTag,
    eig: EigenSystem,
    config: PropagationConfig,
    record: Optional[Mapping[str, Operator]] = None,
    max_stored_states: int = 101,
) -> TrajectoryRecorder:
    """Recorder for states evolved in the ``working`` basis, reporting in the eigenbasis."""
    return TrajectoryRecorder(
        config.times(),
        None if working == BasisTag.EIGEN else eig.vectors,
        _tracked(config, eig.dimension),
        config.resolved_store_every(max_stored_states),
        _recorded_matrices(record, working, eig),
        config.audit_every,
    )


def propagate_closed(
    rho0: DensityMatrix,
    eig: EigenSystem,
    config: PropagationConfig,
    record: Optional[Mapping[str, Operator]] = None,
    max_stored_states: int = 101,
) -> Trajectory:
    """
    Exact unitary evolution in the eigenbasis.

    ρ_jk(t) = ρ_jk(0)·exp(iκΩ_kj t) with Ω_kj = ε_k - ε_j.
    """
    started = wallclock.perf_counter()
    rho_e = rho0.to_basis(eig).matrix
    times = config.times()
    phases = np.exp(1j * KAPPA * np.outer(times, eig.energies))  # u_k(t) = e^{iκ ε_k t}
    tracked = _tracked(config, eig.dimension)
    store_every = config.resolved_store_every(max_stored_states)

    expectations = {}
    for name, m in _recorded_matrices(record, BasisTag.EIGEN, eig).items():
        weights = rho_e * m.T
        expectations[name] = np.sum((phases.conj() @ weights) * phases, axis=1)

    pk = phases[:, :tracked]
    block = rho_e[None, :tracked, :tracked] * pk.conj()[:, :, None] * pk[:, None, :]

    state_indices = list(range(0, len(times), store_every))
    if state_indices[-1] != len(times) - 1:
        state_indices.append(len(times) - 1)
    states = np.array([
        rho_e * np.outer(phases[i].conj(), phases[i]) for i in state_indices
    ])
    populations = np.tile(np.real(np.diag(rho_e)), (len(times), 1))

    audit = DensityMatrix(rho_e, BasisTag.EIGEN).audit()
    trajectory = Trajectory(
        times=times,
        states=states,
        state_indices=np.array(state_indices),
        block=block,
        populations=populations,
        expectations=expectations,
        audit={
            "max_trace_drift": audit["trace_drift"],
            "max_hermiticity_defect": audit["hermiticity"],
            "min_eigenvalue": audit["min_eigenvalue"],
            "stored_states": len(state_indices),
            "wall_seconds": wallclock.perf_counter() - started,
        },
        method="closed-eigenbasis",
    )
    logger.info(f"Closed propagation to {config.t_end} ps on {len(times)} points")
    return trajectory


def propagate_open(
    rho0: DensityMatrix,
    h: Operator,
    dissipators: Sequence[DissipatorSpec],
    config: PropagationConfig,
    eig: Optional[EigenSystem] = None,
    record: Optional[Mapping[str, Operator]] = None,
    max_stored_states: int = 101,
    max_superoperator_dim: int = 60,
) -> Trajectory:
    """
    Integrate the Lindblad equation from ``rho0``.

    The state is evolved in the basis of ``h`` (local-basis operators are
    applied as sparse matrices); records and stored states are expressed in
    the system eigenbasis.

    Args:
        rho0: Initial state, in the same basis as ``h``
        h: Hamiltonian in cm⁻¹
        dissipators: Jump operators and rates
        config: Grid, tolerances and method
        eig: Eigensystem of ``h``; computed when omitted
        record: Operators whose expectations are recorded at every grid point
        max_stored_states: Bound on the thinned full-state storage
        max_superoperator_dim: Hilbert dimension cap for the exponential method

    Returns:
        Trajectory: Eigenbasis records on the output grid
    """
    check_bases(rho0.basis_tag, h, dissipators)
    if eig is None:
        if h.basis_tag != BasisTag.LOCAL:
            raise ValueError("pass the eigensystem when propagating in the eigenbasis")
        eig = diagonalise(h)
    if config.method == PropagationMethod.EIGEN_EXPONENTIAL:
        if all(d.rate == 0.0 for d in dissipators):
            return propagate_closed(rho0, eig, config, record, max_stored_states)
        from .liouville import build_superoperator, propagate_superoperator

        superop = build_superoperator(h, dissipators, max_dim=max_superoperator_dim)
        return propagate_superoperator(superop, rho0, config, eig, record, max_stored_states)

    started = wallclock.perf_counter()
    working = h.basis_tag
    times = config.times()
    dim = h.dimension
    recorder = make_recorder(working, eig, config, record, max_stored_states)
    kernel = LindbladKernel(h, dissipators)
    y0 = np.array(rho0.matrix, dtype=complex).ravel()
    recorder(0, rho0.matrix)

    solver = _INTEGRATORS[config.integrator](
        kernel, 0.0, y0, t_bound=float(times[-1]), rtol=config.rel_tol, atol=config.abs_tol
    )
    next_index = 1
    steps = 0
    while solver.status == "running" and next_index < len(times):
        message = solver.step()
        steps += 1
        if solver.status == "failed":
            if message and "step size" in message.lower():
                raise StepSizeUnderflowError(f"integration stalled at t={solver.t:.6f} ps: {message}")
            raise SolverFailureError(f"integration failed at t={solver.t:.6f} ps: {message}")
        if next_index < len(times) and times[next_index] <= solver.t + 1e-12:
            interpolant = solver.dense_output()
            while next_index < len(times) and times[next_index] <= solver.t + 1e-12:
                y = solver.y if abs(times[next_index] - solver.t) <= 1e-12 else interpolant(times[next_index])
                recorder(next_index, y.reshape(dim, dim))
                next_index += 1

    wall = wallclock.perf_counter() - started
    logger.info(
        f"Open propagation to {config.t_end} ps: {steps} steps, "
        f"{kernel.evaluations} RHS evaluations, {wall:.1f} s"
    )
    trajectory = recorder.trajectory(
        f"adaptive-rk/{config.integrator}",
        {"steps": steps, "rhs_evaluations": kernel.evaluations, "wall_seconds": wall},
    )
    logger.debug(f"Propagation audit: {trajectory.audit}")
    return trajectory


def steady_state(params: DimerParams, m_levels: Optional[int] = None, max_dim: int = 60) -> DensityMatrix:
    """Stationary state of the standard open model, from the Liouvillian null vector (local basis)."""
    from .liouville import build_superoperator, stationary_state

    if m_levels is not None and m_levels != params.m_levels:
        params = params.model_copy(update={"m_levels": m_levels})
    ops = build_operators(params)
    h = build_hamiltonian(params, ops)
    superop = build_superoperator(h, standard_dissipators(params, ops), max_dim=max_dim)
    return stationary_state(superop)


def synchronisation_equality_residual(rho0: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """
    |ρ_jk(0)|·|X1_kj - X2_kj| for every off-diagonal eigenbasis pair.

    All inputs are eigenbasis matrices. A closed system keeps ⟨X1⟩ and ⟨X2⟩
    identical for all times only when every entry vanishes.
    """
    rho0 = np.asarray(rho0)
    difference = np.asarray(x1) - np.asarray(x2)
    residual = np.abs(rho0) * np.abs(difference.T)
    np.fill_diagonal(residual, 0.0)
    return residual
