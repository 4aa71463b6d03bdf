"""
Expectation values, exciton populations and eigenbasis coherence tracks.

⟨O(t)⟩ = Σ_j O_jj ρ_jj(t) + Σ_{j<k} 2·Re[ρ_jk(t)·O_kj] for Hermitian O, so
each coherence |ψ_j⟩⟨ψ_k| contributes an oscillation at Ω_kj weighted by the
eigenbasis matrix element O_kj = ⟨ψ_k|O|ψ_j⟩.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .dynamics import DensityMatrix, Trajectory
from .errors import BasisMismatchError, IndexOutOfRangeError, InvariantViolationError
from .hilbert import BasisTag, EigenSystem, Operator, OperatorSet
from .utils import get_logger

logger = get_logger(__name__)

DEFAULT_PAIR_CAP = 7
PAIR_THRESHOLD = 1e-6
IMAGINARY_TOLERANCE = 1e-8

# CSV column name -> operator-set attribute
STANDARD_SIGNALS = {"X1": "x1", "X2": "x2", "popE1": "pop_e1", "popE2": "pop_e2"}


@dataclass(frozen=True)
class CoherenceTrack:
    pair: Tuple[int, int]
    times: np.ndarray
    rho_t: np.ndarray
    weight_x1: float
    weight_x2: float
    omega_kj: float

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.rho_t)

    def weighted_real(self, mode: int = 1) -> np.ndarray:
        return np.real(self.rho_t) * self._weight(mode)

    def weighted_abs(self, mode: int = 1) -> np.ndarray:
        return np.abs(self.rho_t) * abs(self._weight(mode))

    def contribution(self, mode: int = 1) -> np.ndarray:
        """2·Re[ρ_jk(t)·X_kj], this pair's share of ⟨X_mode(t)⟩."""
        return 2.0 * np.real(self.rho_t * self._weight(mode))

    def _weight(self, mode: int) -> float:
        if mode == 1:
            return self.weight_x1
        if mode == 2:
            return self.weight_x2
        raise ValueError(f"mode must be 1 or 2, got {mode}")

    def lifetime(self, floor: float = 1e-12) -> float:
        """Decay time (ps) of |ρ_jk(t)| from a log-linear least-squares fit."""
        magnitude = self.magnitude
        usable = magnitude > floor
        if usable.sum() < 2:
            return 0.0
        slope = np.polyfit(self.times[usable], np.log(magnitude[usable]), 1)[0]
        if slope >= -1e-9:
            return float("inf")
        return float(-1.0 / slope)

    @property
    def label(self) -> str:
        return f"cohr_{self.pair[0]}_{self.pair[1]}"


@dataclass
class Reconstruction:
    """Split of ⟨O(t)⟩ into selected-pair, diagonal and residual parts."""

    times: np.ndarray
    signal: np.ndarray
    diagonal: np.ndarray
    pairs: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)

    @property
    def residual(self) -> np.ndarray:
        total = self.diagonal + sum(self.pairs.values(), np.zeros_like(self.signal))
        return self.signal - total

    def residual_fraction(self) -> float:
        """RMS of the residual over the RMS of the mean-free signal."""
        fluctuation = self.signal - self.signal.mean()
        scale = np.sqrt(np.mean(fluctuation ** 2))
        if scale == 0.0:
            return 0.0
        return float(np.sqrt(np.mean(self.residual ** 2)) / scale)


@dataclass(frozen=True)
class LineComponent:
    pair: Tuple[int, int]
    omega_kj: float
    amplitude_x1: float
    amplitude_x2: float

    @property
    def synchronised(self) -> str:
        product = self.amplitude_x1 * self.amplitude_x2
        if product > 0:
            return "positive"
        if product < 0:
            return "negative"
        return "none"


def _eigen_matrix(op: Operator, eig: Optional[EigenSystem]) -> np.ndarray:
    if op.basis_tag == BasisTag.EIGEN:
        return op.matrix
    if eig is None:
        raise BasisMismatchError(
            f"{op.label or 'operator'} is in the local basis; trajectory states are in the eigenbasis"
        )
    return eig.to_basis(op).matrix


def _real_part(values: np.ndarray, name: str) -> np.ndarray:
    scale = max(float(np.max(np.abs(values))), 1.0)
    residue = float(np.max(np.abs(np.imag(values)))) if len(values) else 0.0
    if residue > IMAGINARY_TOLERANCE * scale:
        raise InvariantViolationError(f"<{name}> has imaginary residue {residue:.2e}")
    return np.real(values)


def expectation_series(traj: Trajectory, op: Operator, eig: Optional[EigenSystem] = None) -> np.ndarray:
    """
    Tr{O ρ(t)} on the trajectory grid.

    Expectations recorded during propagation are looked up by label. Otherwise
    the operator must be in the eigenbasis (or ``eig`` must be given) and its
    off-diagonal support must lie inside the tracked block, unless full states
    were stored at every grid point.
    """
    if op.label and op.label in traj.expectations:
        return _real_part(traj.expectations[op.label], op.label)

    m = _eigen_matrix(op, eig)
    if traj.full_rate_states:
        values = np.einsum("kj,tjk->t", m, traj.states)
        return _real_part(values, op.label or "O")

    k = traj.tracked_states
    outside = m.copy()
    np.fill_diagonal(outside, 0.0)
    outside[:k, :k] = 0.0
    if np.max(np.abs(outside)) > 1e-14:
        raise IndexOutOfRangeError(
            f"{op.label or 'operator'} couples eigenstates beyond the {k} tracked ones; "
            "record it during propagation or store full states"
        )
    diagonal = traj.populations @ np.real(np.diag(m))
    inner = m[:k, :k].copy()
    np.fill_diagonal(inner, 0.0)
    values = diagonal + np.einsum("kj,tjk->t", inner, traj.block)
    return _real_part(values, op.label or "O")


def attach_standard_observables(traj: Trajectory, ops: OperatorSet, eig: EigenSystem) -> Trajectory:
    """Store X1, X2, popE1 and popE2 on ``traj.observables``."""
    for column, name in STANDARD_SIGNALS.items():
        traj.observables[column] = expectation_series(traj, ops[name], eig)
    return traj


def standard_recording(ops: OperatorSet, h: Optional[Operator] = None) -> Dict[str, Operator]:
    """Operators recorded at full rate by every scenario run."""
    record = {name: ops[name] for name in ("x1", "x2", "p1", "p2", "n1", "n2", "pop_e1", "pop_e2", "identity")}
    if h is not None:
        record["H"] = h
    return record


def _check_pairs(eig: EigenSystem, pairs: Sequence[Tuple[int, int]]) -> None:
    for j, k in pairs:
        eig.check_index(j, k)
        if j == k:
            raise IndexOutOfRangeError(f"pair ({j},{k}) is a population, not a coherence")


def coherence_tracks(
    traj: Trajectory,
    eig: EigenSystem,
    pairs: Sequence[Tuple[int, int]],
    ops: OperatorSet,
    bound_slack: float = 1e-6,
) -> List[CoherenceTrack]:
    """
    Eigenbasis coherences ρ_jk(t) with their position weights X_{i,kj}.

    Raises InvariantViolationError when |ρ_jk| exceeds √(ρ_jj·ρ_kk) by more
    than ``bound_slack`` anywhere on the grid.
    """
    _check_pairs(eig, pairs)
    x1 = eig.to_basis(ops.x1).matrix
    x2 = eig.to_basis(ops.x2).matrix
    tracks = []
    for j, k in pairs:
        rho_t = np.array(traj.element(j, k))
        bound = np.sqrt(np.clip(traj.populations[:, j] * traj.populations[:, k], 0.0, None))
        excess = float(np.max(np.abs(rho_t) - bound))
        if excess > bound_slack:
            raise InvariantViolationError(f"coherence ({j},{k}) violates the Cauchy-Schwarz bound by {excess:.2e}")
        tracks.append(
            CoherenceTrack(
                pair=(j, k),
                times=traj.times,
                rho_t=rho_t,
                weight_x1=float(np.real(x1[k, j])),
                weight_x2=float(np.real(x2[k, j])),
                omega_kj=eig.gap(j, k),
            )
        )
    return tracks


def default_pairs(
    eig: EigenSystem,
    ops: OperatorSet,
    rho0: Optional[DensityMatrix] = None,
    traj: Optional[Trajectory] = None,
    cap: int = DEFAULT_PAIR_CAP,
    threshold: float = PAIR_THRESHOLD,
) -> List[Tuple[int, int]]:
    """
    Coherences that dominate ⟨X1(t)⟩.

    With a trajectory, pairs j < k inside its tracked block are ranked by the
    peak amplitude max_t |ρ_jk(t)·X_{1,kj}| they contribute over the run, so
    coherences that are empty at t = 0 but fed by relaxation still count.
    Without one the ranking uses |ρ_jk(0)·X_{1,kj}| of ``rho0``. Pairs whose
    magnitude never exceeds ``threshold`` are skipped and the first ``cap``
    are returned.
    """
    if cap < 1:
        raise ValueError(f"cap must be positive, got {cap}")
    x1 = np.abs(eig.to_basis(ops.x1).matrix)
    if traj is not None:
        n = traj.tracked_states
        magnitude = np.max(np.abs(traj.block), axis=0)
        x1 = x1[:n, :n]
    elif rho0 is not None:
        magnitude = np.abs(rho0.to_basis(eig).matrix)
    else:
        raise ValueError("default_pairs needs an initial state or a trajectory")
    amplitude = magnitude * x1.T
    upper = np.triu(magnitude > threshold, k=1)
    j_idx, k_idx = np.nonzero(upper)
    scores = amplitude[j_idx, k_idx]
    order = np.argsort(-scores, kind="stable")
    selected = [(int(j_idx[i]), int(k_idx[i])) for i in order if scores[i] > 0.0][:cap]
    logger.debug(f"Selected coherence pairs: {selected}")
    return selected


def reconstruct_expectation(
    traj: Trajectory, eig: EigenSystem, op: Operator, pairs: Sequence[Tuple[int, int]]
) -> Reconstruction:
    _check_pairs(eig, pairs)
    m = _eigen_matrix(op, eig)
    signal = expectation_series(traj, op, eig)
    diagonal = traj.populations @ np.real(np.diag(m))
    contributions = {}
    for j, k in pairs:
        contributions[(j, k)] = 2.0 * np.real(traj.element(j, k) * m[k, j])
    return Reconstruction(traj.times, signal, diagonal, contributions)


def classify_pairs(tracks: Sequence[CoherenceTrack], rtol: float = 0.05) -> Dict[str, List[Tuple[int, int]]]:
    """Group coherences by whether they drive the two modes in phase (X1 = X2) or in antiphase (X1 = -X2)."""
    groups = {"positive": [], "negative": [], "other": []}
    for track in tracks:
        a, b = track.weight_x1, track.weight_x2
        scale = max(abs(a), abs(b))
        if scale == 0.0:
            groups["other"].append(track.pair)
        elif abs(a - b) <= rtol * scale:
            groups["positive"].append(track.pair)
        elif abs(a + b) <= rtol * scale:
            groups["negative"].append(track.pair)
        else:
            groups["other"].append(track.pair)
    return groups


def coherence_line_spectrum(
    traj: Trajectory,
    eig: EigenSystem,
    pairs: Sequence[Tuple[int, int]],
    ops: OperatorSet,
    t: float,
) -> List[LineComponent]:
    """Frequency and signed amplitude |ρ_jk(t)|·X_{i,kj} of every tracked pair at time ``t``."""
    if not traj.times[0] <= t <= traj.times[-1]:
        raise IndexOutOfRangeError(f"t={t} outside [{traj.times[0]}, {traj.times[-1]}]")
    index = int(np.argmin(np.abs(traj.times - t)))
    lines = []
    for track in coherence_tracks(traj, eig, pairs, ops):
        magnitude = float(np.abs(track.rho_t[index]))
        lines.append(
            LineComponent(
                pair=track.pair,
                omega_kj=track.omega_kj,
                amplitude_x1=magnitude * track.weight_x1,
                amplitude_x2=magnitude * track.weight_x2,
            )
        )
    return lines


def trajectory_frame(traj: Trajectory, tracks: Sequence[CoherenceTrack] = ()) -> pd.DataFrame:
    """One row per output time: t_ps, attached observables and cohr_j_k_{re,im,abs} columns."""
    columns: Dict[str, np.ndarray] = {"t_ps": traj.times}
    for name in STANDARD_SIGNALS:
        if name in traj.observables:
            columns[name] = traj.observables[name]
    for name, values in traj.observables.items():
        columns.setdefault(name, values)
    for track in tracks:
        columns[f"{track.label}_re"] = np.real(track.rho_t)
        columns[f"{track.label}_im"] = np.imag(track.rho_t)
        columns[f"{track.label}_abs"] = np.abs(track.rho_t)
    return pd.DataFrame(columns)


def pair_summary(tracks: Sequence[CoherenceTrack], t: Optional[float] = None) -> pd.DataFrame:
    """Per-pair frequency, weights, lifetime and weighted magnitude (at ``t`` or the final time)."""
    rows: List[Mapping] = []
    for track in tracks:
        index = -1 if t is None else int(np.argmin(np.abs(track.times - t)))
        rows.append({
            "j": track.pair[0],
            "k": track.pair[1],
            "omega_kj": track.omega_kj,
            "x1_kj": track.weight_x1,
            "x2_kj": track.weight_x2,
            "abs_rho": float(track.magnitude[index]),
            "weighted_abs_x1": float(track.weighted_abs(1)[index]),
            "lifetime_ps": track.lifetime(),
        })
    return pd.DataFrame(rows)
