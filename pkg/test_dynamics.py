"""
Tests for states, the Lindblad right-hand side and the propagators.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from conftest import random_density_matrix
from vibronic_sync.dynamics import (
    DensityMatrix,
    DissipatorSpec,
    LindbladKernel,
    PropagationConfig,
    PropagationMethod,
    check_bases,
    eigenstate_projector_state,
    initial_state,
    lindblad_rhs,
    propagate_closed,
    propagate_open,
    rotate_dissipators,
    steady_state,
    synchronisation_equality_residual,
)
from vibronic_sync.errors import BasisMismatchError, IndexOutOfRangeError, InvariantViolationError
from vibronic_sync.hilbert import KAPPA, BasisTag, DimerParams
from vibronic_sync.observables import standard_recording


def test_propagation_config_validation():
    with pytest.raises(ValidationError):
        PropagationConfig(t_end=0.0)
    with pytest.raises(ValidationError):
        PropagationConfig(t_end=0.01, dt_out=0.1)
    with pytest.raises(ValidationError):
        PropagationConfig(unknown=1)
    config = PropagationConfig(t_end=2.0, dt_out=0.001)
    assert config.n_intervals == 2000
    assert len(config.times()) == 2001
    assert config.resolved_store_every(101) == 20


def test_initial_state(small):
    rho = initial_state(small.params)
    rho.validate()
    assert rho.basis_tag == BasisTag.LOCAL
    assert np.real(np.trace(small.ops.pop_e2.matrix @ rho.matrix)) == pytest.approx(1.0)
    lower = initial_state(small.params, exciton=1)
    assert np.real(np.trace(small.ops.pop_e1.matrix @ lower.matrix)) == pytest.approx(1.0)
    rotated = initial_state(small.params, small.eig, basis=BasisTag.EIGEN)
    np.testing.assert_allclose(rotated.to_local(small.eig).matrix, rho.matrix, atol=1e-12)
    with pytest.raises(ValueError):
        initial_state(small.params, exciton=3)


def test_density_matrix_validation():
    with pytest.raises(InvariantViolationError):
        DensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]])).validate()
    with pytest.raises(InvariantViolationError):
        DensityMatrix(np.diag([0.7, 0.7])).validate()
    with pytest.raises(InvariantViolationError):
        DensityMatrix(np.diag([1.2, -0.2])).validate()
    assert DensityMatrix(np.diag([0.5, 0.5])).purity() == pytest.approx(0.5)


def test_negative_rate_rejected(small):
    with pytest.raises(ValueError):
        DissipatorSpec(small.ops.b1, -1.0)


def test_rhs_preserves_trace_and_hermiticity(small, rng):
    rho = DensityMatrix(random_density_matrix(rng, small.params.dimension))
    drho = lindblad_rhs(rho, small.h, small.dissipators)
    assert abs(np.trace(drho)) < 1e-9
    np.testing.assert_allclose(drho, drho.conj().T, atol=1e-9)


def test_kernel_matches_rhs(small, rng):
    rho = random_density_matrix(rng, small.params.dimension)
    reference = lindblad_rhs(DensityMatrix(rho), small.h, small.dissipators)
    for sparse in (True, False):
        kernel = LindbladKernel(small.h, small.dissipators, sparse=sparse)
        np.testing.assert_allclose(kernel.apply(rho), reference, atol=1e-10 * np.max(np.abs(reference)))


def test_basis_check(small):
    rotated = rotate_dissipators(small.dissipators, small.eig)
    with pytest.raises(BasisMismatchError):
        check_bases(BasisTag.LOCAL, small.h, rotated)
    check_bases(BasisTag.EIGEN, small.eig.to_basis(small.h), rotated)


def test_closed_evolution_conserves_purity_and_energy(small):
    config = PropagationConfig(t_end=0.5, dt_out=0.001)
    traj = propagate_closed(small.rho0, small.eig, config, standard_recording(small.ops, small.h))
    energy = np.real(traj.expectations["H"])
    np.testing.assert_allclose(energy, energy[0], atol=1e-8 * abs(energy[0]))
    purities = [traj.state(i).purity() for i in range(len(traj.state_indices))]
    np.testing.assert_allclose(purities, purities[0], atol=1e-8)
    constant = np.broadcast_to(traj.populations[0], traj.populations.shape)
    np.testing.assert_allclose(traj.populations, constant, atol=1e-12)


def test_closed_eigenbasis_phases(small):
    rho = np.zeros((small.params.dimension,) * 2, dtype=complex)
    rho[0, 0] = rho[2, 2] = rho[0, 2] = rho[2, 0] = 0.5
    config = PropagationConfig(t_end=0.05, dt_out=0.001)
    traj = propagate_closed(DensityMatrix(rho, BasisTag.EIGEN), small.eig, config)
    expected = 0.5 * np.exp(1j * KAPPA * small.eig.gap(0, 2) * traj.times)
    np.testing.assert_allclose(traj.element(0, 2), expected, atol=1e-12)


def test_open_without_dissipation_matches_closed(small, short_propagation):
    silent = [DissipatorSpec(d.operator, 0.0) for d in small.dissipators]
    record = standard_recording(small.ops)
    open_traj = propagate_open(small.rho0, small.h, silent, short_propagation, small.eig, record)
    closed = propagate_closed(small.rho0, small.eig, short_propagation, record)
    np.testing.assert_allclose(open_traj.expectations["x1"], closed.expectations["x1"], atol=1e-7)
    np.testing.assert_allclose(open_traj.block, closed.block, atol=1e-7)


def test_open_run_invariants(small, short_propagation):
    traj = propagate_open(small.rho0, small.h, small.dissipators, short_propagation, small.eig,
                          standard_recording(small.ops))
    traj.check_grid()
    assert traj.audit["max_trace_drift"] < 1e-8
    assert traj.audit["max_hermiticity_defect"] < 1e-10
    assert traj.audit["min_eigenvalue"] > -1e-7
    assert traj.audit["steps"] > 0
    np.testing.assert_allclose(np.real(traj.expectations["identity"]), 1.0, atol=1e-8)
    populations = np.real(traj.expectations["pop_e1"] + traj.expectations["pop_e2"])
    np.testing.assert_allclose(populations, 1.0, atol=1e-8)
    for i in range(len(traj.state_indices)):
        traj.state(i).validate()


def test_state_thinning(small):
    config = PropagationConfig(t_end=0.3, dt_out=0.001)
    traj = propagate_open(small.rho0, small.h, small.dissipators, config, small.eig, max_stored_states=11)
    assert len(traj.state_indices) <= 12
    assert traj.state_indices[-1] == len(traj.times) - 1
    assert not traj.full_rate_states
    assert traj.tracked_states == 12
    assert len(traj.element(0, 11)) == len(traj.times)
    with pytest.raises(IndexOutOfRangeError):
        traj.element(0, 17)


def test_trajectory_cut_at_earlier_time(small):
    config = PropagationConfig(t_end=0.2, dt_out=0.001, store_every=10)
    traj = propagate_open(small.rho0, small.h, small.dissipators, config, small.eig, standard_recording(small.ops))
    cut = traj.until(0.05)
    assert len(cut.times) == 51
    assert cut.times[-1] == pytest.approx(0.05)
    assert cut.block.shape == (51,) + traj.block.shape[1:]
    assert cut.populations.shape == (51, small.eig.dimension)
    assert len(cut.expectations["x1"]) == 51
    assert np.all(cut.state_indices < 51)
    assert len(cut.states) == len(cut.state_indices) == 6
    np.testing.assert_array_equal(cut.element(0, 2), traj.element(0, 2)[:51])
    assert traj.until(0.2) is traj
    assert traj.until(5.0) is traj


def test_exponential_matches_adaptive(tiny):
    """Exact superoperator stepping and the adaptive integrator agree at M = 1."""
    adaptive = PropagationConfig(t_end=1.0, dt_out=0.001, rel_tol=1e-10, abs_tol=1e-12)
    exact = adaptive.model_copy(update={"method": PropagationMethod.EIGEN_EXPONENTIAL})
    record = standard_recording(tiny.ops)
    a = propagate_open(tiny.rho0, tiny.h, tiny.dissipators, adaptive, tiny.eig, record)
    b = propagate_open(tiny.rho0, tiny.h, tiny.dissipators, exact, tiny.eig, record)
    assert b.method == "eigen-exponential"
    for t in (0.1, 1.0):
        i = int(round(t / 0.001))
        assert a.expectations["x1"][i] == pytest.approx(b.expectations["x1"][i], abs=1e-6)
        np.testing.assert_allclose(a.block[i], b.block[i], atol=1e-6)


def test_eigenstate_projector(small):
    state = eigenstate_projector_state(small.eig, 3, basis=BasisTag.LOCAL)
    state.validate()
    assert state.purity() == pytest.approx(1.0)
    assert np.real(state.to_basis(small.eig).matrix[3, 3]) == pytest.approx(1.0)


def test_steady_state_is_stationary(tiny):
    from vibronic_sync.liouville import build_superoperator, vec

    state = steady_state(DimerParams(m_levels=1))
    state.validate(positivity=1e-8)
    superop = build_superoperator(tiny.h, tiny.dissipators)
    assert np.max(np.abs(superop.matrix @ vec(state.matrix))) < 1e-9


def test_synchronisation_equality_residual(small):
    x1 = small.eig.to_basis(small.ops.x1).matrix
    x2 = small.eig.to_basis(small.ops.x2).matrix
    rho0 = small.rho0.to_basis(small.eig).matrix
    assert np.max(synchronisation_equality_residual(rho0, x1, x1)) == 0.0
    residual = synchronisation_equality_residual(rho0, x1, x2)
    assert np.all(np.diag(residual) == 0.0)
    assert np.max(residual) > 0.0
