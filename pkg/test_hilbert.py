"""
Tests for the composite Hilbert space, Hamiltonian and eigen decomposition.
"""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vibronic_sync.errors import (
    BasisMismatchError,
    DimensionOverflowError,
    IndexOutOfRangeError,
    ParameterRegimeWarning,
)
from vibronic_sync.hilbert import (
    BasisLabel,
    BasisTag,
    DimerParams,
    EigenSystem,
    Operator,
    build_hamiltonian,
    build_operators,
    delocalised_params,
    diagonalise,
    eigenstate_composition,
    et_amplitude_indicator,
    exciton_splitting,
    matrix_element_table,
    mixing_angle,
    thermal_occupation,
)


def test_dimension_follows_truncation():
    params = DimerParams(m_levels=8)
    assert params.mode_dim == 9
    assert params.dimension == 162
    ops = build_operators(DimerParams(m_levels=2))
    assert ops.x1.dimension == 18


def test_dimension_cap():
    with pytest.raises(DimensionOverflowError):
        build_operators(DimerParams(m_levels=8), max_mode_dim=50)


@given(index=st.integers(min_value=0, max_value=161))
def test_basis_label_bijection(index):
    label = BasisLabel.from_index(index, 8)
    assert label.flat_index(8) == index


def test_basis_label_out_of_range():
    with pytest.raises(IndexOutOfRangeError):
        BasisLabel(1, 3, 0).flat_index(2)
    with pytest.raises(IndexOutOfRangeError):
        BasisLabel.from_index(18, 2)


def test_ladder_operators(small):
    ops = small.ops
    n = small.params.mode_dim
    commutator = ops.b1.matrix @ ops.b1_dag.matrix - ops.b1_dag.matrix @ ops.b1.matrix
    # [b, b†] = 1 except on the highest kept Fock level
    for index in range(small.params.dimension):
        label = BasisLabel.from_index(index, small.params.m_levels)
        expected = 1.0 if label.n1 < n - 1 else -(n - 1)
        assert commutator[index, index] == pytest.approx(expected)
    for name in ("x1", "x2", "p1", "p2", "n1", "n2", "theta1", "theta2", "sigma_x", "sigma_z", "p00"):
        assert ops[name].is_hermitian(), name
    np.testing.assert_allclose(ops.theta1.matrix + ops.theta2.matrix, ops.identity.matrix, atol=1e-14)
    np.testing.assert_allclose(ops.pop_e1.matrix + ops.pop_e2.matrix, ops.identity.matrix, atol=1e-14)


def test_operator_set_lookup(small):
    assert small.ops["x1"] is small.ops.x1
    with pytest.raises(KeyError):
        small.ops["x3"]


def test_operator_basis_mismatch(small):
    rotated = small.eig.to_basis(small.ops.x1)
    assert rotated.basis_tag == BasisTag.EIGEN
    with pytest.raises(BasisMismatchError):
        small.ops.x1 + rotated
    with pytest.raises(ValueError):
        Operator(np.zeros((2, 3)))


def test_mixing_angle_and_splitting():
    assert mixing_angle(DimerParams(delta_e=0.0)) == pytest.approx(np.pi / 4)
    params = DimerParams()
    assert exciton_splitting(params) == pytest.approx(np.hypot(1042.0, 184.0))
    assert np.tan(2 * mixing_angle(params)) == pytest.approx(2 * 92.0 / 1042.0)


def test_thermal_occupation():
    assert thermal_occupation(1111.0, 207.1) == pytest.approx(1.0 / np.expm1(1111.0 / 207.1))
    assert thermal_occupation(1111.0, 1e-3) == 0.0


def test_separable_spectrum():
    params = DimerParams(g1=0.0, g2=0.0, m_levels=2)
    eig = diagonalise(build_hamiltonian(params), params.m_levels)
    half = 0.5 * exciton_splitting(params)
    expected = sorted(
        e + n1 * params.omega1 + n2 * params.omega2
        for e in (-half, half)
        for n1 in range(3)
        for n2 in range(3)
    )
    np.testing.assert_allclose(eig.energies, expected, atol=1e-9)


def test_phase_convention(small):
    vectors = small.eig.vectors
    for col in range(vectors.shape[1]):
        lead = np.argmax(np.abs(vectors[:, col]))
        assert abs(vectors[lead, col].imag) < 1e-12
        assert vectors[lead, col].real > 0
    assert np.all(np.diff(small.eig.energies) >= 0)


def test_eigensystem_json(small):
    restored = EigenSystem.from_json(small.eig.to_json())
    np.testing.assert_allclose(restored.energies, small.eig.energies)
    np.testing.assert_allclose(restored.vectors, small.eig.vectors)
    assert restored.m_levels == 2


def test_gap_index_check(small):
    assert small.eig.gap(0, 1) == pytest.approx(small.eig.energies[1] - small.eig.energies[0])
    with pytest.raises(IndexOutOfRangeError):
        small.eig.gap(0, 18)


def test_table_one_gaps(pe545):
    assert pe545.eig.gap(1, 3) == pytest.approx(81.0, abs=0.5)
    assert pe545.eig.gap(0, 2) == pytest.approx(1111.0, abs=0.5)


def test_sigma_x_vanishes_between_vibrational_levels_without_coupling():
    params = DimerParams(g1=0.0, g2=0.0, m_levels=2)
    ops = build_operators(params)
    eig = diagonalise(build_hamiltonian(params, ops), params.m_levels)
    ground = eig.to_basis(ops.pop_e1).matrix
    pairs = [(j, k) for j in range(eig.dimension) for k in range(j + 1, eig.dimension)
             if abs(ground[j, j] - ground[k, k]) < 1e-9]
    for row in matrix_element_table(eig, ops, pairs):
        assert abs(row.sigma_x) < 1e-12


def test_eigenstate_composition(pe545):
    composition = eigenstate_composition(pe545.eig, 0, top=4)
    magnitudes = [abs(c) for _, c in composition]
    assert magnitudes == sorted(magnitudes, reverse=True)
    assert all(isinstance(label, BasisLabel) for label, _ in composition)


def test_et_indicator_regimes():
    assert et_amplitude_indicator(DimerParams()) == pytest.approx(0.76, abs=0.01)
    assert et_amplitude_indicator(DimerParams(omega1=1500.0, omega2=1500.0)) == pytest.approx(0.04, abs=0.01)
    assert 0.94 <= et_amplitude_indicator(delocalised_params(DimerParams(), 0.5)) <= 0.97
    resonant = DimerParams(omega1=exciton_splitting(DimerParams()), omega2=exciton_splitting(DimerParams()))
    assert et_amplitude_indicator(resonant) == 1.0


def test_et_indicator_regime_warning():
    with pytest.warns(ParameterRegimeWarning):
        et_amplitude_indicator(DimerParams(omega2=1200.0))


def test_delocalised_params_hold_splitting():
    base = DimerParams()
    params = delocalised_params(base, 0.5)
    assert exciton_splitting(params) == pytest.approx(exciton_splitting(base))
    assert np.sin(2 * mixing_angle(params)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        delocalised_params(base, 1.5)
