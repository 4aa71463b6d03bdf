"""
Shared fixtures for the vibronic-sync test suite.
"""

import numpy as np
import pytest

from vibronic_sync.dynamics import PropagationConfig, initial_state, standard_dissipators
from vibronic_sync.hilbert import DimerParams, build_hamiltonian, build_operators, diagonalise
from vibronic_sync.runner import ModelSetup


def make_setup(params: DimerParams) -> ModelSetup:
    ops = build_operators(params)
    h = build_hamiltonian(params, ops)
    eig = diagonalise(h, params.m_levels)
    return ModelSetup(params, ops, h, eig, initial_state(params, eig), standard_dissipators(params, ops))


@pytest.fixture(scope="session")
def pe545():
    """Reference dimer parameters at the full truncation M = 8."""
    return make_setup(DimerParams())


@pytest.fixture(scope="session")
def small():
    """Reference dimer parameters at M = 2 (D = 18)."""
    return make_setup(DimerParams(m_levels=2))


@pytest.fixture(scope="session")
def tiny():
    """Reference dimer parameters at M = 1 (D = 8)."""
    return make_setup(DimerParams(m_levels=1))


@pytest.fixture
def short_propagation():
    return PropagationConfig(t_end=0.1, dt_out=0.001)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_density_matrix(rng: np.random.Generator, dimension: int) -> np.ndarray:
    a = rng.normal(size=(dimension, dimension)) + 1j * rng.normal(size=(dimension, dimension))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


@pytest.fixture
def app_config(tmp_path):
    """Application settings with the run registry in a temporary SQLite file."""
    return {
        "log_level": "WARNING",
        "default_preset": "pe545",
        "database": {"url": f"sqlite:///{(tmp_path / 'registry.db').as_posix()}", "echo": False},
        "numerics": {"max_mode_dim": 400, "max_superoperator_dim": 60, "max_stored_states": 101,
                     "eigenmode_min_coupling": 0.05},
        "sweep": {"workers": 1},
    }
