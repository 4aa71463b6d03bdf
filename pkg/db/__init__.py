"""
Database package for vibronic-sync.
Provides the run-registry connection, models and repositories.
"""

from .connection import DatabaseConnection
from .models import Base, SimulationRun, Sweep, SweepPoint, RunStatusEnum
from .repositories import RunRepository, SweepRepository

__all__ = [
    'DatabaseConnection', 'Base', 'SimulationRun', 'Sweep', 'SweepPoint',
    'RunStatusEnum', 'RunRepository', 'SweepRepository',
]
