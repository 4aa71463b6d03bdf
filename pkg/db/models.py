"""
Database models for the vibronic-sync run registry.
Single responsibility: Define database table structures and relationships.
"""

import enum
from sqlalchemy import Column, Integer, String, Text, Float, DateTime, Enum, ForeignKey
from sqlalchemy.orm import declarative_base, relationship
from sqlalchemy.sql import func

Base = declarative_base()

_TIME_FORMAT = "%Y-%m-%d %H:%M:%S"


class RunStatusEnum(enum.Enum):
    """Lifecycle of a registered run or sweep point."""
    RUNNING = "running"
    SUCCESS = "success"
    FAILED = "failed"


class SimulationRun(Base):
    """
    One scenario run of the pipeline.
    Stores the scenario identity, its outcome and where the artefacts went.
    """
    __tablename__ = "simulation_runs"

    id = Column(Integer, primary_key=True, autoincrement=True, index=True)
    scenario = Column(String(255), nullable=False, index=True)
    command = Column(String(64), nullable=False, default="simulate")
    config_hash = Column(String(64), nullable=False, index=True)
    out_dir = Column(Text, nullable=True)
    status = Column(Enum(RunStatusEnum), default=RunStatusEnum.RUNNING, nullable=False, index=True)
    message = Column(Text, nullable=True)
    wall_seconds = Column(Float, nullable=True)
    started_at = Column(DateTime, default=func.now(), nullable=False)
    finished_at = Column(DateTime, nullable=True)

    def __repr__(self):
        return f"<SimulationRun(id={self.id}, scenario='{self.scenario}', status='{self.status}')>"

    def to_dict(self):
        """Convert model to dictionary."""
        return {
            "id": self.id,
            "scenario": self.scenario,
            "command": self.command,
            "config_hash": self.config_hash,
            "out_dir": self.out_dir,
            "status": self.status.value if self.status else None,
            "message": self.message,
            "wall_seconds": self.wall_seconds,
            "started_at": self.started_at.strftime(_TIME_FORMAT) if self.started_at else None,
            "finished_at": self.finished_at.strftime(_TIME_FORMAT) if self.finished_at else None,
        }


class Sweep(Base):
    """
    A parameter sweep over one DimerParams field.
    """
    __tablename__ = "sweeps"

    id = Column(Integer, primary_key=True, autoincrement=True, index=True)
    base_scenario = Column(String(255), nullable=False, index=True)
    axis = Column(String(64), nullable=False)
    created_at = Column(DateTime, default=func.now(), nullable=False)

    points = relationship("SweepPoint", back_populates="sweep", cascade="all, delete-orphan")

    def __repr__(self):
        return f"<Sweep(id={self.id}, base='{self.base_scenario}', axis='{self.axis}')>"

    def to_dict(self):
        """Convert model to dictionary."""
        return {
            "id": self.id,
            "base_scenario": self.base_scenario,
            "axis": self.axis,
            "created_at": self.created_at.strftime(_TIME_FORMAT) if self.created_at else None,
        }


class SweepPoint(Base):
    """
    Outcome of one sweep value.
    """
    __tablename__ = "sweep_points"

    id = Column(Integer, primary_key=True, autoincrement=True, index=True)
    sweep_id = Column(Integer, ForeignKey("sweeps.id"), nullable=False, index=True)
    value = Column(String(64), nullable=False)
    et_amplitude = Column(Float, nullable=True)
    sync_onset = Column(Float, nullable=True)
    max_pop_e1 = Column(Float, nullable=True)
    slowest_pair = Column(String(32), nullable=True)
    slowest_lifetime = Column(Float, nullable=True)
    status = Column(Enum(RunStatusEnum), default=RunStatusEnum.SUCCESS, nullable=False, index=True)
    message = Column(Text, nullable=True)

    sweep = relationship("Sweep", back_populates="points")

    def __repr__(self):
        return f"<SweepPoint(id={self.id}, value={self.value}, status='{self.status}')>"

    def to_dict(self):
        """Convert model to dictionary."""
        return {
            "id": self.id,
            "sweep_id": self.sweep_id,
            "value": self.value,
            "et_amplitude": self.et_amplitude,
            "sync_onset": self.sync_onset,
            "max_pop_e1": self.max_pop_e1,
            "slowest_pair": self.slowest_pair,
            "slowest_lifetime": self.slowest_lifetime,
            "status": self.status.value if self.status else None,
            "message": self.message,
        }
