#!/usr/bin/env python3
"""
Tests for the run registry: connection, run records and sweep records.
"""

import math

import pytest

from db.connection import DatabaseConnection
from db.init_db import init_database, load_config
from db.models import Base
from db.repositories import RunRepository, SweepRepository


@pytest.fixture
def db_connection(tmp_path):
    connection = init_database({"url": f"sqlite:///{(tmp_path / 'runs.db').as_posix()}"})
    assert connection is not None
    yield connection
    connection.close()


@pytest.fixture
def session(db_connection):
    session = db_connection.get_session()
    yield session
    session.close()


def test_database_connection(tmp_path):
    """A bare path is read as a SQLite file."""
    connection = DatabaseConnection({"path": tmp_path / "registry.db"})
    assert connection.url.startswith("sqlite:///")
    assert connection.connect()
    connection.create_tables(Base)
    assert connection.test_connection()
    connection.close()


def test_application_config_has_registry():
    config = load_config()
    assert config["database"]["url"].startswith("sqlite")


def test_run_operations(session):
    repository = RunRepository(session)

    result = repository.add_run("pe545", "0" * 64, "runs/pe545", command="sync")
    assert result["status"] == "success"
    run = result["run"]
    assert run["status"] == "running"
    assert run["command"] == "sync"

    finished = repository.finish_run(run["id"], True, wall_seconds=12.5)
    assert finished["status"] == "success"
    assert finished["run"]["status"] == "success"
    assert finished["run"]["wall_seconds"] == 12.5
    assert finished["run"]["finished_at"] is not None

    failed = repository.add_run("detuned", "1" * 64)
    repository.finish_run(failed["run"]["id"], False, message="trace drifted")
    assert repository.get_run(failed["run"]["id"])["run"]["message"] == "trace drifted"

    listing = repository.list_runs()
    assert [r["scenario"] for r in listing["runs"]] == ["detuned", "pe545"]
    assert len(repository.list_runs(scenario="pe545")["runs"]) == 1


def test_missing_run(session):
    repository = RunRepository(session)
    assert repository.get_run(999)["status"] == "error"
    assert repository.finish_run(999, True)["status"] == "error"


def test_sweep_operations(session):
    repository = SweepRepository(session)

    sweep = repository.add_sweep("pe545", "omega")
    assert sweep["status"] == "success"
    sweep_id = sweep["sweep"]["id"]

    ok = repository.add_point(sweep_id, {
        "value": 1111.0,
        "et_amplitude": 0.755,
        "sync_onset": 1.02,
        "max_pop_e1": 0.61,
        "slowest_pair": "0-2",
        "slowest_lifetime": 0.9,
        "status": "success",
    })
    assert ok["status"] == "success"
    failed = repository.add_point(sweep_id, {"value": 1500.0, "status": "failed", "message": "solver stalled"})
    assert failed["point"]["sync_onset"] is None

    points = repository.list_points(sweep_id)["points"]
    assert [p["value"] for p in points] == ["1111.0", "1500.0"]
    assert math.isclose(points[0]["et_amplitude"], 0.755)

    summary = repository.get_sweep_summary(sweep_id)["summary"]
    assert (summary["total_points"], summary["failed_points"], summary["succeeded_points"]) == (2, 1, 1)


def test_sweep_point_validation(session):
    repository = SweepRepository(session)
    assert repository.add_point(42, {"value": 1})["status"] == "error"
    sweep_id = repository.add_sweep("pe545", "g1")["sweep"]["id"]
    assert repository.add_point(sweep_id, {"value": 1, "status": "exploded"})["status"] == "error"
    assert repository.get_sweep_summary(42)["status"] == "error"
