"""
Database repositories for the vibronic-sync run registry.
Single responsibility: Handle database operations for runs and sweeps.
"""

import logging
from typing import Dict, Optional
from sqlalchemy import func
from sqlalchemy.orm import Session
from sqlalchemy.exc import SQLAlchemyError

from .models import SimulationRun, Sweep, SweepPoint, RunStatusEnum

logger = logging.getLogger(__name__)


class RunRepository:
    """
    Repository for simulation run records.
    Single responsibility: Handle all run-related database operations.
    """

    def __init__(self, session: Session):
        self.session = session

    def add_run(self, scenario: str, config_hash: str, out_dir: Optional[str] = None,
                command: str = "simulate") -> Dict:
        """
        Register a run that is about to start.

        Args:
            scenario: Scenario or preset name
            config_hash: SHA-256 of the serialised scenario configuration
            out_dir: Output directory of the run
            command: CLI subcommand that started the run

        Returns:
            dict: Status and run details
        """
        try:
            run = SimulationRun(
                scenario=scenario,
                command=command,
                config_hash=config_hash,
                out_dir=out_dir,
                status=RunStatusEnum.RUNNING,
            )

            self.session.add(run)
            self.session.commit()

            return {
                "status": "success",
                "message": f"Run '{scenario}' registered",
                "run": run.to_dict()
            }
        except SQLAlchemyError as e:
            self.session.rollback()
            logger.error(f"Failed to register run: {str(e)}")
            return {
                "status": "error",
                "message": f"Failed to register run: {str(e)}"
            }

    def finish_run(self, run_id: int, succeeded: bool, wall_seconds: Optional[float] = None,
                   message: Optional[str] = None) -> Dict:
        """
        Record the outcome of a registered run.

        Args:
            run_id: ID returned by add_run
            succeeded: Whether the pipeline completed
            wall_seconds: Total wall-clock time
            message: Failure reason or summary

        Returns:
            dict: Updated run details or error message
        """
        try:
            run = self.session.query(SimulationRun).filter(SimulationRun.id == run_id).first()

            if not run:
                return {
                    "status": "error",
                    "message": f"Run with ID {run_id} not found"
                }

            run.status = RunStatusEnum.SUCCESS if succeeded else RunStatusEnum.FAILED
            run.wall_seconds = wall_seconds
            run.message = message
            run.finished_at = func.now()
            self.session.commit()
            self.session.refresh(run)

            return {
                "status": "success",
                "message": f"Run {run_id} marked {run.status.value}",
                "run": run.to_dict()
            }
        except SQLAlchemyError as e:
            self.session.rollback()
            logger.error(f"Failed to finish run: {str(e)}")
            return {
                "status": "error",
                "message": f"Failed to finish run: {str(e)}"
            }

    def get_run(self, run_id: int) -> Dict:
        """
        Get a specific run by ID.

        Args:
            run_id: ID of the run to retrieve

        Returns:
            dict: Run details or error message
        """
        try:
            run = self.session.query(SimulationRun).filter(SimulationRun.id == run_id).first()

            if not run:
                return {
                    "status": "error",
                    "message": f"Run with ID {run_id} not found"
                }

            return {
                "status": "success",
                "message": f"Run {run_id} retrieved successfully",
                "run": run.to_dict()
            }
        except SQLAlchemyError as e:
            logger.error(f"Failed to get run: {str(e)}")
            return {
                "status": "error",
                "message": f"Failed to get run: {str(e)}"
            }

    def list_runs(self, scenario: Optional[str] = None, limit: int = 50) -> Dict:
        """
        List the most recent runs, optionally for one scenario.

        Args:
            scenario: Restrict to this scenario name
            limit: Maximum number of runs returned

        Returns:
            dict: List of runs, newest first
        """
        try:
            query = self.session.query(SimulationRun)
            if scenario:
                query = query.filter(SimulationRun.scenario == scenario)
            runs = query.order_by(SimulationRun.id.desc()).limit(limit).all()

            return {
                "status": "success",
                "message": f"Found {len(runs)} runs",
                "runs": [r.to_dict() for r in runs]
            }
        except SQLAlchemyError as e:
            logger.error(f"Failed to list runs: {str(e)}")
            return {
                "status": "error",
                "message": f"Failed to list runs: {str(e)}"
            }


class SweepRepository:
    """
    Repository for parameter sweeps and their points.
    Single responsibility: Handle all sweep-related database operations.
    """

    def __init__(self, session: Session):
        self.session = session

    def add_sweep(self, base_scenario: str, axis: str) -> Dict:
        """
        Register a new sweep.

        Args:
            base_scenario: Scenario the sweep varies
            axis: DimerParams field being swept

        Returns:
            dict: Status and sweep details
        """
        try:
            sweep = Sweep(base_scenario=base_scenario, axis=axis)
            self.session.add(sweep)
            self.session.commit()

            return {
                "status": "success",
                "message": f"Sweep over '{axis}' registered",
                "sweep": sweep.to_dict()
            }
        except SQLAlchemyError as e:
            self.session.rollback()
            logger.error(f"Failed to register sweep: {str(e)}")
            return {
                "status": "error",
                "message": f"Failed to register sweep: {str(e)}"
            }

    def add_point(self, sweep_id: int, row: Dict) -> Dict:
        """
        Store the outcome of one sweep value.

        Args:
            sweep_id: ID returned by add_sweep
            row: Sweep table row (value, et_amplitude, sync_onset, max_pop_e1,
                slowest_pair, slowest_lifetime, status, message)

        Returns:
            dict: Status and point details
        """
        try:
            sweep = self.session.query(Sweep).filter(Sweep.id == sweep_id).first()
            if not sweep:
                return {
                    "status": "error",
                    "message": f"Sweep with ID {sweep_id} not found"
                }

            point = SweepPoint(
                sweep_id=sweep_id,
                value=str(row["value"]),
                et_amplitude=row.get("et_amplitude"),
                sync_onset=row.get("sync_onset"),
                max_pop_e1=row.get("max_pop_e1"),
                slowest_pair=row.get("slowest_pair"),
                slowest_lifetime=row.get("slowest_lifetime"),
                status=RunStatusEnum(row.get("status", "success")),
                message=row.get("message"),
            )
            self.session.add(point)
            self.session.commit()

            return {
                "status": "success",
                "message": f"Point {row['value']} added to sweep {sweep_id}",
                "point": point.to_dict()
            }
        except (SQLAlchemyError, ValueError) as e:
            self.session.rollback()
            logger.error(f"Failed to add sweep point: {str(e)}")
            return {
                "status": "error",
                "message": f"Failed to add sweep point: {str(e)}"
            }

    def list_points(self, sweep_id: int) -> Dict:
        """
        List the points of a sweep in the order they were run.

        Args:
            sweep_id: ID of the sweep

        Returns:
            dict: List of points
        """
        try:
            points = (
                self.session.query(SweepPoint)
                .filter(SweepPoint.sweep_id == sweep_id)
                .order_by(SweepPoint.id)
                .all()
            )

            return {
                "status": "success",
                "message": f"Found {len(points)} points",
                "points": [p.to_dict() for p in points]
            }
        except SQLAlchemyError as e:
            logger.error(f"Failed to list sweep points: {str(e)}")
            return {
                "status": "error",
                "message": f"Failed to list sweep points: {str(e)}"
            }

    def get_sweep_summary(self, sweep_id: int) -> Dict:
        """
        Get counts of succeeded and failed points for a sweep.

        Args:
            sweep_id: ID of the sweep

        Returns:
            dict: Sweep details with point statistics
        """
        try:
            sweep = self.session.query(Sweep).filter(Sweep.id == sweep_id).first()
            if not sweep:
                return {
                    "status": "error",
                    "message": f"Sweep with ID {sweep_id} not found"
                }

            total = self.session.query(SweepPoint).filter(SweepPoint.sweep_id == sweep_id).count()
            failed = self.session.query(SweepPoint).filter(
                SweepPoint.sweep_id == sweep_id,
                SweepPoint.status == RunStatusEnum.FAILED,
            ).count()

            return {
                "status": "success",
                "message": "Sweep summary retrieved successfully",
                "summary": {
                    **sweep.to_dict(),
                    "total_points": total,
                    "failed_points": failed,
                    "succeeded_points": total - failed,
                }
            }
        except SQLAlchemyError as e:
            logger.error(f"Failed to get sweep summary: {str(e)}")
            return {
                "status": "error",
                "message": f"Failed to get sweep summary: {str(e)}"
            }
