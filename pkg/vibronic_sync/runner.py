"""
Scenario orchestration: build, diagonalise, propagate, analyse and write artefacts.
"""

import math
import time as wallclock
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from db.init_db import init_database
from db.repositories import RunRepository, SweepRepository

from . import artifacts
from .config import OutputKind, ScenarioConfig, dump_scenario, scenario_from_dict
from .dynamics import (
    DensityMatrix,
    DissipatorSpec,
    Trajectory,
    initial_state,
    propagate_closed,
    propagate_open,
    standard_dissipators,
)
from .errors import ConfigError, VibronicSyncError
from .hilbert import (
    DimerParams,
    EigenSystem,
    Operator,
    OperatorSet,
    build_hamiltonian,
    build_operators,
    delocalised_params,
    diagonalise,
    et_amplitude_indicator,
    matrix_element_table,
)
from .liouville import EigenMode, EigenmodeReport, build_superoperator, eigenmode_analysis
from .observables import (
    CoherenceTrack,
    attach_standard_observables,
    coherence_tracks,
    default_pairs,
    reconstruct_expectation,
    standard_recording,
    trajectory_frame,
)
from .presets import TABLE2_PAIRS, TableCell, compare_table2, preset
from .syncanalysis import Spectrum, SyncSeries, pearson_sync, real_ft, stack_spectra, sync_onset_time
from .utils import get_logger, load_app_config, text_sha256

logger = get_logger(__name__)

# sweep axes that set more than one DimerParams field
COMPOSITE_AXES = {
    "omega": ("omega1", "omega2"),
    "g": ("g1", "g2"),
}
SPECIAL_AXES = ("eta", "preset")

# smallest |X1| coupling of a mode reported as the slowest oscillatory one
EIGENMODE_MIN_COUPLING = 0.05
# share of the mean-free X1 signal the selected pairs may leave unexplained
RECONSTRUCTION_TOLERANCE = 0.05


def quiet_et_amplitude(params: DimerParams) -> float:
    """ET indicator with regime warnings suppressed (they are logged by the CLI)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return et_amplitude_indicator(params)


@dataclass
class ModelSetup:
    params: DimerParams
    ops: OperatorSet
    h: Operator
    eig: EigenSystem
    rho0: DensityMatrix
    dissipators: List[DissipatorSpec]


@dataclass
class SimulationResult:
    config: ScenarioConfig
    setup: ModelSetup
    trajectory: Trajectory
    pairs: List[Tuple[int, int]]
    tracks: List[CoherenceTrack]
    sync: SyncSeries
    spectra: Dict[float, Spectrum] = field(default_factory=dict)
    onset: Optional[float] = None
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def et_amplitude(self) -> float:
        return quiet_et_amplitude(self.config.params)

    def x1_residual(self) -> Optional[float]:
        """Share of the mean-free ⟨X1⟩ signal that the selected pairs do not reconstruct."""
        if not self.pairs:
            return None
        reconstruction = reconstruct_expectation(self.trajectory, self.setup.eig, self.setup.ops.x1, self.pairs)
        return reconstruction.residual_fraction()

    def summary(self) -> Dict[str, Any]:
        sync = self.sync.values
        finite = sync[np.isfinite(sync)]
        residual = self.x1_residual()
        if residual is not None and residual > RECONSTRUCTION_TOLERANCE:
            logger.warning(f"Selected pairs leave {residual:.1%} of X1 unexplained")
        return {
            "et_amplitude": self.et_amplitude,
            "sync_onset_ps": self.onset,
            "sync_window_ps": self.sync.window,
            "sync_min": float(finite.min()) if len(finite) else None,
            "sync_min_time_ps": float(self.sync.times[np.nanargmin(sync)]) if len(finite) else None,
            "max_pop_e1": float(np.max(self.trajectory.observables["popE1"])),
            "pairs": [list(p) for p in self.pairs],
            "x1_reconstruction_residual": residual,
        }


@dataclass
class Table2Report:
    rows: list
    cells: List[TableCell]
    has_reference: bool

    @property
    def passed(self) -> bool:
        return all(cell.passed for cell in self.cells if cell.passed is not None)

    def failures(self) -> List[TableCell]:
        return [cell for cell in self.cells if cell.passed is False]

    def to_text(self) -> str:
        quantities = ["omega_kj", "x1", "x2", "sigma_x", "p00"]
        header = f"{'quantity':<10}" + "".join(f"{f'|{r.j}><{r.k}|':>22}" for r in self.rows)
        lines = [header, "-" * len(header)]
        by_key = {(cell.pair, cell.quantity): cell for cell in self.cells}
        for quantity in quantities:
            line = f"{quantity:<10}"
            for row in self.rows:
                cell = by_key[(row.pair, quantity)]
                if cell.reference is None:
                    text = f"{cell.computed:9.3f}"
                else:
                    mark = "ok" if cell.passed else "FAIL"
                    text = f"{cell.computed:8.3f} ({cell.reference:7.3f}) {mark:<4}"
                line += f"{text:>22}"
            lines.append(line)
        if self.has_reference:
            failed = len(self.failures())
            lines.append("")
            lines.append(f"{len(self.cells) - failed}/{len(self.cells)} cells within tolerance")
        return "\n".join(lines) + "\n"


def _spectrum_horizon(config: ScenarioConfig) -> float:
    """End of the propagation: t_end, extended to the spectrum horizon when spectra are written."""
    t_end = config.propagation.times()[-1]
    horizon = config.outputs.spectrum_horizon
    if not config.wants(OutputKind.SPECTRA) or horizon is None:
        return t_end
    return max(t_end, horizon)


def _window_bounds(config: ScenarioConfig) -> List[Tuple[float, float]]:
    if not config.wants(OutputKind.SPECTRA):
        return []
    stop = _spectrum_horizon(config)
    bounds = []
    for t in config.outputs.spectrum_times:
        if t >= stop:
            raise ConfigError(f"spectrum time {t} ps is not before the propagation end {stop} ps")
        end = stop if config.outputs.spectrum_span is None else min(t + config.outputs.spectrum_span, stop)
        bounds.append((t, end))
    return bounds


def sweep_config(base: ScenarioConfig, axis: str, value: Any) -> ScenarioConfig:
    """Scenario for one sweep point."""
    if axis == "preset":
        return preset(str(value))
    if axis == "eta":
        params = delocalised_params(base.params, float(value))
    elif axis in COMPOSITE_AXES:
        params = base.params.model_copy(update={name: float(value) for name in COMPOSITE_AXES[axis]})
    elif axis in DimerParams.model_fields:
        params = base.params.model_copy(update={axis: value})
    else:
        raise ConfigError(
            f"unknown sweep axis '{axis}'; use a DimerParams field, "
            f"{', '.join(COMPOSITE_AXES)} or {', '.join(SPECIAL_AXES)}"
        )
    data = base.model_dump(mode="json")
    data["params"] = params.model_dump(mode="json")
    data["name"] = f"{base.name}[{axis}={value}]"
    return scenario_from_dict(data)


def _sweep_point(task: Tuple[Dict, str, Any, Dict]) -> Dict[str, Any]:
    """Run one sweep value in a worker; never raises."""
    base_dump, axis, value, app_config = task
    row: Dict[str, Any] = {"value": value, "status": "success", "message": None}
    try:
        config = sweep_config(scenario_from_dict(base_dump), axis, value)
        # sweep rows carry no spectra, so points stop at t_end
        artefacts = [kind for kind in config.outputs.artefacts if kind != OutputKind.SPECTRA]
        config = config.model_copy(update={"outputs": config.outputs.model_copy(update={"artefacts": artefacts})})
        runner = ScenarioRunner(app_config, use_registry=False)
        result = runner.simulate(config)
        slowest = max(result.tracks, key=lambda track: track.lifetime(), default=None)
        row.update({
            "et_amplitude": result.et_amplitude,
            "sync_onset": result.onset,
            "max_pop_e1": float(np.max(result.trajectory.observables["popE1"])),
            "slowest_pair": f"{slowest.pair[0]}-{slowest.pair[1]}" if slowest else None,
            "slowest_lifetime": slowest.lifetime() if slowest else None,
            "rho13_peak": float(np.max(np.abs(result.trajectory.element(1, 3)))),
        })
    except VibronicSyncError as e:
        logger.error(f"Sweep point {axis}={value} failed: {e}")
        row.update({"status": "failed", "message": str(e)})
    except Exception as e:
        logger.error(f"Sweep point {axis}={value} failed with {type(e).__name__}: {e}")
        row.update({"status": "failed", "message": f"{type(e).__name__}: {e}"})
    return row


class ScenarioRunner:
    def __init__(self, app_config: Optional[Dict] = None, use_registry: bool = True):
        """
        Initialize the runner with application settings and the run registry.

        Args:
            app_config: Application settings; read from application.yaml when omitted
            use_registry: Record runs and sweeps in the registry database
        """
        self.app_config = app_config or load_app_config()
        self.numerics = self.app_config.get("numerics", {})
        self.db_connection = None
        if use_registry:
            self.db_connection = init_database(self.app_config.get("database", {}))
            if self.db_connection is None:
                logger.warning("Run registry unavailable; continuing without it")

    def setup(self, config: ScenarioConfig, m_levels: Optional[int] = None) -> ModelSetup:
        params = config.params
        if m_levels is not None and m_levels != params.m_levels:
            params = params.model_copy(update={"m_levels": m_levels})
        ops = build_operators(params, self.numerics.get("max_mode_dim", 400))
        h = build_hamiltonian(params, ops)
        eig = diagonalise(h, params.m_levels)
        rho0 = initial_state(params, eig, exciton=config.initial_exciton)
        return ModelSetup(params, ops, h, eig, rho0, standard_dissipators(params, ops))

    def simulate(self, config: ScenarioConfig) -> SimulationResult:
        """
        Propagate a scenario and compute every in-memory analysis.

        When spectra are requested the propagation runs on to the spectrum
        horizon; the FT windows use the whole record and every other analysis
        uses the part up to ``propagation.t_end``.

        Args:
            config: Validated scenario

        Returns:
            SimulationResult: Trajectory, coherence tracks, sync series and spectra
        """
        timings: Dict[str, float] = {}
        bounds = _window_bounds(config)
        horizon = _spectrum_horizon(config)

        started = wallclock.perf_counter()
        setup = self.setup(config)
        timings["setup"] = wallclock.perf_counter() - started
        logger.info(
            f"Scenario '{config.name}': D={setup.params.dimension}, "
            f"A={quiet_et_amplitude(config.params):.3f}"
        )

        propagation = config.propagation
        if config.pairs != "auto":
            pairs = [tuple(p) for p in config.pairs]
            setup.eig.check_index(*[i for p in pairs for i in p])
            needed = max([k for _, k in pairs], default=0) + 1
            if needed > propagation.tracked_states:
                propagation = propagation.model_copy(update={"tracked_states": needed})
        if horizon > propagation.t_end:
            logger.debug(f"Propagating to {horizon} ps for the spectrum windows")
            propagation = propagation.model_copy(update={"t_end": horizon})

        started = wallclock.perf_counter()
        record = standard_recording(setup.ops, setup.h)
        max_stored = self.numerics.get("max_stored_states", 101)
        if all(d.rate == 0.0 for d in setup.dissipators):
            full = propagate_closed(setup.rho0, setup.eig, propagation, record, max_stored)
        else:
            full = propagate_open(
                setup.rho0, setup.h, setup.dissipators, propagation, setup.eig, record, max_stored,
                self.numerics.get("max_superoperator_dim", 60),
            )
        timings["propagation"] = wallclock.perf_counter() - started

        started = wallclock.perf_counter()
        full.check_grid()
        attach_standard_observables(full, setup.ops, setup.eig)
        spectra = {}
        for t_start, t_stop in bounds:
            spectra[t_start] = stack_spectra([
                real_ft(full.observables["X1"], t_start, t_stop, times=full.times, name="X1"),
                real_ft(full.observables["X2"], t_start, t_stop, times=full.times, name="X2"),
            ])

        trajectory = full.until(config.propagation.t_end)
        if config.pairs == "auto":
            pairs = default_pairs(setup.eig, setup.ops, traj=trajectory, cap=config.pair_cap)
        tracks = coherence_tracks(trajectory, setup.eig, pairs, setup.ops)
        x1, x2 = trajectory.observables["X1"], trajectory.observables["X2"]
        sync = pearson_sync(x1, x2, config.resolved_window(), times=trajectory.times, names=("X1", "X2"))
        onset = sync_onset_time(sync, config.sync_threshold, config.sync_hold)
        timings["analysis"] = wallclock.perf_counter() - started

        return SimulationResult(config, setup, trajectory, pairs, tracks, sync, spectra, onset, timings)

    def table2(self, config: ScenarioConfig, pairs: Optional[Sequence[Tuple[int, int]]] = None) -> Table2Report:
        """Matrix-element table of the dominant coherences, compared with the reference table for the PE545 parameters."""
        setup = self.setup(config)
        if pairs is None:
            pairs = TABLE2_PAIRS if config.params == DimerParams() else default_pairs(
                setup.eig, setup.ops, setup.rho0, cap=config.pair_cap
            )
        rows = matrix_element_table(setup.eig, setup.ops, pairs)
        has_reference = config.params == DimerParams()
        cells = compare_table2(rows) if has_reference else compare_table2(rows, reference=[])
        return Table2Report(rows, cells, has_reference)

    def eigenmodes(self, config: ScenarioConfig) -> EigenmodeReport:
        """Liouvillian eigenmodes at the reduced truncation ``outputs.eigenmode_m``."""
        setup = self.setup(config, m_levels=config.outputs.eigenmode_m)
        superop = build_superoperator(
            setup.h, setup.dissipators, setup.params.m_levels,
            max_dim=self.numerics.get("max_superoperator_dim", 60),
        )
        return eigenmode_analysis(superop, setup.eig, config.outputs.eigenmode_top_k, coupling_op=setup.ops.x1)

    def slowest_mode(self, report: EigenmodeReport) -> Optional[EigenMode]:
        """Slowest oscillatory mode whose X1 coupling reaches ``numerics.eigenmode_min_coupling``."""
        threshold = self.numerics.get("eigenmode_min_coupling", EIGENMODE_MIN_COUPLING)
        return report.slowest_oscillatory(min_coupling=threshold)

    def run(self, config: ScenarioConfig, out_dir: Path, command: str = "simulate") -> Dict:
        """
        Execute the pipeline and write the requested artefacts plus manifest.json.

        Args:
            config: Validated scenario
            out_dir: Output directory, created if missing
            command: Subcommand name recorded in the registry

        Returns:
            dict: The manifest written to ``out_dir``
        """
        started = wallclock.perf_counter()
        writer = artifacts.ArtifactWriter(Path(out_dir), config.outputs.float_format)
        config_text = dump_scenario(config)
        run_id = self._register_run(config, config_text, out_dir, command)
        try:
            writer.prepare()
            result = self.simulate(config)
            timings = dict(result.timings)
            self._write_outputs(config, result, writer, timings)
            timings["total"] = wallclock.perf_counter() - started
            document = artifacts.manifest(
                config.model_dump(mode="json"),
                result.trajectory.audit,
                timings,
                writer.digests(),
                result.summary(),
            )
            writer.write_json("manifest.json", document)
        except Exception as e:
            writer.remove_all()
            self._finish_run(run_id, False, wallclock.perf_counter() - started, str(e))
            logger.error(f"Run '{config.name}' failed: {e}")
            raise
        self._finish_run(run_id, True, timings["total"], None)
        logger.info(f"Run '{config.name}' finished in {timings['total']:.1f} s")
        return document

    def _write_outputs(self, config: ScenarioConfig, result: SimulationResult,
                       writer: artifacts.ArtifactWriter, timings: Dict[str, float]) -> None:
        if config.wants(OutputKind.TRAJECTORY):
            writer.write_frame("trajectory.csv", trajectory_frame(result.trajectory, result.tracks))
        if config.wants(OutputKind.SYNC):
            writer.write_frame("sync.csv", artifacts.sync_frame(result.sync))
        if config.wants(OutputKind.SPECTRA):
            for t, spectrum in result.spectra.items():
                writer.write_frame(artifacts.spectrum_filename(t), artifacts.spectrum_frame(spectrum))
        if config.wants(OutputKind.COHERENCES):
            writer.write_frame("coherences.csv", artifacts.coherence_frame(result.tracks))
        if config.wants(OutputKind.TABLE2):
            writer.write_text("table2.txt", self.table2(config, result.pairs).to_text())
        if config.wants(OutputKind.EIGENMODES):
            started = wallclock.perf_counter()
            writer.write_json("eigenmodes.json", self.eigenmodes(config).to_dict())
            timings["eigenmodes"] = wallclock.perf_counter() - started
        if config.outputs.plot:
            from .plotting import render_run_figures

            for path in render_run_figures(writer.out_dir, config.outputs.drop_smallest):
                writer.record(path)

    def sweep(self, base: ScenarioConfig, axis: str, values: Sequence[Any],
              out_dir: Optional[Path] = None, workers: Optional[int] = None) -> pd.DataFrame:
        """
        Run one scenario per value of ``axis``; failed points are recorded, not raised.

        Returns:
            DataFrame: value, et_amplitude, sync_onset, max_pop_e1, slowest_pair,
            slowest_lifetime, rho13_peak, status and message per point
        """
        if axis not in SPECIAL_AXES and axis not in COMPOSITE_AXES and axis not in DimerParams.model_fields:
            raise ConfigError(f"unknown sweep axis '{axis}'")
        workers = workers or self.app_config.get("sweep", {}).get("workers", 1)
        workers = max(1, min(workers, len(values)))
        tasks = [(base.model_dump(mode="json"), axis, value, self.app_config) for value in values]
        logger.info(f"Sweep over {axis} with {len(values)} points on {workers} workers")
        if workers == 1:
            rows = [_sweep_point(task) for task in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(_sweep_point, tasks))
        table = pd.DataFrame(rows)
        self._register_sweep(base.name, axis, rows)
        if out_dir is not None:
            writer = artifacts.ArtifactWriter(Path(out_dir), base.outputs.float_format)
            writer.prepare()
            writer.write_frame("sweep.csv", table)
        failed = int((table["status"] == "failed").sum())
        if failed:
            logger.warning(f"{failed} of {len(rows)} sweep points failed")
        return table

    def list_runs(self, limit: int = 50) -> Dict:
        if self.db_connection is None:
            return {"status": "error", "message": "Run registry unavailable"}
        session = self.db_connection.get_session()
        if not session:
            return {"status": "error", "message": "Database connection failed"}
        try:
            return RunRepository(session).list_runs(limit=limit)
        finally:
            session.close()

    def _register_run(self, config: ScenarioConfig, config_text: str, out_dir: Path, command: str) -> Optional[int]:
        if self.db_connection is None:
            return None
        session = self.db_connection.get_session()
        if not session:
            return None
        try:
            result = RunRepository(session).add_run(config.name, text_sha256(config_text), str(out_dir), command)
            return result["run"]["id"] if result["status"] == "success" else None
        finally:
            session.close()

    def _finish_run(self, run_id: Optional[int], succeeded: bool, wall: float, message: Optional[str]) -> None:
        if run_id is None or self.db_connection is None:
            return
        session = self.db_connection.get_session()
        if not session:
            return
        try:
            RunRepository(session).finish_run(run_id, succeeded, wall, message)
        finally:
            session.close()

    def _register_sweep(self, base_name: str, axis: str, rows: List[Dict]) -> None:
        if self.db_connection is None:
            return
        session = self.db_connection.get_session()
        if not session:
            return
        try:
            repository = SweepRepository(session)
            result = repository.add_sweep(base_name, axis)
            if result["status"] != "success":
                return
            for row in rows:
                clean = {key: (None if isinstance(value, float) and math.isnan(value) else value)
                         for key, value in row.items()}
                repository.add_point(result["sweep"]["id"], clean)
        finally:
            session.close()
