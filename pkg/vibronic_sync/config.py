"""
Scenario configuration: a YAML document validated into frozen pydantic models.

Unknown keys anywhere in the document are rejected.
"""

import enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .dynamics import PropagationConfig
from .errors import ConfigError
from .hilbert import DimerParams
from .syncanalysis import dominant_period


class OutputKind(str, enum.Enum):
    TRAJECTORY = "trajectory"
    SYNC = "sync"
    SPECTRA = "spectra"
    COHERENCES = "coherences"
    EIGENMODES = "eigenmodes"
    TABLE2 = "table2"


DEFAULT_OUTPUTS = [OutputKind.TRAJECTORY, OutputKind.SYNC, OutputKind.SPECTRA, OutputKind.COHERENCES]


class OutputsConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    artefacts: List[OutputKind] = Field(default_factory=lambda: list(DEFAULT_OUTPUTS), description="Artefacts to write.")
    spectrum_times: List[float] = Field(default_factory=lambda: [0.15, 1.5], description="Start times (ps) of FT windows.")
    spectrum_span: Optional[float] = Field(None, gt=0.0, description="FT window length in ps; up to the spectrum horizon when unset.")
    spectrum_horizon: Optional[float] = Field(
        5.0, gt=0.0, description="Propagate to this time for the FT windows when spectra are written; t_end when unset."
    )
    eigenmode_m: int = Field(4, ge=1, description="Fock truncation for the Liouvillian eigenmode analysis.")
    eigenmode_top_k: int = Field(10, ge=1, description="Slowest non-stationary eigenmodes to report.")
    plot: bool = Field(False, description="Render PNG figures from the written CSVs.")
    drop_smallest: int = Field(0, ge=0, description="Coherences left out of coherence figures, smallest first.")
    float_format: str = Field("%.10e", description="printf-style format for CSV floats.")

    @field_validator("spectrum_times")
    @classmethod
    def _non_negative(cls, times: List[float]) -> List[float]:
        if any(t < 0 for t in times):
            raise ValueError("spectrum times must be non-negative")
        return times


class ScenarioConfig(BaseModel):
    """Everything one pipeline run needs."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field("custom", description="Scenario name used in manifests and the run registry.")
    params: DimerParams = Field(default_factory=DimerParams)
    propagation: PropagationConfig = Field(default_factory=PropagationConfig)
    initial_exciton: int = Field(2, ge=1, le=2, description="Exciton occupied at t = 0.")
    sync_window: Optional[float] = Field(None, gt=0.0, description="Pearson window in ps; one period of omega1 when unset.")
    sync_threshold: float = Field(0.95, gt=0.0, le=1.0, description="C0 for the synchronisation onset.")
    sync_hold: float = Field(0.2, ge=0.0, description="Time C must stay above C0, in ps.")
    pairs: Union[Literal["auto"], List[Tuple[int, int]]] = Field("auto", description="Coherence pairs (j<k) or auto.")
    pair_cap: int = Field(7, ge=1, description="Number of automatically selected pairs.")
    outputs: OutputsConfig = Field(default_factory=OutputsConfig)

    @field_validator("pairs")
    @classmethod
    def _ordered_pairs(cls, pairs):
        if pairs == "auto":
            return pairs
        for j, k in pairs:
            if not 0 <= j < k:
                raise ValueError(f"pair ({j},{k}) must satisfy 0 <= j < k")
        return pairs

    def resolved_window(self) -> float:
        return self.sync_window if self.sync_window is not None else dominant_period(self.params.omega1)

    def wants(self, kind: OutputKind) -> bool:
        return kind in self.outputs.artefacts


def _validation_message(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"]) or "<root>"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def scenario_from_dict(data: Dict[str, Any]) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data or {})
    except ValidationError as e:
        raise ConfigError(f"invalid scenario: {_validation_message(e)}") from e


def load_scenario(source: Union[str, Path]) -> ScenarioConfig:
    """
    Parse a scenario from a YAML file path or YAML text.

    Raises:
        ConfigError: Unreadable YAML, unknown keys or violated invariants
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and source.endswith((".yaml", ".yml"))):
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"scenario file not found: {path}")
        text = path.read_text()
    else:
        text = source
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"scenario is not valid YAML: {e}") from e
    if data is not None and not isinstance(data, dict):
        raise ConfigError("scenario document must be a mapping")
    return scenario_from_dict(data)


def dump_scenario(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)


def _set_path(data: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        child = node.get(key)
        if not isinstance(child, dict):
            raise ConfigError(f"override '{dotted}': '{key}' is not a section")
        node = child
    node[keys[-1]] = value


def apply_overrides(config: ScenarioConfig, overrides: Dict[str, Any]) -> ScenarioConfig:
    """Return a revalidated copy with dotted-path keys (``params.omega1``) replaced."""
    if not overrides:
        return config
    data = config.model_dump(mode="json")
    for dotted, value in overrides.items():
        _set_path(data, dotted, value)
    return scenario_from_dict(data)


def parse_assignments(assignments: Iterable[str]) -> Dict[str, Any]:
    """Parse ``key.path=value`` strings; values are read as YAML scalars or lists."""
    overrides = {}
    for item in assignments:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override '{item}' is not of the form key.path=value")
        try:
            overrides[key.strip()] = yaml.safe_load(raw)
        except yaml.YAMLError as e:
            raise ConfigError(f"override '{item}': {e}") from e
    return overrides
