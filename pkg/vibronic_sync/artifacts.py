"""
Artefact emission: CSV tables, JSON documents and the run manifest.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from .observables import CoherenceTrack, pair_summary
from .syncanalysis import Spectrum, SyncSeries
from .utils import file_sha256, get_logger

logger = get_logger(__name__)

DEFAULT_FLOAT_FORMAT = "%.10e"


class ArtifactWriter:
    """Writes the files of one run and remembers them for the manifest and for cleanup."""

    def __init__(self, out_dir: Path, float_format: str = DEFAULT_FLOAT_FORMAT):
        self.out_dir = Path(out_dir)
        self.float_format = float_format
        self.written: List[Path] = []
        self._created_dir = False

    def prepare(self) -> None:
        if not self.out_dir.exists():
            self.out_dir.mkdir(parents=True)
            self._created_dir = True

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.out_dir / name
        frame.to_csv(path, index=False, float_format=self.float_format, lineterminator="\n")
        return self.record(path)

    def write_json(self, name: str, payload: Any) -> Path:
        path = self.out_dir / name
        with open(path, "w") as f:
            json.dump(payload, f, indent=2, default=_json_default)
            f.write("\n")
        return self.record(path)

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.write_text(text)
        return self.record(path)

    def record(self, path: Path) -> Path:
        if path not in self.written:
            self.written.append(path)
        logger.info(f"Wrote {path}")
        return path

    def digests(self) -> Dict[str, str]:
        return {path.name: file_sha256(path) for path in self.written if path.exists()}

    def remove_all(self) -> None:
        """Delete everything this writer produced."""
        for path in self.written:
            path.unlink(missing_ok=True)
        self.written.clear()
        if self._created_dir and self.out_dir.exists() and not any(self.out_dir.iterdir()):
            self.out_dir.rmdir()
        logger.info(f"Removed partial outputs in {self.out_dir}")


def _json_default(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def sync_frame(sync: SyncSeries) -> pd.DataFrame:
    return pd.DataFrame({"t_ps": sync.times, "C": sync.values})


def spectrum_frame(spectrum: Spectrum) -> pd.DataFrame:
    columns = {"freq_cm1": spectrum.frequencies}
    for i, name in enumerate(spectrum.signal_names):
        columns[f"re_ft_{name}"] = spectrum.channel(i)
    return pd.DataFrame(columns)


def spectrum_filename(t: float) -> str:
    return f"spectrum_{t:g}.csv"


def coherence_frame(tracks: List[CoherenceTrack], t: Optional[float] = None) -> pd.DataFrame:
    return pair_summary(tracks, t)


def manifest(
    config_dump: Dict,
    audit: Dict,
    timings: Dict[str, float],
    outputs: Dict[str, str],
    summary: Optional[Dict] = None,
) -> Dict:
    return {
        "scenario": config_dump.get("name"),
        "config": config_dump,
        "basis_ordering": "exciton-major, then n1, then n2",
        "units": {"energy": "cm^-1", "time": "ps", "rate": "ps^-1"},
        "audit": audit,
        "timings_s": timings,
        "summary": summary or {},
        "outputs": [{"file": name, "sha256": digest} for name, digest in sorted(outputs.items())],
    }
