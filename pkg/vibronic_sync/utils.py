import hashlib
import logging
from pathlib import Path
from typing import Dict, Optional

import yaml

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

_DEFAULT_APP_CONFIG: Dict = {
    "log_level": "INFO",
    "default_preset": "pe545",
    "database": {"url": "sqlite:///vibronic_runs.db", "echo": False},
    "numerics": {
        "max_mode_dim": 400,
        "max_superoperator_dim": 60,
        "max_stored_states": 101,
        "eigenmode_min_coupling": 0.05,
    },
    "sweep": {"workers": 4},
}


def _merge(base: Dict, override: Dict) -> Dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_app_config(path: Optional[Path] = None) -> Dict:
    """
    Load application settings from application.yaml.

    The file is looked up in the working directory first and next to the
    package second; missing keys fall back to built-in defaults.

    Args:
        path: Explicit settings file, bypassing the lookup

    Returns:
        dict: Application settings
    """
    candidates = [path] if path else [
        Path.cwd() / "application.yaml",
        Path(__file__).resolve().parent.parent / "application.yaml",
    ]
    for candidate in candidates:
        if candidate is not None and candidate.is_file():
            with open(candidate, "r") as f:
                loaded = yaml.safe_load(f) or {}
            return _merge(_DEFAULT_APP_CONFIG, loaded)
    return _merge(_DEFAULT_APP_CONFIG, {})


def configure_logging(level: Optional[str] = None) -> None:
    if level is None:
        level = load_app_config().get("log_level", "INFO")
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, force=True)


def get_logger(name):
    return logging.getLogger(name)


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def text_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
