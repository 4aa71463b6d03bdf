"""
Exciton-vibration dimer dynamics and mode synchronisation analysis.

Submodules are imported on demand so that ``--threads`` can configure the
linear-algebra backends before numpy loads.
"""

from .errors import ConfigError, NumericalError, VibronicSyncError

__version__ = "0.1.0"

__all__ = ['ConfigError', 'NumericalError', 'VibronicSyncError', '__version__']
