"""
Windowed Pearson synchronisation and Fourier spectra of observables.

    C(t|Δt) = ∫ δf1 δf2 dt' / sqrt(∫ δf1² dt' · ∫ δf2² dt'),   t' ∈ [t, t+Δt]

with δf the deviation from the window mean. All window integrals use the
trapezoidal rule on the uniform output grid.
"""

import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.fft
from scipy.integrate import trapezoid

from .errors import WindowTooShortError
from .hilbert import LIGHT_SPEED_CM_PS
from .utils import get_logger

logger = get_logger(__name__)

DEGENERATE_VARIANCE = 1e-24
MIN_FT_SAMPLES = 16
PAD_FACTOR = 4


class DegenerateWindowWarning(RuntimeWarning):
    """A sync window in which one signal is constant."""


@dataclass(frozen=True)
class SyncSeries:
    times: np.ndarray
    values: np.ndarray
    window: float
    signal_names: Tuple[str, str] = ("f1", "f2")

    def at(self, t: float) -> float:
        return float(self.values[int(np.argmin(np.abs(self.times - t)))])


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    values: np.ndarray
    window: Tuple[float, float]
    signal_names: Tuple[str, ...] = ("signal",)

    @property
    def resolution(self) -> float:
        """Unpadded bin width 1/(c·T) in cm⁻¹."""
        return 1.0 / (LIGHT_SPEED_CM_PS * (self.window[1] - self.window[0]))

    def channel(self, index: int = 0) -> np.ndarray:
        return self.values if self.values.ndim == 1 else self.values[index]


@dataclass(frozen=True)
class Peak:
    frequency: float
    height: float


def dominant_period(omega: float) -> float:
    """Oscillation period in ps of a frequency given in cm⁻¹."""
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    return 1.0 / (LIGHT_SPEED_CM_PS * omega)


def _uniform_step(times: np.ndarray) -> float:
    steps = np.diff(times)
    if len(steps) == 0 or np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > 1e-9 * max(steps[0], 1.0):
        raise ValueError("signals must share a strictly increasing uniform time grid")
    return float(steps[0])


def pearson_sync(
    f1: np.ndarray,
    f2: np.ndarray,
    window: float,
    times: Optional[np.ndarray] = None,
    dt: Optional[float] = None,
    names: Tuple[str, str] = ("f1", "f2"),
) -> SyncSeries:
    """
    Sliding-window Pearson coefficient of two real signals.

    Args:
        f1: First signal on the common grid
        f2: Second signal on the common grid
        window: Window length Δt in ps
        times: Grid times; built from ``dt`` when omitted
        dt: Grid spacing, used when ``times`` is omitted
        names: Signal names carried on the result

    Returns:
        SyncSeries: C(t) for every t with [t, t+Δt] inside the grid; windows in
        which either signal is constant yield NaN and a DegenerateWindowWarning
    """
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    if f1.shape != f2.shape or f1.ndim != 1:
        raise ValueError(f"signals must be 1-D of equal length, got {f1.shape} and {f2.shape}")
    if times is None:
        if dt is None:
            raise ValueError("pass either times or dt")
        times = np.arange(len(f1)) * dt
    times = np.asarray(times, dtype=float)
    step = _uniform_step(times)

    n_win = int(round(window / step))
    if n_win < 3:
        raise WindowTooShortError(f"window {window} ps spans {n_win} grid steps; at least 3 are needed")
    n_out = len(f1) - n_win
    if n_out < 1:
        raise WindowTooShortError(f"window {window} ps is longer than the {times[-1] - times[0]} ps signal")

    # windows of n_win + 1 samples, one per start point
    w1 = np.lib.stride_tricks.sliding_window_view(f1, n_win + 1)[:n_out]
    w2 = np.lib.stride_tricks.sliding_window_view(f2, n_win + 1)[:n_out]
    span = n_win * step
    d1 = w1 - trapezoid(w1, dx=step, axis=1)[:, None] / span
    d2 = w2 - trapezoid(w2, dx=step, axis=1)[:, None] / span
    cross = trapezoid(d1 * d2, dx=step, axis=1)
    var1 = trapezoid(d1 * d1, dx=step, axis=1)
    var2 = trapezoid(d2 * d2, dx=step, axis=1)

    degenerate = (var1 < DEGENERATE_VARIANCE) | (var2 < DEGENERATE_VARIANCE)
    values = np.full(n_out, np.nan)
    ok = ~degenerate
    values[ok] = np.clip(cross[ok] / np.sqrt(var1[ok] * var2[ok]), -1.0, 1.0)
    if degenerate.any():
        message = f"{int(degenerate.sum())} of {n_out} sync windows have a constant signal; C set to NaN"
        logger.warning(message)
        warnings.warn(message, DegenerateWindowWarning, stacklevel=2)
    return SyncSeries(times[:n_out], values, n_win * step, names)


def sync_phase_characterisation(
    frequency: float,
    window: float,
    phases: Sequence[float],
    samples_per_window: int = 400,
    periods: float = 2.0,
) -> List[Tuple[float, float]]:
    """
    C(φ) for f1 = sin(a·t) and f2 = sin(a·t + φ) with ``a`` in rad/ps.

    Each entry is the coefficient of the first window of the pair.
    """
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    step = window / samples_per_window
    duration = window + periods * 2.0 * np.pi / frequency
    times = np.arange(int(np.ceil(duration / step)) + 1) * step
    curve = []
    for phi in phases:
        series = pearson_sync(np.sin(frequency * times), np.sin(frequency * times + phi), window, times=times)
        curve.append((float(phi), float(series.values[0])))
    return curve


def real_ft(
    signal: np.ndarray,
    t_start: float,
    t_end: float,
    times: Optional[np.ndarray] = None,
    dt: Optional[float] = None,
    detrend: bool = True,
    pad_factor: int = PAD_FACTOR,
    name: str = "signal",
) -> Spectrum:
    """
    Real part of the unnormalised DFT of ``signal`` over [t_start, t_end].

    The window is mean-subtracted when ``detrend`` is set and zero-padded to
    ``pad_factor`` times its length. Phases are referred to ``t_start`` so a
    cosine starting at its maximum gives a positive peak. Frequencies are in cm⁻¹.
    """
    signal = np.asarray(signal, dtype=float)
    if times is None:
        if dt is None:
            raise ValueError("pass either times or dt")
        times = np.arange(len(signal)) * dt
    times = np.asarray(times, dtype=float)
    step = _uniform_step(times)
    if t_start < times[0] - 1e-12 or t_end > times[-1] + 1e-12 or t_end <= t_start:
        raise WindowTooShortError(f"window [{t_start}, {t_end}] not inside [{times[0]}, {times[-1]}]")
    mask = (times >= t_start - 1e-12) & (times <= t_end + 1e-12)
    segment = signal[mask]
    if len(segment) < MIN_FT_SAMPLES:
        raise WindowTooShortError(f"window holds {len(segment)} samples; at least {MIN_FT_SAMPLES} needed")
    if detrend:
        segment = segment - segment.mean()
    n_fft = pad_factor * len(segment)
    values = np.real(scipy.fft.rfft(segment, n=n_fft))
    frequencies = scipy.fft.rfftfreq(n_fft, d=step) / LIGHT_SPEED_CM_PS
    window = (float(times[mask][0]), float(times[mask][-1]))
    return Spectrum(frequencies, values, window, (name,))


def stack_spectra(spectra: Sequence[Spectrum]) -> Spectrum:
    """Combine single-signal spectra over a common axis into one multi-channel Spectrum."""
    first = spectra[0]
    for other in spectra[1:]:
        if other.frequencies.shape != first.frequencies.shape or other.window != first.window:
            raise ValueError("spectra must share a frequency axis and window")
    names = tuple(name for s in spectra for name in s.signal_names)
    return Spectrum(first.frequencies, np.vstack([s.channel() for s in spectra]), first.window, names)


def find_peaks(
    spectrum: Spectrum,
    index: int = 0,
    min_height: float = 0.0,
    limit: Optional[int] = None,
    absolute: bool = False,
) -> List[Peak]:
    """
    Local maxima of the channel (of |values| when ``absolute``), located by
    parabolic interpolation over the three surrounding bins.

    Peaks are returned by descending height; the height carries the sign of
    the channel at the peak.
    """
    values = spectrum.channel(index)
    search = np.abs(values) if absolute else values
    freqs = spectrum.frequencies
    step = freqs[1] - freqs[0]
    candidates = np.flatnonzero((search[1:-1] > search[:-2]) & (search[1:-1] >= search[2:])) + 1
    peaks = []
    for i in candidates:
        if search[i] < min_height:
            continue
        left, centre, right = search[i - 1], search[i], search[i + 1]
        curvature = left - 2.0 * centre + right
        offset = 0.5 * (left - right) / curvature if curvature != 0.0 else 0.0
        height = centre - 0.25 * (left - right) * offset
        if absolute:
            height = np.sign(values[i]) * height
        peaks.append(Peak(float(freqs[i] + offset * step), float(height)))
    peaks.sort(key=lambda p: -abs(p.height))
    return peaks[:limit] if limit else peaks


def value_at(spectrum: Spectrum, frequency: float, index: int = 0) -> float:
    """Channel value interpolated linearly at ``frequency`` (cm⁻¹)."""
    freqs = spectrum.frequencies
    if not freqs[0] <= frequency <= freqs[-1]:
        raise ValueError(f"{frequency} cm^-1 outside [{freqs[0]}, {freqs[-1]}]")
    return float(np.interp(frequency, freqs, spectrum.channel(index)))


def sync_onset_time(sync: SyncSeries, threshold: float, hold: float) -> Optional[float]:
    """Earliest t with C(t') ≥ threshold for all t' in [t, t+hold]; None if never."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    values = np.nan_to_num(sync.values, nan=-np.inf)
    above = values >= threshold - 1e-12
    times = sync.times
    if len(times) < 2:
        return float(times[0]) if len(times) and above[0] and hold <= 0 else None
    step = times[1] - times[0]
    n_hold = int(np.ceil(hold / step - 1e-9))
    run = 0
    # scan backwards so run counts consecutive points at or after each index
    runs = np.zeros(len(above), dtype=int)
    for i in range(len(above) - 1, -1, -1):
        run = run + 1 if above[i] else 0
        runs[i] = run
    hits = np.flatnonzero(runs >= n_hold + 1)
    if len(hits) == 0:
        return None
    return float(times[hits[0]])
