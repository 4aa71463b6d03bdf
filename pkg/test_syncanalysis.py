"""
Tests for the windowed Pearson measure and the Fourier analysis.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vibronic_sync.errors import WindowTooShortError
from vibronic_sync.hilbert import KAPPA
from vibronic_sync.syncanalysis import (
    DegenerateWindowWarning,
    SyncSeries,
    dominant_period,
    find_peaks,
    pearson_sync,
    real_ft,
    stack_spectra,
    sync_onset_time,
    sync_phase_characterisation,
    value_at,
)

PERIOD = 1.0
STEP = PERIOD / 400
TIMES = np.arange(2001) * STEP


def test_dominant_period():
    assert dominant_period(1111.0) == pytest.approx(0.0300, abs=1e-4)
    with pytest.raises(ValueError):
        dominant_period(0.0)


def test_identical_and_opposite_signals():
    f = np.sin(2 * np.pi * TIMES / PERIOD) + 0.3 * np.cos(6 * np.pi * TIMES)
    assert np.allclose(pearson_sync(f, f, PERIOD, times=TIMES).values, 1.0)
    assert np.allclose(pearson_sync(f, -f, PERIOD, times=TIMES).values, -1.0)


def test_quarter_period_shift_is_uncorrelated():
    f1 = np.sin(2 * np.pi * TIMES / PERIOD)
    f2 = np.sin(2 * np.pi * TIMES / PERIOD + np.pi / 2)
    series = pearson_sync(f1, f2, PERIOD, dt=STEP)
    assert np.max(np.abs(series.values)) < 1e-6
    assert series.window == pytest.approx(PERIOD)
    assert len(series.times) == len(TIMES) - 400


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**31 - 1),
    a=st.floats(min_value=0.1, max_value=10.0),
    b=st.floats(min_value=-100.0, max_value=100.0),
    c=st.floats(min_value=-10.0, max_value=-0.1),
    d=st.floats(min_value=-100.0, max_value=100.0),
)
def test_pearson_bound_and_affine_invariance(seed, a, b, c, d):
    rng = np.random.default_rng(seed)
    f1 = rng.normal(size=200)
    f2 = 0.5 * f1 + rng.normal(size=200)
    base = pearson_sync(f1, f2, 0.05, dt=0.001).values
    assert np.all(np.abs(base) <= 1.0)
    scaled = pearson_sync(a * f1 + b, c * f2 + d, 0.05, dt=0.001).values
    np.testing.assert_allclose(scaled, -base, atol=1e-8)


def test_degenerate_window():
    f1 = np.concatenate([np.zeros(100), np.sin(np.arange(100))])
    f2 = np.sin(0.3 * np.arange(200))
    with pytest.warns(DegenerateWindowWarning):
        series = pearson_sync(f1, f2, 0.01, dt=0.001)
    assert np.isnan(series.values[0])
    assert np.isfinite(series.values[-1])


def test_window_validation():
    f = np.sin(TIMES)
    with pytest.raises(WindowTooShortError):
        pearson_sync(f, f, STEP, times=TIMES)
    with pytest.raises(WindowTooShortError):
        pearson_sync(f, f, 10.0, times=TIMES)
    with pytest.raises(ValueError):
        pearson_sync(f, f[:-1], PERIOD, times=TIMES)
    with pytest.raises(ValueError):
        pearson_sync(f, f, PERIOD)


def test_phase_calibration_curve():
    omega = 1111.0
    angular = KAPPA * omega
    phases = np.linspace(0.0, np.pi, 19)
    curve = sync_phase_characterisation(angular, dominant_period(omega), phases)
    values = np.array([c for _, c in curve])
    assert values[0] == pytest.approx(1.0, abs=1e-9)
    assert values[-1] == pytest.approx(-1.0, abs=1e-9)
    assert np.all(np.diff(values) < 0)
    np.testing.assert_allclose(values, np.cos(phases), atol=1e-6)
    with pytest.raises(ValueError):
        sync_phase_characterisation(-1.0, 0.03, phases)


def test_ft_peak_position_and_sign():
    times = np.arange(1001) * 0.001
    signal = np.cos(KAPPA * 1111.0 * times)
    spectrum = real_ft(signal, 0.0, 1.0, times=times, name="X1")
    peak = find_peaks(spectrum, limit=1)[0]
    assert peak.frequency == pytest.approx(1111.0, abs=3.0)
    assert peak.height > 0
    flipped = real_ft(-signal, 0.0, 1.0, times=times, name="X2")
    flipped_peak = find_peaks(flipped, absolute=True, limit=1)[0]
    assert flipped_peak.frequency == pytest.approx(1111.0, abs=3.0)
    assert flipped_peak.height < 0
    assert spectrum.resolution == pytest.approx(1.0 / 0.0299792458, rel=1e-6)


def test_ft_phase_refers_to_window_start():
    times = np.arange(2001) * 0.001
    signal = np.cos(KAPPA * 1111.0 * (times - 0.5))
    spectrum = real_ft(signal, 0.5, 1.5, times=times)
    assert value_at(spectrum, find_peaks(spectrum, limit=1)[0].frequency) > 0


def test_ft_window_validation():
    times = np.arange(101) * 0.001
    signal = np.cos(times)
    with pytest.raises(WindowTooShortError):
        real_ft(signal, 0.0, 0.01, times=times)
    with pytest.raises(WindowTooShortError):
        real_ft(signal, 0.05, 0.2, times=times)
    spectrum = real_ft(signal, 0.0, 0.1, times=times)
    with pytest.raises(ValueError):
        value_at(spectrum, -5.0)


def test_stack_spectra():
    times = np.arange(501) * 0.001
    a = real_ft(np.cos(KAPPA * 1111.0 * times), 0.0, 0.5, times=times, name="X1")
    b = real_ft(np.sin(KAPPA * 1111.0 * times), 0.0, 0.5, times=times, name="X2")
    stacked = stack_spectra([a, b])
    assert stacked.signal_names == ("X1", "X2")
    np.testing.assert_array_equal(stacked.channel(1), b.channel())
    c = real_ft(np.cos(times), 0.0, 0.4, times=times)
    with pytest.raises(ValueError):
        stack_spectra([a, c])


def test_sync_onset():
    times = np.arange(0, 2.0, 0.01)
    values = np.where(times < 1.0, 0.5, 0.99)
    # a short dip resets the hold
    values[(times > 1.095) & (times < 1.145)] = 0.9
    series = SyncSeries(times, values, 0.03)
    onset = sync_onset_time(series, 0.95, 0.2)
    assert onset == pytest.approx(1.15, abs=1e-9)
    assert sync_onset_time(series, 0.999, 0.2) is None
    with pytest.raises(ValueError):
        sync_onset_time(series, 1.5, 0.2)
