#!/usr/bin/env python3
"""
vibronic-sync Demo Script
Walks through the reference dimer: its coherence table, a short open
propagation with synchronisation and spectra, and the three regimes.
"""

import os
import sys
from pathlib import Path

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from vibronic_sync.config import apply_overrides
from vibronic_sync.observables import classify_pairs, pair_summary
from vibronic_sync.presets import list_presets, preset
from vibronic_sync.runner import ScenarioRunner, quiet_et_amplitude
from vibronic_sync.syncanalysis import find_peaks
from vibronic_sync.utils import configure_logging, get_logger

logger = get_logger(__name__)


def print_separator(title: str):
    """Print a separator for demo sections"""
    logger.info("\n" + "=" * 60)
    logger.info(f"  {title}")
    logger.info("=" * 60)


def demo_coherence_table(runner: ScenarioRunner):
    print_separator("COHERENCE TABLE")
    report = runner.table2(preset("pe545"))
    logger.info("\n" + report.to_text())


def demo_propagation(runner: ScenarioRunner, m_levels: int):
    print_separator(f"OPEN PROPAGATION (M = {m_levels})")
    config = apply_overrides(preset("pe545"), {"params.m_levels": m_levels})
    result = runner.simulate(config)

    logger.info(f"\nSummary: {result.summary()}")
    logger.info("\nCoherence classes:")
    for kind, pairs in classify_pairs(result.tracks).items():
        logger.info(f"  {kind:<10} {pairs}")

    logger.info("\nLate coherences:")
    logger.info("\n" + pair_summary(result.tracks, t=1.5).to_string(index=False))

    for start, spectrum in result.spectra.items():
        peaks = find_peaks(spectrum, 0, limit=3)
        listed = ", ".join(f"{p.frequency:.1f} cm-1 ({p.height:+.3g})" for p in peaks)
        logger.info(f"\nFT of X1 from {start} ps: {listed}")


def demo_regimes(runner: ScenarioRunner):
    print_separator("REGIMES")
    for name, description in list_presets().items():
        amplitude = quiet_et_amplitude(preset(name).params)
        logger.info(f"  {name:<14} A = {amplitude:.3f}  {description}")


def main():
    configure_logging("INFO")
    m_levels = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    runner = ScenarioRunner(use_registry=False)

    demo_coherence_table(runner)
    demo_propagation(runner, m_levels)
    demo_regimes(runner)

    out_dir = Path("runs") / "demo"
    logger.info(f"\nFor the full run with figures: vibronic-sync simulate --plot --out {out_dir}")


if __name__ == "__main__":
    main()
