"""
Static figures rendered from already-written CSV artefacts.
"""

from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .utils import get_logger  # noqa: E402

logger = get_logger(__name__)

SPECTRUM_RANGE = (0.0, 1600.0)


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    logger.info(f"Rendered {path}")
    return path


def plot_sync(trajectory: pd.DataFrame, sync: pd.DataFrame, path: Path) -> Path:
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
    top.plot(trajectory["t_ps"], trajectory["X1"], label=r"$\langle X_1\rangle$", lw=0.8)
    top.plot(trajectory["t_ps"], trajectory["X2"], label=r"$\langle X_2\rangle$", lw=0.8)
    top.set_ylabel("displacement")
    top.legend(loc="upper right")
    bottom.plot(sync["t_ps"], sync["C"], color="k", lw=1.0)
    bottom.axhline(0.0, color="grey", lw=0.5)
    bottom.set_ylim(-1.05, 1.05)
    bottom.set_xlabel("t (ps)")
    bottom.set_ylabel("C(t)")
    return _save(fig, path)


def plot_populations(trajectory: pd.DataFrame, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(trajectory["t_ps"], trajectory["popE1"], label="E1")
    ax.plot(trajectory["t_ps"], trajectory["popE2"], label="E2")
    ax.set_xlabel("t (ps)")
    ax.set_ylabel("exciton population")
    ax.legend()
    return _save(fig, path)


def plot_spectrum(spectrum: pd.DataFrame, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(8, 3))
    for column in [c for c in spectrum.columns if c.startswith("re_ft_")]:
        ax.plot(spectrum["freq_cm1"], spectrum[column], label=column.removeprefix("re_ft_"))
    ax.set_xlim(*SPECTRUM_RANGE)
    ax.axhline(0.0, color="grey", lw=0.5)
    ax.set_xlabel(r"frequency (cm$^{-1}$)")
    ax.set_ylabel("Re FT")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_coherences(trajectory: pd.DataFrame, summary: pd.DataFrame, path: Path, drop_smallest: int = 0) -> Path:
    """|ρ_jk(t)|·|X_1,kj| per tracked pair, leaving out the ``drop_smallest`` weakest."""
    ranked = summary.assign(
        peak=[
            (trajectory[f"cohr_{j}_{k}_abs"] * abs(w)).max()
            for j, k, w in zip(summary["j"], summary["k"], summary["x1_kj"])
        ]
    ).sort_values("peak", ascending=False)
    if drop_smallest:
        ranked = ranked.iloc[: max(len(ranked) - drop_smallest, 0)]
    fig, ax = plt.subplots(figsize=(8, 4))
    for _, row in ranked.iterrows():
        j, k = int(row["j"]), int(row["k"])
        ax.plot(trajectory["t_ps"], trajectory[f"cohr_{j}_{k}_abs"] * abs(row["x1_kj"]), label=f"|{j}><{k}|")
    ax.set_xlabel("t (ps)")
    ax.set_ylabel(r"$|\rho_{jk}|\,|X_{1,kj}|$")
    ax.legend(ncol=2, fontsize="small")
    return _save(fig, path)


def plot_calibration(calibration: pd.DataFrame, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(calibration["phi"], calibration["C"], marker=".")
    ax.set_xlabel(r"$\varphi$ (rad)")
    ax.set_ylabel("C")
    ax.set_ylim(-1.05, 1.05)
    return _save(fig, path)


def render_run_figures(out_dir: Path, drop_smallest: int = 0) -> List[Path]:
    """Render every figure whose source CSVs exist in ``out_dir``."""
    out_dir = Path(out_dir)
    rendered = []
    trajectory_csv = out_dir / "trajectory.csv"
    trajectory = pd.read_csv(trajectory_csv) if trajectory_csv.exists() else None
    if trajectory is not None:
        rendered.append(plot_populations(trajectory, out_dir / "fig_populations.png"))
        if (out_dir / "sync.csv").exists():
            rendered.append(plot_sync(trajectory, pd.read_csv(out_dir / "sync.csv"), out_dir / "fig_sync.png"))
        if (out_dir / "coherences.csv").exists():
            summary = pd.read_csv(out_dir / "coherences.csv")
            rendered.append(plot_coherences(trajectory, summary, out_dir / "fig_coherences.png", drop_smallest))
    for spectrum_csv in sorted(out_dir.glob("spectrum_*.csv")):
        label = spectrum_csv.stem.removeprefix("spectrum_")
        rendered.append(plot_spectrum(pd.read_csv(spectrum_csv), out_dir / f"fig_{spectrum_csv.stem}.png", f"t = {label} ps"))
    return rendered
