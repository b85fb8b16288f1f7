"""Render figure analogues from a pair of exported trace CSVs.

Consumes the trace schema written by the simulator's CSV export: one row per
time step with columns `k, x0.., u0.., xhat{j}_*, aoi{j}, raoi{j}, dvoi{j},
delta{j}, ...`. Each figure overlays the oracle-input run (solid) and the
estimated-input run (dashed); value-of-information figures mark the transmit
instants. Output is static PNG with metadata suppressed so identical inputs
produce identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

FIGURE_IDS = (
    "dvoi_hop1",
    "dvoi_hop2",
    "aoi",
    "raoi",
    "states_pos_vel",
    "states_pitch",
    "control",
)

_REQUIRED_COLUMNS = {
    "dvoi_hop1": ("k", "dvoi1", "delta1"),
    "dvoi_hop2": ("k", "dvoi2", "delta2"),
    "aoi": ("k", "aoi2"),
    "raoi": ("k", "raoi2"),
    "states_pos_vel": ("k", "x0", "x1", "xhat3_0", "xhat3_1"),
    "states_pitch": ("k", "x2", "x3", "xhat3_2", "xhat3_3"),
    "control": ("k", "u0"),
}


class MissingColumnError(KeyError):
    """A referenced trace column does not exist in the CSV."""

    def __init__(self, column: str, path):
        super().__init__(column)
        self.column = column
        self.path = str(path)

    def __str__(self) -> str:
        return f"column {self.column!r} missing from {self.path}"


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    trace_oracle: str
    trace_estimated: str
    out_path: str

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"unknown figure id {self.figure_id!r}; expected one of {FIGURE_IDS}")


def load_columns(path, columns) -> dict[str, np.ndarray]:
    frame = pd.read_csv(path)
    out = {}
    for col in columns:
        if col not in frame.columns:
            raise MissingColumnError(col, path)
        out[col] = frame[col].to_numpy(dtype=float)
    return out


def render(spec: FigureSpec) -> dict:
    """Write the figure and return the plotted series for verification."""
    cols = _REQUIRED_COLUMNS[spec.figure_id]
    oracle = load_columns(spec.trace_oracle, cols)
    estimated = load_columns(spec.trace_estimated, cols)
    if oracle["k"].shape != estimated["k"].shape:
        raise ValueError(
            f"trace length mismatch: {len(oracle['k'])} (oracle) vs {len(estimated['k'])} (estimated)"
        )

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    series = {}
    if spec.figure_id.startswith("dvoi_"):
        hop = spec.figure_id[-1]
        series = _draw_dvoi(ax, oracle, estimated, hop)
        ax.set_ylabel(f"value of information, scheduler {hop}")
    elif spec.figure_id == "aoi":
        series = _draw_pair(ax, oracle, estimated, "aoi2", "age of information, scheduler 2")
    elif spec.figure_id == "raoi":
        series = _draw_pair(ax, oracle, estimated, "raoi2", "relative age of information, scheduler 2")
    elif spec.figure_id == "control":
        series = _draw_pair(ax, oracle, estimated, "u0", "control signal")
    else:
        series = _draw_states(ax, oracle, estimated, spec.figure_id)
    ax.set_xlabel("k")
    ax.grid(True, alpha=0.4)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return series


def _draw_dvoi(ax, oracle, estimated, hop) -> dict:
    value_col, delta_col = f"dvoi{hop}", f"delta{hop}"
    ax.plot(oracle["k"], oracle[value_col], "-", color="tab:blue", lw=1.2, label="known inputs")
    ax.plot(estimated["k"], estimated[value_col], "--", color="tab:orange", lw=1.2,
            label="estimated inputs")
    ax.axhline(0.0, color="black", lw=0.6)
    triggers = {}
    for name, data, color in (("oracle", oracle, "tab:blue"), ("estimated", estimated, "tab:orange")):
        mask = data[delta_col] == 1
        ax.plot(data["k"][mask], data[value_col][mask], "o", ms=4, mfc="none", color=color,
                label=f"triggers ({name})")
        triggers[name] = {"k": data["k"][mask], "value": data[value_col][mask]}
    return {"oracle": oracle[value_col], "estimated": estimated[value_col], "triggers": triggers}


def _draw_pair(ax, oracle, estimated, column, ylabel) -> dict:
    ax.plot(oracle["k"], oracle[column], "-", color="tab:blue", lw=1.2, label="known inputs")
    ax.plot(estimated["k"], estimated[column], "--", color="tab:orange", lw=1.2,
            label="estimated inputs")
    ax.set_ylabel(ylabel)
    return {"oracle": oracle[column], "estimated": estimated[column]}


def _draw_states(ax, oracle, estimated, figure_id) -> dict:
    if figure_id == "states_pos_vel":
        pairs = (("x0", "xhat3_0", "position"), ("x1", "xhat3_1", "velocity"))
    else:
        pairs = (("x2", "xhat3_2", "pitch angle"), ("x3", "xhat3_3", "pitch rate"))
    series = {}
    colors = ("tab:blue", "tab:green")
    for (state_col, est_col, label), color in zip(pairs, colors):
        ax.plot(oracle["k"], oracle[state_col], "-", color=color, lw=1.2, label=f"{label} (true)")
        ax.plot(oracle["k"], oracle[est_col], ":", color=color, lw=1.4,
                label=f"{label} estimate (known inputs)")
        ax.plot(estimated["k"], estimated[est_col], "-.", color=color, lw=1.0,
                label=f"{label} estimate (estimated inputs)")
        series[state_col] = oracle[state_col]
        series[est_col] = {"oracle": oracle[est_col], "estimated": estimated[est_col]}
    ax.set_ylabel("state at the controller")
    return series


def render_all(trace_oracle, trace_estimated, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for figure_id in FIGURE_IDS:
        path = out_dir / f"{figure_id}.png"
        render(FigureSpec(figure_id=figure_id, trace_oracle=str(trace_oracle),
                          trace_estimated=str(trace_estimated), out_path=str(path)))
        written.append(path)
    return written
