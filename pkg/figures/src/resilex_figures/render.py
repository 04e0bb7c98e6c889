"""Render state/control/Lyapunov panel rows from mean CSVs and event logs.

Output is deterministic: fixed style, no timestamps, pinned image
metadata, so re-rendering the same inputs is byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

# phases shaded as gray bands (controller produces zero input)
_ZERO_INPUT_PHASES = ("auth", "silenced", "reinit")
# phase tinted red (adversary drives the input)
_COMPROMISED_PHASE = "compromised"

_BAND_STYLE = {
    "auth": {"color": "0.55", "alpha": 0.35},
    "silenced": {"color": "0.35", "alpha": 0.35},
    "reinit": {"color": "0.75", "alpha": 0.35},
    _COMPROMISED_PHASE: {"color": "tab:red", "alpha": 0.20},
}


class MissingColumn(Exception):
    """A required column is absent from a mean CSV."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: a row of (states, control, Lyapunov) panels per mean CSV.

    ``event_paths`` pairs with ``mean_paths`` by position; rows beyond its
    length get no bands.  ``row_labels`` likewise (defaults to the CSV
    file's parent directory name).
    """

    mean_paths: tuple[str, ...]
    out_path: str
    event_paths: tuple[str, ...] = ()
    row_labels: tuple[str, ...] = ()
    dpi: int = 150

    def __post_init__(self):
        if not self.mean_paths:
            raise ValueError("at least one mean CSV is required")
        if len(self.event_paths) > len(self.mean_paths):
            raise ValueError("more event logs than mean CSVs")


def _read_mean_csv(path: str) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        rows = [[float(v) for v in row] for row in reader]
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 grid points, got {len(rows)}")
    data = np.asarray(rows)
    columns = {name: data[:, i] for i, name in enumerate(header)}
    for required in ("t", "x1", "u", "V"):
        if required not in columns:
            raise MissingColumn(required)
    return columns


def _read_phases(path: str) -> list[tuple[str, float, float]]:
    phases = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            ev = json.loads(line)
            if ev.get("event") != "phase":
                continue
            detail = ev.get("detail", {})
            phases.append((detail["phase"], float(ev["t"]), float(detail["end"])))
    return phases


def _shade(ax, phases: list[tuple[str, float, float]], t_max: float):
    for phase, start, end in phases:
        if phase not in _BAND_STYLE or start >= t_max:
            continue
        ax.axvspan(start, min(end, t_max), linewidth=0, **_BAND_STYLE[phase])


def render(spec: FigureSpec) -> str:
    """Write the figure described by ``spec``; returns the output path."""
    n_rows = len(spec.mean_paths)
    fig, axes = plt.subplots(
        n_rows, 3, figsize=(12.0, 2.8 * n_rows), squeeze=False, constrained_layout=True
    )
    for row, mean_path in enumerate(spec.mean_paths):
        columns = _read_mean_csv(mean_path)
        t = columns["t"]
        phases = (
            _read_phases(spec.event_paths[row]) if row < len(spec.event_paths) else []
        )
        if row < len(spec.row_labels):
            label = spec.row_labels[row]
        else:
            label = Path(mean_path).resolve().parent.name
        ax_x, ax_u, ax_v = axes[row]
        state_names = sorted(
            (name for name in columns if name.startswith("x")),
            key=lambda s: int(s[1:]),
        )
        for name in state_names:
            ax_x.plot(t, columns[name], label=name, linewidth=1.0)
        ax_x.legend(loc="upper right", fontsize=8)
        ax_x.set_ylabel(f"{label}\nstates")
        ax_u.plot(t, columns["u"], color="tab:orange", linewidth=1.0)
        ax_u.set_ylabel("u")
        ax_v.plot(t, columns["V"], color="tab:green", linewidth=1.0)
        ax_v.set_ylabel("V")
        for ax in (ax_x, ax_u, ax_v):
            _shade(ax, phases, float(t[-1]))
            ax.set_xlim(float(t[0]), float(t[-1]))
            ax.grid(True, linewidth=0.3, alpha=0.5)
            if row == n_rows - 1:
                ax.set_xlabel("t [s]")
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    # pinned metadata keeps repeated renders byte-identical
    fig.savefig(out, dpi=spec.dpi, metadata={"Software": "resilex-figures"})
    plt.close(fig)
    return str(out)
