"""Publication-style figure rendering from simulation output files.

Reads only the frozen file contracts (ensemble mean CSV and event JSONL,
see SCHEMA.md at the repository root); it never imports the simulator.
"""

from .render import FigureSpec, MissingColumn, render

__all__ = ["FigureSpec", "MissingColumn", "render"]
