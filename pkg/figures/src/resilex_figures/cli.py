"""Command-line figure renderer: one panel row per mean CSV."""

from __future__ import annotations

import argparse
import json
import sys

from .render import FigureSpec, MissingColumn, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resilex-fig",
        description="Render state/control/Lyapunov panels from simulation "
        "mean CSVs, with supervisor phase bands from event logs",
    )
    parser.add_argument(
        "--mean",
        action="append",
        required=True,
        help="ensemble mean CSV; repeat for stacked rows",
    )
    parser.add_argument(
        "--events",
        action="append",
        default=[],
        help="event JSONL paired with the corresponding --mean (optional)",
    )
    parser.add_argument(
        "--label",
        action="append",
        default=[],
        help="row label paired with the corresponding --mean (optional)",
    )
    parser.add_argument("--out", required=True, help="output image path (PNG)")
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            mean_paths=tuple(args.mean),
            event_paths=tuple(args.events),
            row_labels=tuple(args.label),
            out_path=args.out,
            dpi=args.dpi,
        )
        path = render(spec)
    except (MissingColumn, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"figure written to {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
