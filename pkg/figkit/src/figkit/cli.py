"""figkit command line: figkit <panel-kind> --in <dir> --out <png/svg>."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .panels import PANEL_KINDS, PanelSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figkit",
        description="Regenerate publication-style panels from cavmol CSV output.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in PANEL_KINDS:
        p = sub.add_parser(kind, help=f"render a {kind} panel")
        p.add_argument(
            "--in",
            dest="inputs",
            action="append",
            required=True,
            help="run directory with cavmol CSV output (repeat for spectra-compare)",
        )
        p.add_argument("--out", required=True, help="output image path (.png or .svg)")
        p.add_argument(
            "--times",
            type=float,
            nargs="+",
            help="times to plot; must exist in the CSV (default: an even selection)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PanelSpec(
            kind=args.kind,
            inputs=tuple(Path(p) for p in args.inputs),
            out=Path(args.out),
            times=tuple(args.times) if args.times else None,
        )
        out, factors = render(spec)
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    for label, factor in factors.items():
        print(f"normalization {label}: divided by {factor:.6g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
