"""Figure command line: one subcommand per figure kind.

Subcommands: ``curves``, ``score-hist``, ``regression``, ``auc-alpha``.
Each takes ``--csv`` (the experiment output to read) and ``--out`` (the
image to write; the extension picks the format). Exit codes: 0 success,
2 input or schema error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .figures import PlotSpec, plot
from .io import SchemaError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUNTIME = 3

__all__ = ["main"]


def _rounds_arg(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}"
        ) from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdra-plots",
        description="Render experiment CSV outputs to figures",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--csv", required=True, help="input CSV path")
        p.add_argument("--out", required=True, help="output image path")
        p.add_argument("--title", default="", help="figure title override")

    p_curves = sub.add_parser(
        "curves", help="infected fraction against time per strategy"
    )
    add_common(p_curves)

    p_hist = sub.add_parser(
        "score-hist", help="sampled score histograms at selected rounds"
    )
    add_common(p_hist)
    p_hist.add_argument(
        "--rounds",
        type=_rounds_arg,
        default=(),
        help="comma-separated round indices (default: first, middle, last)",
    )

    p_reg = sub.add_parser(
        "regression", help="excess infection against selection divergence"
    )
    add_common(p_reg)
    p_reg.add_argument(
        "--alpha",
        type=float,
        default=None,
        help="keep only this sampling ratio (default: all in the file)",
    )

    p_auc = sub.add_parser(
        "auc-alpha", help="infection area against sampling ratio"
    )
    add_common(p_auc)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    spec = PlotSpec(
        kind=args.command,
        csv=args.csv,
        out=args.out,
        title=args.title,
        rounds=getattr(args, "rounds", ()),
        alpha=getattr(args, "alpha", None),
    )
    try:
        out = plot(spec)
    except SchemaError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
