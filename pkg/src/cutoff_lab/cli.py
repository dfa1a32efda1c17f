"""``cutoff-lab`` command line."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .errors import CutoffLabError

log = logging.getLogger("cutoff_lab")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < (1 << 64):
        raise argparse.ArgumentTypeError(f"{text} is not a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML/JSON config or experiment file")
    common.add_argument("--out", type=Path, help="output directory (default: stdout only)")
    common.add_argument("--seed", type=_u64, help="master seed (overrides the file)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="cutoff-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("profile", "exact TV curves for X and/or Y, with SVG plots"),
        ("sandwich", "lower bound <= exact TV(Y_k) <= Fourier upper bound"),
        ("jump-count", "jump-count tail and TV(X) <= TV(Y) + tail"),
        ("drift-contrast", "Y mixing times for zero- and nonzero-mean steps"),
        ("validate", "run the cross-module invariant suite"),
        ("theory", "print closed-form cutoff quantities"),
    ]:
        sub.add_parser(name, parents=[common], help=helptext)
    return parser


def _emit(args, name: str, rows, extra=None) -> str:
    text = ex.rows_to_json(rows, extra) if args.format == "json" else ex.rows_to_csv(rows)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"{name}.{args.format}").write_text(text)
    else:
        sys.stdout.write(text)
    return text


def run(args) -> int:
    spec = ex.load_spec(args.config, seed=args.seed)
    if args.out is None and spec.out:
        args.out = Path(spec.out)
    cmd = args.command
    if cmd == "profile":
        rows, svgs = ex.cmd_profile(spec, args.threads)
        _emit(args, "profile", rows)
        if args.out is not None:
            for fname, svg in svgs.items():
                (args.out / fname).write_text(svg)
    elif cmd == "sandwich":
        _emit(args, "sandwich", ex.cmd_sandwich(spec, args.threads))
    elif cmd == "jump-count":
        rows = ex.cmd_jump_count(spec, args.threads)
        _emit(args, "jump_count", rows)
        if any(r["holds"] is False for r in rows):
            log.error("TV(X) exceeded TV(Y) + tail on some row")
            return 1
    elif cmd == "drift-contrast":
        rows, summary = ex.cmd_drift_contrast(spec, args.threads)
        _emit(args, "drift_contrast", rows, {"summary": {str(k): v for k, v in summary.items()}})
        for a, s in summary.items():
            log.info("alpha=%g: %s", a, json.dumps(s))
    elif cmd == "validate":
        results = ex.cmd_validate(spec if args.config else None)
        for r in results:
            print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['check']:<22} {r['detail']}  ({r['seconds']}s)",
                  file=sys.stderr)
        _emit(args, "validate", [{k: v for k, v in r.items() if k != "seconds"} for r in results])
        return 0 if all(r["passed"] for r in results) else 1
    elif cmd == "theory":
        _emit(args, "theory", ex.cmd_theory(spec))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except CutoffLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
