"""``fedsim`` command line: run, grid, synth, validate.

Exit codes: 0 success, 2 config error, 3 data error, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import traceback

from ..data import synth_evcs_dataset, write_csv
from ..errors import ConfigurationError, DataError
from .config import load_config, load_grid, read_yaml
from .runner import run, run_grid

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log every round")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("config")
    p.add_argument("--out", help="override output_dir")

    p = sub.add_parser("grid", help="run every cell of a grid config")
    p.add_argument("config")
    p.add_argument("--out", help="override output_dir")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--features", type=int, default=20)
    p.add_argument("--out", required=True)

    p = sub.add_parser("validate", help="check a run or grid config without running it")
    p.add_argument("config")
    return parser


def _dispatch(args) -> int:
    if args.command == "run":
        res = run(args.config, args.out)
        final = res.final
        print(f"{res.output_dir}: accuracy={final['accuracy']:.4f} f1={final['f1']:.4f}")
    elif args.command == "grid":
        results = run_grid(args.config, jobs=args.jobs, output_dir=args.out)
        print(f"{len(results)} runs; comparison table in {results[0].output_dir.parent}")
    elif args.command == "synth":
        ds = synth_evcs_dataset(args.rows, args.features, args.seed)
        write_csv(args.out, ds)
        print(f"wrote {len(ds)} rows to {args.out}")
    elif args.command == "validate":
        if "grid" in read_yaml(args.config):
            grid = load_grid(args.config)
            print(f"ok: grid with {len(grid.cells())} cells")
        else:
            cfg = load_config(args.config)
            print(f"ok: {cfg.mode} run")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
