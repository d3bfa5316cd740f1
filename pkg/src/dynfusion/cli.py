"""Command line entry point: ``dynfusion run|replay|validate``.

Exit codes: 0 success, 1 invalid config or input data, 2 runtime or I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .core import ConfigError, ValidationError
from .experiment import replay, run_experiment

log = logging.getLogger("dynfusion")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dynfusion", description="Context-aware dynamic fusion experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the configured experiment")
    run.add_argument("config", help="config file, or the name of a bundled config (unimodal, multimodal)")

    rep = sub.add_parser("replay", help="run the configured scenario on recorded scores")
    rep.add_argument("config")
    rep.add_argument("trace", help="score trace CSV (cid,alpha,t_ms)")

    val = sub.add_parser("validate", help="check a config file and exit")
    val.add_argument("config")

    for sp in (run, rep):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir")
    run.add_argument("--trials", type=int)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            print(f"ok: {len(cfg.classifiers)} classifiers, {len(cfg.contexts)} contexts, "
                  f"approaches {', '.join(cfg.approaches)}")
        elif args.command == "run":
            summary = run_experiment(args.config, args.out_dir, args.seed, args.trials)
            _print_table(summary)
        else:
            trace = replay(args.config, args.trace, args.out_dir, args.seed)
            locked = sum(1 for row in trace if row.state.value == "locked")
            print(f"{len(trace)} steps, {locked} locked, {trace[-1].score_calcs if trace else 0} score calculations")
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("run failed", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def _print_table(summary: dict) -> None:
    contexts = summary["contexts"]
    head = f"{'approach':<10}" + "".join(f"{c:>9}" for c in contexts) + f"{'#calcs':>8}"
    print(head)
    for row in summary["approaches"]:
        cells = "".join(f"{100 * row['eer'][c]:>8.2f}%" for c in contexts)
        print(f"{row['approach']:<10}{cells}{row['score_calculations']!s:>8}")


if __name__ == "__main__":
    sys.exit(main())
