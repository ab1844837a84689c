"""Command-line front end for the bundled studies and generic sweeps.

Exit codes: 0 on success, 1 for configuration problems (bad usage, invalid
or missing config), 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import (SWEEP_VARIABLES, ConfigError, ExperimentConfig,
                          default_document, run_fig2, run_fig3, run_fig4,
                          run_sweep, validate_config, write_result)


class _ArgumentParser(argparse.ArgumentParser):
    # bad usage is a configuration problem: exit 1 instead of argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, default=None,
                   help="JSON study document, merged over built-in defaults")
    p.add_argument("--seed", type=int, default=None, help="master seed override")
    p.add_argument("--trials", type=int, default=None,
                   help="Monte Carlo trials per position")
    p.add_argument("--positions", type=int, default=None,
                   help="user positions sampled when the target is a box")
    p.add_argument("--out", type=Path, default=Path("results"),
                   help="output directory (default: results)")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="artifact format (default: csv)")
    p.add_argument("--workers", type=int, default=1,
                   help="process count for sweep rows (default: 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="sparse-ris",
                             description="Sparse-tile reflecting surface studies")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_ArgumentParser)

    p = sub.add_parser("validate", help="check a JSON config document")
    p.add_argument("config", type=Path)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fig2", help="spectral efficiency vs transmit SNR, "
                                    "optimal and random phases")
    _add_common(p)
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("fig3", help="received SNR vs surface scale at two "
                                    "Rician factors")
    _add_common(p)
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("fig4", help="position-averaged SE vs horizontal tile "
                                    "pitch (2000 trials unless configured)")
    _add_common(p)
    p.set_defaults(func=cmd_fig4)

    p = sub.add_parser("sweep", help="generic single-variable sweep")
    p.add_argument("--var", required=True, choices=SWEEP_VARIABLES)
    p.add_argument("--values", required=True,
                   help="comma-separated sweep values, e.g. 40,45,50")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def _document_from_args(args):
    """Document built from --config plus flag overrides; None if untouched."""
    run = {}
    if args.seed is not None:
        run["master_seed"] = args.seed
    if args.trials is not None:
        run["n_trials"] = args.trials
    if args.positions is not None:
        run["n_positions"] = args.positions
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as e:
            raise ConfigError([f"config: {e}"])
        cfg, errors = validate_config(text)
        if errors:
            raise ConfigError(errors)
        doc = cfg.document
    elif run:
        doc = default_document()
    else:
        return None
    doc["run"].update(run)
    return doc


def _emit(results: dict, args) -> int:
    for name, result in results.items():
        for path in write_result(result, args.out, name, args.format):
            print(f"wrote {path}")
    return 0


def cmd_validate(args) -> int:
    try:
        text = args.config.read_text()
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    cfg, errors = validate_config(text)
    if errors:
        for msg in errors:
            print(f"config error: {msg}", file=sys.stderr)
        return 1
    run = cfg.document["run"]
    print(f"ok: sweep {run['sweep']['variable']} over "
          f"{len(run['sweep']['values'])} values, seed {run['master_seed']}")
    return 0


def _preset_config(args):
    doc = _document_from_args(args)
    return ExperimentConfig.from_document(doc) if doc is not None else None


def cmd_fig2(args) -> int:
    return _emit(run_fig2(_preset_config(args), workers=args.workers), args)


def cmd_fig3(args) -> int:
    return _emit(run_fig3(_preset_config(args), workers=args.workers), args)


def cmd_fig4(args) -> int:
    doc = _document_from_args(args)
    if doc is not None and args.trials is None and args.config is None:
        # keep the reduced-trial default when only seed/positions were given
        doc["run"]["n_trials"] = 2000
    config = ExperimentConfig.from_document(doc) if doc is not None else None
    return _emit(run_fig4(config, workers=args.workers), args)


def cmd_sweep(args) -> int:
    parts = [s.strip() for s in args.values.split(",") if s.strip()]
    if not parts:
        raise ConfigError(["run.sweep.values: empty value list"])
    try:
        values = [float(s) for s in parts]
    except ValueError:
        raise ConfigError([f"run.sweep.values: not numeric: {args.values!r}"])
    doc = _document_from_args(args) or default_document()
    doc["run"]["sweep"] = {"variable": args.var, "values": values}
    result = run_sweep(ExperimentConfig.from_document(doc), workers=args.workers)
    return _emit({f"sweep_{args.var}": result}, args)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        for msg in e.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
