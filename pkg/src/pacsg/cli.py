"""Command line: ``run``, ``oracle``, ``pac-test`` and ``validate``.

Exit codes: 0 success, 1 usage or model error, 2 timeout (the anytime
interval is still printed).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Sequence

from .access import AccessMode
from .blackvi import DEFAULT_EPSILON, DEFAULT_NK, DEFAULT_TIMEOUT, BlackViConfig
from .estimation import Sidedness
from .harness import load_game, pac_test, read_model_text, run_engine, write_trace
from .model import ModelError, parse_model
from .whitebox import OracleTooLarge, oracle_value

EXIT_OK, EXIT_ERROR, EXIT_TIMEOUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with 2, which means timeout here
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _nk(text: str) -> int | list[int]:
    try:
        vals = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or comma-separated integers, got {text!r}")
    if any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("simulation counts must be positive")
    return vals[0] if len(vals) == 1 else vals


def _add_engine_flags(p: argparse.ArgumentParser, default_mode: str, default_timeout: float | None) -> None:
    p.add_argument("--mode", choices=[m.value for m in AccessMode], default=default_mode)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--pmin-override", type=float, default=None,
                   help="lower bound on transition probabilities given to the learner")
    p.add_argument("--nk", type=_nk, default=DEFAULT_NK,
                   help="simulations per phase; a comma-separated list sets a schedule")
    p.add_argument("--timeout", type=float, default=default_timeout, help="seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sided", choices=[s.value for s in Sidedness], default=Sidedness.ONE.value)
    p.add_argument("--max-phases", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pacsg", description="Reachability in stochastic games with limited information.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="compute an interval for the value of the initial state")
    run.add_argument("model", help="model file or bundled model name")
    _add_engine_flags(run, AccessMode.BLACK.value, DEFAULT_TIMEOUT)
    run.add_argument("--trace", default=None, help="append per-phase records to this CSV file")

    orc = sub.add_parser("oracle", help="exact values by strategy enumeration")
    orc.add_argument("model")

    pac = sub.add_parser("pac-test", help="repeat the learner and count intervals missing the true value")
    pac.add_argument("model")
    _add_engine_flags(pac, AccessMode.BLACK.value, 60.0)
    pac.add_argument("--runs", type=int, default=200)
    pac.add_argument("--workers", type=int, default=None)
    pac.add_argument("--zero-width", action="store_true",
                     help="negative control: estimate without confidence width")

    val = sub.add_parser("validate", help="check a model file")
    val.add_argument("model")
    return parser


def _config(args: argparse.Namespace) -> BlackViConfig:
    mode = AccessMode(args.mode)
    return BlackViConfig(
        epsilon=args.epsilon, delta=args.delta, nk=args.nk, timeout=args.timeout,
        mode=AccessMode.BLACK if mode is AccessMode.WHITE else mode,
        sided=Sidedness(args.sided), seed=args.seed, max_phases=args.max_phases,
        zero_width=getattr(args, "zero_width", False),
    )


def _fmt_value(v) -> str:
    if isinstance(v, Fraction):
        return f"{v} ({float(v):.12g})" if v.denominator != 1 else str(v)
    return f"{v:.12g}"


def cmd_run(args: argparse.Namespace) -> int:
    game = load_game(args.model)
    report = run_engine(game, AccessMode(args.mode), _config(args), args.pmin_override)
    if args.trace:
        write_trace(args.trace, report.trace)
    print(f"interval: [{report.lower:.10g}, {report.upper:.10g}]")
    print(f"epsilon': {report.epsilon:.6g}")
    print(f"termination: {report.termination}")
    print(f"explored states: {report.explored_states}  simulations: {report.simulations}")
    return EXIT_TIMEOUT if report.termination == "timeout" else EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    game = load_game(args.model)
    values = oracle_value(game)
    width = max(len(n) for n in game.names)
    for name, v in zip(game.names, values):
        print(f"{name:<{width}}  {_fmt_value(v)}")
    return EXIT_OK


def cmd_pac_test(args: argparse.Namespace) -> int:
    game = load_game(args.model)
    report = pac_test(game, args.runs, _config(args), master_seed=args.seed,
                      mode=AccessMode(args.mode), pmin=args.pmin_override, workers=args.workers)
    print(f"runs: {report.runs}")
    print(f"violations: {report.violations}")
    print(f"violation rate: {report.violation_rate:.4f} (threshold {report.threshold:.4f}, delta {report.delta})")
    print(f"median width: {report.median_width:.6g}")
    print(f"verdict: {report.verdict}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    text = read_model_text(args.model)
    try:
        game = parse_model(text)
    except ModelError as exc:
        for v in exc.violations or [exc]:
            print(f"invalid: {v}")
        return EXIT_ERROR
    print(f"ok: {game.num_states} states, {sum(len(a) for a in game.actions)} actions, "
          f"{'MDP' if game.is_mdp else 'stochastic game'}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "oracle": cmd_oracle, "pac-test": cmd_pac_test, "validate": cmd_validate}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ModelError, FileNotFoundError, OracleTooLarge, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
