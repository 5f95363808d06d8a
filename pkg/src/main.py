"""Command-line entry point for compound MIMO capacity runs."""

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, NoReturn

from channel_io import parse_constraint, parse_dims, parse_grid
from config import LOG_LEVEL, MC_SAMPLES
from errors import CertificateError, CompoundMimoError, ConvergenceFailure
from graph import COMMANDS, FORMATS, RunConfig, build_graph
from matrix_kernel import NormKind

logging.basicConfig(
    level=LOG_LEVEL,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    handlers=[logging.StreamHandler(sys.stderr)],
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2
EXIT_VERIFICATION_FAILED = 3


@dataclass(frozen=True)
class RunOutcome:
    exit_code: int
    document: str | None = None
    payload: Dict[str, Any] | None = None
    error: str | None = None


def run(config: RunConfig) -> RunOutcome:
    """Execute one run and map its outcome to an exit status."""
    try:
        final = build_graph().invoke({"config": config})
    except (ConvergenceFailure, CertificateError) as exc:
        logger.error(f"Solver failed: {exc}")
        return RunOutcome(EXIT_NOT_CONVERGED, error=str(exc))
    except CompoundMimoError as exc:
        logger.error(f"Invalid run: {exc}")
        return RunOutcome(EXIT_INVALID, error=str(exc))

    code = EXIT_OK
    if not final.get("converged", True):
        code = EXIT_NOT_CONVERGED
    elif not final.get("verified", True):
        code = EXIT_VERIFICATION_FAILED
    return RunOutcome(code, final.get("document"), final.get("payload"))


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="compound-mimo", description="Compound MIMO capacity under norm-bounded uncertainty.")
    parser.add_argument("command", choices=COMMANDS)
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--input", type=Path, help="channel document (.json) or real CSV (.csv)")
    source.add_argument("--dims", help="draw a seeded random RxT channel instead of reading one")
    parser.add_argument("--gamma", type=float, default=1.0, help="SNR scaling (> 0)")
    parser.add_argument("--epsilon", type=float, default=0.0, help="uncertainty radius (>= 0)")
    parser.add_argument("--norm", choices=[k.value for k in NormKind], default=NormKind.SPECTRAL.value)
    parser.add_argument("--constraint", default="sum", help="sum, sum:BUDGET or max:CAP")
    parser.add_argument("--samples", type=int, default=MC_SAMPLES, help="Monte Carlo samples for verify")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--bits", action="store_true", help="report capacities in bits instead of nats")
    parser.add_argument("--output", type=Path, help="write the report here instead of stdout")
    parser.add_argument("--grid", help="eps_lo:eps_hi:steps,gamma_lo:gamma_hi:steps (sweep)")
    parser.add_argument("--format", choices=FORMATS, default="json", dest="output_format")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        input_path=args.input,
        dims=parse_dims(args.dims) if args.dims else None,
        gamma=args.gamma,
        epsilon=args.epsilon,
        norm=NormKind(args.norm),
        constraint=parse_constraint(args.constraint),
        output_path=args.output,
        seed=args.seed,
        samples=args.samples,
        bits=args.bits,
        grid=parse_grid(args.grid) if args.grid else None,
        output_format=args.output_format,
    )


def main(argv: List[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except CompoundMimoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    outcome = run(config)
    if outcome.error is not None:
        print(f"error: {outcome.error}", file=sys.stderr)
    elif config.output_path is None and outcome.document is not None:
        sys.stdout.write(outcome.document)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
