"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import argparse
import enum
import json
import logging
import random
import sys
from collections.abc import Sequence
from dataclasses import asdict

import numpy as np

import torch
from fiber_adhesion.cli.result_writers import ResultWriter
from fiber_adhesion.cli.scenario_config import canonical_json, ConfigValidationError, load_config
from fiber_adhesion.cli.scenarios import run_scenario
from fiber_adhesion.verify import run_verification_suite, VerificationSuite

logger: logging.Logger = logging.getLogger(__name__)


###### ENUM CLASSES ######
@enum.unique
class ExitCode(enum.IntEnum):
    SUCCESS = 0
    VALIDATION_ERROR = 2
    SOLVER_FAILURE = 3


###### ARGPARSER ######
class Parser:
    @staticmethod
    def get_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
        parser = argparse.ArgumentParser(
            prog="fiber-adhesion",
            description="Scenarios and verification suites for adhesive fiber interactions.",
        )
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument(
            "--verbose", action="store_true", help="Log at DEBUG instead of INFO."
        )
        commands = parser.add_subparsers(dest="command", required=True)

        run = commands.add_parser(
            "run", parents=[common], help="Run the scenario described by a JSON config."
        )
        run.add_argument("config", help="Path of the JSON scenario config.")
        run.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY.PATH=VALUE",
            help="Override a config entry; VALUE is parsed as a JSON literal when possible.",
        )
        run.add_argument("--threads", type=int, default=None, help="Torch intra-op threads.")
        run.add_argument("--out", default=None, help="Output directory.")
        run.add_argument("--seed", type=int, default=None, help="Seed.")

        verify = commands.add_parser(
            "verify", parents=[common], help="Run a verification suite."
        )
        verify.add_argument(
            "suite", help=f"One of {', '.join(suite.value for suite in VerificationSuite)}."
        )

        return parser.parse_args(argv)


def set_seed(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)


def _diagnose(error: Exception, exit_code: ExitCode) -> ExitCode:
    print(
        json.dumps(
            {
                "error": exit_code.name.lower(),
                "type": type(error).__name__,
                "message": str(error),
                "path": error.path if isinstance(error, ConfigValidationError) else None,
            }
        ),
        file=sys.stderr,
    )
    return exit_code


def run_command(args: argparse.Namespace) -> ExitCode:
    overrides = list(args.overrides)
    for key, value in (("threads", args.threads), ("output_dir", args.out), ("seed", args.seed)):
        if value is not None:
            overrides.append(f"{key}={json.dumps(value)}")
    try:
        config = load_config(args.config, overrides)
    except ValueError as error:
        return _diagnose(error, ExitCode.VALIDATION_ERROR)

    set_seed(config.seed)
    if config.threads is not None:
        torch.set_num_threads(config.threads)
    logger.debug(f"Scenario config:\n{canonical_json(config)}")

    try:
        summary = run_scenario(config, ResultWriter(config.output_dir))
    except ValueError as error:
        return _diagnose(error, ExitCode.VALIDATION_ERROR)
    except ArithmeticError as error:
        return _diagnose(error, ExitCode.SOLVER_FAILURE)

    logger.info(f"Scenario {summary['scenario']} finished; results in {config.output_dir}.")
    return ExitCode.SUCCESS


def verify_command(args: argparse.Namespace) -> ExitCode:
    try:
        checks = run_verification_suite(args.suite)
    except ArithmeticError as error:
        return _diagnose(error, ExitCode.SOLVER_FAILURE)
    except ValueError as error:
        return _diagnose(error, ExitCode.VALIDATION_ERROR)

    for check in checks:
        print(json.dumps(asdict(check)))
    failed = [check.name for check in checks if not check.passed]
    if failed:
        logger.warning(f"{len(failed)} of {len(checks)} checks failed: {failed}.")
        return ExitCode.SOLVER_FAILURE
    return ExitCode.SUCCESS


def main(argv: Sequence[str] | None = None) -> int:
    args = Parser.get_args(argv)
    logging.basicConfig(
        format="[%(filename)s:%(lineno)d] %(levelname)s: %(message)s",
        level=logging.DEBUG if args.verbose else logging.INFO,
    )
    match args.command:
        case "run":
            return run_command(args)
        case "verify":
            return verify_command(args)
        case _:
            raise NotImplementedError(f"{args.command=} is not supported.")


if __name__ == "__main__":
    sys.exit(main())
