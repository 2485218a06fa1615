"""
Command line interface: one subcommand per pipeline stage, generated from the
stage arguments. The process exit status is the status code of the stage.
"""

import argparse
import logging
import sys
from typing import Any, Dict, Optional, Type

from . import run_single_stage, stages
from .config import load_run_config
from .errors import HarnessError
from .session import Session
from .stages._parsing import get_param_doc, get_param_type, get_stage_args, has_default

logger = logging.getLogger("PersonaSim.cli")


def main(*args: str) -> int:
    parser = create_argparser()
    args = parser.parse_args(args)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s [%(name)s] %(message)s",
    )
    if not args.stage:
        parser.print_help()
        return 2

    session = initialize_session(args)
    if isinstance(session, int):
        return session
    stage_class = getattr(stages, args.stage)
    result = run_single_stage(session, stage_class, extract_run_args(stage_class, args))
    return result.status_code[0]


def create_argparser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        "personasim",
        description="Persona generation, opinion simulation and alignment evaluation",
    )
    parser = add_session_args(parser)

    cmd_parser = parser.add_subparsers(dest="stage")
    for stage_class in stages.__all_stages__:
        cmd_parser = create_stage_subparser(cmd_parser, stage_class)
    return parser


def add_session_args(parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    group = parser.add_argument_group("Run initialization, required for all stages")
    group.add_argument("--config", type=str, required=True, help="Run configuration YAML file")
    group.add_argument(
        "--set",
        type=str,
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a configuration entry, like generation.retry_limit=5",
    )
    group.add_argument(
        "--log-level",
        type=str.upper,
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level",
    )
    group.add_argument(
        "--no-progress", action="store_true", help="Do not display progress bars"
    )
    return parser


def create_stage_subparser(cmd_parser, stage_class: Type):
    sub_parser = cmd_parser.add_parser(
        stage_class.__name__,
        description=stage_class.__doc__,
        help=(stage_class.__doc__ or "").strip().split("\n")[0],
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )

    for name, param in get_stage_args(stage_class).items():
        argument_settings: Dict[str, Any] = {
            "type": get_param_type(param),
            "help": get_param_doc(param),
        }
        # Adding default argument
        if not has_default(param):
            argument_settings["required"] = True
        else:
            argument_settings["default"] = param.default
        sub_parser.add_argument("--" + name, **argument_settings)
    return cmd_parser


def initialize_session(args: argparse.Namespace) -> Session | int:
    """Loading the configuration and opening the run directory"""
    try:
        config = load_run_config(args.config, args.set)
        return Session(config, progress=not args.no_progress).load_or_create()
    except HarnessError as err:
        logger.error(f"{type(err).__name__}: {err}")
        return err.status_code


def extract_run_args(stage_class: Type, args: argparse.Namespace) -> Dict[str, Any]:
    return {name: getattr(args, name) for name in get_stage_args(stage_class).keys()}


def run(argv: Optional[list] = None) -> None:
    sys.exit(main(*(sys.argv[1:] if argv is None else argv)))
