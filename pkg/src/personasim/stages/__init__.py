# For parsing purposes
import importlib

from . import _parsing, _stage_base

# Define the stages exposed by the command line. This expects that the stage
# classes are defined as in the file <name>.py with identical class name. The
# order of this list is the order of the pipeline, and the ordering by which the
# subcommands appear in the help message.
__all_stages_names__ = [
    "sample",
    "generate",
    "simulate",
    "evaluate",
    "report",
    "validate",
]

# Peforming additional parsing
__current__ = importlib.import_module(__package__)
__all_stages__ = []
for stage_name in __all_stages_names__:
    stage_class = importlib.import_module(f".{stage_name}", __package__)
    stage_class = getattr(stage_class, stage_name)
    if not isinstance(stage_class, type):
        continue

    # Additional parsing to do
    _parsing.__check_valid_inheritance__(stage_class)
    _parsing.__check_valid_arg__(stage_class)
    _parsing.__check_valid_interface__(stage_class)
    __all_stages__.append(stage_class)
    setattr(__current__, stage_name, stage_class)
