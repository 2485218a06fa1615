import inspect
import warnings
from typing import Dict, List, Optional, Type, _AnnotatedAlias

from ..config import RunConfig
from ..dispatch import Iterate
from ..errors import ConfigurationError
from ..utils import _str_
from ..yaml_format import RunManifest
from ._argument_validation import ArgumentValueChecker
from ._stage_base import StageBase

__allowed_types__ = [str, int, float]


def get_stage_args(stage_class: Type) -> Dict[str, inspect.Parameter]:
    """Returning a list of parameters that requires user-level settings"""
    return {
        name: param
        for name, param in inspect.signature(stage_class.__init__).parameters.items()
        if name != "self" and name != "*" and name != "store_base"
    }


def __check_valid_inheritance__(stage_class: Type):
    assert issubclass(
        stage_class, StageBase
    ), f"Stage [{stage_class.__name__}] is not inherited from StageBase!"


def __raise_illegal_args__(stage_class: Type, arg_list: List[str], desc: str):
    name = stage_class.__name__
    args = ", ".join(arg_list)
    raise TypeError(
        _str_(
            f"""
            Stage [{name}] has arguments ({args}) {desc}! Check file
            [{inspect.getfile(stage_class)}]
            """
        )
    )


"""
Methods for checking the stage arguments are declared according to
conventions: every argument is an `Annotated[type, "doc", checker]` field with a
primitive type, as these are used to generate the command line options.
"""


def __check_valid_arg__(stage_class: Type):
    """
    Top level function
    """
    __check_arg_empty_annotation__(stage_class)
    __check_annotation_type__(stage_class)


def __check_arg_empty_annotation__(stage_class: Type):
    """
    If an argument is completely not annotated it will not be recognized by the
    dataclass decorator and cannot be accessed in the __init__ methods. These
    shall not be allowed.
    """
    args_sig = get_stage_args(stage_class)
    non_annotated_args = [
        x
        for x in stage_class.__dict__.keys()
        if not x.startswith("_")
        and x not in args_sig.keys()
        and not callable(getattr(stage_class, x))
        and not isinstance(getattr(stage_class, x), property)
    ]
    if len(non_annotated_args) > 0:
        __raise_illegal_args__(
            stage_class, non_annotated_args, "that does not contain annotations"
        )


def __check_annotation_type__(stage_class: Type):
    no_anno_args = []
    no_doc_args = []
    bad_type_args = []

    for arg_name, arg_sig in get_stage_args(stage_class).items():
        if not isinstance(arg_sig.annotation, _AnnotatedAlias):
            no_anno_args.append(arg_name)
            continue
        metadata = arg_sig.annotation.__metadata__
        if len(metadata) < 1 or not isinstance(metadata[0], str):
            no_doc_args.append(arg_name)
        if arg_sig.annotation.__origin__ not in __allowed_types__:
            bad_type_args.append(arg_name)

    if len(no_anno_args):
        __raise_illegal_args__(
            stage_class, no_anno_args, "not annotated with [typing.Annotated]"
        )
    if len(no_doc_args):
        __raise_illegal_args__(
            stage_class, no_doc_args, "do not contain documentation string"
        )
    if len(bad_type_args):
        __raise_illegal_args__(stage_class, bad_type_args, "requesting non-primitive types")


"""
Checking that the run method has understood interface types, which is used to
automatically call the run methods from the session.
"""


def __check_valid_interface__(stage_class: Type):
    __known_type__ = [RunConfig, RunManifest, Iterate]
    missing_type = []
    unknown_type = []

    for param_name, param in inspect.signature(stage_class.run).parameters.items():
        if param_name == "self":
            continue
        if param.annotation == inspect._empty:
            missing_type.append(param_name)
        elif param.annotation not in __known_type__:
            unknown_type.append(param_name)

    if len(missing_type):
        name = stage_class.__name__
        args = ", ".join(missing_type)
        raise TypeError(
            _str_(
                f"""
                Stage [{name}.run] contains interfaces ({args}) without
                type specification. Check file [{inspect.getfile(stage_class)}]
                """
            )
        )
    if len(unknown_type):
        name = stage_class.__name__
        args = ", ".join(unknown_type)
        warnings.warn(
            _str_(
                f"""
                Stage [{name}] defined interfaces ({args}) with unknown type
                specification. Will attempt to match using parameter name, but
                the results are not guaranteed to be correct.
                """
            ),
            RuntimeWarning,
        )


def get_param_type(param: inspect.Parameter) -> Type:
    return param.annotation.__origin__


def get_param_doc(param: inspect.Parameter) -> str:
    if len(param.annotation.__metadata__):
        return param.annotation.__metadata__[0]
    else:
        return ""


def has_default(param: inspect.Parameter) -> bool:
    """Checking if it has default value"""
    return param.default != inspect._empty


def get_parser(param: inspect.Parameter) -> Optional[ArgumentValueChecker]:
    if len(param.annotation.__metadata__) > 1:
        return param.annotation.__metadata__[1]
    else:
        return None


def run_argument_parser(param: inspect.Parameter, value, session, exception=False) -> bool:
    parser = get_parser(param)
    if parser is None:  # Always return true if parse is not set by designer
        return True
    parser.session = session
    ret = parser._check_valid(value)
    if ret or not exception:
        return ret
    raise ConfigurationError(
        f"Input value [{value}] of [{param.name}] failed annotated requirement [{parser}]"
    )
