import traceback
from typing import Any, Dict, Type

from . import reporting, session, stages, utils, yaml_format
from .errors import ConfigurationError

__version__ = "0.1.0"


def run_single_stage(
    session: session.Session,
    stage_class: Type,
    stage_arguments: Dict[str, Any],
) -> yaml_format.StageResult:
    """
    Running the stage defined by the class with the given user inputs. The
    session objects required by the run method are detected automatically.
    - The stage_arguments should match the arguments used to define the stage
      constructor.
    - The result is added to the manifest before the stage runs, and the
      manifest is saved whatever the outcome, so interrupted executions are
      recorded as well.
    """
    StatusCode = yaml_format.StatusCode

    stage_instance = stage_class(**stage_arguments, store_base=session.save_base)
    session.results.append(stage_instance.result)

    try:
        # Running additional parsing before processing
        for name, param in stages._parsing.get_stage_args(stage_class).items():
            stages._parsing.run_argument_parser(
                param,
                getattr(stage_instance, name),
                session=session,
                exception=True,
            )
        stage_instance.run_with(*session.detect_stage_interface(stage_class))
    except ConfigurationError as err:
        stage_instance.logerror(str(err))
        stage_instance.result.status_code = (StatusCode.CONFIG_ERROR, str(err))
        stage_instance.finalize()
    # Most exceptions should be handled in the _stage_base method.
    except Exception:
        # Unlabeled exceptions. In usual operation, it should never reach this
        # stage, should be fixed in code. Here we will save the full trace
        # for debugging later on.
        stage_instance.result.status_code = (
            StatusCode.UNKNOWN_ERROR,
            traceback.format_exc(),
        )
    finally:
        session.save_manifest()
    return stage_instance.result
