import inspect
import logging
import os
from typing import Any, Iterable, List, Type

import tqdm
import yaml

from .config import RunConfig
from .dispatch import Iterate
from .errors import DataError
from .stages._stage_base import StageBase
from .utils import atomic_write_text, to_yamls
from .yaml_format import RunManifest, StageResult

logger = logging.getLogger("PersonaSim.session")


class Session(object):
    """
    Main class for handling the state of a single run. Every stage is executed
    through the session, which owns the run configuration, the run directory
    and the run manifest.

    This class is also used to help with file path management: all artifacts
    are stored under the <output_dir>/<name>/ directory, next to the
    manifest.yaml file. Stages store files using paths relative to the run
    directory (like "personas/gpt__DESCRIPTIVE.jsonl"), and the helper functions
    here resolve them to the full path.
    """

    MANIFEST_FILE = "manifest.yaml"
    SUBDIRECTORIES = ("metas", "personas", "records", "reports")

    def __init__(self, config: RunConfig, progress: bool = True):
        self.config: RunConfig = config
        self.progress: bool = progress
        self.manifest: RunManifest = RunManifest(
            name=config.name, tool_version="", config=config.to_dict()
        )

    @property
    def save_base(self) -> str:
        return self.config.run_dir

    @property
    def manifest_file(self) -> str:
        return os.path.join(self.save_base, Session.MANIFEST_FILE)

    @property
    def results(self) -> List[StageResult]:
        return self.manifest.results

    def load_or_create(self) -> "Session":
        """
        Opening the run directory. An existing manifest keeps the results of
        earlier stage executions, the configuration snapshot is always
        replaced by the current configuration.
        """
        from . import __version__

        for sub in Session.SUBDIRECTORIES:
            os.makedirs(os.path.join(self.save_base, sub), exist_ok=True)

        if os.path.exists(self.manifest_file):
            with open(self.manifest_file, "r", encoding="utf-8") as f:
                try:
                    stored = yaml.safe_load(f)
                    self.manifest = RunManifest.from_dict(stored)
                except (yaml.YAMLError, KeyError, TypeError) as err:
                    raise DataError(f"Run manifest [{self.manifest_file}] is corrupted: {err}")
            logger.info(
                f"Resuming run [{self.config.name}] with {len(self.results)} stage results"
            )
        else:
            logger.info(f"Creating new run directory [{self.save_base}]")

        self.manifest.name = self.config.name
        self.manifest.tool_version = __version__
        self.manifest.config = self.config.to_dict()
        self.save_manifest()
        return self

    def save_manifest(self) -> None:
        """Flushing results to the manifest file"""
        atomic_write_text(self.manifest_file, to_yamls(self.manifest))

    def detect_stage_interface(self, stage_class: Type[StageBase]) -> List[Any]:
        """
        Returning a tuple of inputs that should be passed to the stage.run
        method based on the annotations provided in the function signature.
        """

        def _get_interface(int_name: str, int_type: Type) -> Any:
            __type_map__ = {
                Iterate: self.iterate,
                RunConfig: self.config,
                RunManifest: self.manifest,
            }
            if int_type in __type_map__:
                return __type_map__.get(int_type)
            else:
                return getattr(self, int_name)

        return [
            _get_interface(param_name, param.annotation)
            for param_name, param in inspect.signature(stage_class.run).parameters.items()
            if param_name != "self"
        ]

    def iterate(self, x: Iterable, *args, **kwargs):
        # Returning an iterator wrapper to better keep track of long loops
        kwargs.setdefault("disable", not self.progress)
        return tqdm.tqdm(x, *args, **kwargs)
