"""
Pure data-container objects used to store the run manifest. All stored items
should be primitive types: ints, float, strings, lists, and dictionaries of
primitive types containing. Additional helper functions can be used to case
primitive types to be a program friendly data type.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .utils import timestamps


class DataEntry:
    """
    Data entry for an artifact file. It must contain a path (relative to the
    run directory), a description, and a time stamp string (defaults to the
    time of creation). The content digest is filled in when the producing stage
    completes. All other keyword arguments will be set as named attributes.
    """

    def __init__(self, path: str, desc: str, **kwargs):
        self.path: str = path
        self.desc: str = desc
        kwargs.setdefault("timestamp", timestamps())
        kwargs.setdefault("sha256", "")
        # All other items are passed as direct attributes
        for k, v in kwargs.items():
            setattr(self, k, v)


class StageSummary:
    """
    Summary of a stage execution. Requires at least a status code and a
    description string. All other keyword arguments (counts of produced items,
    failures, ...) will be used to store the results
    """

    def __init__(self, status: int, desc: str, **kwargs):
        self.status: int = status
        self.desc: str = desc
        for k, v in kwargs.items():
            setattr(self, k, v)


class StatusCode:
    # Simple class for naming the logical status codes, also used as the
    # process exit codes of the command line interface. Mimicking the structure
    # found here:
    # https://stackoverflow.com/questions/1101957/are-there-any-standard-exit-status-codes-in-linux
    SUCCESS = 0
    UNKNOWN_ERROR = 1
    DATA_ERROR = 65  # EX_DATAERR
    TRANSPORT_ERROR = 69  # EX_UNAVAILABLE
    CONFIG_ERROR = 78  # EX_CONFIG
    SIG_INTERUPT = 130  # User interupt


@dataclass
class StageResult:
    # Items to be automatically generated
    name: str
    _start_time: str
    _end_time: str
    input: Dict[str, Any]
    status_code: Tuple[int, str]  # Logical execution status

    # List of files that are produced by the stage, tracked with their content
    # digest so that downstream stages can detect stale inputs.
    data_files: List[DataEntry] = field(default_factory=lambda: [])

    # Summary the overall stage status
    summary: Optional[StageSummary] = None

    @classmethod
    def from_dict(cls, d: dict):
        """
        Construction fron a dictionary object, required additional
        modification for the class-based storage
        """
        d = dict(d)
        d["status_code"] = tuple(d["status_code"])
        d["data_files"] = [DataEntry(**x) for x in d["data_files"]]
        d["summary"] = (
            StageSummary(**d["summary"]) if d.get("summary") is not None else None
        )
        return StageResult(**d)

    @property
    def is_valid(self) -> bool:
        """Simple boolean flag for whether the execution was successful"""
        if self.status_code[0] != 0:
            return False
        if self.summary is None:
            return False
        return self.summary.status == 0

    def find_data(self, path: str) -> Optional[DataEntry]:
        return next((x for x in self.data_files if x.path == path), None)


@dataclass
class RunManifest:
    """
    The single source of truth of a run: the configuration snapshot it was
    started with, the tool version, and the results of every stage execution
    in the order they were executed.
    """

    name: str
    tool_version: str
    config: Dict[str, Any]
    results: List[StageResult] = field(default_factory=lambda: [])

    @classmethod
    def from_dict(cls, d: dict):
        d = dict(d)
        d["results"] = [StageResult.from_dict(x) for x in d.get("results", [])]
        return RunManifest(**d)

    def latest(self, stage_name: str) -> Optional[StageResult]:
        """Latest successful execution of a stage"""
        for result in reversed(self.results):
            if result.name == stage_name and result.is_valid:
                return result
        return None

    def find_output(
        self, stage_name: str, path: str, valid_only: bool = True
    ) -> Tuple[Optional[StageResult], Optional[DataEntry]]:
        """
        Latest execution of a stage that produced the artifact at path. Stages
        like generate are executed once per (generator, tier), so the latest
        execution of the stage is not necessarily the one holding the file.
        """
        for result in reversed(self.results):
            if result.name != stage_name or (valid_only and not result.is_valid):
                continue
            entry = result.find_data(path)
            if entry is not None:
                return result, entry
        return None, None
