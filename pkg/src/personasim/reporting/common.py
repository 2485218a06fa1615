import logging
import os
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, Sequence

from ..config import RunConfig
from ..errors import DataError
from ..utils import _str_, csv_text, json_text, sha256_file
from ..yaml_format import DataEntry, RunManifest, StageResult


@dataclass(frozen=True)
class ReportTable:
    """A report file: path relative to the run directory and its full text"""

    path: str
    desc: str
    text: str

    @classmethod
    def csv(cls, path: str, desc: str, header: Sequence[str], rows: Iterable[Sequence[Any]]):
        return cls(path=path, desc=desc, text=csv_text(header, rows))

    @classmethod
    def json(cls, path: str, desc: str, obj: Any):
        return cls(path=path, desc=desc, text=json_text(obj))


@dataclass
class ReportingBase:
    base_path: str
    config: RunConfig
    manifest: RunManifest

    def get_data_path(self, data: DataEntry) -> str:
        return os.path.join(self.base_path, data.path)

    def checked_path(self, stage_name: str, path: str) -> str:
        """
        Full path of an artifact of a successful stage execution, which must
        still hold the content it was produced with.
        """
        result, entry = self.manifest.find_output(stage_name, path)
        if entry is None:
            raise DataError(f"Artifact [{path}] of stage [{stage_name}] is not in the manifest")
        full_path = self.get_data_path(entry)
        if not os.path.exists(full_path) or sha256_file(full_path) != entry.sha256:
            raise DataError(
                f"Artifact [{path}] is missing or changed since stage [{stage_name}] produced it"
            )
        return full_path

    @property
    def report_tables(self) -> Dict[str, Callable]:
        return {
            x.replace("table_", "", 1): getattr(self, x)
            for x in sorted(dir(self))
            if x.startswith("table_")
        }

    @classmethod
    def common_validity_check(cls, f):
        def _wrap(inst, result: StageResult):
            classname = f.__module__.split(".")[-1]
            if classname != result.name:
                raise DataError(f"Mismatch names [F:{classname}/{result.name}]")
            if not result.is_valid:
                raise DataError(f"Stage [{result.name}] did not logically complete")
            return f(inst, result)

        _wrap.__name__ = f.__name__
        _wrap.__doc__ = f.__doc__
        return _wrap

    def loginfo(self, msg: str) -> None:
        logging.getLogger(f"PersonaSim.report.{self.__class__.__name__}").info(_str_(msg))

    def logwarn(self, msg: str) -> None:
        logging.getLogger(f"PersonaSim.report.{self.__class__.__name__}").warning(_str_(msg))
