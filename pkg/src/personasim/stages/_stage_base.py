"""
_stage_base.py

Wrapper methods to ensure that all stages exit with the appropriate result
container flags regardless of execution status. This also holds the routines
common to pipeline stages: registering produced artifacts, computing their
content digests, and locating the artifacts of upstream stages with a check
that they have not changed since they were produced.
"""

import logging
import os
import traceback
from dataclasses import dataclass
from typing import Dict, Sequence

from ..errors import DataError, HarnessError
from ..utils import _str_, sha256_file, timestamps
from ..yaml_format import DataEntry, RunManifest, StageResult, StageSummary, StatusCode


@dataclass(kw_only=True)
class StageBase(object):
    """
    Base object to unify the stage runtime. To ensure that stages are
    stateless up to the objects managed by the Session, stages are recreated
    on every call.

    The typical call method for higher level function should be something like:

    result = MyStage(
                kwarg1=abc,
                kwarg2=123,
                store_base=session.save_base,
            ).run_with(
                session.config,
                session.manifest,
            )

    Developers should not overload the main `run_with` method, just the `run`
    method, so that a common routine is processed every time. The keyword
    arguments are stored as the stage input in the result container. The
    `self.result` container should be filled by the run method (produced
    artifacts and summary), and is returned to be stored in the manifest.
    """

    store_base: str = ""

    def __post_init__(self):
        self.result: StageResult = StageResult(
            name=self.name,
            _start_time=timestamps(),
            _end_time=timestamps(),
            input={k: v for k, v in self.__dict__.items() if k != "store_base"},
            status_code=(StatusCode.SUCCESS, ""),
        )

    def run_with(self, *args, **kwargs) -> StageResult:
        """
        Wrapper for the main run method to handle and store exception results.
        Harness errors carry their own category and a concise message, full
        dumps are only kept for unknown errors.
        """
        try:
            self.run(*args, **kwargs)
        except HarnessError as err:
            self.logerror(f"{type(err).__name__}: {err}")
            self.result.status_code = (err.status_code, str(err))
        except KeyboardInterrupt:
            self.logwarn("User interupt signal received")
            self.result.status_code = (StatusCode.SIG_INTERUPT, "")
        except Exception as err:
            # Generic error, supposedly it should never reach this stage.
            self.result.status_code = (StatusCode.UNKNOWN_ERROR, traceback.format_exc())
            self.logerror(
                f"Unknown error! [{str(err)}]",
                extra={"error_trace": traceback.format_exc()},
            )
        self.finalize()
        self.loginfo(f"{self.name} completed with status [{self.result.status_code[0]}]")
        return self.result

    def finalize(self) -> None:
        """Digests of all produced artifacts, and a summary for failed runs"""
        for entry in self.result.data_files:
            full_path = self.make_store_path(entry.path)
            entry.sha256 = sha256_file(full_path) if os.path.exists(full_path) else ""
        code, message = self.result.status_code
        if code != StatusCode.SUCCESS:
            self.result.summary = StageSummary(status=code, desc=_str_(message)[:200])
        self.result._end_time = timestamps()

    @property
    def stage_name(self):
        return self.__class__.__name__

    @property
    def name(self):
        return self.stage_name

    def make_store_path(self, path: str) -> str:
        return os.path.join(self.store_base, path)

    def full_path(self, data: DataEntry) -> str:
        return self.make_store_path(data.path)

    def add_data(self, path: str, desc: str, **kwargs) -> str:
        """
        Registering an artifact (path relative to the run directory) in the
        stage result. Returns the full path, with its directory created.
        """
        full_path = self.make_store_path(path)
        os.makedirs(os.path.dirname(full_path), exist_ok=True)
        if self.result.find_data(path) is None:
            self.result.data_files.append(DataEntry(path=path, desc=desc, **kwargs))
        return full_path

    def set_summary(self, desc: str, **kwargs) -> None:
        self.result.summary = StageSummary(status=StatusCode.SUCCESS, desc=desc, **kwargs)

    """
    Upstream artifact handling
    """

    def require_upstream(self, manifest: RunManifest, stage_name: str, path: str) -> str:
        """
        Full path of an artifact produced by a successful execution of an
        upstream stage. The file content must still match the digest recorded
        when it was produced. The digest is stored in this stage's inputs.
        """
        result, entry = manifest.find_output(stage_name, path)
        if result is None:
            raise DataError(
                _str_(
                    f"""
                    Artifact [{path}] was not produced by any successful
                    [{stage_name}] stage, run [{stage_name}] first
                    """
                )
            )
        full_path = self.make_store_path(path)
        if not os.path.exists(full_path):
            raise DataError(
                f"Artifact [{path}] of stage [{stage_name}] is missing, rerun [{stage_name}]"
            )
        digest = sha256_file(full_path)
        if digest != entry.sha256:
            raise DataError(
                _str_(
                    f"""
                    Artifact [{path}] changed since stage [{stage_name}]
                    produced it (digest mismatch: recorded {entry.sha256[:12]},
                    found {digest[:12]}), rerun [{stage_name}]
                    """
                )
            )
        self.result.input.setdefault("upstream", {})[path] = digest
        return full_path

    def can_resume(self, manifest: RunManifest, path: str, depends_on: Sequence[str]) -> bool:
        """
        Whether the existing artifact at path (from an earlier, possibly
        interrupted execution of this stage) may be extended rather than
        regenerated: the digests of the upstream artifacts it depends on must
        be the ones this execution found.
        """
        if not os.path.exists(self.make_store_path(path)):
            return False
        previous = next(
            (
                r
                for r in reversed(manifest.results)
                if r is not self.result and r.name == self.name and r.find_data(path)
            ),
            None,
        )
        if previous is None:
            return True
        before: Dict[str, str] = previous.input.get("upstream", {})
        now: Dict[str, str] = self.result.input.get("upstream", {})
        if any(before.get(p) != now.get(p) for p in depends_on):
            self.logwarn(f"Upstream artifacts changed, discarding existing [{path}]")
            return False
        return True

    """
    Additional methods used for logging message (avoid using raw prints!!)
    """

    def log(self, msg: str, level: int, *args, **kwargs) -> None:
        logging.getLogger(f"PersonaSim.{self.name}").log(
            level, _str_(msg), *args, **kwargs
        )

    def loginfo(self, msg: str, *args, **kwargs) -> None:
        self.log(msg, logging.INFO, *args, **kwargs)

    def logwarn(self, msg: str, *args, **kwargs) -> None:
        self.log(msg, logging.WARNING, *args, **kwargs)

    def logerror(self, msg: str, *args, **kwargs) -> None:
        self.log(msg, logging.ERROR, *args, **kwargs)
