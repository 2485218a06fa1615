from dataclasses import dataclass
from typing import Annotated

from .. import reporting
from ..config import RunConfig
from ..errors import DataError
from ..utils import atomic_write_text
from ..yaml_format import RunManifest
from ._argument_validation import Range
from ._stage_base import StageBase


@dataclass(kw_only=True)
class report(StageBase):
    """
    Writing the report tables of the latest successful stage executions:
    election maps, the cross simulation matrix and topic ranking from the
    evaluation, persona sentiment and word frequencies from the generation.
    """

    top_n: Annotated[
        int, "Words per cohort in the frequency table (0 uses report.top_n)", Range(0, 100_000)
    ] = 0

    def run(self, config: RunConfig, manifest: RunManifest):
        if manifest.latest("evaluate") is None:
            raise DataError("Missing evaluation artifacts, run [evaluate] first")

        n_tables = 0
        for stage_name in ("evaluate", "generate"):
            result = manifest.latest(stage_name)
            if result is None:
                self.logwarn(f"No successful [{stage_name}] execution, skipping its tables")
                continue
            reporter = getattr(reporting, stage_name)(
                base_path=self.store_base, config=config, manifest=manifest
            )
            reporter.top_n = self.top_n
            for table_name, method in reporter.report_tables.items():
                for table in method(result):
                    atomic_write_text(self.add_data(table.path, desc=table.desc), table.text)
                    n_tables += 1
                self.loginfo(f"Wrote table [{stage_name}/{table_name}]")
        self.set_summary("Report tables", n_tables=n_tables)
