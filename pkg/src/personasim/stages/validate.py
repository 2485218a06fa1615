import collections
import os
from dataclasses import dataclass
from typing import Annotated, Dict

from ..persona import (
    PersonaEntry,
    TabularPersona,
    ValidationReport,
    read_persona_entries,
    validate_tabular,
)
from ..utils import write_jsonl
from ._argument_validation import ExistingFile, StageDataFiles
from ._stage_base import StageBase


@dataclass(kw_only=True)
class validate(StageBase):
    """
    Checking the personas of a persona file against the value catalog, for
    example an externally released persona set. Invalid personas are
    reported, never rejected.
    """

    persona_file: Annotated[
        str,
        "Persona file: a path, or a persona file of the generate stage of this run",
        ExistingFile() | StageDataFiles("generate", "personas/*__*[A-Z].jsonl"),
    ]

    def run(self):
        path = (
            self.persona_file
            if os.path.isfile(self.persona_file)
            else self.make_store_path(self.persona_file)
        )
        entries = read_persona_entries(path)
        stem = os.path.splitext(os.path.basename(path))[0]
        out_path = self.add_data(
            f"reports/validation__{stem}.jsonl",
            desc="Catalog validation",
            source=os.path.abspath(path),
        )

        counts: Dict[str, int] = collections.Counter()
        rows = []
        n_valid = 0
        for entry in entries:
            report = self.check(entry)
            n_valid += report.valid
            counts.update(report.fields)
            rows.append({"index": entry.index, "tier": entry.tier.name, **report.to_dict()})
        write_jsonl(out_path, rows)

        self.loginfo(f"[{path}] has {n_valid} valid personas out of {len(entries)}")
        self.set_summary(
            "Catalog validation",
            n_personas=len(entries),
            n_valid=n_valid,
            n_invalid=len(entries) - n_valid,
            violations=dict(sorted(counts.items())),
        )

    @staticmethod
    def check(entry: PersonaEntry) -> ValidationReport:
        # Descriptive personas with an empty narrative fail at reading
        if isinstance(entry.persona, TabularPersona):
            return validate_tabular(entry.persona)
        return ValidationReport()
