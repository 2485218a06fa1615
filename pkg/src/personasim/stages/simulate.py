from dataclasses import dataclass
from typing import Annotated, Dict, List, Tuple

from ..artifacts import (
    META_PERSONA_FILE,
    audit_file,
    failures_file,
    load_population,
    load_survey,
    persona_file,
    populations,
    records_file,
)
from ..backends import ChatBackend, make_backend
from ..config import RunConfig
from ..dispatch import AuditLog, Iterate, TaskOutcome
from ..errors import ConfigurationError
from ..persona import PersonaTier
from ..simulation import ResponseRecord, SurveyQuestion, read_records, run_survey, write_records
from ..utils import append_jsonl, write_jsonl
from ..yaml_format import RunManifest
from ._argument_validation import BackendNames, StrChoices
from ._stage_base import StageBase


@dataclass(kw_only=True)
class simulate(StageBase):
    """
    Asking every survey question to every persona population, with every
    configured simulator backend. (persona, question) pairs already answered
    in an earlier execution are skipped.

    Only the records file decides what is done: pairs that exhausted their
    retries are listed in the failures file and asked again, with a fresh
    retry budget, on every rerun until they are answered. The failures file
    only holds the failures of the latest execution.
    """

    simulator: Annotated[
        str,
        "Simulator backend (all configured simulators if empty)",
        StrChoices([""]) | BackendNames("simulators"),
    ] = ""
    tier: Annotated[
        str,
        "Persona tier to simulate (all of simulation.tiers if empty)",
        StrChoices([""]) | StrChoices([t.name for t in PersonaTier]),
    ] = ""

    def run(self, config: RunConfig, manifest: RunManifest, iterate: Iterate):
        if not config.simulation["questions"]:
            raise ConfigurationError("No question file listed in [simulation.questions]")
        questions, _ = load_survey(config.simulation["questions"])
        tiers = [PersonaTier[self.tier]] if self.tier else config.simulation_tiers
        generators = [s["name"] for s in config.backends["generators"]]
        if not generators and any(t != PersonaTier.META for t in tiers):
            raise ConfigurationError("Simulating generated tiers requires a generator backend")
        specs = config.backend_specs("simulators", self.simulator)
        if not specs:
            raise ConfigurationError("No simulator backend is configured")

        n_records, n_failures = 0, 0
        for spec in specs:
            backend = make_backend(spec, config.base_dir)
            for generator, tier in populations(generators, tiers):
                done, failed = self.simulate_population(
                    config, manifest, backend, generator, tier, questions, iterate
                )
                n_records += done
                n_failures += failed
        self.set_summary(
            "Opinion simulation",
            n_records=n_records,
            n_failures=n_failures,
            n_questions=len(questions),
            simulators=[s["name"] for s in specs],
            tiers=[t.name for t in tiers],
        )

    def simulate_population(
        self,
        config: RunConfig,
        manifest: RunManifest,
        backend: ChatBackend,
        generator: str,
        tier: PersonaTier,
        questions: List[SurveyQuestion],
        iterate: Iterate,
    ) -> Tuple[int, int]:
        personas = load_population(self, manifest, generator, tier)
        if not personas:
            self.logwarn(f"Population [{generator}/{tier.name}] is empty, skipping")
            return 0, 0
        upstream = (
            META_PERSONA_FILE if tier == PersonaTier.META else persona_file(generator, tier.name)
        )

        rel_path = records_file(generator, tier.name, backend.name)
        resume = self.can_resume(manifest, rel_path, [upstream])
        tags = dict(generator=generator, tier=tier.name, simulator=backend.name)
        path = self.add_data(rel_path, desc="Survey responses", **tags)
        fail_path = self.add_data(failures_file(rel_path), desc="Simulation failures", **tags)
        audit_path = self.add_data(audit_file(rel_path), desc="Simulation attempts", **tags)

        # Canonical order: persona-major, then question order
        position: Dict[Tuple[int, str], int] = {}
        for entry in personas:
            for question in questions:
                position.setdefault((entry.index, question.id), len(position))
        n_choices = {q.id: q.n_choices for q in questions}

        existing: List[ResponseRecord] = []
        if resume:
            seen = set()
            for record in read_records(path):
                if (
                    record.key in position
                    and record.key not in seen
                    and record.n_choices == n_choices[record.question_id]
                    and record.simulator == backend.name
                ):
                    seen.add(record.key)
                    existing.append(record)
            self.loginfo(f"Resuming [{rel_path}] with {len(existing)} existing records")
        write_records(path, existing)

        with open(path, "a", encoding="utf-8") as out, open(
            audit_path, "a" if resume else "w", encoding="utf-8"
        ) as audit_sink:

            def _stream(outcome: TaskOutcome) -> None:
                if outcome.ok:
                    append_jsonl(out, outcome.value.to_record())

            result = run_survey(
                personas,
                questions,
                backend,
                retry_limit=config.simulation["retry_limit"],
                temperature=config.simulation["temperature"],
                max_tokens=config.simulation["max_tokens"],
                concurrency=config.concurrency,
                skip={r.key for r in existing},
                iterate=iterate,
                audit=AuditLog(sink=audit_sink),
                on_done=_stream,
            )

        records = sorted(existing + result.records, key=lambda r: position[r.key])
        write_records(path, records)
        write_jsonl(fail_path, (f.to_record() for f in result.failures))
        if result.failures:
            self.logwarn(f"[{rel_path}] has {len(result.failures)} unanswered pairs")
        self.loginfo(f"[{rel_path}] holds {len(records)} records")
        return len(records), len(result.failures)
