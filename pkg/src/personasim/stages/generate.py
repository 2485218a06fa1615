from dataclasses import dataclass
from typing import Annotated, List, Tuple

from ..artifacts import META_PERSONA_FILE, audit_file, failures_file, persona_file
from ..backends import ChatBackend, make_backend
from ..census import MetaPersona, read_meta_personas
from ..config import RunConfig
from ..dispatch import AuditLog, Iterate, TaskOutcome
from ..errors import ConfigurationError
from ..generation import GenerationJob, generate_personas
from ..persona import (
    DEFAULT_CATALOG,
    GENERATED_TIERS,
    PersonaEntry,
    PersonaTier,
    read_persona_entries,
    write_persona_entries,
)
from ..utils import append_jsonl, write_jsonl
from ..yaml_format import RunManifest
from ._argument_validation import BackendNames, StrChoices
from ._stage_base import StageBase


@dataclass(kw_only=True)
class generate(StageBase):
    """
    Generating personas from the sampled meta personas, for every configured
    generator backend and tier. Metas that already have a persona from an
    earlier execution are not requested again.
    """

    tier: Annotated[
        str,
        "Persona tier to generate (all of generation.tiers if empty)",
        StrChoices([""]) | StrChoices([t.name for t in GENERATED_TIERS]),
    ] = ""
    generator: Annotated[
        str,
        "Generator backend (all configured generators if empty)",
        StrChoices([""]) | BackendNames("generators"),
    ] = ""

    def run(self, config: RunConfig, manifest: RunManifest, iterate: Iterate):
        metas = read_meta_personas(self.require_upstream(manifest, "sample", META_PERSONA_FILE))
        tiers = [PersonaTier[self.tier]] if self.tier else config.generation_tiers
        specs = config.backend_specs("generators", self.generator)
        if not specs:
            raise ConfigurationError("No generator backend is configured")

        n_personas, n_failures = 0, 0
        for spec in specs:
            backend = make_backend(spec, config.base_dir)
            for tier in tiers:
                done, failed = self.generate_population(
                    config, manifest, backend, tier, metas, iterate
                )
                n_personas += done
                n_failures += failed
        self.set_summary(
            "Persona generation",
            n_personas=n_personas,
            n_failures=n_failures,
            generators=[s["name"] for s in specs],
            tiers=[t.name for t in tiers],
        )

    def generate_population(
        self,
        config: RunConfig,
        manifest: RunManifest,
        backend: ChatBackend,
        tier: PersonaTier,
        metas: List[MetaPersona],
        iterate: Iterate,
    ) -> Tuple[int, int]:
        rel_path = persona_file(backend.name, tier.name)
        resume = self.can_resume(manifest, rel_path, [META_PERSONA_FILE])
        tags = dict(generator=backend.name, tier=tier.name)
        path = self.add_data(rel_path, desc="Generated personas", **tags)
        fail_path = self.add_data(failures_file(rel_path), desc="Generation failures", **tags)
        audit_path = self.add_data(audit_file(rel_path), desc="Generation attempts", **tags)

        existing: List[PersonaEntry] = []
        if resume:
            seen = set()
            for entry in read_persona_entries(path, generator=backend.name):
                if entry.index < len(metas) and entry.index not in seen:
                    seen.add(entry.index)
                    existing.append(entry)
            self.loginfo(f"Resuming [{rel_path}] with {len(existing)} existing personas")
        # Rewriting drops any line truncated by an interrupted execution
        write_persona_entries(path, existing)

        job = GenerationJob(
            metas=metas,
            tier=tier,
            backend=backend,
            retry_limit=config.generation["retry_limit"],
            temperature=config.generation["temperature"],
            max_tokens=config.generation["max_tokens"],
            concurrency=config.concurrency,
            retry_wait=config.generation["retry_wait"],
        )
        with open(path, "a", encoding="utf-8") as out, open(
            audit_path, "a" if resume else "w", encoding="utf-8"
        ) as audit_sink:

            def _stream(outcome: TaskOutcome) -> None:
                if outcome.ok:
                    entry = PersonaEntry(
                        index=outcome.key, generator=backend.name, persona=outcome.value
                    )
                    append_jsonl(out, entry.to_record())

            result = generate_personas(
                job,
                DEFAULT_CATALOG,
                skip={e.index for e in existing},
                iterate=iterate,
                audit=AuditLog(sink=audit_sink),
                on_done=_stream,
            )

        entries = sorted(existing + result.personas, key=lambda e: e.index)
        write_persona_entries(path, entries)
        write_jsonl(fail_path, (f.to_record() for f in result.failures))
        for failure in result.failures:
            self.logwarn(
                f"""
                No valid {tier.name} persona for meta #{failure.index} after
                {failure.attempts} attempts: {failure.error}
                """
            )
        self.loginfo(
            f"[{rel_path}] holds {len(entries)} personas, {len(result.failures)} failures"
        )
        return len(entries), len(result.failures)
