"""
Artifact naming of the run directory, shared by the stages and reports.

    metas/meta_personas.jsonl
    personas/<generator>__<tier>.jsonl             (+ .failures / .audit)
    records/<generator>__<tier>__<simulator>.jsonl  (+ .failures / .audit)
    reports/...

Meta personas are not generated, their generator name is "census".
"""

from typing import Dict, List, Tuple

from .census import read_meta_personas
from .errors import DataError
from .metrics import META_GENERATOR
from .persona import PersonaEntry, PersonaTier, read_persona_entries
from .simulation import SurveyQuestion, load_questions
from .yaml_format import RunManifest

META_PERSONA_FILE = "metas/meta_personas.jsonl"
ALIGNMENT_FILE = "reports/alignment.csv"
EVALUATION_FILE = "reports/evaluation.json"


def persona_file(generator: str, tier: str) -> str:
    return f"personas/{generator}__{tier}.jsonl"


def records_file(generator: str, tier: str, simulator: str) -> str:
    return f"records/{generator}__{tier}__{simulator}.jsonl"


def aggregates_file(generator: str, tier: str, simulator: str) -> str:
    return f"reports/aggregates__{generator}__{tier}__{simulator}.csv"


def failures_file(path: str) -> str:
    return path.replace(".jsonl", ".failures.jsonl")


def audit_file(path: str) -> str:
    return path.replace(".jsonl", ".audit.jsonl")


def load_population(
    stage, manifest: RunManifest, generator: str, tier: PersonaTier
) -> List[PersonaEntry]:
    """
    Personas of one (generator, tier) population, read from the digest checked
    output of the upstream stage.
    """
    if tier == PersonaTier.META:
        path = stage.require_upstream(manifest, "sample", META_PERSONA_FILE)
        return [
            PersonaEntry(index=i, generator=META_GENERATOR, persona=meta)
            for i, meta in enumerate(read_meta_personas(path))
        ]
    path = stage.require_upstream(manifest, "generate", persona_file(generator, tier.name))
    return read_persona_entries(path, generator=generator)


def populations(
    generators: List[str], tiers: List[PersonaTier]
) -> List[Tuple[str, PersonaTier]]:
    """(generator, tier) pairs to simulate, the META population only once"""
    pairs = []
    for tier in tiers:
        if tier == PersonaTier.META:
            pairs.append((META_GENERATOR, tier))
            continue
        pairs.extend((generator, tier) for generator in generators)
    return pairs


def load_survey(paths: List[str]) -> Tuple[List[SurveyQuestion], Dict[str, str]]:
    """
    Questions of all question files in order, with the file each question id
    comes from. Question ids must be unique over all files.
    """
    questions: List[SurveyQuestion] = []
    sources: Dict[str, str] = {}
    for path in paths:
        for question in load_questions(path):
            if question.id in sources:
                raise DataError(
                    f"Question id [{question.id}] of [{path}] already defined in"
                    f" [{sources[question.id]}]"
                )
            sources[question.id] = path
            questions.append(question)
    return questions, sources
