"""
generation.py

Persona generation: rendering the tier prompts from meta personas, calling a
chat backend, and parsing the returned persona. Tabular personas are checked
against the value catalog before being accepted, rejected responses are
retried with a full re-prompt.
"""

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Collection, Dict, List, Optional, Sequence, Tuple

from .backends import ChatBackend
from .census import MetaPersona
from .dispatch import AuditLog, Iterate, TaskOutcome, dispatch, passthrough, run_with_retries
from .errors import ConfigurationError, ParseError, RejectedPersonaError
from .persona import (
    BIG_FIVE,
    DEFAULT_CATALOG,
    DescriptivePersona,
    Persona,
    PersonaEntry,
    PersonaTier,
    TabularPersona,
    ValueCatalog,
    format_fields,
    template_keys,
    validate_tabular,
)
from .prompts import generation_template

logger = logging.getLogger("PersonaSim.generation")

_MARKER = re.compile(r"persona[\*_]*\s*:[\*_]*", re.IGNORECASE)
_FENCE = re.compile(r"^\s*```[\w-]*\s*$", re.MULTILINE)
_PAIR = re.compile(r'^\s*"?([A-Za-z_][A-Za-z0-9_]*)"?\s*:\s*(.*?)\s*,?\s*$')


def metadata_text(meta: MetaPersona) -> str:
    """Serialized meta persona substituted into the {METADATA} slot"""
    return format_fields(meta.to_record())


def render_generation_prompt(tier: PersonaTier, meta: MetaPersona) -> Tuple[str, str]:
    """System and user text of the generation request for a tier"""
    if tier == PersonaTier.META:
        raise ConfigurationError("Meta personas are sampled, not generated")
    return generation_template(tier).render(metadata_text(meta))


"""
Response parsing
"""


def _strip_fences(text: str) -> str:
    return _FENCE.sub("", text).strip()


def _coerce(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _coerce(v) for k, v in value.items()}
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return json.dumps(value) if isinstance(value, (list, bool)) else str(value)


def _scalar(text: str) -> str:
    text = text.strip()
    if text.startswith('"'):
        try:
            return str(json.loads(text))
        except json.JSONDecodeError:
            return text.strip('"')
    return text


def _parse_json_object(body: str) -> Optional[Dict[str, Any]]:
    candidates = []
    stripped = body.strip()
    # Filled templates are object fragments without the enclosing braces
    if not stripped.startswith("{"):
        candidates.append("{" + stripped.rstrip(",") + "}")
    start, end = stripped.find("{"), stripped.rfind("}")
    if start >= 0 and end > start:
        candidates.append(stripped[start : end + 1])
    for candidate in candidates:
        try:
            parsed = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(parsed, dict):
            return parsed
    return None


def _parse_lines(body: str) -> Dict[str, Any]:
    """Line oriented `"KEY": "value"` pairs, with one level of nested block"""
    values: Dict[str, Any] = {}
    nested: Optional[Dict[str, Any]] = None
    for line in body.splitlines():
        stripped = line.strip()
        if stripped in ("{", "}", "},", ""):
            if stripped.startswith("}"):
                nested = None
            continue
        match = _PAIR.match(line)
        if match is None:
            continue
        key, value = match.group(1), match.group(2)
        if value.startswith("{"):
            nested = {}
            values[key] = nested
            inner = value[1:].rstrip(",").rstrip("}").strip()
            if inner:
                inner_match = _PAIR.match(inner)
                if inner_match is not None:
                    nested[inner_match.group(1)] = _scalar(inner_match.group(2))
            if value.rstrip(",").endswith("}"):
                nested = None
            continue
        target = nested if nested is not None else values
        target[key] = _scalar(value)
    return values


def parse_persona_response(text: str, tier: PersonaTier, meta: MetaPersona) -> Persona:
    """
    Extracting the persona after the first "Persona:" marker. Tabular tiers
    accept either a JSON object or line oriented key-value pairs, the
    descriptive tier keeps the remaining text as the narrative.
    """
    if tier == PersonaTier.META:
        raise ConfigurationError("Meta personas are sampled, not generated")
    match = _MARKER.search(text)
    if match is None:
        raise ParseError("Response has no 'Persona:' marker")
    body = _strip_fences(text[match.end() :])

    if tier == PersonaTier.DESCRIPTIVE:
        if not body:
            raise ParseError("Descriptive persona narrative is empty")
        return DescriptivePersona(narrative=body, meta=meta)

    keys = template_keys(tier)
    parsed: Dict[str, Any] = {}
    missing: List[str] = list(keys)
    for parser in (_parse_json_object, _parse_lines):
        candidate = parser(body)
        if candidate is None:
            continue
        candidate_missing = [k for k in keys if k not in candidate]
        if len(candidate_missing) < len(missing):
            parsed, missing = _coerce(candidate), candidate_missing
        if not missing:
            break
    if missing:
        raise ParseError(f"Persona is missing template keys {missing}")
    if tier == PersonaTier.SUBJECTIVE_TABULAR and not isinstance(parsed[BIG_FIVE], dict):
        raise ParseError(f"Persona field [{BIG_FIVE}] is not a block of trait scores")

    fields = {k: parsed[k] for k in keys}
    fields.update({k: v for k, v in parsed.items() if k not in fields})
    return TabularPersona(tier=tier, fields=fields, meta=meta)


"""
Generation jobs
"""


@dataclass(frozen=True)
class GenerationJob:
    metas: Sequence[MetaPersona]
    tier: PersonaTier
    backend: ChatBackend
    retry_limit: int = 3
    temperature: float = 1.0
    max_tokens: int = 2048
    concurrency: int = 1
    retry_wait: float = 0.0

    def __post_init__(self):
        if self.tier == PersonaTier.META:
            raise ConfigurationError("Meta personas are sampled, not generated")
        if self.retry_limit < 1:
            raise ConfigurationError(f"Retry limit must be at least 1, got [{self.retry_limit}]")
        if self.concurrency < 1:
            raise ConfigurationError(f"Concurrency must be at least 1, got [{self.concurrency}]")


@dataclass(frozen=True)
class GenerationFailure:
    index: int
    generator: str
    tier: PersonaTier
    attempts: int
    error: str

    def to_record(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "generator": self.generator,
            "tier": self.tier.name,
            "attempts": self.attempts,
            "error": self.error,
        }


@dataclass
class GenerationResult:
    personas: List[PersonaEntry] = field(default_factory=list)
    failures: List[GenerationFailure] = field(default_factory=list)
    audit: AuditLog = field(default_factory=AuditLog)


def accept_persona(
    text: str, tier: PersonaTier, meta: MetaPersona, catalog: ValueCatalog
) -> Persona:
    """Parsing a response and rejecting tabular personas that break the catalog"""
    persona = parse_persona_response(text, tier, meta)
    if isinstance(persona, TabularPersona):
        report = validate_tabular(persona, catalog)
        if not report.valid:
            raise RejectedPersonaError(
                f"Persona violates the catalog on fields {report.fields}",
                report.violations,
            )
    return persona


def generate_personas(
    job: GenerationJob,
    catalog: ValueCatalog = DEFAULT_CATALOG,
    skip: Collection[int] = (),
    iterate: Iterate = passthrough,
    audit: Optional[AuditLog] = None,
    on_done: Optional[Callable[[TaskOutcome], None]] = None,
) -> GenerationResult:
    """
    Generating one persona per meta persona. Metas whose index is in skip
    (already generated in a previous run) are not requested again. The
    returned personas and failures are in input order.
    """
    audit = audit if audit is not None else AuditLog()
    pending = [(i, m) for i, m in enumerate(job.metas) if i not in skip]
    logger.info(
        f"Generating {len(pending)} {job.tier.name} personas with [{job.backend.name}]"
        f" ({len(job.metas) - len(pending)} already done)"
    )

    def _task(item: Tuple[int, MetaPersona]) -> TaskOutcome:
        index, meta = item
        system_text, user_text = render_generation_prompt(job.tier, meta)
        return run_with_retries(
            key=index,
            request=lambda: job.backend.complete(
                system_text, user_text, job.temperature, job.max_tokens
            ),
            accept=lambda raw: accept_persona(raw, job.tier, meta, catalog),
            retry_limit=job.retry_limit,
            audit=audit,
            retry_wait=job.retry_wait,
        )

    outcomes = dispatch(pending, _task, job.concurrency, iterate, on_done)

    result = GenerationResult(audit=audit)
    for outcome in outcomes:
        if outcome.ok:
            result.personas.append(
                PersonaEntry(index=outcome.key, generator=job.backend.name, persona=outcome.value)
            )
        else:
            result.failures.append(
                GenerationFailure(
                    index=outcome.key,
                    generator=job.backend.name,
                    tier=job.tier,
                    attempts=outcome.attempts,
                    error=outcome.error,
                )
            )
    logger.info(
        f"Generated {len(result.personas)} personas, {len(result.failures)} failures"
    )
    return result
