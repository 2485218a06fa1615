"""
simulation.py

Opinion simulation: a persona and a multiple-choice question are rendered into
a single forced-choice prompt, the model answer is parsed back to a choice
index, and the answers of a persona population are aggregated into per-cohort
choice distributions.
"""

import csv
import logging
import math
import re
import string
from dataclasses import dataclass, field
from typing import Any, Callable, Collection, Dict, List, Mapping, Optional, Sequence, Tuple

import hist
import numpy

from .backends import ChatBackend
from .dispatch import AuditLog, Iterate, TaskOutcome, dispatch, passthrough, run_with_retries
from .errors import ConfigurationError, DataError, ParseError
from .persona import Persona, PersonaEntry, meta_of, persona_prompt_text
from .prompts import fill_slots, simulation_template
from .utils import format_float, iter_jsonl, write_csv, write_jsonl

logger = logging.getLogger("PersonaSim.simulation")

LETTERS = string.ascii_uppercase
MAX_CHOICES = len(LETTERS)

# Frozen answer leniency rules: label "answer" in any case, optional markdown
# emphasis around the label, a colon, optional brackets/quotes/emphasis, then a
# single letter not followed by another letter or digit. When that letter is not
# an option label, later capital letters standing alone on the same line are
# tried, so "Answer: I think C" reads as C.
_ANSWER_MARK = re.compile(r"answer[\s\*_]*:", re.IGNORECASE)
_LEADING_LETTER = re.compile(r"[\s\*_\[\(\{\"'`]*([a-z])(?![a-z0-9])", re.IGNORECASE)
_LATER_LABEL = re.compile(r"(?<![\w'’])([A-Z])(?![\w'’])")
_LONE_LETTER = re.compile(
    r"^[\s\*_\[\(\{\"'`]*([a-z])[\]\)\}\"'`\*_]*[\.\:\)]?\s*$", re.IGNORECASE
)


@dataclass(frozen=True)
class SurveyQuestion:
    id: str
    topic: str
    text: str
    choices: Tuple[str, ...]
    ordinal: bool = True
    ground_truth: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if len(self.choices) < 2:
            raise DataError(f"Question [{self.id}] has fewer than 2 choices")
        if self.ground_truth is not None:
            if len(self.ground_truth) != len(self.choices):
                raise DataError(
                    f"Question [{self.id}] ground truth has {len(self.ground_truth)}"
                    f" entries for {len(self.choices)} choices"
                )
            if any(p < 0 for p in self.ground_truth):
                raise DataError(f"Question [{self.id}] ground truth has negative entries")
            if abs(math.fsum(self.ground_truth) - 1.0) > 1e-9:
                raise DataError(f"Question [{self.id}] ground truth does not sum to 1")

    @property
    def n_choices(self) -> int:
        return len(self.choices)

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "SurveyQuestion":
        missing = [k for k in ("id", "text", "choices") if k not in record]
        if missing:
            raise DataError(f"Question record is missing keys {missing}")
        truth = record.get("ground_truth")
        return cls(
            id=str(record["id"]),
            topic=str(record.get("topic", "")),
            text=str(record["text"]),
            choices=tuple(str(c) for c in record["choices"]),
            ordinal=bool(record.get("ordinal", True)),
            ground_truth=None if truth is None else tuple(float(p) for p in truth),
        )

    def to_record(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "topic": self.topic,
            "text": self.text,
            "choices": list(self.choices),
            "ordinal": self.ordinal,
            "ground_truth": None if self.ground_truth is None else list(self.ground_truth),
        }


def load_questions(path: str) -> List[SurveyQuestion]:
    questions, seen = [], set()
    for position, record in enumerate(iter_jsonl(path, tolerate_truncated=False)):
        try:
            question = SurveyQuestion.from_record(record)
        except (DataError, TypeError, ValueError) as err:
            raise DataError(f"[{path}] question #{position}: {err}")
        if question.id in seen:
            raise DataError(f"[{path}] duplicated question id [{question.id}]")
        seen.add(question.id)
        questions.append(question)
    return questions


@dataclass(frozen=True)
class ResponseRecord:
    question_id: str
    persona_tier: str
    persona_index: int
    generator: str
    simulator: str
    chosen_index: int
    n_choices: int
    meta: Dict[str, Any] = field(default_factory=dict)
    raw: str = ""

    def __post_init__(self):
        if not 0 <= self.chosen_index < self.n_choices:
            raise DataError(
                f"Chosen index [{self.chosen_index}] outside of the"
                f" {self.n_choices} choices of question [{self.question_id}]"
            )

    @property
    def key(self) -> Tuple[int, str]:
        return (self.persona_index, self.question_id)

    def to_record(self) -> Dict[str, Any]:
        return {
            "question_id": self.question_id,
            "persona_tier": self.persona_tier,
            "persona_index": self.persona_index,
            "generator": self.generator,
            "simulator": self.simulator,
            "chosen_index": self.chosen_index,
            "n_choices": self.n_choices,
            "meta": dict(self.meta),
            "raw": self.raw,
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "ResponseRecord":
        try:
            return cls(**{k: record[k] for k in cls.__dataclass_fields__})
        except KeyError as err:
            raise DataError(f"Response record is missing key {err}")


def read_records(path: str) -> List[ResponseRecord]:
    return [ResponseRecord.from_record(r) for r in iter_jsonl(path)]


def write_records(path: str, records: Sequence[ResponseRecord]) -> None:
    write_jsonl(path, (r.to_record() for r in records))


"""
Prompt and answer handling
"""


def question_text(question: SurveyQuestion) -> str:
    if question.n_choices > MAX_CHOICES:
        raise ValueError(
            f"Question [{question.id}] has {question.n_choices} choices,"
            f" only {MAX_CHOICES} letters are available"
        )
    lines = [question.text]
    lines.extend(f"{LETTERS[i]}. {choice}" for i, choice in enumerate(question.choices))
    return "\n".join(lines)


def render_simulation_prompt(persona: Persona, question: SurveyQuestion) -> str:
    return fill_slots(
        simulation_template(),
        {"PERSONA": persona_prompt_text(persona), "QUESTION": question_text(question)},
    )


def _answer_letters(text: str, start: int) -> List[str]:
    """Candidate letters following an answer label, in reading order."""
    letters = []
    pos = start
    lead = _LEADING_LETTER.match(text, start)
    if lead is not None:
        letters.append(lead.group(1))
        pos = lead.end()
    line_end = text.find("\n", pos)
    if line_end < 0:
        line_end = len(text)
    letters.extend(m.group(1) for m in _LATER_LABEL.finditer(text, pos, line_end))
    return letters


def parse_answer(text: str, n_choices: int) -> int:
    """
    Index of the chosen option. The last "Answer:" label followed by a valid
    option letter wins, where only the first n_choices letters are valid. A
    letter out of that range, like the pronoun in "Answer: I think C", is
    passed over for a later capital on the same line. Without any answer label
    the last line holding a lone letter is used.

    With more than eight choices "I" is itself a valid option and is taken as
    the answer.
    """
    if not 2 <= n_choices <= MAX_CHOICES:
        raise ValueError(f"Number of choices must be in [2, {MAX_CHOICES}], got [{n_choices}]")
    found = [_answer_letters(text, m.end()) for m in _ANSWER_MARK.finditer(text)]
    found = [letters for letters in found if letters]
    if not found:
        letter = None
        for line in reversed(text.splitlines()):
            lone = _LONE_LETTER.match(line)
            if lone is not None:
                letter = lone.group(1)
                break
        found = [[letter]] if letter is not None else []
    if not found:
        raise ParseError(f"No answer letter found in response [{text[:80]}]")
    for letters in reversed(found):
        for letter in letters:
            index = LETTERS.index(letter.upper())
            if index < n_choices:
                return index
    raise ParseError(f"Answer [{found[-1][0]}] is beyond the {n_choices} choices")


"""
Survey runs
"""


@dataclass(frozen=True)
class SurveyFailure:
    persona_index: int
    question_id: str
    attempts: int
    error: str

    def to_record(self) -> Dict[str, Any]:
        return {
            "persona_index": self.persona_index,
            "question_id": self.question_id,
            "attempts": self.attempts,
            "error": self.error,
        }


@dataclass
class SurveyResult:
    records: List[ResponseRecord] = field(default_factory=list)
    failures: List[SurveyFailure] = field(default_factory=list)
    audit: AuditLog = field(default_factory=AuditLog)


def run_survey(
    personas: Sequence[PersonaEntry],
    questions: Sequence[SurveyQuestion],
    backend: ChatBackend,
    retry_limit: int = 3,
    temperature: float = 0.0,
    max_tokens: int = 64,
    concurrency: int = 1,
    skip: Collection[Tuple[int, str]] = (),
    iterate: Iterate = passthrough,
    audit: Optional[AuditLog] = None,
    on_done: Optional[Callable[[TaskOutcome], None]] = None,
) -> SurveyResult:
    """
    Asking every question to every persona. Pairs whose (persona index,
    question id) key is in skip are not asked again. Records and failures are
    returned persona-major in input order.
    """
    if not personas or not questions:
        raise ConfigurationError("Surveys require at least one persona and one question")
    if retry_limit < 1:
        raise ConfigurationError(f"Retry limit must be at least 1, got [{retry_limit}]")
    audit = audit if audit is not None else AuditLog()
    pairs = [
        (entry, question)
        for entry in personas
        for question in questions
        if (entry.index, question.id) not in skip
    ]
    logger.info(
        f"Simulating {len(pairs)} answers with [{backend.name}]"
        f" ({len(personas) * len(questions) - len(pairs)} already done)"
    )

    def _task(pair: Tuple[PersonaEntry, SurveyQuestion]) -> TaskOutcome:
        entry, question = pair
        prompt = render_simulation_prompt(entry.persona, question)

        def _accept(raw: str) -> ResponseRecord:
            return ResponseRecord(
                question_id=question.id,
                persona_tier=entry.tier.name,
                persona_index=entry.index,
                generator=entry.generator,
                simulator=backend.name,
                chosen_index=parse_answer(raw, question.n_choices),
                n_choices=question.n_choices,
                meta=meta_of(entry.persona).to_record(),
                raw=raw,
            )

        return run_with_retries(
            key=[entry.index, question.id],
            request=lambda: backend.complete(None, prompt, temperature, max_tokens),
            accept=_accept,
            retry_limit=retry_limit,
            audit=audit,
        )

    outcomes = dispatch(pairs, _task, concurrency, iterate, on_done)

    result = SurveyResult(audit=audit)
    for outcome in outcomes:
        if outcome.ok:
            result.records.append(outcome.value)
        else:
            result.failures.append(
                SurveyFailure(
                    persona_index=outcome.key[0],
                    question_id=outcome.key[1],
                    attempts=outcome.attempts,
                    error=outcome.error,
                )
            )
    return result


"""
Aggregation
"""


@dataclass(frozen=True)
class ChoiceDistribution:
    question_id: str
    cohort: str
    probabilities: Tuple[float, ...]
    counts: Tuple[int, ...]

    @property
    def support(self) -> int:
        return sum(self.counts)

    @property
    def vector(self) -> numpy.ndarray:
        return numpy.array(self.probabilities)


ALL_COHORT = "ALL"


def cohort_key(name: str) -> Callable[[ResponseRecord], str]:
    """
    Record grouping by name: "ALL" (whole population), "TIER" (persona tier)
    or any meta persona field (AGE, SEX, RACE, STATE).
    """
    name = name.upper()
    if name == ALL_COHORT:
        return lambda r: ALL_COHORT
    if name == "TIER":
        return lambda r: r.persona_tier
    if name in ("AGE", "SEX", "RACE", "STATE"):
        return lambda r: str(r.meta[name])
    raise ConfigurationError(f"Unknown cohort key [{name}]")


def aggregate(
    records: Sequence[ResponseRecord], group_by: Callable[[ResponseRecord], str]
) -> List[ChoiceDistribution]:
    """
    Per (question, cohort) distribution of the chosen indices, sorted by
    question id then cohort. Cohorts without records do not appear.
    """
    by_question: Dict[str, List[ResponseRecord]] = {}
    for record in records:
        by_question.setdefault(record.question_id, []).append(record)

    distributions = []
    for question_id in sorted(by_question):
        group = by_question[question_id]
        n_choices = {r.n_choices for r in group}
        if len(n_choices) != 1:
            raise DataError(
                f"Question [{question_id}] records have mixed choice counts {sorted(n_choices)}"
            )
        n = n_choices.pop()
        cohorts = [group_by(r) for r in group]
        labels = sorted(set(cohorts))

        h = hist.Hist(
            hist.axis.StrCategory(labels, name="cohort"),
            hist.axis.Integer(0, n, name="choice"),
        )
        h.fill(cohort=cohorts, choice=numpy.array([r.chosen_index for r in group]))
        counts = h.values().astype(int)

        for position, label in enumerate(labels):
            row = counts[position]
            total = int(row.sum())
            distributions.append(
                ChoiceDistribution(
                    question_id=question_id,
                    cohort=label,
                    probabilities=tuple(float(c) / total for c in row),
                    counts=tuple(int(c) for c in row),
                )
            )
    return distributions


AGGREGATE_HEADER = ("question_id", "cohort", "choice_index", "probability", "count")


def write_aggregates_csv(path: str, distributions: Sequence[ChoiceDistribution]) -> None:
    write_csv(
        path,
        AGGREGATE_HEADER,
        (
            (d.question_id, d.cohort, k, format_float(p), c)
            for d in distributions
            for k, (p, c) in enumerate(zip(d.probabilities, d.counts))
        ),
    )


def read_aggregates_csv(path: str) -> List[ChoiceDistribution]:
    """Choice distributions back from an aggregates file, in file order"""
    rows: Dict[Tuple[str, str], List[Tuple[int, float, int]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        if tuple(next(reader, ())) != AGGREGATE_HEADER:
            raise DataError(f"[{path}:1] expected header {','.join(AGGREGATE_HEADER)}")
        for row in reader:
            if len(row) != len(AGGREGATE_HEADER):
                raise DataError(
                    f"[{path}:{reader.line_num}] expected {len(AGGREGATE_HEADER)} columns"
                )
            try:
                entry = (int(row[2]), float(row[3]), int(row[4]))
            except ValueError:
                raise DataError(f"[{path}:{reader.line_num}] malformed numbers")
            rows.setdefault((row[0], row[1]), []).append(entry)

    distributions = []
    for (question_id, cohort), entries in rows.items():
        if [k for k, _, _ in entries] != list(range(len(entries))):
            raise DataError(f"[{path}] choices of [{question_id}/{cohort}] are not contiguous")
        distributions.append(
            ChoiceDistribution(
                question_id=question_id,
                cohort=cohort,
                probabilities=tuple(p for _, p, _ in entries),
                counts=tuple(c for _, _, c in entries),
            )
        )
    return distributions
