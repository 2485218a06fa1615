"""
persona.py

The four persona tiers, the value catalogs that constrain the tabular tiers,
validation of tabular personas against these catalogs, and the JSONL record
format of personas.

Persona objects are immutable. A meta persona (see `census.MetaPersona`) is a
persona of the META tier; the tabular and descriptive tiers extend a meta
persona with model-generated content.
"""

import enum
import json
import re
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

from .census import AXIS_NAMES, MetaPersona
from .errors import DataError
from .utils import iter_jsonl, write_jsonl


class PersonaTier(enum.IntEnum):
    """Ordered by the amount of model-generated content"""

    META = 0
    OBJECTIVE_TABULAR = 1
    SUBJECTIVE_TABULAR = 2
    DESCRIPTIVE = 3

    @classmethod
    def from_tag(cls, tag: str) -> "PersonaTier":
        try:
            return cls[str(tag).upper()]
        except KeyError:
            raise DataError(f"Unknown persona tier [{tag}]")

    @property
    def is_tabular(self) -> bool:
        return self in (PersonaTier.OBJECTIVE_TABULAR, PersonaTier.SUBJECTIVE_TABULAR)

    @property
    def is_generated(self) -> bool:
        return self != PersonaTier.META


GENERATED_TIERS = (
    PersonaTier.OBJECTIVE_TABULAR,
    PersonaTier.SUBJECTIVE_TABULAR,
    PersonaTier.DESCRIPTIVE,
)

"""
Template keys, in template order
"""

OBJECTIVE_KEYS = (
    "AGE",
    "SEX",
    "RACE",
    "STATE",
    "ANCESTRY",
    "HOUSEHOLD_LANGUAGE",
    "EDUCATION",
    "EMPLOYMENT_STATUS",
    "CLASS_OF_WORKER",
    "INDUSTRY_CATEGORY",
    "OCCUPATION_CATEGORY",
    "INCOME",
    "MARITAL_STATUS",
    "HOUSEHOLD_TYPE",
    "FAMILY_PRESENCE_AND_AGE",
    "PLACE_OF_BIRTH",
    "CITIZENSHIP",
    "VETERAN_STATUS",
    "DISABILITY",
    "HEALTH_INSURANCE",
)

BIG_FIVE = "BIG_FIVE_SCORES"
BIG_FIVE_KEYS = (
    "OPENNESS",
    "CONSCIENTIOUSNESS",
    "EXTRAVERSION",
    "AGREEABLENESS",
    "NEUROTICISM",
)

SUBJECTIVE_KEYS = (
    *OBJECTIVE_KEYS[:11],
    "DETAILED_JOB_DESCRIPTION",
    *OBJECTIVE_KEYS[11:],
    BIG_FIVE,
    "DEFINING_QUIRKS",
    "MANNERISMS",
    "PERSONAL_TIME",
    "LIFESTYLE",
    "IDEOLOGY",
    "POLITICAL_VIEWS",
    "RELIGION",
    "COGNITIVE_DIFFICULTY",
    "ABILITY_TO_SPEAK_ENGLISH",
    "VISION_DIFFICULTY",
    "FERTILITY",
    "HEARING_DIFFICULTY",
)


def template_keys(tier: PersonaTier) -> Tuple[str, ...]:
    if tier == PersonaTier.OBJECTIVE_TABULAR:
        return OBJECTIVE_KEYS
    elif tier == PersonaTier.SUBJECTIVE_TABULAR:
        return SUBJECTIVE_KEYS
    raise ValueError(f"Tier [{tier.name}] has no tabular template")


"""
Value catalogs
"""

US_STATES = (
    "Alabama",
    "Alaska",
    "Arizona",
    "Arkansas",
    "California",
    "Colorado",
    "Connecticut",
    "Delaware",
    "Florida",
    "Georgia",
    "Hawaii",
    "Idaho",
    "Illinois",
    "Indiana",
    "Iowa",
    "Kansas",
    "Kentucky",
    "Louisiana",
    "Maine",
    "Maryland",
    "Massachusetts",
    "Michigan",
    "Minnesota",
    "Mississippi",
    "Missouri",
    "Montana",
    "Nebraska",
    "Nevada",
    "New Hampshire",
    "New Jersey",
    "New Mexico",
    "New York",
    "North Carolina",
    "North Dakota",
    "Ohio",
    "Oklahoma",
    "Oregon",
    "Pennsylvania",
    "Rhode Island",
    "South Carolina",
    "South Dakota",
    "Tennessee",
    "Texas",
    "Utah",
    "Vermont",
    "Virginia",
    "Washington",
    "West Virginia",
    "Wisconsin",
    "Wyoming",
    "District of Columbia",
)

# Substrings of CITIZENSHIP (lowercased) marking a person born abroad
FOREIGN_BIRTH_MARKERS = (
    "naturalized",
    "not a",
    "non-citizen",
    "noncitizen",
    "foreign",
    "abroad",
)

QUALITATIVE_TRAIT_SCORES = {"low": 25.0, "medium": 50.0, "high": 75.0}

OBJECTIVE_CHOICES: Dict[str, Tuple[str, ...]] = {
    "ANCESTRY": (
        "British",
        "Irish",
        "German",
        "Italian",
        "Polish",
        "French",
        "Norwegian",
        "Dutch",
        "Swedish",
        "Russian",
        "Chinese",
        "Filipino",
        "Asian Indian",
        "Vietnamese",
        "Korean",
        "Japanese",
        "Mexican",
        "Puerto Rican",
        "Cuban",
        "African American",
        "West Indian",
        "Arab",
        "American Indian",
    ),
    "HOUSEHOLD_LANGUAGE": (
        "English",
        "Spanish",
        "Other Indo-European",
        "Asian/Pacific Islander languages",
        "Other",
    ),
    "EDUCATION": (
        "Less than HS",
        "HS Graduate",
        "Some College",
        "Bachelor's",
        "Graduate Degree",
    ),
    "EMPLOYMENT_STATUS": ("Employed", "Unemployed", "Not in Labor Force"),
    "CLASS_OF_WORKER": ("Private", "Government", "Self-employed", "Unpaid family worker"),
    "MARITAL_STATUS": ("Never Married", "Married", "Divorced", "Widowed", "Separated"),
    "HOUSEHOLD_TYPE": ("Family", "Non-family"),
    "VETERAN_STATUS": ("Veteran", "Non-veteran"),
    "DISABILITY": ("None", "Physical", "Mental", "Both"),
    "HEALTH_INSURANCE": ("Private", "Public", "None"),
}

OCCUPATIONS_BY_INDUSTRY: Dict[str, Tuple[str, ...]] = {
    "Management, business, science, and arts occupations": (
        "Management, business, and financial occupations",
        "Computer, engineering, and science occupations",
        "Education, legal, community service, arts, and media occupations",
        "Healthcare practitioner and technical occupations",
    ),
    "Service occupations": (
        "Healthcare support occupations",
        "Protective service occupations",
        "Food preparation and serving related occupations",
        "Building and grounds cleaning and maintenance occupations",
        "Personal care and service occupations",
    ),
    "Sales and office occupations": (
        "Sales and related occupations",
        "Office and administrative support occupations",
    ),
    "Natural resources, construction, and maintenance occupations": (
        "Farming, fishing, and forestry occupations",
        "Construction and extraction occupations",
        "Installation, maintenance, and repair occupations",
    ),
    "Production, transportation, and material moving occupations": (
        "Production occupations",
        "Transportation occupations",
        "Material moving occupations",
    ),
}

SUBJECTIVE_CHOICES: Dict[str, Tuple[str, ...]] = {
    "IDEOLOGY": (
        "Very Liberal",
        "Liberal",
        "Moderate",
        "Conservative",
        "Very Conservative",
    ),
    "POLITICAL_VIEWS": ("Democrat", "Republican", "Independent", "Other"),
}


@dataclass(frozen=True)
class ValueCatalog:
    """
    Allowed values of the catalog-constrained fields. Single-choice fields are
    matched by exact string equality. Occupations are nested under the industry
    categories, INCOME is an inclusive integer range.
    """

    choices: Mapping[str, Tuple[str, ...]] = field(
        default_factory=lambda: dict(OBJECTIVE_CHOICES)
    )
    occupations: Mapping[str, Tuple[str, ...]] = field(
        default_factory=lambda: dict(OCCUPATIONS_BY_INDUSTRY)
    )
    subjective_choices: Mapping[str, Tuple[str, ...]] = field(
        default_factory=lambda: dict(SUBJECTIVE_CHOICES)
    )
    income_range: Tuple[int, int] = (0, 1_000_000)
    birth_states: Tuple[str, ...] = US_STATES

    def __post_init__(self):
        seen = {}
        for industry, occupations in self.occupations.items():
            for occupation in occupations:
                if occupation in seen:
                    raise ValueError(
                        f"Occupation [{occupation}] nested under both "
                        f"[{seen[occupation]}] and [{industry}]"
                    )
                seen[occupation] = industry

    @property
    def industries(self) -> Tuple[str, ...]:
        return tuple(self.occupations.keys())

    def industry_of(self, occupation: str) -> Optional[str]:
        for industry, occupations in self.occupations.items():
            if occupation in occupations:
                return industry
        return None

    def choices_for(self, tier: PersonaTier) -> Dict[str, Tuple[str, ...]]:
        """
        Single-choice fields checked for a tabular tier. Subjective personas
        only have their political fields constrained, everything else they
        carry is free text.
        """
        if tier == PersonaTier.SUBJECTIVE_TABULAR:
            return dict(self.subjective_choices)
        allowed = dict(self.choices)
        allowed["INDUSTRY_CATEGORY"] = self.industries
        return allowed


DEFAULT_CATALOG = ValueCatalog()

"""
Persona types
"""


@dataclass(frozen=True)
class TabularPersona:
    tier: PersonaTier
    fields: Dict[str, Any]
    meta: MetaPersona

    def __post_init__(self):
        if not self.tier.is_tabular:
            raise ValueError(f"Tier [{self.tier.name}] is not a tabular tier")


@dataclass(frozen=True)
class DescriptivePersona:
    narrative: str
    meta: MetaPersona

    def __post_init__(self):
        if not self.narrative.strip():
            raise ValueError("Descriptive persona narrative is empty")

    @property
    def tier(self) -> PersonaTier:
        return PersonaTier.DESCRIPTIVE


Persona = Union[MetaPersona, TabularPersona, DescriptivePersona]


def tier_of(persona: Persona) -> PersonaTier:
    if isinstance(persona, MetaPersona):
        return PersonaTier.META
    return persona.tier


def meta_of(persona: Persona) -> MetaPersona:
    if isinstance(persona, MetaPersona):
        return persona
    return persona.meta


@dataclass(frozen=True)
class PersonaEntry:
    """
    A persona as stored in a persona file: the index of the meta persona it
    was generated from and the name of the generating backend ("census" for
    meta personas).
    """

    index: int
    generator: str
    persona: Persona

    @property
    def tier(self) -> PersonaTier:
        return tier_of(self.persona)

    def to_record(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "generator": self.generator,
            **persona_to_record(self.persona),
        }

    @classmethod
    def from_record(
        cls, record: Mapping[str, Any], index: int = 0, generator: str = "external"
    ) -> "PersonaEntry":
        return cls(
            index=int(record.get("index", index)),
            generator=str(record.get("generator", generator)),
            persona=record_to_persona(record),
        )


"""
Validation
"""


@dataclass(frozen=True)
class Violation:
    field: str
    value: Any
    reason: str


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()

    @property
    def valid(self) -> bool:
        return len(self.violations) == 0

    @property
    def fields(self) -> List[str]:
        return [v.field for v in self.violations]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "valid": self.valid,
            "violations": [
                {"field": v.field, "value": v.value, "reason": v.reason}
                for v in self.violations
            ],
        }


def parse_income(value: Any) -> int:
    """
    Integer annual income from either a number or a string like "$52,000".
    Raises ValueError for anything that is not an integer amount.
    """
    if isinstance(value, bool):
        raise ValueError(f"Income [{value}] is not an integer")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if value.is_integer():
            return int(value)
        raise ValueError(f"Income [{value}] is not an integer")
    text = str(value).strip().replace(",", "").replace("$", "")
    if not re.fullmatch(r"-?\d+", text):
        raise ValueError(f"Income [{value}] is not an integer")
    return int(text)


def trait_score(value: Any) -> float:
    """Numeric 0-100 score of a personality trait entry"""
    if isinstance(value, bool):
        raise ValueError(f"Trait score [{value}] is not a score")
    if isinstance(value, (int, float)):
        score = float(value)
    else:
        text = str(value).strip()
        if text.lower() in QUALITATIVE_TRAIT_SCORES:
            return QUALITATIVE_TRAIT_SCORES[text.lower()]
        try:
            score = float(text)
        except ValueError:
            raise ValueError(f"Trait score [{value}] is neither numeric nor Low/Medium/High")
    if not 0 <= score <= 100:
        raise ValueError(f"Trait score [{value}] is outside of [0, 100]")
    return score


def _is_blank(value: Any) -> bool:
    return value is None or (isinstance(value, str) and not value.strip())


def _born_abroad(citizenship: Any) -> bool:
    if not isinstance(citizenship, str):
        return False
    text = citizenship.lower()
    return any(marker in text for marker in FOREIGN_BIRTH_MARKERS)


def validate_tabular(
    persona: TabularPersona, catalog: ValueCatalog = DEFAULT_CATALOG
) -> ValidationReport:
    """
    Checking every field of a tabular persona, all failures are collected into
    the returned report. Objective personas are held to the full catalog.
    Subjective personas are only checked against the catalog on IDEOLOGY and
    POLITICAL_VIEWS, their other fields (trait scores included) must only be
    non-empty text. Both tiers must repeat the meta persona values.
    """
    if not isinstance(persona, TabularPersona):
        raise ValueError("Only tabular personas can be validated against the catalog")
    keys = template_keys(persona.tier)
    values = persona.fields
    free_text = persona.tier == PersonaTier.SUBJECTIVE_TABULAR
    choices = catalog.choices_for(persona.tier)
    violations: List[Violation] = []

    def flag(name: str, value: Any, reason: str) -> None:
        violations.append(Violation(name, value, reason))

    for key in values:
        if key not in keys:
            flag(key, values[key], "field is not part of the template")

    meta_values = persona.meta.to_record()
    for key in keys:
        if key not in values:
            flag(key, None, "missing template field")
            continue
        value = values[key]

        if key in AXIS_NAMES:
            if str(value).strip() != str(meta_values[key]):
                flag(key, value, f"does not match meta persona value [{meta_values[key]}]")
        elif key in choices:
            if value not in choices[key]:
                flag(key, value, "not an allowed catalog value")
        elif free_text and key != BIG_FIVE:
            if _is_blank(value) or isinstance(value, (Mapping, list)):
                flag(key, value, "empty or non-text value")
        elif key == "OCCUPATION_CATEGORY":
            industry = catalog.industry_of(value) if isinstance(value, str) else None
            if industry is None:
                flag(key, value, "not an allowed catalog value")
            elif values.get("INDUSTRY_CATEGORY") in catalog.industries and (
                industry != values["INDUSTRY_CATEGORY"]
            ):
                flag(
                    key,
                    value,
                    f"not nested under industry [{values['INDUSTRY_CATEGORY']}]",
                )
        elif key == "INCOME":
            try:
                income = parse_income(value)
            except ValueError:
                flag(key, value, "not an integer amount")
            else:
                lo, hi = catalog.income_range
                if not lo <= income <= hi:
                    flag(key, value, f"outside of the range [{lo}, {hi}]")
        elif key == "PLACE_OF_BIRTH":
            if _is_blank(value) or not isinstance(value, str):
                flag(key, value, "empty value")
            elif value not in catalog.birth_states and not _born_abroad(
                values.get("CITIZENSHIP")
            ):
                flag(key, value, "not a US state, and citizenship does not indicate foreign birth")
        elif key == BIG_FIVE:
            if not isinstance(value, Mapping):
                flag(key, value, "expected a mapping of trait scores")
                continue
            for trait in BIG_FIVE_KEYS:
                name = f"{BIG_FIVE}.{trait}"
                if trait not in value:
                    flag(name, None, "missing trait score")
                    continue
                if _is_blank(value[trait]) or isinstance(value[trait], (Mapping, list)):
                    flag(name, value[trait], "empty or non-text value")
            for trait in value:
                if trait not in BIG_FIVE_KEYS:
                    flag(f"{BIG_FIVE}.{trait}", value[trait], "unknown trait")
        else:
            if _is_blank(value) or isinstance(value, (Mapping, list)):
                flag(key, value, "empty or non-text value")

    return ValidationReport(tuple(violations))


def is_well_formed(persona: Persona, catalog: ValueCatalog = DEFAULT_CATALOG) -> bool:
    """Acceptance rule of generated personas"""
    if isinstance(persona, TabularPersona):
        return validate_tabular(persona, catalog).valid
    if isinstance(persona, DescriptivePersona):
        return bool(persona.narrative.strip())
    return True


def big_five_numeric(persona: TabularPersona) -> Dict[str, float]:
    """
    Personality trait scores normalized to numbers for analytics. Raises
    ValueError for entries that are neither numeric nor Low/Medium/High.
    """
    if BIG_FIVE not in persona.fields:
        raise ValueError("Persona has no personality trait scores")
    scores = persona.fields[BIG_FIVE]
    return {trait: trait_score(scores[trait]) for trait in BIG_FIVE_KEYS}


"""
Text representations
"""


def format_fields(values: Mapping[str, Any]) -> str:
    """
    Key-value lines in the style of the persona templates:

        "AGE": "34",
        "SEX": "Female",
        "BIG_FIVE_SCORES": {
        "OPENNESS": "80",
        ...
        }
    """
    lines = []
    for key, value in values.items():
        if isinstance(value, Mapping):
            lines.append(f"{json.dumps(key)}: {{\n{format_fields(value)}\n}}")
        else:
            lines.append(f"{json.dumps(key)}: {json.dumps(str(value), ensure_ascii=False)}")
    return ",\n".join(lines)


def persona_prompt_text(persona: Persona) -> str:
    """The form in which a persona is presented to a simulating model"""
    if isinstance(persona, MetaPersona):
        return format_fields(persona.to_record())
    if isinstance(persona, TabularPersona):
        return format_fields(persona.fields)
    return persona.narrative


def persona_text(persona: Persona) -> str:
    """Flat text of a persona, as used for the text analysis"""
    if isinstance(persona, DescriptivePersona):
        return persona.narrative
    if isinstance(persona, MetaPersona):
        values = persona.to_record()
    else:
        values = persona.fields

    def flatten(entry) -> Iterable[str]:
        for v in entry.values():
            if isinstance(v, Mapping):
                yield from flatten(v)
            else:
                yield str(v)

    return " ".join(flatten(values))


"""
Records
"""


def persona_to_record(persona: Persona) -> Dict[str, Any]:
    tier = tier_of(persona)
    record: Dict[str, Any] = {"tier": tier.name, "meta": meta_of(persona).to_record()}
    if isinstance(persona, TabularPersona):
        record["fields"] = dict(persona.fields)
    elif isinstance(persona, DescriptivePersona):
        record["narrative"] = persona.narrative
    return record


def record_to_persona(record: Mapping[str, Any]) -> Persona:
    if "tier" not in record:
        raise DataError("Persona record carries no tier tag")
    tier = PersonaTier.from_tag(record["tier"])
    if "meta" not in record or not isinstance(record["meta"], Mapping):
        raise DataError("Persona record carries no meta persona")
    meta = MetaPersona.from_record(record["meta"])

    if tier == PersonaTier.META:
        return meta
    if tier == PersonaTier.DESCRIPTIVE:
        narrative = record.get("narrative")
        if not isinstance(narrative, str) or not narrative.strip():
            raise DataError("Descriptive persona record is missing key [narrative]")
        return DescriptivePersona(narrative=narrative, meta=meta)

    values = record.get("fields")
    if not isinstance(values, Mapping):
        raise DataError("Tabular persona record is missing key [fields]")
    missing = [k for k in template_keys(tier) if k not in values]
    if missing:
        raise DataError(f"Tabular persona record is missing template keys {missing}")
    if tier == PersonaTier.SUBJECTIVE_TABULAR:
        scores = values[BIG_FIVE]
        if not isinstance(scores, Mapping):
            raise DataError(f"Tabular persona record has malformed key [{BIG_FIVE}]")
        missing = [f"{BIG_FIVE}.{k}" for k in BIG_FIVE_KEYS if k not in scores]
        if missing:
            raise DataError(f"Tabular persona record is missing template keys {missing}")
    return TabularPersona(tier=tier, fields=dict(values), meta=meta)


def write_persona_entries(path: str, entries: Iterable[PersonaEntry]) -> None:
    write_jsonl(path, (e.to_record() for e in entries))


def read_persona_entries(path: str, generator: str = "external") -> List[PersonaEntry]:
    """
    Reading a persona file. Files without the index/generator envelope (for
    example externally released persona sets) get the line position as index.
    """
    entries = []
    for position, record in enumerate(iter_jsonl(path)):
        try:
            entries.append(PersonaEntry.from_record(record, position, generator))
        except DataError as err:
            raise DataError(f"[{path}] persona #{position}: {err}")
    return entries
