"""
prompts.py

Loading of the verbatim prompt templates stored under `templates/`, and slot
substitution. Slots are the literal upper-case markers `{METADATA}`,
`{TEMPLATE}`, `{PERSONA}` and `{QUESTION}`. Substitution is done in a single
pass over the template text, so substituted content that happens to contain a
slot marker is never expanded a second time.
"""

import functools
import re
from dataclasses import dataclass
from importlib import resources
from typing import Dict, Mapping, Optional, Tuple

from .persona import PersonaTier

_SLOT = re.compile(r"\{(METADATA|TEMPLATE|PERSONA|QUESTION)\}")

GENERATION_FILES = {
    PersonaTier.OBJECTIVE_TABULAR: "generation_objective_tabular.txt",
    PersonaTier.SUBJECTIVE_TABULAR: "generation_subjective_tabular.txt",
    PersonaTier.DESCRIPTIVE: "generation_descriptive.txt",
}
TEMPLATE_FILES = {
    PersonaTier.OBJECTIVE_TABULAR: "template_objective_tabular.txt",
    PersonaTier.SUBJECTIVE_TABULAR: "template_subjective_tabular.txt",
}
SYSTEM_FILE = "generation_system.txt"
SIMULATION_FILE = "simulation.txt"


@functools.lru_cache(maxsize=None)
def read_template(name: str) -> str:
    """Raw text of a packaged template file"""
    return (
        resources.files("personasim")
        .joinpath("templates")
        .joinpath(name)
        .read_text(encoding="utf-8")
    )


def fill_slots(text: str, values: Mapping[str, str]) -> str:
    """Replacing the slot markers present in values, other text is untouched"""

    def _replace(match: re.Match) -> str:
        return values.get(match.group(1), match.group(0))

    return _SLOT.sub(_replace, text)


@dataclass(frozen=True)
class PromptTemplate:
    tier: PersonaTier
    system_text: str
    user_text: str
    template_text: Optional[str] = None

    def render(self, metadata: str) -> Tuple[str, str]:
        values: Dict[str, str] = {"METADATA": metadata}
        if self.template_text is not None:
            values["TEMPLATE"] = self.template_text
        return self.system_text, fill_slots(self.user_text, values)


@functools.lru_cache(maxsize=None)
def generation_template(tier: PersonaTier) -> PromptTemplate:
    if tier not in GENERATION_FILES:
        raise ValueError(f"No generation prompt for tier [{tier.name}]")
    template_text = None
    if tier in TEMPLATE_FILES:
        template_text = read_template(TEMPLATE_FILES[tier]).rstrip("\n")
    return PromptTemplate(
        tier=tier,
        system_text=read_template(SYSTEM_FILE).rstrip("\n"),
        user_text=read_template(GENERATION_FILES[tier]),
        template_text=template_text,
    )


def simulation_template() -> str:
    return read_template(SIMULATION_FILE)
