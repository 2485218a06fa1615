import copy
import json
import pathlib

import pytest
import yaml

from personasim import cli
from personasim.census import MetaPersona
from personasim.persona import format_fields
from personasim.utils import merge_nested

GOLDEN_DIR = pathlib.Path(__file__).parent / "golden"

OBJECTIVE_FILL = {
    "AGE": "{AGE}",
    "SEX": "{SEX}",
    "RACE": "{RACE}",
    "STATE": "{STATE}",
    "ANCESTRY": "German",
    "HOUSEHOLD_LANGUAGE": "English",
    "EDUCATION": "Some College",
    "EMPLOYMENT_STATUS": "Employed",
    "CLASS_OF_WORKER": "Government",
    "INDUSTRY_CATEGORY": "Service occupations",
    "OCCUPATION_CATEGORY": "Protective service occupations",
    "INCOME": "52000",
    "MARITAL_STATUS": "Never Married",
    "HOUSEHOLD_TYPE": "Non-family",
    "FAMILY_PRESENCE_AND_AGE": "No children",
    "PLACE_OF_BIRTH": "{STATE}",
    "CITIZENSHIP": "Born in the United States",
    "VETERAN_STATUS": "Veteran",
    "DISABILITY": "None",
    "HEALTH_INSURANCE": "Public",
}

SUBJECTIVE_EXTRA = {
    "BIG_FIVE_SCORES": {
        "OPENNESS": "Medium",
        "CONSCIENTIOUSNESS": "High",
        "EXTRAVERSION": "High",
        "AGREEABLENESS": "Medium",
        "NEUROTICISM": "Low",
    },
    "DEFINING_QUIRKS": "Keeps a handwritten list of every diner visited",
    "MANNERISMS": "Taps a pen while thinking",
    "PERSONAL_TIME": "Coaches a youth soccer team",
    "LIFESTYLE": "Busy suburban routine",
    "IDEOLOGY": "Moderate",
    "POLITICAL_VIEWS": "Independent",
    "RELIGION": "Catholic",
    "COGNITIVE_DIFFICULTY": "None",
    "ABILITY_TO_SPEAK_ENGLISH": "Native speaker",
    "VISION_DIFFICULTY": "Wears glasses",
    "FERTILITY": "Has children",
    "HEARING_DIFFICULTY": "None",
}

DESCRIPTIVE_FILL = (
    "Persona: A {AGE}-year-old {RACE} {SEX} living in {STATE}. Works long shifts at a"
    " community hospital and loves quiet mornings with family. Proud of the"
    " neighborhood, worried about rising rent but hopeful about the future."
)


def subjective_fill(objective):
    """Subjective fields in template order, built on top of objective fields"""
    keys = list(objective.keys())
    values = {k: objective[k] for k in keys[:11]}
    values["DETAILED_JOB_DESCRIPTION"] = "Patrol officer for the county sheriff"
    values.update({k: objective[k] for k in keys[11:]})
    values.update(copy.deepcopy(SUBJECTIVE_EXTRA))
    return values


def fill_meta(values, meta):
    filled = {}
    for key, value in values.items():
        if isinstance(value, dict):
            filled[key] = dict(value)
            continue
        for name, field in meta.to_record().items():
            value = value.replace("{" + name + "}", str(field))
        filled[key] = value
    return filled


@pytest.fixture
def meta():
    return MetaPersona(age=34, sex="Female", race="White", state="Florida")


@pytest.fixture
def objective_fields(meta):
    return fill_meta(OBJECTIVE_FILL, meta)


@pytest.fixture
def subjective_fields(meta):
    return fill_meta(subjective_fill(OBJECTIVE_FILL), meta)


@pytest.fixture
def persona_response():
    """Well-formed generation response of a tier for a meta persona"""

    def _make(tier_name, meta, **changes):
        if tier_name == "DESCRIPTIVE":
            return fill_meta({"x": DESCRIPTIVE_FILL}, meta)["x"]
        base = OBJECTIVE_FILL if tier_name == "OBJECTIVE_TABULAR" else subjective_fill(OBJECTIVE_FILL)
        values = fill_meta(base, meta)
        values.update(changes)
        return "Persona:\n" + format_fields(values)

    return _make


@pytest.fixture
def golden():
    def _read(name):
        return (GOLDEN_DIR / name).read_text(encoding="utf-8")

    return _read


"""
Run directory fixtures: a two state census table, a small survey with an
election question, and scripted mock backends. Texas personas always answer
"B", all other personas answer "A".
"""

JOINT_TABLE = """AGE,SEX,RACE,STATE,WEIGHT
18-34,Female,White,California,40
35-64,Male,Asian,California,35
65+,Female,Hispanic,California,25
18-34,Male,Hispanic,Texas,30
35-64,Female,White,Texas,45
65+,Male,Black,Texas,25
"""

QUESTIONS = [
    {
        "id": "ECON1",
        "topic": "Economy",
        "text": "How would you rate economic conditions in the country today?",
        "choices": ["Excellent", "Good", "Only fair", "Poor", "Refused"],
        "ordinal": True,
        "ground_truth": [0.03, 0.20, 0.41, 0.35, 0.01],
    },
    {
        "id": "NEWS1",
        "topic": "Media",
        "text": "Which of these do you most often use to get news?",
        "choices": ["Television", "News websites", "Social media", "Radio", "Print"],
        "ordinal": False,
        "ground_truth": [0.33, 0.31, 0.21, 0.08, 0.07],
    },
    {
        "id": "PRES2020",
        "topic": "Elections",
        "text": "In the 2020 presidential election, which candidate did you vote for?",
        "choices": ["Joe Biden", "Donald Trump"],
        "ordinal": False,
    },
]

ELECTION = "state,dem_share,rep_share\nCalifornia,1.0,0.0\nTexas,0.0,1.0\n"

GENERATOR_SCRIPT = [
    {"match": "BIG_FIVE_SCORES", "response": "Persona:\n" + format_fields(subjective_fill(OBJECTIVE_FILL))},
    {"match": "### FINAL PERSONA TEMPLATE ###", "response": "Persona:\n" + format_fields(OBJECTIVE_FILL)},
    {"match": "vivid, and diverse description", "response": DESCRIPTIVE_FILL},
]

SIMULATOR_SCRIPT = [
    {"match": '"STATE": "Texas"', "response": "Answer: B"},
    {"match": "living in Texas", "response": "Answer: B"},
    {"response": "Answer: A"},
]

RUN_CONFIG = {
    "name": "closed_loop",
    "seed": 7,
    "output_dir": "runs",
    "census": {"joint_table": "joint_table.csv", "per_state": 3},
    "generation": {"retry_limit": 2, "retry_wait": 0.0},
    "simulation": {"questions": ["questions.jsonl"], "cohort": "STATE"},
    "evaluation": {"elections": [{"question_id": "PRES2020", "truth": "election.csv"}]},
    "backends": {
        "generators": [
            {"name": "mockgen", "kind": "mock", "script": "generator.jsonl", "cycle": True}
        ],
        "simulators": [
            {"name": "mocksim", "kind": "mock", "script": "simulator.jsonl", "cycle": True}
        ],
    },
    "report": {"top_n": 10},
}


def write_jsonl_lines(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


@pytest.fixture
def write_run(tmp_path):
    """
    Writing the input files and a configuration file under tmp_path. Keyword
    arguments are merged over the default configuration, the config file name
    can be changed to hold several configurations of the same run.
    """

    def _write(config_name="run.yaml", questions=None, generator_script=None, **updates):
        (tmp_path / "joint_table.csv").write_text(JOINT_TABLE, encoding="utf-8")
        (tmp_path / "election.csv").write_text(ELECTION, encoding="utf-8")
        write_jsonl_lines(tmp_path / "questions.jsonl", QUESTIONS if questions is None else questions)
        write_jsonl_lines(
            tmp_path / "generator.jsonl",
            GENERATOR_SCRIPT if generator_script is None else generator_script,
        )
        write_jsonl_lines(tmp_path / "simulator.jsonl", SIMULATOR_SCRIPT)

        config = merge_nested(copy.deepcopy(RUN_CONFIG), updates)
        path = tmp_path / config_name
        path.write_text(yaml.safe_dump(config), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def run_cli():
    def _run(config_path, *args):
        return cli.main(
            "--config", str(config_path), "--no-progress", "--log-level", "WARNING", *args
        )

    return _run
