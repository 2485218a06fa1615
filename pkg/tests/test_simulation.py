import collections
import json
import string

import numpy
import pytest

from personasim.backends import ScriptedMockBackend
from personasim.census import MetaPersona
from personasim.errors import ConfigurationError, DataError, ParseError
from personasim.persona import PersonaEntry
from personasim.simulation import (
    ResponseRecord,
    SurveyQuestion,
    aggregate,
    cohort_key,
    load_questions,
    parse_answer,
    read_aggregates_csv,
    run_survey,
    write_aggregates_csv,
)

"""
Answer parsing: the accepted format variants, and responses that must fail
cleanly.
"""

ANSWER_FORMATS = [
    "Answer: {L}",
    "answer: [{l}]",
    "ANSWER:{L}",
    "Answer: **{L}**",
    "**Answer:** {L}",
    "Answer: ({L}).",
    "Final answer : '{l}'",
    "The persona cares about costs, so the choice follows.\nAnswer: {L}",
    "Answer: A\nOn reflection, the persona would change their mind.\nAnswer: {L}",
    "{L}",
]

WELL_FORMED = [
    (fmt.format(L=letter, l=letter.lower()), index)
    for fmt in ANSWER_FORMATS
    for index, letter in enumerate("ABCDE")
]

MALFORMED = [
    "",
    "I cannot decide.",
    "Answer: F",
    "answer: [z]",
    "Answer: Because it is complicated",
    "The persona would pick option 2.",
    "Answer: 3",
    "Answer:",
    "ABC",
    "Option B seems best",
]


def test_corpus_sizes():
    assert len(WELL_FORMED) == 50
    assert len(MALFORMED) == 10


@pytest.mark.parametrize("text, expected", WELL_FORMED)
def test_parse_answer_variants(text, expected):
    assert parse_answer(text, 5) == expected


@pytest.mark.parametrize("text", MALFORMED)
def test_parse_answer_failures(text):
    with pytest.raises(ParseError):
        parse_answer(text, 5)


def test_parse_answer_examples():
    assert parse_answer("Answer: B", 4) == 1
    assert parse_answer("answer: [a]", 4) == 0
    assert parse_answer("Reasoning... Answer: C", 4) == 2
    assert parse_answer("Some thoughts.\nB)\n", 4) == 1
    with pytest.raises(ParseError):
        parse_answer("Answer: C", 2)
    for n in (1, 27):
        with pytest.raises(ValueError):
            parse_answer("Answer: A", n)


@pytest.mark.parametrize(
    "text, n_choices, expected",
    [
        ("Answer: I think C", 3, 2),
        ("Answer: I'd go with B.", 4, 1),
        ("Answer: I think C", 10, 8),
        ("Answer: B\nAnswer: I don't know", 5, 1),
        ("Answer: Because of costs, A", 2, 0),
    ],
)
def test_parse_answer_skips_invalid_labels(text, n_choices, expected):
    assert parse_answer(text, n_choices) == expected


def test_parse_answer_out_of_range_only():
    with pytest.raises(ParseError):
        parse_answer("Answer: I think so", 3)
    with pytest.raises(ParseError):
        parse_answer("Answer: I think C\nbecause of D", 2)


def test_parse_answer_is_total_on_the_output_format():
    for n in range(2, 27):
        for index, letter in enumerate(string.ascii_uppercase[:n]):
            assert parse_answer(f"Answer: {letter}", n) == index


"""
Survey runs
"""

QUESTIONS = [
    SurveyQuestion(id="Q1", topic="Economy", text="Rate the economy", choices=("Good", "Bad")),
    SurveyQuestion(id="Q2", topic="Climate", text="Climate threat", choices=("Major", "Minor", "None")),
]


def entries(states):
    return [
        PersonaEntry(index=i, generator="census", persona=MetaPersona(30 + i, "Female", "White", s))
        for i, s in enumerate(states)
    ]


def test_closed_loop_survey():
    backend = ScriptedMockBackend(name="sim", script=[{"response": "Answer: A"}], cycle=True)
    result = run_survey(entries(["Ohio", "Iowa", "Utah"]), QUESTIONS, backend)
    assert len(result.records) == 6 and not result.failures
    assert all(r.chosen_index == 0 for r in result.records)
    assert [r.key for r in result.records] == [
        (0, "Q1"), (0, "Q2"), (1, "Q1"), (1, "Q2"), (2, "Q1"), (2, "Q2"),
    ]
    record = result.records[3]
    assert (record.persona_tier, record.generator, record.simulator) == ("META", "census", "sim")
    assert record.meta["STATE"] == "Iowa"
    assert backend.calls[0]["system"] == ""


def test_aggregate_matches_script_histogram():
    letters = ["A", "B", "B", "A", "B", "B"]
    backend = ScriptedMockBackend(name="sim", script=[{"response": f"Answer: {x}"} for x in letters])
    result = run_survey(entries(["Ohio"] * 6), QUESTIONS[:1], backend)
    (dist,) = aggregate(result.records, cohort_key("ALL"))
    histogram = collections.Counter(letters)
    assert dist.counts == (histogram["A"], histogram["B"])
    assert dist.probabilities == pytest.approx((2 / 6, 4 / 6))


def test_survey_retries_and_failures():
    script = [
        {"response": "Let me think."},
        {"response": "Answer: B"},
        {"response": "Answer: Z"},
        {"response": "no"},
        {"response": "Answer: maybe"},
    ]
    backend = ScriptedMockBackend(name="sim", script=script)
    result = run_survey(entries(["Ohio", "Iowa"]), QUESTIONS[:1], backend, retry_limit=3)
    assert [r.chosen_index for r in result.records] == [1]
    (failure,) = result.failures
    assert (failure.persona_index, failure.question_id, failure.attempts) == (1, "Q1", 3)
    assert len(result.audit.attempts_for([0, "Q1"])) == 2
    assert result.audit.attempts_for([0, "Q1"])[1]["raw"] == "Answer: B"


def test_survey_skip():
    backend = ScriptedMockBackend(name="sim", script=[{"response": "Answer: B"}], cycle=True)
    result = run_survey(entries(["Ohio", "Iowa"]), QUESTIONS, backend, skip={(0, "Q1"), (1, "Q2")})
    assert [r.key for r in result.records] == [(0, "Q2"), (1, "Q1")]


def test_survey_checks():
    backend = ScriptedMockBackend(name="sim", script=[])
    with pytest.raises(ConfigurationError):
        run_survey([], QUESTIONS, backend)
    with pytest.raises(ConfigurationError):
        run_survey(entries(["Ohio"]), QUESTIONS, backend, retry_limit=0)


"""
Aggregation
"""


def record(index, choice, n=4, state="Ohio", qid="Q"):
    return ResponseRecord(
        question_id=qid,
        persona_tier="META",
        persona_index=index,
        generator="census",
        simulator="sim",
        chosen_index=choice,
        n_choices=n,
        meta={"AGE": 40, "SEX": "Male", "RACE": "White", "STATE": state},
    )


def test_point_mass():
    (dist,) = aggregate([record(i, 0) for i in range(10)], cohort_key("ALL"))
    assert dist.probabilities == (1.0, 0.0, 0.0, 0.0)
    assert dist.support == 10


def test_even_split():
    records = [record(i, i % 2, n=2) for i in range(6)]
    (dist,) = aggregate(records, cohort_key("ALL"))
    assert dist.probabilities == (0.5, 0.5)


def test_state_recount():
    rng = numpy.random.default_rng(17)
    states = ["Ohio", "Iowa", "Utah", "Maine"]
    records = [
        record(i, int(rng.integers(0, 4)), state=states[int(rng.integers(0, 4))])
        for i in range(1000)
    ]
    expected = {}
    for r in records:
        expected.setdefault(r.meta["STATE"], [0, 0, 0, 0])[r.chosen_index] += 1

    distributions = aggregate(records, cohort_key("STATE"))
    assert [d.cohort for d in distributions] == sorted(expected)
    for dist in distributions:
        assert list(dist.counts) == expected[dist.cohort]
        assert sum(dist.probabilities) == pytest.approx(1.0)


def test_aggregation_is_linear():
    rng = numpy.random.default_rng(3)
    first = [record(i, int(rng.integers(0, 4)), state="Ohio") for i in range(40)]
    second = [record(i, int(rng.integers(0, 4)), state="Iowa") for i in range(40, 90)]
    merged = {d.cohort: d.counts for d in aggregate(first + second, cohort_key("ALL"))}
    parts = [aggregate(x, cohort_key("ALL"))[0].counts for x in (first, second)]
    assert merged["ALL"] == tuple(a + b for a, b in zip(*parts))


def test_empty_cohorts_are_omitted():
    records = [record(0, 1, state="Ohio"), record(1, 2, state="Ohio")]
    assert [d.cohort for d in aggregate(records, cohort_key("STATE"))] == ["Ohio"]


def test_mixed_choice_counts():
    with pytest.raises(DataError):
        aggregate([record(0, 0, n=4), record(1, 0, n=3)], cohort_key("ALL"))


def test_cohort_keys():
    r = record(0, 0)
    assert cohort_key("all")(r) == "ALL"
    assert cohort_key("TIER")(r) == "META"
    assert cohort_key("AGE")(r) == "40"
    with pytest.raises(ConfigurationError):
        cohort_key("INCOME")


def test_aggregates_file(tmp_path):
    records = [record(i, i % 3, state=s) for i, s in enumerate(["Ohio", "Iowa"] * 5)]
    distributions = aggregate(records, cohort_key("STATE"))
    path = str(tmp_path / "aggregates.csv")
    write_aggregates_csv(path, distributions)
    assert read_aggregates_csv(path) == distributions
    assert open(path).readline().strip() == "question_id,cohort,choice_index,probability,count"


def test_records_check_choice_range():
    with pytest.raises(DataError):
        record(0, 4, n=4)


"""
Question files
"""


def write_questions(tmp_path, rows):
    path = tmp_path / "questions.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return str(path)


def test_load_questions(tmp_path):
    path = write_questions(
        tmp_path,
        [
            {"id": "Q1", "text": "?", "choices": ["a", "b"], "ground_truth": [0.25, 0.75]},
            {"id": "Q2", "topic": "T", "text": "?", "choices": ["a", "b", "c"], "ordinal": False},
        ],
    )
    q1, q2 = load_questions(path)
    assert q1.ordinal and q1.ground_truth == (0.25, 0.75)
    assert not q2.ordinal and q2.ground_truth is None and q2.topic == "T"


@pytest.mark.parametrize(
    "rows",
    [
        [{"id": "Q", "text": "?", "choices": ["a", "b"]}, {"id": "Q", "text": "?", "choices": ["a", "b"]}],
        [{"id": "Q", "text": "?", "choices": ["a"]}],
        [{"id": "Q", "text": "?", "choices": ["a", "b"], "ground_truth": [0.5, 0.6]}],
        [{"id": "Q", "text": "?", "choices": ["a", "b"], "ground_truth": [1.0]}],
        [{"id": "Q", "choices": ["a", "b"]}],
    ],
)
def test_bad_question_files(tmp_path, rows):
    with pytest.raises(DataError):
        load_questions(write_questions(tmp_path, rows))
