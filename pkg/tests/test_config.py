import os

import pytest
import yaml

from personasim.config import DEFAULTS, build_run_config, load_run_config
from personasim.errors import ConfigurationError
from personasim.persona import PersonaTier


def test_defaults_and_resolution(write_run, tmp_path):
    config = load_run_config(str(write_run()))
    assert config.name == "closed_loop"
    assert config.run_dir == os.path.join(str(tmp_path), "runs", "closed_loop")
    assert config.census["joint_table"] == os.path.join(str(tmp_path), "joint_table.csv")
    assert config.simulation["questions"] == [os.path.join(str(tmp_path), "questions.jsonl")]
    assert config.backend_specs("simulators")[0]["script"] == os.path.join(
        str(tmp_path), "simulator.jsonl"
    )
    assert config.generation_tiers == [
        PersonaTier.OBJECTIVE_TABULAR,
        PersonaTier.SUBJECTIVE_TABULAR,
        PersonaTier.DESCRIPTIVE,
    ]
    assert config.simulation_tiers == list(PersonaTier)
    assert config.generation["temperature"] == DEFAULTS["generation"]["temperature"]
    assert config.elections[0].question_id == "PRES2020"
    assert config.to_dict()["seed"] == 7


def test_name_defaults_to_file_name(write_run):
    path = write_run(config_name="weekend.yaml")
    raw = yaml.safe_load(path.read_text())
    del raw["name"]
    path.write_text(yaml.safe_dump(raw))
    assert load_run_config(str(path)).name == "weekend"


def test_overrides(write_run):
    config = load_run_config(
        str(write_run()),
        ["seed=11", "census.per_state=5", "generation.tiers=[DESCRIPTIVE]", "output_dir=elsewhere"],
    )
    assert config.seed == 11
    assert config.census["per_state"] == 5
    assert config.generation_tiers == [PersonaTier.DESCRIPTIVE]
    assert config.output_dir.endswith("elsewhere")
    with pytest.raises(ConfigurationError):
        load_run_config(str(write_run()), ["seed"])
    with pytest.raises(ConfigurationError):
        load_run_config(str(write_run()), ["census=3"])


def test_backend_lookup(write_run):
    config = load_run_config(str(write_run()))
    assert [s["name"] for s in config.backend_specs("generators", "mockgen")] == ["mockgen"]
    with pytest.raises(ConfigurationError):
        config.backend_specs("generators", "nothere")


def mock(name, script="simulator.jsonl", **extra):
    return dict(name=name, kind="mock", script=script, **extra)


@pytest.mark.parametrize(
    "updates",
    [
        {"seed": None},
        {"seed": -1},
        {"seed": "seven"},
        {"concurrency": 0},
        {"name": "bad name"},
        {"census": {"per_state": 0}},
        {"census": {"joint_table": "missing.csv"}},
        {"generation": {"tiers": ["META"]}},
        {"generation": {"retry_limit": 0}},
        {"simulation": {"tiers": ["GIANT"]}},
        {"simulation": {"cohort": "INCOME"}},
        {"simulation": {"questions": ["missing.jsonl"]}},
        {"evaluation": {"state_aggregation": "median"}},
        {"evaluation": {"elections": [{"question_id": "PRES2020"}]}},
        {"evaluation": {"elections": [{"question_id": "X", "truth": "missing.csv"}]}},
        {"backends": {"generators": [mock("census")]}},
        {"backends": {"generators": [mock("a__b")]}},
        {"backends": {"simulators": [mock("s"), mock("s")]}},
        {"backends": {"simulators": [mock("s", script="missing.jsonl")]}},
        {"backends": {"simulators": [{"name": "s", "kind": "mock"}]}},
        {"backends": {"simulators": [{"name": "s", "kind": "http", "url": "http://x"}]}},
        {"backends": {"simulators": [{"name": "s", "kind": "grpc"}]}},
        {"backends": {"simulators": [{"kind": "mock"}]}},
        {"report": {"top_n": 0}},
        {"report": {"wordcloud_cohort": "INCOME"}},
        {"report": {"stopwords": "missing.txt"}},
    ],
)
def test_invalid_configurations(write_run, updates):
    path = write_run()
    raw = yaml.safe_load(path.read_text())
    for key, value in updates.items():
        if isinstance(value, dict):
            raw[key] = dict(raw.get(key, {}), **value)
        else:
            raw[key] = value
    with pytest.raises(ConfigurationError):
        build_run_config(raw, str(path.parent), "run")


def test_unreadable_files(tmp_path):
    with pytest.raises(ConfigurationError):
        load_run_config(str(tmp_path / "missing.yaml"))
    path = tmp_path / "broken.yaml"
    path.write_text("seed: [1, 2\n")
    with pytest.raises(ConfigurationError):
        load_run_config(str(path))
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigurationError):
        load_run_config(str(path))
