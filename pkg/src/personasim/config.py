"""
config.py

Run configuration. One YAML file describes a run. It is merged over the
built-in defaults, then over any command line `key.path=value` overrides, and
is validated before any stage does work. Relative paths are resolved against
the directory of the configuration file. Credentials never live in the file:
HTTP backends name the environment variable holding their key.
"""

import copy
import logging
import os
import re
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import yaml

from .errors import ConfigurationError
from .persona import GENERATED_TIERS, PersonaTier
from .utils import merge_nested, parse_override

logger = logging.getLogger("PersonaSim.config")

_NAME = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")
BACKEND_KINDS = ("http", "mock")
COHORTS = ("ALL", "TIER", "AGE", "SEX", "RACE", "STATE")

DEFAULTS: Dict[str, Any] = {
    "name": None,
    "seed": None,
    "output_dir": "runs",
    "concurrency": 1,
    "census": {"joint_table": None, "per_state": 1000},
    "generation": {
        "tiers": [t.name for t in GENERATED_TIERS],
        "retry_limit": 3,
        "temperature": 1.0,
        "max_tokens": 2048,
        "retry_wait": 1.0,
    },
    "simulation": {
        "tiers": [t.name for t in PersonaTier],
        "questions": [],
        "retry_limit": 3,
        "temperature": 0.0,
        "max_tokens": 64,
        "cohort": "STATE",
    },
    "evaluation": {"elections": [], "state_aggregation": "mean"},
    "backends": {"generators": [], "simulators": []},
    "report": {
        "top_n": 50,
        "lexicon": None,
        "negators": None,
        "intensifiers": None,
        "stopwords": None,
        "wordcloud_cohort": "STATE",
    },
}


@dataclass(frozen=True)
class ElectionSpec:
    question_id: str
    truth: str


@dataclass
class RunConfig:
    name: str
    seed: int
    output_dir: str
    concurrency: int
    census: Dict[str, Any]
    generation: Dict[str, Any]
    simulation: Dict[str, Any]
    evaluation: Dict[str, Any]
    backends: Dict[str, List[Dict[str, Any]]]
    report: Dict[str, Any]
    base_dir: str = "."

    @property
    def run_dir(self) -> str:
        return os.path.join(self.output_dir, self.name)

    @property
    def generation_tiers(self) -> List[PersonaTier]:
        return [PersonaTier[t] for t in self.generation["tiers"]]

    @property
    def simulation_tiers(self) -> List[PersonaTier]:
        return [PersonaTier[t] for t in self.simulation["tiers"]]

    @property
    def elections(self) -> List[ElectionSpec]:
        return [ElectionSpec(**e) for e in self.evaluation["elections"]]

    def backend_specs(self, role: str, name: str = "") -> List[Dict[str, Any]]:
        """Backend specifications of a role, optionally filtered by name"""
        specs = self.backends[role]
        if not name:
            return list(specs)
        selected = [s for s in specs if s["name"] == name]
        if not selected:
            raise ConfigurationError(f"No {role[:-1]} backend named [{name}]")
        return selected

    def to_dict(self) -> Dict[str, Any]:
        """Configuration snapshot stored in the run manifest"""
        return {
            "name": self.name,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "concurrency": self.concurrency,
            "census": copy.deepcopy(self.census),
            "generation": copy.deepcopy(self.generation),
            "simulation": copy.deepcopy(self.simulation),
            "evaluation": copy.deepcopy(self.evaluation),
            "backends": copy.deepcopy(self.backends),
            "report": copy.deepcopy(self.report),
        }


def _resolve(base_dir: str, path: Optional[str]) -> Optional[str]:
    if path is None or os.path.isabs(path):
        return path
    return os.path.normpath(os.path.join(base_dir, path))


def _require_file(path: Optional[str], what: str) -> None:
    if path is not None and not os.path.isfile(path):
        raise ConfigurationError(f"{what} [{path}] does not exist")


def _require_int(value: Any, what: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigurationError(f"{what} must be an integer >= {minimum}, got [{value}]")
    return value


def _check_tiers(tiers: Sequence[str], allowed: Sequence[PersonaTier], what: str) -> None:
    names = [t.name for t in allowed]
    unknown = [t for t in tiers if t not in names]
    if unknown:
        raise ConfigurationError(f"{what} has unknown tiers {unknown}, allowed: {names}")


def _check_backends(specs: Any, role: str, base_dir: str) -> List[Dict[str, Any]]:
    if not isinstance(specs, list):
        raise ConfigurationError(f"backends.{role} must be a list")
    checked, names = [], set()
    for spec in specs:
        if not isinstance(spec, dict) or "name" not in spec:
            raise ConfigurationError(f"backends.{role} entry {spec} has no name")
        spec = dict(spec)
        name = str(spec["name"])
        if not _NAME.match(name) or "__" in name:
            raise ConfigurationError(f"Backend name [{name}] is not usable in file names")
        if role == "generators" and name == "census":
            raise ConfigurationError("Backend name [census] is reserved for meta personas")
        if name in names:
            raise ConfigurationError(f"Duplicated backend name [{name}] in backends.{role}")
        names.add(name)
        kind = spec.setdefault("kind", "http")
        if kind not in BACKEND_KINDS:
            raise ConfigurationError(f"Backend [{name}] has unknown kind [{kind}]")
        if kind == "http" and (not spec.get("url") or not spec.get("model")):
            raise ConfigurationError(f"HTTP backend [{name}] requires [url] and [model]")
        if kind == "mock":
            if not spec.get("script"):
                raise ConfigurationError(f"Mock backend [{name}] requires a [script] file")
            spec["script"] = _resolve(base_dir, spec["script"])
            _require_file(spec["script"], f"Mock backend [{name}] script")
        checked.append(spec)
    return checked


def build_run_config(raw: Dict[str, Any], base_dir: str, default_name: str) -> RunConfig:
    """Validating a merged configuration dictionary"""
    merged = copy.deepcopy(DEFAULTS)
    try:
        merge_nested(merged, raw)
    except ValueError as err:
        raise ConfigurationError(f"Configuration structure error: {err}")

    if merged["seed"] is None:
        raise ConfigurationError("Configuration must set a [seed]")
    seed = _require_int(merged["seed"], "seed", 0)
    concurrency = _require_int(merged["concurrency"], "concurrency", 1)
    name = str(merged["name"] or default_name)
    if not _NAME.match(name):
        raise ConfigurationError(f"Run name [{name}] is not usable as a directory name")

    census = merged["census"]
    census["joint_table"] = _resolve(base_dir, census["joint_table"])
    _require_file(census["joint_table"], "Joint table")
    _require_int(census["per_state"], "census.per_state", 1)

    generation = merged["generation"]
    _check_tiers(generation["tiers"], GENERATED_TIERS, "generation.tiers")
    _require_int(generation["retry_limit"], "generation.retry_limit", 1)
    _require_int(generation["max_tokens"], "generation.max_tokens", 1)

    simulation = merged["simulation"]
    _check_tiers(simulation["tiers"], list(PersonaTier), "simulation.tiers")
    _require_int(simulation["retry_limit"], "simulation.retry_limit", 1)
    _require_int(simulation["max_tokens"], "simulation.max_tokens", 1)
    if str(simulation["cohort"]).upper() not in COHORTS:
        raise ConfigurationError(f"Unknown simulation.cohort [{simulation['cohort']}]")
    simulation["questions"] = [_resolve(base_dir, q) for q in simulation["questions"]]
    for path in simulation["questions"]:
        _require_file(path, "Question file")

    evaluation = merged["evaluation"]
    if evaluation["state_aggregation"] not in ("mean", "pooled"):
        raise ConfigurationError(
            f"Unknown evaluation.state_aggregation [{evaluation['state_aggregation']}]"
        )
    elections = []
    for entry in evaluation["elections"]:
        if not isinstance(entry, dict) or not {"question_id", "truth"} <= set(entry):
            raise ConfigurationError(f"Election entry {entry} needs [question_id] and [truth]")
        entry = {"question_id": str(entry["question_id"]), "truth": _resolve(base_dir, entry["truth"])}
        _require_file(entry["truth"], "Election truth file")
        elections.append(entry)
    evaluation["elections"] = elections

    backends = {
        role: _check_backends(merged["backends"].get(role, []), role, base_dir)
        for role in ("generators", "simulators")
    }

    report = merged["report"]
    _require_int(report["top_n"], "report.top_n", 1)
    for key in ("lexicon", "negators", "intensifiers", "stopwords"):
        report[key] = _resolve(base_dir, report[key])
        _require_file(report[key], f"report.{key}")
    if str(report["wordcloud_cohort"]).upper() not in COHORTS:
        raise ConfigurationError(f"Unknown report.wordcloud_cohort [{report['wordcloud_cohort']}]")

    return RunConfig(
        name=name,
        seed=seed,
        output_dir=_resolve(base_dir, merged["output_dir"]),
        concurrency=concurrency,
        census=census,
        generation=generation,
        simulation=simulation,
        evaluation=evaluation,
        backends=backends,
        report=report,
        base_dir=base_dir,
    )


def load_run_config(path: str, overrides: Sequence[str] = ()) -> RunConfig:
    if not os.path.isfile(path):
        raise ConfigurationError(f"Configuration file [{path}] does not exist")
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = yaml.safe_load(f) or {}
        except yaml.YAMLError as err:
            raise ConfigurationError(f"Configuration file [{path}] is not valid YAML: {err}")
    if not isinstance(raw, dict):
        raise ConfigurationError(f"Configuration file [{path}] must hold a mapping")

    for expr in overrides:
        try:
            merge_nested(raw, parse_override(expr))
        except ValueError as err:
            raise ConfigurationError(f"Invalid override [{expr}]: {err}")

    base_dir = os.path.dirname(os.path.abspath(path))
    default_name = os.path.splitext(os.path.basename(path))[0]
    config = build_run_config(raw, base_dir, default_name)
    logger.info(f"Loaded run configuration [{config.name}] from [{path}]")
    return config
