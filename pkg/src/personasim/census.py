"""
census.py

Ingestion of census-style joint demographic tables, and the stratified sampling
of meta personas from them. A joint table is a plain delimited text file, with
the header naming the demographic axes and the last column holding the weight
(count or probability) of each category combination:

    AGE,SEX,RACE,STATE,WEIGHT
    18-24,Male,White,Florida,1520
    ...

Sampling is done per state on the state-conditional slice of the table, so
that every state receives exactly the requested number of personas. Each state
is sampled with its own PCG64 generator, seeded by
`SeedSequence(seed, spawn_key=(state_position,))`, where the state position is
the order of first appearance of the state in the table. The per-state streams
are hence independent of each other, and can be sampled in any order (or in
parallel) without changing the results.
"""

import csv
import logging
import math
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy

from .errors import DataError
from .utils import iter_jsonl, write_jsonl

logger = logging.getLogger("PersonaSim.census")

AGE = "AGE"
SEX = "SEX"
RACE = "RACE"
STATE = "STATE"
AXIS_NAMES = (AGE, SEX, RACE, STATE)
WEIGHT = "WEIGHT"

# Upper end of open brackets such as "85+"
MAX_AGE = 99


@dataclass(frozen=True)
class DemographicAxis:
    name: str
    categories: Tuple[str, ...]

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ValueError(f"Unknown demographic axis [{self.name}]")
        if len(self.categories) == 0:
            raise ValueError(f"Axis [{self.name}] has no categories")
        if len(set(self.categories)) != len(self.categories):
            raise ValueError(f"Axis [{self.name}] has duplicated category labels")

    def index(self, category: str) -> int:
        return self.categories.index(category)


@dataclass(frozen=True)
class JointDistribution:
    """
    Weights over tuples of categories, one category per axis in the order of
    the axes. Weights are kept as given (counts or probabilities), the
    normalized view is available through the `normalized` method.
    """

    axes: Tuple[DemographicAxis, ...]
    cells: Dict[Tuple[str, ...], float]

    def __post_init__(self):
        if len(set(self.axis_names)) != len(self.axis_names):
            raise DataError("Joint distribution has duplicated axes")
        for key, weight in self.cells.items():
            if len(key) != len(self.axes):
                raise DataError(f"Cell {key} does not have one category per axis")
            for axis, category in zip(self.axes, key):
                if category not in axis.categories:
                    raise DataError(
                        f"Cell {key} has category [{category}] not in axis [{axis.name}]"
                    )
            if not math.isfinite(weight) or weight < 0:
                raise DataError(f"Cell {key} has invalid weight [{weight}]")
        if not any(w > 0 for w in self.cells.values()):
            raise DataError("Joint distribution has zero total mass")

    @property
    def axis_names(self) -> Tuple[str, ...]:
        return tuple(axis.name for axis in self.axes)

    def axis_position(self, name: str) -> int:
        if name not in self.axis_names:
            raise ValueError(
                f"Unknown axis [{name}], distribution has {list(self.axis_names)}"
            )
        return self.axis_names.index(name)

    def axis(self, name: str) -> DemographicAxis:
        return self.axes[self.axis_position(name)]

    @property
    def total(self) -> float:
        return math.fsum(self.cells.values())

    def normalized(self) -> Dict[Tuple[str, ...], float]:
        total = self.total
        return {key: weight / total for key, weight in self.cells.items()}

    def slice_mass(self, axis: str, category: str) -> float:
        position = self.axis_position(axis)
        return math.fsum(w for k, w in self.cells.items() if k[position] == category)

    def conditional(self, axis: str, category: str) -> "JointDistribution":
        """The slice of cells with the given category on the given axis"""
        position = self.axis_position(axis)
        if category not in self.axes[position].categories:
            raise ValueError(f"Unknown category [{category}] for axis [{axis}]")
        if self.slice_mass(axis, category) <= 0:
            raise DataError(f"Category [{category}] of axis [{axis}] has zero mass")
        return JointDistribution(
            axes=self.axes,
            cells={k: w for k, w in self.cells.items() if k[position] == category},
        )


@dataclass(frozen=True)
class MetaPersona:
    age: int
    sex: str
    race: str
    state: str

    def to_record(self) -> Dict[str, object]:
        return {AGE: self.age, SEX: self.sex, RACE: self.race, STATE: self.state}

    @classmethod
    def from_record(cls, record: Dict[str, object]) -> "MetaPersona":
        missing = [x for x in AXIS_NAMES if x not in record]
        if missing:
            raise DataError(f"Meta persona record is missing keys {missing}")
        try:
            age = int(record[AGE])
        except (TypeError, ValueError):
            raise DataError(f"Meta persona has non-integer AGE [{record[AGE]}]")
        return cls(
            age=age,
            sex=str(record[SEX]),
            race=str(record[RACE]),
            state=str(record[STATE]),
        )


"""
Age bracket handling. Census tables carry age brackets, while the personas
carry an integer age drawn uniformly within the sampled bracket.
"""

_AGE_RANGE = re.compile(r"^\s*(\d+)\s*(?:-|–|to)\s*(\d+)\s*(?:years)?\s*$", re.I)
_AGE_OPEN = re.compile(r"^\s*(\d+)\s*(?:\+|and over|years and over|or older)\s*$", re.I)
_AGE_UNDER = re.compile(r"^\s*under\s+(\d+)\s*(?:years)?\s*$", re.I)
_AGE_SINGLE = re.compile(r"^\s*(\d+)\s*$")


def parse_age_bracket(label: str) -> Tuple[int, int]:
    """Inclusive integer range covered by an age category label"""
    if m := _AGE_RANGE.match(label):
        lo, hi = int(m.group(1)), int(m.group(2))
    elif m := _AGE_OPEN.match(label):
        lo = int(m.group(1))
        hi = max(lo, MAX_AGE)
    elif m := _AGE_UNDER.match(label):
        lo, hi = 0, int(m.group(1)) - 1
    elif m := _AGE_SINGLE.match(label):
        lo = hi = int(m.group(1))
    else:
        raise ValueError(f"Unrecognized age bracket [{label}]")
    if lo > hi:
        raise ValueError(f"Empty age bracket [{label}]")
    return lo, hi


def age_category(age: int, categories: Sequence[str]) -> str:
    """The age bracket label containing the given age"""
    for category in categories:
        lo, hi = parse_age_bracket(category)
        if lo <= age <= hi:
            return category
    raise ValueError(f"Age [{age}] is not in any bracket of {list(categories)}")


"""
Table loading
"""


def load_joint_table(path: str) -> JointDistribution:
    """
    Loading a joint distribution table. Errors are reported with the file and
    line number of the offending row. Duplicated category tuples have their
    weights summed.
    """
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = [x.strip().upper() for x in next(reader)]
        except StopIteration:
            raise DataError(f"[{path}:1] joint table is empty")

        if len(header) < 2 or header[-1] != WEIGHT:
            raise DataError(f"[{path}:1] last column must be [{WEIGHT}], got {header}")
        axis_names = header[:-1]
        unknown = [x for x in axis_names if x not in AXIS_NAMES]
        if unknown:
            raise DataError(f"[{path}:1] unknown axis columns {unknown}")
        if len(set(axis_names)) != len(axis_names):
            raise DataError(f"[{path}:1] duplicated axis columns {axis_names}")
        missing = [x for x in AXIS_NAMES if x not in axis_names]
        if missing:
            raise DataError(f"[{path}:1] missing axis columns {missing}")

        categories: Dict[str, List[str]] = {name: [] for name in axis_names}
        cells: Dict[Tuple[str, ...], float] = {}
        for row in reader:
            lineno = reader.line_num
            if not any(x.strip() for x in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"[{path}:{lineno}] expected {len(header)} columns, got {len(row)}"
                )
            key = tuple(x.strip() for x in row[:-1])
            if any(x == "" for x in key):
                raise DataError(f"[{path}:{lineno}] empty category label")
            try:
                weight = float(row[-1])
            except ValueError:
                raise DataError(f"[{path}:{lineno}] weight [{row[-1]}] is not a number")
            if not math.isfinite(weight):
                raise DataError(f"[{path}:{lineno}] weight [{row[-1]}] is not finite")
            if weight < 0:
                raise DataError(f"[{path}:{lineno}] negative weight [{weight}]")

            for name, category in zip(axis_names, key):
                if name == AGE:
                    try:
                        parse_age_bracket(category)
                    except ValueError as err:
                        raise DataError(f"[{path}:{lineno}] {err}")
                if category not in categories[name]:
                    categories[name].append(category)
            cells[key] = cells.get(key, 0.0) + weight

    if not any(w > 0 for w in cells.values()):
        raise DataError(f"[{path}] joint table has zero total mass")

    dist = JointDistribution(
        axes=tuple(DemographicAxis(name, tuple(categories[name])) for name in axis_names),
        cells=cells,
    )
    logger.info(f"Loaded joint table [{path}] with {len(cells)} cells")
    return dist


def marginal(dist: JointDistribution, axis: str) -> numpy.ndarray:
    """
    Probability vector over the categories of an axis, in the category order
    of the axis.
    """
    position = dist.axis_position(axis)
    categories = dist.axes[position].categories
    index = {c: i for i, c in enumerate(categories)}
    mass = numpy.zeros(len(categories))
    for key, weight in dist.cells.items():
        mass[index[key[position]]] += weight
    return mass / mass.sum()


"""
Sampling
"""


def state_generator(seed: int, state_position: int) -> numpy.random.Generator:
    """Independent, portable random stream of a state"""
    if seed < 0:
        raise ValueError(f"Seed must be non-negative, got [{seed}]")
    return numpy.random.Generator(
        numpy.random.PCG64(numpy.random.SeedSequence(seed, spawn_key=(state_position,)))
    )


def _check_sampling_axes(dist: JointDistribution) -> None:
    if STATE not in dist.axis_names:
        raise DataError("Joint distribution has no STATE axis to stratify on")
    missing = [x for x in AXIS_NAMES if x not in dist.axis_names]
    if missing:
        raise DataError(f"Joint distribution is missing axes {missing}")


def sample_state(
    dist: JointDistribution, state: str, per_state: int, seed: int
) -> List[MetaPersona]:
    """Drawing per_state meta personas from the conditional slice of a state"""
    _check_sampling_axes(dist)
    position = dist.axis(STATE).index(state)
    state_slice = dist.conditional(STATE, state)

    keys = list(state_slice.cells.keys())
    weights = numpy.array([state_slice.cells[k] for k in keys], dtype=float)
    rng = state_generator(seed, position)
    picks = rng.choice(len(keys), size=per_state, p=weights / weights.sum())

    p_age = dist.axis_position(AGE)
    p_sex = dist.axis_position(SEX)
    p_race = dist.axis_position(RACE)
    brackets = numpy.array([parse_age_bracket(keys[i][p_age]) for i in picks])
    ages = rng.integers(brackets[:, 0], brackets[:, 1] + 1)

    return [
        MetaPersona(
            age=int(age),
            sex=keys[i][p_sex],
            race=keys[i][p_race],
            state=state,
        )
        for i, age in zip(picks, ages)
    ]


def sample_meta_personas(
    dist: JointDistribution, per_state: int, seed: int
) -> List[MetaPersona]:
    """
    Stratified sampling of meta personas: exactly per_state personas for each
    state category, in the state order of the table.
    """
    if per_state < 1:
        raise ValueError(f"per_state must be at least 1, got [{per_state}]")
    _check_sampling_axes(dist)

    states = dist.axis(STATE).categories
    # Checking all states before any sampling is done
    empty = [s for s in states if dist.slice_mass(STATE, s) <= 0]
    if empty:
        raise DataError(f"States {empty} have zero conditional mass")

    metas = []
    for state in states:
        metas.extend(sample_state(dist, state, per_state, seed))
    logger.info(f"Sampled {len(metas)} meta personas over {len(states)} states")
    return metas


def empirical_marginal(
    metas: Iterable[MetaPersona], axis: str, categories: Sequence[str]
) -> numpy.ndarray:
    """Observed frequency of each category of an axis in a set of personas"""
    index = {c: i for i, c in enumerate(categories)}
    counts = numpy.zeros(len(categories))
    for meta in metas:
        if axis == AGE:
            counts[index[age_category(meta.age, categories)]] += 1
        else:
            counts[index[getattr(meta, axis.lower())]] += 1
    return counts / counts.sum()


def write_meta_personas(path: str, metas: Iterable[MetaPersona]) -> None:
    write_jsonl(path, (m.to_record() for m in metas))


def read_meta_personas(path: str) -> List[MetaPersona]:
    return [MetaPersona.from_record(x) for x in iter_jsonl(path)]
