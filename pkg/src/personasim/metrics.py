"""
metrics.py

Distances between choice distributions, alignment scores of simulated
distributions against reference distributions, and the summaries built on
top of them: the cross-simulation matrix (generator x simulator x persona tier),
the ranking of topics by the variance of alignment across persona tiers, and
per-state election maps.

The Wasserstein distance used here is the ordinal index metric: the sum of the
absolute differences of the cumulative distributions over the first K-1
categories, divided by K-1 so that the distance lies in [0, 1] for any number
of categories.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy
from nested_dict import nested_dict

from .errors import DataError
from .persona import PersonaTier
from .simulation import ChoiceDistribution, SurveyQuestion
from .utils import format_float, write_csv

logger = logging.getLogger("PersonaSim.metrics")

WASSERSTEIN = "wasserstein"
TOTAL_VARIATION = "tv"
STATE_AGGREGATIONS = ("mean", "pooled")
META_GENERATOR = "census"


def as_distribution(p: Sequence[float], name: str = "distribution") -> numpy.ndarray:
    """Checked probability vector"""
    p = numpy.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValueError(f"{name} must be a vector over at least 2 categories")
    if numpy.any(p < 0):
        raise ValueError(f"{name} has negative entries")
    if abs(math.fsum(p) - 1.0) > 1e-9:
        raise ValueError(f"{name} does not sum to 1")
    return p


def _pair(p, q) -> Tuple[numpy.ndarray, numpy.ndarray]:
    p, q = as_distribution(p, "p"), as_distribution(q, "q")
    if p.size != q.size:
        raise ValueError(f"Distributions have mismatched sizes [{p.size}] and [{q.size}]")
    return p, q


def wasserstein_1d(p: Sequence[float], q: Sequence[float]) -> float:
    p, q = _pair(p, q)
    cdf_diff = numpy.cumsum(p)[:-1] - numpy.cumsum(q)[:-1]
    return float(numpy.abs(cdf_diff).sum() / (p.size - 1))


def total_variation(p: Sequence[float], q: Sequence[float]) -> float:
    p, q = _pair(p, q)
    return float(0.5 * numpy.abs(p - q).sum())


def distance_for(question: SurveyQuestion) -> Tuple[str, Callable]:
    """Ordinal questions use the Wasserstein distance, the others total variation"""
    if question.ordinal:
        return WASSERSTEIN, wasserstein_1d
    return TOTAL_VARIATION, total_variation


def alignment_score(
    p_sim: Sequence[float], p_ref: Sequence[float], metric: str = WASSERSTEIN
) -> float:
    distance = wasserstein_1d if metric == WASSERSTEIN else total_variation
    return min(1.0, max(0.0, 1.0 - distance(p_sim, p_ref)))


@dataclass(frozen=True)
class AlignmentScore:
    value: float
    question_id: str
    cohort: str
    tier: str
    generator: str
    simulator: str
    metric: str = WASSERSTEIN
    support: int = 0

    def to_row(self) -> Tuple:
        return (
            self.question_id,
            self.cohort,
            self.tier,
            self.generator,
            self.simulator,
            self.metric,
            self.support,
            self.value,
        )


ALIGNMENT_HEADER = (
    "question_id",
    "cohort",
    "tier",
    "generator",
    "simulator",
    "metric",
    "support",
    "alignment",
)


def score_distributions(
    distributions: Sequence[ChoiceDistribution],
    questions: Mapping[str, SurveyQuestion],
    truths: Mapping[Tuple[str, str], Sequence[float]],
    tier: str,
    generator: str,
    simulator: str,
) -> List[AlignmentScore]:
    """
    Alignment of every simulated distribution that has a reference
    distribution, looked up by (question id, cohort).
    """
    scores = []
    for dist in distributions:
        truth = truths.get((dist.question_id, dist.cohort))
        if truth is None:
            continue
        metric, _ = distance_for(questions[dist.question_id])
        scores.append(
            AlignmentScore(
                value=alignment_score(dist.probabilities, truth, metric),
                question_id=dist.question_id,
                cohort=dist.cohort,
                tier=tier,
                generator=generator,
                simulator=simulator,
                metric=metric,
                support=dist.support,
            )
        )
    return scores


def mean_alignment(scores: Sequence[AlignmentScore], state_aggregation: str = "mean") -> float:
    """
    Unweighted mean over the (question, cohort) scores, or the mean weighted by
    the number of records behind each score for "pooled".
    """
    if state_aggregation not in STATE_AGGREGATIONS:
        raise ValueError(f"Unknown state aggregation [{state_aggregation}]")
    values = numpy.array([s.value for s in scores])
    if state_aggregation == "pooled":
        weights = numpy.array([s.support for s in scores], dtype=float)
        if weights.sum() > 0:
            return float(numpy.average(values, weights=weights))
    return float(values.mean())


"""
Cross-simulation matrix
"""


@dataclass(frozen=True)
class MatrixCell:
    mean: float
    count: int


@dataclass
class CrossSimMatrix:
    generators: List[str]
    simulators: List[str]
    tiers: List[str]
    cells: Dict[Tuple[str, str, str], MatrixCell] = field(default_factory=dict)
    state_aggregation: str = "mean"

    def cell(self, generator: str, simulator: str, tier: str) -> MatrixCell:
        return self.cells[(generator, simulator, tier)]

    def to_dict(self) -> Dict[str, Any]:
        matrix = nested_dict()
        for (generator, simulator, tier), value in self.cells.items():
            matrix[generator][simulator][tier] = {"mean": value.mean, "count": value.count}
        return {
            "dimensions": {
                "generators": list(self.generators),
                "simulators": list(self.simulators),
                "tiers": list(self.tiers),
            },
            "state_aggregation": self.state_aggregation,
            "cells": matrix.to_dict(),
        }


def cross_simulation(
    scores: Sequence[AlignmentScore],
    generators: Sequence[str],
    simulators: Sequence[str],
    tiers: Sequence[str],
    state_aggregation: str = "mean",
) -> CrossSimMatrix:
    """
    Mean alignment per (generator, simulator, tier) cell. Meta personas are
    sampled rather than generated, so the META cell of a simulator is computed
    once from the META scores and replicated along the generator axis.
    """
    grouped: Dict[Tuple[str, str, str], List[AlignmentScore]] = {}
    for score in scores:
        generator = META_GENERATOR if score.tier == PersonaTier.META.name else score.generator
        grouped.setdefault((generator, score.simulator, score.tier), []).append(score)

    matrix = CrossSimMatrix(
        generators=list(generators),
        simulators=list(simulators),
        tiers=list(tiers),
        state_aggregation=state_aggregation,
    )
    for simulator in simulators:
        for tier in tiers:
            meta_cell = None
            if tier == PersonaTier.META.name:
                group = grouped.get((META_GENERATOR, simulator, tier), [])
                if not group:
                    raise DataError(
                        f"Cell [{simulator}/{tier}] has no question with ground truth"
                    )
                meta_cell = MatrixCell(mean_alignment(group, state_aggregation), len(group))
            for generator in generators:
                if meta_cell is not None:
                    matrix.cells[(generator, simulator, tier)] = meta_cell
                    continue
                group = grouped.get((generator, simulator, tier), [])
                if not group:
                    raise DataError(
                        f"Cell [{generator}/{simulator}/{tier}] has no question with ground truth"
                    )
                matrix.cells[(generator, simulator, tier)] = MatrixCell(
                    mean_alignment(group, state_aggregation), len(group)
                )
    return matrix


"""
Topic variance ranking
"""


@dataclass(frozen=True)
class RankedTopic:
    topic: str
    variance: float
    tier_means: Dict[str, float]
    n_questions: int


@dataclass(frozen=True)
class TopicVarianceRanking:
    """Topics from least to most variance of the alignment across tiers"""

    topics: Tuple[RankedTopic, ...]

    @property
    def order(self) -> List[str]:
        return [t.topic for t in self.topics]


def per_question_tier_scores(scores: Sequence[AlignmentScore]) -> Dict[str, Dict[str, float]]:
    """Mean alignment of every (question, tier) over cohorts and backends"""
    grouped: Dict[str, Dict[str, List[float]]] = {}
    for score in scores:
        grouped.setdefault(score.question_id, {}).setdefault(score.tier, []).append(score.value)
    return {
        qid: {tier: float(numpy.mean(values)) for tier, values in by_tier.items()}
        for qid, by_tier in grouped.items()
    }


def topic_variance_ranking(
    question_scores: Mapping[str, Mapping[str, float]],
    topics: Mapping[str, str],
    topic_order: Optional[Sequence[str]] = None,
    tiers: Sequence[str] = tuple(t.name for t in PersonaTier),
) -> TopicVarianceRanking:
    """
    Per topic: the mean score of each tier over the questions of the topic,
    then the population variance across the tier means. The sort is stable,
    ties keep the topic order (first appearance in topics by default).
    """
    if topic_order is None:
        topic_order = list(dict.fromkeys(topics[q] for q in question_scores if q in topics))

    by_topic: Dict[str, List[str]] = {t: [] for t in topic_order}
    for qid, by_tier in question_scores.items():
        if qid not in topics:
            raise DataError(f"Question [{qid}] has no topic")
        missing = [t for t in tiers if t not in by_tier]
        if missing:
            raise DataError(f"Question [{qid}] has no score for tiers {missing}")
        if topics[qid] not in by_topic:
            raise DataError(f"Question [{qid}] topic [{topics[qid]}] is not ranked")
        by_topic[topics[qid]].append(qid)

    ranked = []
    for topic in topic_order:
        qids = by_topic[topic]
        if not qids:
            raise DataError(f"Topic [{topic}] has no questions")
        tier_means = {
            tier: float(numpy.mean([question_scores[q][tier] for q in qids])) for tier in tiers
        }
        ranked.append(
            RankedTopic(
                topic=topic,
                variance=float(numpy.var(list(tier_means.values()))),
                tier_means=tier_means,
                n_questions=len(qids),
            )
        )
    ranked.sort(key=lambda r: r.variance)
    return TopicVarianceRanking(tuple(ranked))


"""
Elections
"""


def load_election_truth(path: str) -> Dict[str, Tuple[float, float]]:
    """
    Per-state two-party vote shares from a `state,dem_share,rep_share` CSV.
    Shares are normalized to the two-party total.
    """
    truth: Dict[str, Tuple[float, float]] = {}
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = [x.strip().lower() for x in next(reader, [])]
        if header != ["state", "dem_share", "rep_share"]:
            raise DataError(f"[{path}:1] expected header state,dem_share,rep_share")
        for row in reader:
            lineno = reader.line_num
            if not any(x.strip() for x in row):
                continue
            if len(row) != 3:
                raise DataError(f"[{path}:{lineno}] expected 3 columns, got {len(row)}")
            try:
                dem, rep = float(row[1]), float(row[2])
            except ValueError:
                raise DataError(f"[{path}:{lineno}] vote shares are not numbers")
            if dem < 0 or rep < 0 or dem + rep <= 0:
                raise DataError(f"[{path}:{lineno}] invalid vote shares")
            state = row[0].strip()
            if state in truth:
                raise DataError(f"[{path}:{lineno}] duplicated state [{state}]")
            truth[state] = (dem / (dem + rep), rep / (dem + rep))
    if not truth:
        raise DataError(f"[{path}] election truth file has no states")
    return truth


ELECTION_HEADER = ("state", "dem_share", "rep_share", "alignment")


@dataclass(frozen=True)
class ElectionMapRow:
    state: str
    dem_share: float
    rep_share: float
    alignment: float


def election_map(
    distributions: Sequence[ChoiceDistribution],
    truth: Mapping[str, Tuple[float, float]],
) -> List[ElectionMapRow]:
    """
    Simulated two-party share per state (choice 0 is the Democratic candidate,
    choice 1 the Republican one) with its alignment to the actual share, sorted
    by state. States without an actual result are left out.
    """
    rows = []
    for dist in distributions:
        if dist.cohort not in truth:
            continue
        if len(dist.probabilities) != 2:
            raise DataError(f"Election question [{dist.question_id}] must have 2 choices")
        rows.append(
            ElectionMapRow(
                state=dist.cohort,
                dem_share=dist.probabilities[0],
                rep_share=dist.probabilities[1],
                alignment=alignment_score(dist.probabilities, truth[dist.cohort]),
            )
        )
    return sorted(rows, key=lambda r: r.state)


"""
Score files
"""


def write_alignment_csv(path: str, scores: Sequence[AlignmentScore]) -> None:
    write_csv(
        path,
        ALIGNMENT_HEADER,
        (s.to_row()[:-1] + (format_float(s.value),) for s in scores),
    )


def read_alignment_csv(path: str) -> List[AlignmentScore]:
    scores = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != ALIGNMENT_HEADER:
            raise DataError(f"[{path}:1] expected header {','.join(ALIGNMENT_HEADER)}")
        for row in reader:
            try:
                scores.append(
                    AlignmentScore(
                        value=float(row["alignment"]),
                        question_id=row["question_id"],
                        cohort=row["cohort"],
                        tier=row["tier"],
                        generator=row["generator"],
                        simulator=row["simulator"],
                        metric=row["metric"],
                        support=int(row["support"]),
                    )
                )
            except (TypeError, ValueError):
                raise DataError(f"[{path}:{reader.line_num}] malformed alignment row")
    return scores


def election_rows(rows: Sequence[ElectionMapRow]) -> List[Tuple[str, str, str, str]]:
    """Rows of an election map file, matching ELECTION_HEADER"""
    return [
        (r.state, format_float(r.dem_share), format_float(r.rep_share), format_float(r.alignment))
        for r in rows
    ]
