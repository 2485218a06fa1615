from typing import List

from ..artifacts import ALIGNMENT_FILE, load_survey
from ..metrics import (
    ELECTION_HEADER,
    META_GENERATOR,
    cross_simulation,
    election_map,
    election_rows,
    load_election_truth,
    per_question_tier_scores,
    read_alignment_csv,
    topic_variance_ranking,
)
from ..persona import PersonaTier
from ..simulation import read_aggregates_csv
from ..utils import format_float
from ..yaml_format import StageResult
from .common import ReportingBase, ReportTable

ALL_TIERS = [t.name for t in PersonaTier]


class evaluate(ReportingBase):
    @ReportingBase.common_validity_check
    def table_cross_sim_matrix(self, result: StageResult) -> List[ReportTable]:
        """Mean alignment of every (generator, simulator, tier) combination"""
        scores = read_alignment_csv(self.checked_path("evaluate", ALIGNMENT_FILE))
        present = {s.generator for s in scores if s.generator != META_GENERATOR}
        generators = [
            s["name"] for s in self.config.backends["generators"] if s["name"] in present
        ] or [META_GENERATOR]
        simulators = [
            s["name"]
            for s in self.config.backends["simulators"]
            if any(x.simulator == s["name"] for x in scores)
        ]
        tiers = [t for t in ALL_TIERS if any(x.tier == t for x in scores)]
        matrix = cross_simulation(
            scores,
            generators,
            simulators,
            tiers,
            getattr(result.summary, "state_aggregation", "mean"),
        )
        return [
            ReportTable.json(
                "reports/cross_sim_matrix.json", "Cross simulation matrix", matrix.to_dict()
            )
        ]

    @ReportingBase.common_validity_check
    def table_topic_ranking(self, result: StageResult) -> List[ReportTable]:
        """
        Topics from the most to the least stable alignment across the persona
        tiers. Only questions scored for every tier are ranked.
        """
        scores = read_alignment_csv(self.checked_path("evaluate", ALIGNMENT_FILE))
        by_question = {
            qid: by_tier
            for qid, by_tier in per_question_tier_scores(scores).items()
            if all(t in by_tier for t in ALL_TIERS)
        }
        if not by_question:
            self.loginfo("Topic ranking needs scores of all persona tiers, skipping")
            return []
        questions, _ = load_survey(self.config.simulation["questions"])
        topics = {q.id: q.topic for q in questions}
        # Question file order, so that ties are stable between runs
        order = list(dict.fromkeys(q.topic for q in questions if q.id in by_question))
        ranking = topic_variance_ranking(by_question, topics, order, ALL_TIERS)
        return [
            ReportTable.csv(
                "reports/topic_ranking.csv",
                "Topic variance ranking",
                ("rank", "topic", "variance", "n_questions", *ALL_TIERS),
                (
                    (
                        rank,
                        topic.topic,
                        format_float(topic.variance),
                        topic.n_questions,
                        *(format_float(topic.tier_means[t]) for t in ALL_TIERS),
                    )
                    for rank, topic in enumerate(ranking.topics, start=1)
                ),
            )
        ]

    @ReportingBase.common_validity_check
    def table_election_maps(self, result: StageResult) -> List[ReportTable]:
        tables = []
        for election in self.config.elections:
            truth = load_election_truth(election.truth)
            for entry in result.data_files:
                if entry.desc != "Cohort choice distributions":
                    continue
                distributions = [
                    d
                    for d in read_aggregates_csv(self.checked_path("evaluate", entry.path))
                    if d.question_id == election.question_id
                ]
                rows = election_map(distributions, truth)
                if not rows:
                    continue
                tag = f"{entry.generator}__{entry.tier}__{entry.simulator}"
                tables.append(
                    ReportTable.csv(
                        f"reports/election__{election.question_id}__{tag}.csv",
                        "Election map",
                        ELECTION_HEADER,
                        election_rows(rows),
                    )
                )
        return tables
