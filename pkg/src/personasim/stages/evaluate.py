import os
from dataclasses import dataclass
from typing import Annotated, Dict, List, Mapping, Sequence, Tuple

from ..artifacts import (
    ALIGNMENT_FILE,
    EVALUATION_FILE,
    aggregates_file,
    load_survey,
    populations,
    records_file,
)
from ..config import RunConfig
from ..errors import DataError
from ..metrics import (
    AlignmentScore,
    distance_for,
    load_election_truth,
    mean_alignment,
    score_distributions,
    write_alignment_csv,
)
from ..simulation import (
    ALL_COHORT,
    ChoiceDistribution,
    SurveyQuestion,
    aggregate,
    cohort_key,
    read_records,
    write_aggregates_csv,
)
from ..utils import atomic_write_text, json_text
from ..yaml_format import RunManifest
from ._argument_validation import StrChoices
from ._stage_base import StageBase


@dataclass(kw_only=True)
class evaluate(StageBase):
    """
    Aggregating the simulated answers per cohort and scoring them against the
    reference distributions: the national ground truth of the questions, and
    the per-state results of the configured elections.
    """

    state_aggregation: Annotated[
        str,
        "Averaging over states (evaluation.state_aggregation if empty)",
        StrChoices(["", "mean", "pooled"]),
    ] = ""

    def run(self, config: RunConfig, manifest: RunManifest):
        state_aggregation = self.state_aggregation or config.evaluation["state_aggregation"]
        questions, sources = load_survey(config.simulation["questions"])
        by_id = {q.id: q for q in questions}
        truths = self.reference_distributions(config, questions, sources)

        cohorts = [ALL_COHORT, config.simulation["cohort"].upper()]
        if config.elections:
            cohorts.append("STATE")
        cohorts = list(dict.fromkeys(cohorts))

        generators = [s["name"] for s in config.backends["generators"]]
        simulators = [s["name"] for s in config.backends["simulators"]]
        scores: List[AlignmentScore] = []
        means: Dict[str, float] = {}
        for simulator in simulators:
            for generator, tier in populations(generators, config.simulation_tiers):
                rel_path = records_file(generator, tier.name, simulator)
                found, _ = manifest.find_output("simulate", rel_path)
                if found is None:
                    self.logwarn(f"No simulation output [{rel_path}], skipping")
                    continue
                records = read_records(self.require_upstream(manifest, "simulate", rel_path))
                if not records:
                    self.logwarn(f"Simulation output [{rel_path}] is empty, skipping")
                    continue

                distributions: List[ChoiceDistribution] = []
                for cohort in cohorts:
                    distributions.extend(aggregate(records, cohort_key(cohort)))
                distributions.sort(key=lambda d: (d.question_id, d.cohort))
                self.check_choice_counts(distributions, by_id)
                write_aggregates_csv(
                    self.add_data(
                        aggregates_file(generator, tier.name, simulator),
                        desc="Cohort choice distributions",
                        generator=generator,
                        tier=tier.name,
                        simulator=simulator,
                    ),
                    distributions,
                )

                population = score_distributions(
                    distributions, by_id, truths, tier.name, generator, simulator
                )
                if population:
                    means[f"{generator}__{tier.name}__{simulator}"] = mean_alignment(
                        population, state_aggregation
                    )
                scores.extend(population)

        if not scores:
            raise DataError(
                "No simulated distribution has a reference distribution, check that the"
                " simulate stage has run for the configured backends and tiers"
            )
        write_alignment_csv(self.add_data(ALIGNMENT_FILE, desc="Alignment scores"), scores)
        atomic_write_text(
            self.add_data(EVALUATION_FILE, desc="Evaluation metadata"),
            json_text(
                {
                    "state_aggregation": state_aggregation,
                    "cohorts": cohorts,
                    "metrics": {q.id: distance_for(q)[0] for q in questions},
                    "choices_offered": "as listed in the question files, including"
                    " non-substantive options such as Refused",
                    "question_files": [
                        os.path.relpath(path, config.base_dir)
                        for path in config.simulation["questions"]
                    ],
                    "mean_alignment": means,
                    "n_scores": len(scores),
                }
            ),
        )
        self.loginfo(f"Scored {len(scores)} distributions over {len(means)} populations")
        self.set_summary(
            "Alignment evaluation",
            n_scores=len(scores),
            n_populations=len(means),
            state_aggregation=state_aggregation,
        )

    def reference_distributions(
        self,
        config: RunConfig,
        questions: Sequence[SurveyQuestion],
        sources: Mapping[str, str],
    ) -> Dict[Tuple[str, str], Tuple[float, ...]]:
        """
        Reference distributions keyed by (question id, cohort): the national
        ground truth under the ALL cohort, election results under each state.
        """
        truths: Dict[Tuple[str, str], Tuple[float, ...]] = {
            (q.id, ALL_COHORT): q.ground_truth for q in questions if q.ground_truth is not None
        }
        for election in config.elections:
            if election.question_id not in sources:
                raise DataError(
                    f"Election question [{election.question_id}] is not in any question file"
                )
            question = next(q for q in questions if q.id == election.question_id)
            if question.n_choices != 2:
                raise DataError(f"Election question [{question.id}] must have 2 choices")
            for state, shares in load_election_truth(election.truth).items():
                truths[(question.id, state)] = shares
        if not truths:
            files = ", ".join(sorted(set(sources.values())))
            raise DataError(
                f"No question has a ground truth distribution in question files [{files}]"
                " and no election result is configured"
            )
        return truths

    @staticmethod
    def check_choice_counts(
        distributions: Sequence[ChoiceDistribution], questions: Mapping[str, SurveyQuestion]
    ) -> None:
        for dist in distributions:
            question = questions.get(dist.question_id)
            if question is None:
                raise DataError(f"Records answer unknown question [{dist.question_id}]")
            if len(dist.counts) != question.n_choices:
                raise DataError(
                    f"Records of question [{question.id}] have {len(dist.counts)} choices,"
                    f" the question file lists {question.n_choices}"
                )
