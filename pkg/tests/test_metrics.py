import itertools

import numpy
import pytest
from scipy.stats import wasserstein_distance

from personasim.errors import DataError
from personasim.metrics import (
    AlignmentScore,
    alignment_score,
    as_distribution,
    cross_simulation,
    election_map,
    load_election_truth,
    mean_alignment,
    per_question_tier_scores,
    read_alignment_csv,
    score_distributions,
    topic_variance_ranking,
    total_variation,
    wasserstein_1d,
    write_alignment_csv,
)
from personasim.simulation import ChoiceDistribution, SurveyQuestion

TIERS = ["META", "OBJECTIVE_TABULAR", "SUBJECTIVE_TABULAR", "DESCRIPTIVE"]


"""
Distances
"""


def test_wasserstein_matches_scipy():
    rng = numpy.random.default_rng(2024)
    for _ in range(1000):
        k = int(rng.integers(2, 11))
        p, q = rng.dirichlet(numpy.ones(k)), rng.dirichlet(numpy.ones(k))
        support = numpy.arange(k)
        expected = wasserstein_distance(support, support, p, q) / (k - 1)
        assert wasserstein_1d(p, q) == pytest.approx(expected, abs=1e-12)


def test_wasserstein_is_a_metric():
    rng = numpy.random.default_rng(5)
    for _ in range(200):
        p, q, r = (rng.dirichlet(numpy.ones(6)) for _ in range(3))
        assert wasserstein_1d(p, p) == 0.0
        assert wasserstein_1d(p, q) == pytest.approx(wasserstein_1d(q, p), abs=1e-15)
        assert wasserstein_1d(p, r) <= wasserstein_1d(p, q) + wasserstein_1d(q, r) + 1e-12
        assert 0.0 <= wasserstein_1d(p, q) <= 1.0


def test_binary_case_is_exact():
    for a, b in [(0.0, 1.0), (0.3, 0.7), (0.25, 0.25), (1.0, 0.5)]:
        assert wasserstein_1d([a, 1 - a], [b, 1 - b]) == pytest.approx(abs(a - b), abs=1e-15)


@pytest.mark.parametrize("k", [3, 5, 8])
def test_translated_point_masses(k):
    for i, j in itertools.product(range(k), repeat=2):
        p, q = numpy.eye(k)[i], numpy.eye(k)[j]
        assert wasserstein_1d(p, q) == pytest.approx(abs(i - j) / (k - 1))


def test_reversed_three_point_example():
    p, q = [0.2, 0.3, 0.5], [0.5, 0.3, 0.2]
    assert wasserstein_1d(p, q) == pytest.approx(0.3)
    assert alignment_score(p, q) == pytest.approx(0.7)


def test_total_variation():
    assert total_variation([0.5, 0.5, 0.0], [0.0, 0.5, 0.5]) == pytest.approx(0.5)
    assert total_variation([1, 0, 0, 0], [0, 0, 0, 1]) == pytest.approx(1.0)
    assert alignment_score([1, 0, 0, 0], [0, 0, 0, 1], "tv") == pytest.approx(0.0)


@pytest.mark.parametrize(
    "p, q",
    [
        ([1.0], [1.0]),
        ([0.5, 0.6], [0.5, 0.5]),
        ([-0.5, 1.5], [0.5, 0.5]),
        ([0.5, 0.5], [0.2, 0.3, 0.5]),
    ],
)
def test_invalid_distributions(p, q):
    with pytest.raises(ValueError):
        wasserstein_1d(p, q)


def test_as_distribution():
    assert list(as_distribution((0.25, 0.75))) == [0.25, 0.75]
    with pytest.raises(ValueError):
        as_distribution([[0.5, 0.5]])


"""
Scores and means
"""


def score(value, qid="Q", cohort="ALL", tier="META", generator="census", simulator="sim", support=1):
    return AlignmentScore(
        value=value,
        question_id=qid,
        cohort=cohort,
        tier=tier,
        generator=generator,
        simulator=simulator,
        support=support,
    )


def test_score_distributions_picks_the_metric():
    questions = {
        "ORD": SurveyQuestion(id="ORD", topic="", text="?", choices=("a", "b", "c")),
        "NOM": SurveyQuestion(id="NOM", topic="", text="?", choices=("a", "b", "c"), ordinal=False),
    }
    distributions = [
        ChoiceDistribution("NOM", "ALL", (1.0, 0.0, 0.0), (4, 0, 0)),
        ChoiceDistribution("ORD", "ALL", (1.0, 0.0, 0.0), (4, 0, 0)),
        ChoiceDistribution("ORD", "Ohio", (1.0, 0.0, 0.0), (4, 0, 0)),
    ]
    truths = {("NOM", "ALL"): (0.0, 0.0, 1.0), ("ORD", "ALL"): (0.0, 0.0, 1.0)}
    nom, ord_ = score_distributions(distributions, questions, truths, "META", "census", "sim")
    assert (nom.metric, nom.value) == ("tv", 0.0)
    assert (ord_.metric, ord_.value) == ("wasserstein", 0.0)
    assert ord_.support == 4


def test_mean_and_pooled():
    scores = [score(1.0, support=1), score(0.0, cohort="Ohio", support=3)]
    assert mean_alignment(scores) == pytest.approx(0.5)
    assert mean_alignment(scores, "pooled") == pytest.approx(0.25)
    # Pooling without supports falls back to the plain mean
    assert mean_alignment([score(1.0, support=0), score(0.0, support=0)], "pooled") == 0.5
    with pytest.raises(ValueError):
        mean_alignment(scores, "median")


"""
Cross-simulation matrix
"""


def test_meta_cell_is_replicated():
    scores = [score(0.6), score(0.8, qid="Q2")]
    for g in ("g1", "g2", "g3"):
        scores.append(score(0.5, tier="DESCRIPTIVE", generator=g))
    matrix = cross_simulation(scores, ["g1", "g2", "g3"], ["sim"], ["META", "DESCRIPTIVE"])
    cells = {matrix.cell(g, "sim", "META") for g in ("g1", "g2", "g3")}
    assert len(cells) == 1
    (cell,) = cells
    assert cell.mean == pytest.approx(0.7) and cell.count == 2


def test_matrix_matches_flat_loop():
    rng = numpy.random.default_rng(8)
    generators, simulators = ["g1", "g2"], ["s1", "s2"]
    scores = []
    for g, s, t in itertools.product(generators, simulators, TIERS):
        for q in range(5):
            scores.append(
                score(float(rng.random()), qid=f"Q{q}", tier=t, generator="census" if t == "META" else g, simulator=s)
            )
    # META scores were drawn once per generator, all under "census"
    matrix = cross_simulation(scores, generators, simulators, TIERS)

    for g, s, t in itertools.product(generators, simulators, TIERS):
        values = [
            x.value
            for x in scores
            if x.simulator == s and x.tier == t and (t == "META" or x.generator == g)
        ]
        cell = matrix.cell(g, s, t)
        assert cell.mean == pytest.approx(sum(values) / len(values), abs=1e-12)
        assert cell.count == len(values)

    as_dict = matrix.to_dict()
    assert as_dict["dimensions"]["tiers"] == TIERS
    assert as_dict["cells"]["g1"]["s2"]["DESCRIPTIVE"]["count"] == 5


def test_empty_cell():
    scores = [score(1.0), score(1.0, tier="DESCRIPTIVE", generator="g1")]
    with pytest.raises(DataError):
        cross_simulation(scores, ["g1", "g2"], ["sim"], ["META", "DESCRIPTIVE"])
    with pytest.raises(DataError):
        cross_simulation(scores[1:], ["g1"], ["sim"], ["META", "DESCRIPTIVE"])


def test_trivial_cell():
    matrix = cross_simulation([score(1.0)], ["g1"], ["sim"], ["META"])
    assert matrix.cell("g1", "sim", "META").mean == 1.0


"""
Topic ranking
"""


def test_topic_variance_example():
    question_scores = {
        "Q1": dict(zip(TIERS, (1.0, 1.0, 1.0, 0.0))),
        "Q2": dict(zip(TIERS, (0.5, 0.5, 0.5, 0.5))),
    }
    ranking = topic_variance_ranking(question_scores, {"Q1": "Split", "Q2": "Flat"})
    assert ranking.order == ["Flat", "Split"]
    assert ranking.topics[0].variance == 0.0
    assert ranking.topics[1].variance == pytest.approx(0.1875)
    assert ranking.topics[1].tier_means["DESCRIPTIVE"] == 0.0


def test_topic_ranking_recompute():
    rng = numpy.random.default_rng(21)
    names = ["Economy", "Climate", "Health"]
    topics = {f"Q{i}": names[i % 3] for i in range(30)}
    question_scores = {q: dict(zip(TIERS, rng.random(4))) for q in topics}
    ranking = topic_variance_ranking(question_scores, topics)

    expected = {}
    for name in names:
        qids = [q for q, t in topics.items() if t == name]
        means = [sum(question_scores[q][t] for q in qids) / len(qids) for t in TIERS]
        mu = sum(means) / 4
        expected[name] = sum((m - mu) ** 2 for m in means) / 4

    assert ranking.order == sorted(names, key=expected.get)
    for ranked in ranking.topics:
        assert ranked.variance == pytest.approx(expected[ranked.topic], abs=1e-12)
        assert ranked.n_questions == 10


def test_topic_ties_keep_order():
    flat = dict(zip(TIERS, (0.5,) * 4))
    question_scores = {"Q1": flat, "Q2": flat, "Q3": flat}
    topics = {"Q1": "B", "Q2": "A", "Q3": "C"}
    assert topic_variance_ranking(question_scores, topics).order == ["B", "A", "C"]
    assert topic_variance_ranking(question_scores, topics, ["C", "B", "A"]).order == ["C", "B", "A"]


def test_topic_ranking_errors():
    flat = dict(zip(TIERS, (0.5,) * 4))
    with pytest.raises(DataError):
        topic_variance_ranking({"Q1": {"META": 0.5}}, {"Q1": "A"})
    with pytest.raises(DataError):
        topic_variance_ranking({"Q1": flat}, {})
    with pytest.raises(DataError):
        topic_variance_ranking({"Q1": flat}, {"Q1": "A"}, ["A", "Empty"])
    with pytest.raises(DataError):
        topic_variance_ranking({"Q1": flat}, {"Q1": "A"}, ["B"])


def test_per_question_tier_scores():
    scores = [score(1.0), score(0.5, cohort="Ohio"), score(0.2, tier="DESCRIPTIVE", generator="g")]
    assert per_question_tier_scores(scores) == {"Q": {"META": 0.75, "DESCRIPTIVE": 0.2}}


"""
Elections and score files
"""


def test_election_truth_is_normalized(tmp_path):
    path = tmp_path / "election.csv"
    path.write_text("state,dem_share,rep_share\nOhio,45,53\n\nIowa,0.5,0.5\n", encoding="utf-8")
    truth = load_election_truth(str(path))
    assert truth["Ohio"] == pytest.approx((45 / 98, 53 / 98))
    assert truth["Iowa"] == (0.5, 0.5)


@pytest.mark.parametrize(
    "text",
    [
        "state,dem,rep\nOhio,1,1\n",
        "state,dem_share,rep_share\nOhio,1\n",
        "state,dem_share,rep_share\nOhio,one,1\n",
        "state,dem_share,rep_share\nOhio,0,0\n",
        "state,dem_share,rep_share\nOhio,1,1\nOhio,1,2\n",
        "state,dem_share,rep_share\n",
    ],
)
def test_bad_election_truth(tmp_path, text):
    path = tmp_path / "election.csv"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(DataError):
        load_election_truth(str(path))


def test_election_map():
    distributions = [
        ChoiceDistribution("PRES", "Texas", (0.25, 0.75), (1, 3)),
        ChoiceDistribution("PRES", "Guam", (0.5, 0.5), (1, 1)),
        ChoiceDistribution("PRES", "Ohio", (1.0, 0.0), (2, 0)),
    ]
    truth = {"Ohio": (0.5, 0.5), "Texas": (0.25, 0.75)}
    rows = election_map(distributions, truth)
    assert [r.state for r in rows] == ["Ohio", "Texas"]
    assert rows[0].dem_share == 1.0 and rows[0].alignment == pytest.approx(0.5)
    assert rows[1].alignment == pytest.approx(1.0)
    with pytest.raises(DataError):
        election_map([ChoiceDistribution("PRES", "Ohio", (1.0, 0.0, 0.0), (1, 0, 0))], truth)


def test_alignment_file(tmp_path):
    scores = [score(0.1 + 0.2, support=3), score(1 / 3, tier="DESCRIPTIVE", generator="g")]
    path = str(tmp_path / "alignment.csv")
    write_alignment_csv(path, scores)
    assert read_alignment_csv(path) == scores
