"""
text_analysis.py

Diagnostics of persona texts: lexicon based sentiment polarity and
subjectivity, and word frequency tables (the source data of word clouds).

Sentiment rules: text is tokenized on Unicode word boundaries and lowercased,
with apostrophes kept inside tokens. Each token found in the lexicon
contributes its (polarity, subjectivity) pair. An intensifier immediately
before the token scales its polarity by the intensifier multiplier, and a
negator within the 2 tokens before it flips the polarity sign; the polarity is
then clamped to [-1, 1]. The score of a text is the mean of the contributions,
and (0, 0) if no token matches.
"""

import collections
import csv
import logging
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import FrozenSet, Iterable, List, Mapping, Sequence, Tuple

from .errors import DataError
from .persona import Persona, persona_text

logger = logging.getLogger("PersonaSim.text_analysis")

_TOKEN = re.compile(r"[^\W\d_]+(?:'[^\W\d_]+)*")
NEGATION_WINDOW = 2


def tokenize(text: str) -> List[str]:
    return _TOKEN.findall(text.replace("’", "'").lower())


@dataclass(frozen=True)
class SentimentLexicon:
    entries: Mapping[str, Tuple[float, float]]
    negators: FrozenSet[str] = frozenset()
    intensifiers: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for token, (polarity, subjectivity) in self.entries.items():
            if not -1 <= polarity <= 1:
                raise DataError(f"Lexicon entry [{token}] polarity outside of [-1, 1]")
            if not 0 <= subjectivity <= 1:
                raise DataError(f"Lexicon entry [{token}] subjectivity outside of [0, 1]")
        for token, multiplier in self.intensifiers.items():
            if multiplier <= 0:
                raise DataError(f"Intensifier [{token}] multiplier must be positive")


@dataclass(frozen=True)
class SentimentScore:
    polarity: float
    subjectivity: float


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(hi, max(lo, x))


def analyze_sentiment(text: str, lexicon: SentimentLexicon) -> SentimentScore:
    if not lexicon.entries:
        raise ValueError("Sentiment lexicon is empty")
    tokens = tokenize(text)
    polarities, subjectivities = [], []
    for i, token in enumerate(tokens):
        if token not in lexicon.entries:
            continue
        polarity, subjectivity = lexicon.entries[token]
        if i > 0 and tokens[i - 1] in lexicon.intensifiers:
            polarity *= lexicon.intensifiers[tokens[i - 1]]
        if any(t in lexicon.negators for t in tokens[max(0, i - NEGATION_WINDOW) : i]):
            polarity = -polarity
        polarities.append(_clamp(polarity, -1.0, 1.0))
        subjectivities.append(_clamp(subjectivity, 0.0, 1.0))
    if not polarities:
        return SentimentScore(0.0, 0.0)
    n = len(polarities)
    return SentimentScore(
        _clamp(math.fsum(polarities) / n, -1.0, 1.0),
        _clamp(math.fsum(subjectivities) / n, 0.0, 1.0),
    )


@dataclass(frozen=True)
class TierSentiment:
    tier: str
    polarity: float
    subjectivity: float
    count: int


def sentiment_by_tier(
    groups: Mapping[str, Sequence[Persona]], lexicon: SentimentLexicon
) -> List[TierSentiment]:
    """
    Mean polarity and subjectivity of each group of personas. Tabular
    personas are scored on their concatenated field values, descriptive
    personas on their narrative.
    """
    results = []
    for tier, personas in groups.items():
        if not personas:
            raise ValueError(f"Persona group [{tier}] is empty")
        scores = [analyze_sentiment(persona_text(p), lexicon) for p in personas]
        results.append(
            TierSentiment(
                tier=tier,
                polarity=math.fsum(s.polarity for s in scores) / len(scores),
                subjectivity=math.fsum(s.subjectivity for s in scores) / len(scores),
                count=len(scores),
            )
        )
    return results


@dataclass(frozen=True)
class WordFrequencyTable:
    cohort: str
    entries: Tuple[Tuple[str, int], ...]
    total: int  # non-stopword tokens before truncation


def word_frequencies(
    texts: Iterable[str], stopwords: Iterable[str], top_n: int, cohort: str = "ALL"
) -> WordFrequencyTable:
    """Most frequent non-stopword tokens, ties broken lexicographically"""
    if top_n < 1:
        raise ValueError(f"top_n must be at least 1, got [{top_n}]")
    stopwords = set(stopwords)
    counter = collections.Counter()
    for text in texts:
        counter.update(t for t in tokenize(text) if t not in stopwords)
    ranked = sorted(counter.items(), key=lambda x: (-x[1], x[0]))
    return WordFrequencyTable(
        cohort=cohort, entries=tuple(ranked[:top_n]), total=sum(counter.values())
    )


"""
Resource loading
"""


def _data_path(name: str):
    return resources.files("personasim").joinpath("data").joinpath(name)


def _read_lines(path) -> List[str]:
    with open(path, "r", encoding="utf-8") as f:
        return [line.strip().lower() for line in f if line.strip() and not line.startswith("#")]


def _read_table(path, columns: int) -> Iterable[Tuple[int, List[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        next(reader, None)  # header
        for row in reader:
            if not row or not any(x.strip() for x in row):
                continue
            if len(row) != columns:
                raise DataError(f"[{path}:{reader.line_num}] expected {columns} columns")
            yield reader.line_num, [x.strip() for x in row]


def load_lexicon(
    path, negators_path=None, intensifiers_path=None
) -> SentimentLexicon:
    """
    Lexicon from a `token,polarity,subjectivity` file, with optional negator
    (one token per line) and intensifier (`token,multiplier`) files.
    """
    entries = {}
    for lineno, (token, polarity, subjectivity) in _read_table(path, 3):
        try:
            entries[token.lower()] = (float(polarity), float(subjectivity))
        except ValueError:
            raise DataError(f"[{path}:{lineno}] scores are not numbers")
    negators = frozenset(_read_lines(negators_path)) if negators_path else frozenset()
    intensifiers = {}
    if intensifiers_path:
        for lineno, (token, multiplier) in _read_table(intensifiers_path, 2):
            try:
                intensifiers[token.lower()] = float(multiplier)
            except ValueError:
                raise DataError(f"[{intensifiers_path}:{lineno}] multiplier is not a number")
    return SentimentLexicon(entries=entries, negators=negators, intensifiers=intensifiers)


def load_stopwords(path) -> FrozenSet[str]:
    return frozenset(_read_lines(path))


def default_lexicon() -> SentimentLexicon:
    with resources.as_file(_data_path("lexicon.csv")) as lexicon, resources.as_file(
        _data_path("negators.txt")
    ) as negators, resources.as_file(_data_path("intensifiers.csv")) as intensifiers:
        return load_lexicon(lexicon, negators, intensifiers)


def default_stopwords() -> FrozenSet[str]:
    with resources.as_file(_data_path("stopwords.txt")) as stopwords:
        return load_stopwords(stopwords)
