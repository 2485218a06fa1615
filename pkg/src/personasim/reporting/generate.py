from typing import Dict, List, Tuple

from ..artifacts import META_PERSONA_FILE, persona_file
from ..census import read_meta_personas
from ..metrics import META_GENERATOR
from ..persona import (
    GENERATED_TIERS,
    Persona,
    PersonaTier,
    meta_of,
    persona_text,
    read_persona_entries,
)
from ..text_analysis import (
    SentimentLexicon,
    default_lexicon,
    default_stopwords,
    load_lexicon,
    load_stopwords,
    sentiment_by_tier,
    word_frequencies,
)
from ..utils import format_float
from ..yaml_format import StageResult
from .common import ReportingBase, ReportTable


class generate(ReportingBase):
    top_n: int = 0

    def persona_groups(self) -> Dict[Tuple[str, str], List[Persona]]:
        """
        Personas of every (generator, tier) population with a successfully
        produced persona file, in configuration order. Meta personas come
        first, under the census generator.
        """
        groups: Dict[Tuple[str, str], List[Persona]] = {}
        if self.manifest.find_output("sample", META_PERSONA_FILE)[1] is not None:
            path = self.checked_path("sample", META_PERSONA_FILE)
            groups[(META_GENERATOR, PersonaTier.META.name)] = list(read_meta_personas(path))
        for spec in self.config.backends["generators"]:
            for tier in GENERATED_TIERS:
                rel_path = persona_file(spec["name"], tier.name)
                if self.manifest.find_output("generate", rel_path)[1] is None:
                    continue
                entries = read_persona_entries(self.checked_path("generate", rel_path))
                if entries:
                    groups[(spec["name"], tier.name)] = [e.persona for e in entries]
        return groups

    def lexicon(self) -> SentimentLexicon:
        report = self.config.report
        if report["lexicon"] is None:
            return default_lexicon()
        return load_lexicon(report["lexicon"], report["negators"], report["intensifiers"])

    @ReportingBase.common_validity_check
    def table_sentiment_by_tier(self, result: StageResult) -> List[ReportTable]:
        groups = self.persona_groups()
        scored = sentiment_by_tier(
            {f"{generator}__{tier}": personas for (generator, tier), personas in groups.items()},
            self.lexicon(),
        )
        return [
            ReportTable.csv(
                "reports/sentiment_by_tier.csv",
                "Persona sentiment",
                ("generator", "tier", "polarity", "subjectivity", "count"),
                (
                    (
                        generator,
                        tier,
                        format_float(s.polarity),
                        format_float(s.subjectivity),
                        s.count,
                    )
                    for (generator, tier), s in zip(groups.keys(), scored)
                ),
            )
        ]

    @ReportingBase.common_validity_check
    def table_word_frequencies(self, result: StageResult) -> List[ReportTable]:
        """
        Most frequent narrative words of the descriptive personas, pooled over
        generators and split by the configured cohort.
        """
        report = self.config.report
        stopwords = (
            default_stopwords()
            if report["stopwords"] is None
            else load_stopwords(report["stopwords"])
        )
        cohort = str(report["wordcloud_cohort"]).upper()
        by_cohort: Dict[str, List[str]] = {}
        for (_, tier), personas in self.persona_groups().items():
            if tier != PersonaTier.DESCRIPTIVE.name:
                continue
            for persona in personas:
                by_cohort.setdefault(self.cohort_of(persona, cohort), []).append(
                    persona_text(persona)
                )
        if not by_cohort:
            self.logwarn("No descriptive personas, word frequency table is empty")

        rows = []
        for name in sorted(by_cohort):
            table = word_frequencies(
                by_cohort[name], stopwords, self.top_n or report["top_n"], cohort=name
            )
            rows.extend((table.cohort, token, count) for token, count in table.entries)
        return [
            ReportTable.csv(
                "reports/word_frequencies.csv",
                "Word frequencies",
                ("cohort", "token", "count"),
                rows,
            )
        ]

    @staticmethod
    def cohort_of(persona: Persona, cohort: str) -> str:
        if cohort == "ALL":
            return "ALL"
        if cohort == "TIER":
            return PersonaTier.DESCRIPTIVE.name
        return str(meta_of(persona).to_record()[cohort])
