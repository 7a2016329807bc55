"""Three-level line-list extraction.

Level 0 finds case-starting sentences with demographic regexes and splits the
bulletin into per-case sentence windows. Level 1 assigns each date feature the
date phrase at the shortest dependency distance from any of the feature's
indicators. Level 2 classifies clinical features Y/N by searching for negation
cues adjacent to an indicator (direct) or to one of its ancestors (indirect).
Per-indicator outputs are combined by majority vote.
"""

from __future__ import annotations

import csv
import datetime
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import Bulletin, Sentence
from .depgraph import DepGraph, build_graph, dependency_distance, neighbors, predecessors
from .embeddings import EmbeddingModel, IndicatorSet, SeedNotInVocabularyError, grow_seed

logger = logging.getLogger(__name__)

FEATURES = (
    "age",
    "gender",
    "onset_date",
    "hospitalization_date",
    "outcome_date",
    "animal_contact",
    "secondary_contact",
    "comorbidities",
    "specified_hcw",
)
DATE_FEATURES = ("onset_date", "hospitalization_date", "outcome_date")
CLINICAL_FEATURES = ("animal_contact", "secondary_contact", "comorbidities", "specified_hcw")

CSV_HEADER = ("bulletin_id", "case") + FEATURES

# Demographic patterns, applied with search semantics, case-insensitively,
# to the raw sentence text.
AGE_GENDER_RE = re.compile(
    r"\s+(?P<age>\d{1,2})(.{0,20})(\s+|-)(?P<gender>woman|man|male|female|boy|girl|housewife)",
    re.IGNORECASE,
)
AGE_RE = re.compile(r"\s+(?P<age>\d{1,2})\s*years?(\s|-)old", re.IGNORECASE)
GENDER_RE = re.compile(
    r"\s*(?P<gender>woman|man|male|female|boy|girl|housewife|he|she)", re.IGNORECASE
)

_GENDER_CATEGORY = {
    "man": "male", "male": "male", "boy": "male", "he": "male",
    "woman": "female", "female": "female", "girl": "female",
    "housewife": "female", "she": "female",
}


def normalize_gender(text: str | None) -> str | None:
    if text is None:
        return None
    key = text.strip().lower()
    if key in ("m", "f"):
        return "male" if key == "m" else "female"
    return _GENDER_CATEGORY.get(key)


@dataclass
class LineListCase:
    """One extracted patient row: nine nullable features plus provenance."""

    bulletin_id: str
    case_ordinal: int
    starting_sentence: int = 0
    age: int | None = None
    gender: str | None = None
    onset_date: datetime.date | None = None
    hospitalization_date: datetime.date | None = None
    outcome_date: datetime.date | None = None
    animal_contact: str | None = None
    secondary_contact: str | None = None
    comorbidities: str | None = None
    specified_hcw: str | None = None


@dataclass(frozen=True)
class CaseWindow:
    """Sentence indices of one case: from its starting sentence up to, and
    excluding, the next case's starting sentence (or the document end)."""

    start: int
    stop: int

    def indices(self) -> range:
        return range(self.start, self.stop)


@dataclass(frozen=True)
class FeatureSpec:
    feature: str
    seed: str
    level: int

    def __post_init__(self):
        if self.level not in (1, 2):
            raise ValueError(f"feature {self.feature!r}: level must be 1 or 2")


DEFAULT_FEATURE_SPECS = (
    FeatureSpec("onset_date", "onset", 1),
    FeatureSpec("hospitalization_date", "hospitalized", 1),
    FeatureSpec("outcome_date", "died", 1),
    FeatureSpec("animal_contact", "animals", 2),
    FeatureSpec("secondary_contact", "contact", 2),
    FeatureSpec("comorbidities", "comorbidities", 2),
    FeatureSpec("specified_hcw", "healthcare", 2),
)


def load_feature_specs(path, defaults=DEFAULT_FEATURE_SPECS) -> tuple[FeatureSpec, ...]:
    """Read ``feature=seed_word`` override lines and merge them into the
    default specs. Unknown feature names are rejected."""
    by_feature = {spec.feature: spec for spec in defaults}
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}: line {line_no}: expected feature=seed_word")
        feature, seed = (part.strip() for part in line.split("=", 1))
        if feature not in by_feature:
            raise ValueError(f"{path}: line {line_no}: unknown feature {feature!r}")
        old = by_feature[feature]
        by_feature[feature] = FeatureSpec(feature, seed.lower(), old.level)
    return tuple(by_feature[spec.feature] for spec in defaults)


def load_negation_cues(path=None) -> frozenset[str]:
    """Load the negation-cue lexicon, one cue per line; the packaged default
    is used when no path is given."""
    if path is None:
        text = resources.files("linelister").joinpath("data/negation_cues.txt").read_text()
    else:
        text = Path(path).read_text()
    cues = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            cues.add(line)
    return frozenset(cues)


def level0_extract(bulletin: Bulletin) -> list[tuple[LineListCase, CaseWindow]]:
    """Find case-starting sentences and their demographic captures.

    A sentence starts a case when the combined age+gender pattern fires, or
    when the age pattern and the gender pattern both fire. Windows run from
    each starting sentence up to the next one (or the document end).
    """
    starts: list[tuple[int, int, str | None]] = []
    for idx, sentence in enumerate(bulletin.sentences):
        text = sentence.text
        both = AGE_GENDER_RE.search(text)
        if both is not None:
            starts.append((idx, int(both["age"]), normalize_gender(both["gender"])))
            continue
        age_match = AGE_RE.search(text)
        gender_match = GENDER_RE.search(text)
        if age_match is not None and gender_match is not None:
            starts.append(
                (idx, int(age_match["age"]), normalize_gender(gender_match["gender"]))
            )
    cases = []
    for ordinal, (idx, age, gender) in enumerate(starts, start=1):
        stop = starts[ordinal][0] if ordinal < len(starts) else len(bulletin.sentences)
        case = LineListCase(
            bulletin_id=bulletin.id,
            case_ordinal=ordinal,
            starting_sentence=idx,
            age=age,
            gender=gender,
        )
        cases.append((case, CaseWindow(start=idx, stop=stop)))
    return cases


def token_matches(token, word: str) -> bool:
    """Indicator-to-token match: lowercased lemma equality, falling back to
    lowercased surface equality."""
    return token.lemma.lower() == word or token.surface.lower() == word


def _mention_indices(sentence: Sentence, word: str) -> list[int]:
    return [t.index for t in sentence.tokens if token_matches(t, word)]


def majority_vote(outputs, distances=None):
    """Most frequent value of ``outputs`` (None when empty).

    ``outputs`` is ordered by indicator (seed first); frequency ties go to the
    value produced by the earliest indicator, then (for date features, via
    ``distances``) to the value with the smallest per-indicator dependency
    distance.
    """
    outputs = list(outputs)
    if not outputs:
        return None
    counts = Counter(outputs)
    best = max(counts.values())
    candidates = [v for v in counts if counts[v] == best]
    if len(candidates) == 1:
        return candidates[0]
    first_position = {}
    for pos, value in enumerate(outputs):
        first_position.setdefault(value, pos)
    min_distance = {}
    if distances is not None:
        for value, distance in zip(outputs, distances):
            if value not in min_distance or distance < min_distance[value]:
                min_distance[value] = distance
    return min(
        candidates,
        key=lambda v: (first_position[v], min_distance.get(v, 0), str(v)),
    )


def level1_extract(
    sentences: list[Sentence],
    graphs: list[DepGraph],
    indicator_set: IndicatorSet,
) -> datetime.date | None:
    """Date-feature extraction over one case window.

    Each indicator scans every window sentence; in sentences mentioning the
    indicator alongside at least one date phrase, every phrase is recorded with
    its dependency distance to the nearest mention. The indicator outputs the
    minimum-distance date (ties to the earlier date), and indicator outputs are
    majority-voted.
    """
    outputs: list[datetime.date] = []
    output_distances: list[int] = []
    for word in indicator_set.indicators:
        records: list[tuple[int, datetime.date]] = []
        for sentence, graph in zip(sentences, graphs):
            if not sentence.date_phrases:
                continue
            mentions = _mention_indices(sentence, word)
            if not mentions:
                continue
            for phrase in sentence.date_phrases:
                distance = min(
                    dependency_distance(graph, m, phrase.head_token) for m in mentions
                )
                records.append((distance, phrase.normalized))
        if records:
            distance, value = min(records)
            outputs.append(value)
            output_distances.append(distance)
    return majority_vote(outputs, output_distances)


def _is_negated(graph: DepGraph, mention: int, cues: frozenset[str],
                lemma_of: dict[int, str], surface_of: dict[int, str],
                use_indirect: bool) -> bool:
    def cue_adjacent(node: int) -> bool:
        return any(
            lemma_of[n] in cues or surface_of[n] in cues for n in neighbors(graph, node)
        )

    if cue_adjacent(mention):
        return True
    if use_indirect:
        return any(cue_adjacent(p) for p in predecessors(graph, mention))
    return False


def level2_extract(
    sentences: list[Sentence],
    graphs: list[DepGraph],
    indicator_set: IndicatorSet,
    negation_cues: frozenset[str],
    use_indirect: bool = True,
) -> str | None:
    """Clinical-feature classification over one case window.

    Each indicator is judged on the first window sentence mentioning it: N if a
    negation cue sits among the mention's graph neighbours (direct negation) or
    among the neighbours of any of its predecessors (indirect negation),
    otherwise Y. Indicators never mentioned produce no output; outputs are
    majority-voted.
    """
    outputs: list[str] = []
    for word in indicator_set.indicators:
        for sentence, graph in zip(sentences, graphs):
            mentions = _mention_indices(sentence, word)
            if not mentions:
                continue
            lemma_of = {t.index: t.lemma.lower() for t in sentence.tokens}
            surface_of = {t.index: t.surface.lower() for t in sentence.tokens}
            negated = any(
                _is_negated(graph, m, negation_cues, lemma_of, surface_of, use_indirect)
                for m in mentions
            )
            outputs.append("N" if negated else "Y")
            break
    return majority_vote(outputs)


class LineListExtractor:
    """Extraction pipeline bound to grown indicator sets, reusable across
    bulletins. Seeds are grown once, at construction."""

    def __init__(
        self,
        indicator_sets: dict[str, IndicatorSet | None],
        feature_specs=DEFAULT_FEATURE_SPECS,
        negation_cues: frozenset[str] | None = None,
        use_indirect_negation: bool = True,
    ):
        self.indicator_sets = indicator_sets
        self.feature_specs = tuple(feature_specs)
        self.negation_cues = negation_cues if negation_cues is not None else load_negation_cues()
        self.use_indirect_negation = use_indirect_negation

    @classmethod
    def from_model(
        cls,
        model: EmbeddingModel,
        feature_specs=DEFAULT_FEATURE_SPECS,
        k: int = 5,
        negation_cues: frozenset[str] | None = None,
        use_indirect_negation: bool = True,
    ) -> "LineListExtractor":
        indicator_sets: dict[str, IndicatorSet | None] = {}
        for spec in feature_specs:
            try:
                indicator_sets[spec.feature] = grow_seed(
                    model, spec.seed, k, feature=spec.feature
                )
            except SeedNotInVocabularyError:
                logger.warning(
                    "seed %r for feature %s is not in the vocabulary; "
                    "the feature will be null for all cases",
                    spec.seed, spec.feature,
                )
                indicator_sets[spec.feature] = None
        return cls(indicator_sets, feature_specs, negation_cues, use_indirect_negation)

    def extract(self, bulletin: Bulletin) -> list[LineListCase]:
        graphs = [build_graph(s.tokens) for s in bulletin.sentences]
        cases = []
        for case, window in level0_extract(bulletin):
            sentences = list(bulletin.sentences[window.start : window.stop])
            window_graphs = graphs[window.start : window.stop]
            for spec in self.feature_specs:
                indicator_set = self.indicator_sets.get(spec.feature)
                if indicator_set is None:
                    continue
                if spec.level == 1:
                    value = level1_extract(sentences, window_graphs, indicator_set)
                else:
                    value = level2_extract(
                        sentences, window_graphs, indicator_set,
                        self.negation_cues, self.use_indirect_negation,
                    )
                setattr(case, spec.feature, value)
            cases.append(case)
        return cases


def extract_line_list(
    bulletin: Bulletin,
    feature_specs,
    model: EmbeddingModel,
    k: int,
    negation_cues: frozenset[str] | None = None,
) -> list[LineListCase]:
    """Extract all cases of one bulletin with seeds grown from ``model``."""
    extractor = LineListExtractor.from_model(model, feature_specs, k, negation_cues)
    return extractor.extract(bulletin)


class LineListSchemaError(ValueError):
    pass


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, datetime.date):
        return value.isoformat()
    return str(value)


def case_to_row(case: LineListCase) -> list[str]:
    return [case.bulletin_id, str(case.case_ordinal)] + [
        _format_value(getattr(case, f)) for f in FEATURES
    ]


def write_linelist_csv(cases, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for case in cases:
            writer.writerow(case_to_row(case))


def write_linelist_json(cases, path) -> None:
    rows = []
    for case in cases:
        row = {"bulletin_id": case.bulletin_id, "case": case.case_ordinal}
        for feature in FEATURES:
            value = getattr(case, feature)
            row[feature] = value.isoformat() if isinstance(value, datetime.date) else value
        rows.append(row)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(rows, handle, indent=2)
        handle.write("\n")


def _parse_value(feature: str, raw: str, where: str):
    raw = raw.strip()
    if raw == "":
        return None
    if feature == "age":
        try:
            return int(raw)
        except ValueError as exc:
            raise LineListSchemaError(f"{where}: bad age {raw!r}") from exc
    if feature == "gender":
        gender = normalize_gender(raw)
        if gender is None:
            raise LineListSchemaError(f"{where}: bad gender {raw!r}")
        return gender
    if feature in DATE_FEATURES:
        try:
            return datetime.date.fromisoformat(raw)
        except ValueError as exc:
            raise LineListSchemaError(f"{where}: bad date {raw!r}") from exc
    key = raw.upper()
    if key in ("Y", "YES"):
        return "Y"
    if key in ("N", "NO"):
        return "N"
    raise LineListSchemaError(f"{where}: bad Y/N value {raw!r}")


def read_linelist_csv(path) -> list[LineListCase]:
    """Read a line-list CSV in the canonical schema back into cases. The header
    must match exactly; the first bad column is named on mismatch."""
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise LineListSchemaError(f"{path}: empty file, expected a header row")
        expected = list(CSV_HEADER)
        if header != expected:
            for i, want in enumerate(expected):
                if i >= len(header):
                    raise LineListSchemaError(f"{path}: missing column {want!r}")
                if header[i] != want:
                    raise LineListSchemaError(
                        f"{path}: bad column {header[i]!r} (expected {want!r})"
                    )
            raise LineListSchemaError(
                f"{path}: unexpected extra column {header[len(expected)]!r}"
            )
        cases = []
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(expected):
                raise LineListSchemaError(
                    f"{path}: row {row_no}: expected {len(expected)} fields, got {len(row)}"
                )
            where = f"{path}: row {row_no}"
            try:
                ordinal = int(row[1]) if row[1].strip() else len(cases) + 1
            except ValueError as exc:
                raise LineListSchemaError(f"{where}: bad case ordinal {row[1]!r}") from exc
            case = LineListCase(bulletin_id=row[0], case_ordinal=ordinal)
            for feature, raw in zip(FEATURES, row[2:]):
                setattr(case, feature, _parse_value(feature, raw, where))
            cases.append(case)
    return cases
