"""Synthetic bulletin generator with planted feature values.

Sentences follow the demographic grammar of the level-0 extractor, carry one
date or clinical indicator per feature sentence, and are given flat chain
parses (token i headed by token i-1). The planted values double as a gold line
list for end-to-end runs and property tests.
"""

from __future__ import annotations

import csv
import datetime
import random
from dataclasses import dataclass

from .corpus import Bulletin, Sentence, Token, detect_date_phrases
from .evaluation import GoldCase
from .extract import FEATURES, FeatureSpec

# Indicator words used by the planted feature sentences; extraction runs over
# synthetic corpora should use these specs.
SYNTHETIC_FEATURE_SPECS = (
    FeatureSpec("onset_date", "symptoms", 1),
    FeatureSpec("hospitalization_date", "admitted", 1),
    FeatureSpec("outcome_date", "died", 1),
    FeatureSpec("animal_contact", "animals", 2),
    FeatureSpec("secondary_contact", "contact", 2),
    FeatureSpec("comorbidities", "comorbidities", 2),
    FeatureSpec("specified_hcw", "healthcare", 2),
)

_R1_GENDER_WORDS = (
    ("woman", "female"), ("man", "male"), ("male", "male"), ("female", "female"),
    ("boy", "male"), ("girl", "female"), ("housewife", "female"),
)
_PRONOUNS = (("he", "male"), ("she", "female"))

# Fillers never mention an indicator word, a date, or an age phrase.
_FILLERS = (
    "Laboratory tests confirmed the infection .",
    "Investigations are ongoing in the region .",
    "Additional surveillance measures were announced .",
    "Samples were sent for further testing .",
)

_MONTH_NAMES = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)


@dataclass(frozen=True)
class PlantedBulletin:
    bulletin: Bulletin
    gold: tuple[GoldCase, ...]


def _chain_sentence(text: str, publication_date: datetime.date | None) -> Sentence:
    words = text.split()
    tokens = tuple(
        Token(index=i + 1, surface=w, lemma=w.lower(), head=i,
              deprel="root" if i == 0 else "dep")
        for i, w in enumerate(words)
    )
    phrases = tuple(detect_date_phrases(tokens, publication_date))
    return Sentence(tokens=tokens, date_phrases=phrases, text=text)


def _random_date(rng: random.Random, publication_date: datetime.date) -> datetime.date:
    year = publication_date.year - rng.randint(0, 1)
    return datetime.date(year, rng.randint(1, 12), rng.randint(1, 28))


def _date_text(value: datetime.date) -> str:
    return f"{value.day} {_MONTH_NAMES[value.month - 1]} {value.year}"


def _starting_sentence(rng: random.Random) -> tuple[str, int, str]:
    age = rng.randint(1, 99)
    form = rng.randrange(3)
    if form == 0:
        word, gender = rng.choice(_R1_GENDER_WORDS)
        text = f"A {age}-year-old {word} was reported in stable condition ."
    elif form == 1:
        word, gender = rng.choice(_R1_GENDER_WORDS)
        text = f"Health officials confirmed a {age} year old {word} yesterday ."
    else:
        word, gender = rng.choice(_PRONOUNS)
        text = f"Officials said this patient is {age} years old and {word} recovered fully ."
    return text, age, gender


def _date_sentence(feature: str, date_text: str) -> str:
    if feature == "onset_date":
        return f"Symptoms appeared on {date_text} ."
    if feature == "hospitalization_date":
        return f"The case was admitted to hospital on {date_text} ."
    return f"The patient died on {date_text} ."


def _clinical_sentence(rng: random.Random, indicator: str) -> tuple[str, str]:
    form = rng.randrange(3)
    if form == 0:
        return f"The case reported {indicator} repeatedly .", "Y"
    if form == 1:
        # cue adjacent to the indicator: direct negation
        return f"The case reported no {indicator} recently .", "N"
    # cue adjacent to a predecessor of the indicator: indirect negation
    return f"There was no documented {indicator} involvement .", "N"


def make_bulletin(
    rng: random.Random,
    bulletin_id: str,
    publication_date: datetime.date = datetime.date(2015, 6, 30),
    n_cases: int | None = None,
    with_features: bool = True,
    feature_probability: float = 0.8,
) -> PlantedBulletin:
    """Generate one bulletin with ``n_cases`` planted cases (1-4 by default),
    interleaved fillers, and, when ``with_features`` is set, one feature
    sentence per planted feature."""
    if n_cases is None:
        n_cases = rng.randint(1, 4)
    sentences: list[Sentence] = []
    golds: list[GoldCase] = []
    for _ in range(rng.randint(0, 2)):
        sentences.append(_chain_sentence(rng.choice(_FILLERS), publication_date))
    for _ in range(n_cases):
        text, age, gender = _starting_sentence(rng)
        sentences.append(_chain_sentence(text, publication_date))
        planted: dict = {"age": age, "gender": gender}
        if with_features:
            block: list[str] = []
            for spec in SYNTHETIC_FEATURE_SPECS:
                if rng.random() >= feature_probability:
                    continue
                if spec.level == 1:
                    value = _random_date(rng, publication_date)
                    block.append(_date_sentence(spec.feature, _date_text(value)))
                    planted[spec.feature] = value
                else:
                    sentence, label = _clinical_sentence(rng, spec.seed)
                    block.append(sentence)
                    planted[spec.feature] = label
            rng.shuffle(block)
            for line in block:
                sentences.append(_chain_sentence(line, publication_date))
        for _ in range(rng.randint(0, 2)):
            sentences.append(_chain_sentence(rng.choice(_FILLERS), publication_date))
        golds.append(GoldCase(bulletin_id=bulletin_id, **planted))
    bulletin = Bulletin(
        id=bulletin_id,
        publication_date=publication_date,
        sentences=tuple(sentences),
    )
    return PlantedBulletin(bulletin=bulletin, gold=tuple(golds))


def make_corpus(
    rng: random.Random,
    n_bulletins: int,
    publication_date: datetime.date = datetime.date(2015, 6, 30),
    with_features: bool = True,
) -> list[PlantedBulletin]:
    return [
        make_bulletin(
            rng,
            bulletin_id=f"synthetic-{i:04d}",
            publication_date=publication_date,
            with_features=with_features,
        )
        for i in range(n_bulletins)
    ]


def write_gold_csv(golds, path) -> None:
    """Write planted gold cases in the canonical line-list CSV schema."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("bulletin_id", "case") + FEATURES)
        by_bulletin: dict[str, int] = {}
        for gold in golds:
            ordinal = by_bulletin.get(gold.bulletin_id, 0) + 1
            by_bulletin[gold.bulletin_id] = ordinal
            row = [gold.bulletin_id, str(ordinal)]
            for feature in FEATURES:
                value = getattr(gold, feature)
                if value is None:
                    row.append("")
                elif isinstance(value, datetime.date):
                    row.append(value.isoformat())
                else:
                    row.append(str(value))
            writer.writerow(row)
