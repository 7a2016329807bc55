"""Bulletin ingestion: CoNLL-U parsing, date-phrase detection and normalization,
and vocabulary construction over lemmatized sentences.

Bulletins arrive pre-parsed: sentence splitting, tokenization, lemmatization and
dependency analysis are all done by an external parser and consumed here as
10-column CoNLL-U. Raw sentence text is taken from ``# text`` comments (or an
optional side file with one sentence per line) and is what the demographic
regexes later run against.
"""

from __future__ import annotations

import collections
import datetime
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator


class ConlluParseError(ValueError):
    """Malformed CoNLL-U input; the message names the offending line."""


class BulletinStructureError(ValueError):
    """Token indices or heads violate the single-rooted tree layout."""


class DateNormalizationError(ValueError):
    """A candidate date string cannot be resolved to a calendar date."""


class EmptyVocabularyError(ValueError):
    """No word survived the minimum-count threshold."""


@dataclass(frozen=True)
class Token:
    """One parsed token. ``head`` is the 1-based index of the governing token,
    0 for the sentence root."""

    index: int
    surface: str
    lemma: str
    head: int
    deprel: str = "dep"


@dataclass(frozen=True)
class DatePhrase:
    """A detected date mention. ``start``..``end`` are inclusive token indices;
    ``head_token`` is the span token whose syntactic head lies outside the span
    and therefore stands for the whole phrase in graph queries."""

    start: int
    end: int
    head_token: int
    normalized: datetime.date

    @property
    def span(self) -> range:
        return range(self.start, self.end + 1)


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    date_phrases: tuple[DatePhrase, ...]
    text: str


@dataclass(frozen=True)
class Bulletin:
    id: str
    publication_date: datetime.date | None
    sentences: tuple[Sentence, ...]


_MONTH_NUMBERS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5, "june": 6,
    "july": 7, "august": 8, "september": 9, "october": 10, "november": 11,
    "december": 12,
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "jun": 6, "jul": 7, "aug": 8,
    "sep": 9, "sept": 9, "oct": 10, "nov": 11, "dec": 12,
}

# Pattern catalog: ISO dates, and day-month(-year) with the day optionally
# ordinal ("4-June", "4 June", "23rd January 2016", "12 June 2014").
_ISO_DATE_RE = re.compile(r"(?P<y>\d{4})-(?P<m>\d{1,2})-(?P<d>\d{1,2})")
_DAY_MONTH_RE = re.compile(
    r"(?P<d>\d{1,2})(?:st|nd|rd|th)?[-\s]+(?P<mon>[A-Za-z]+)\.?"
    r"(?:[-\s]+(?P<y>\d{4}))?",
    re.IGNORECASE,
)

# Longest date phrase expressible in the catalog, in tokens ("23 rd January 2016"
# style splits never occur, but hyphens may be tokenized off: "4 - June - 2014").
_MAX_DATE_SPAN = 5


def normalize_date(raw: str, publication_date: datetime.date | None) -> datetime.date:
    """Resolve a raw date string to a full calendar date.

    When the year is absent it is completed to the latest year that keeps the
    date on or before ``publication_date`` (bulletins report recent past
    events). Raises :class:`DateNormalizationError` for text outside the
    pattern catalog, impossible dates, and year-less dates when no publication
    date is known.
    """
    text = raw.strip()
    m = _ISO_DATE_RE.fullmatch(text)
    if m is not None:
        try:
            return datetime.date(int(m["y"]), int(m["m"]), int(m["d"]))
        except ValueError as exc:
            raise DateNormalizationError(f"invalid calendar date: {raw!r}") from exc
    m = _DAY_MONTH_RE.fullmatch(text)
    if m is None:
        raise DateNormalizationError(f"unrecognized date text: {raw!r}")
    month = _MONTH_NUMBERS.get(m["mon"].lower())
    if month is None:
        raise DateNormalizationError(f"unrecognized month name in {raw!r}")
    day = int(m["d"])
    if m["y"] is not None:
        try:
            return datetime.date(int(m["y"]), month, day)
        except ValueError as exc:
            raise DateNormalizationError(f"invalid calendar date: {raw!r}") from exc
    if publication_date is None:
        raise DateNormalizationError(
            f"cannot complete year of {raw!r} without a publication date"
        )
    # Latest year for which the date both exists and does not pass the
    # publication date; the 8-year window covers the Feb-29 gap.
    for year in range(publication_date.year, publication_date.year - 9, -1):
        try:
            candidate = datetime.date(year, month, day)
        except ValueError:
            continue
        if candidate <= publication_date:
            return candidate
    raise DateNormalizationError(f"invalid calendar date: {raw!r}")


def _span_head(span: tuple[Token, ...]) -> int:
    indices = {t.index for t in span}
    for token in span:
        if token.head not in indices:
            return token.index
    return span[0].index


def detect_date_phrases(
    tokens: Iterable[Token], publication_date: datetime.date | None
) -> list[DatePhrase]:
    """Scan a sentence for date mentions, longest span first, left to right.

    Spans whose text fails normalization are dropped. Returned phrases are
    non-overlapping and ordered by start index.
    """
    toks = tuple(tokens)
    phrases: list[DatePhrase] = []
    i = 0
    while i < len(toks):
        hit = None
        for length in range(min(_MAX_DATE_SPAN, len(toks) - i), 0, -1):
            span = toks[i : i + length]
            text = " ".join(t.surface for t in span)
            try:
                normalized = normalize_date(text, publication_date)
            except DateNormalizationError:
                continue
            hit = DatePhrase(
                start=span[0].index,
                end=span[-1].index,
                head_token=_span_head(span),
                normalized=normalized,
            )
            break
        if hit is None:
            i += 1
        else:
            phrases.append(hit)
            i += hit.end - hit.start + 1
    return phrases


def _validate_sentence(tokens: list[Token], line_no: int) -> None:
    n = len(tokens)
    for pos, token in enumerate(tokens, start=1):
        if token.index != pos:
            raise BulletinStructureError(
                f"sentence ending near line {line_no}: token ids not contiguous "
                f"(found {token.index}, expected {pos})"
            )
        if token.head < 0 or token.head > n:
            raise BulletinStructureError(
                f"sentence ending near line {line_no}: head {token.head} of token "
                f"{token.index} outside 0..{n}"
            )
        if token.head == token.index:
            raise BulletinStructureError(
                f"sentence ending near line {line_no}: token {token.index} is its own head"
            )
    roots = [t.index for t in tokens if t.head == 0]
    if len(roots) != 1:
        raise BulletinStructureError(
            f"sentence ending near line {line_no}: expected exactly one root, "
            f"found {len(roots)}"
        )


_METADATA_RE = re.compile(r"#\s*(?P<key>[A-Za-z_][\w.]*)\s*=\s*(?P<value>.*)")


def parse_conllu(text: str) -> tuple[list[tuple[list[Token], str | None]], dict[str, str]]:
    """Parse CoNLL-U content into per-sentence token lists.

    Returns ``(sentences, metadata)`` where each sentence is
    ``(tokens, text_comment)`` and metadata collects ``# key = value`` comments
    such as ``bulletin_id`` and ``publication_date``.
    """
    sentences: list[tuple[list[Token], str | None]] = []
    metadata: dict[str, str] = {}
    current: list[Token] = []
    current_text: str | None = None

    def flush(line_no: int) -> None:
        nonlocal current, current_text
        if current:
            _validate_sentence(current, line_no)
            sentences.append((current, current_text))
        current = []
        current_text = None

    line_no = 0
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            flush(line_no)
            continue
        if stripped.startswith("#"):
            meta = _METADATA_RE.fullmatch(stripped)
            if meta is not None:
                key = meta["key"].lower()
                if key == "text":
                    current_text = meta["value"]
                else:
                    metadata.setdefault(key, meta["value"].strip())
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluParseError(
                f"line {line_no}: expected 10 tab-separated columns, got {len(cols)}"
            )
        token_id = cols[0]
        if "-" in token_id or "." in token_id:
            # multiword-token ranges and empty nodes are not tree nodes
            continue
        try:
            index = int(token_id)
        except ValueError as exc:
            raise ConlluParseError(f"line {line_no}: bad token id {token_id!r}") from exc
        try:
            head = int(cols[6])
        except ValueError as exc:
            raise ConlluParseError(f"line {line_no}: bad head {cols[6]!r}") from exc
        current.append(
            Token(index=index, surface=cols[1], lemma=cols[2], head=head, deprel=cols[7])
        )
    flush(line_no + 1)
    return sentences, metadata


def _read_source(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        return Path(source).read_text(encoding="utf-8")
    return source.read()


def parse_bulletin(
    conllu_text: str,
    text: str | None = None,
    bulletin_id: str | None = None,
    publication_date: datetime.date | str | None = None,
) -> Bulletin:
    """Build a :class:`Bulletin` from CoNLL-U content.

    ``text`` optionally supplies raw sentences (one per line, aligned with the
    parse); otherwise ``# text`` comments are used, falling back to joining
    token surfaces. Explicit ``bulletin_id``/``publication_date`` arguments win
    over metadata comments.
    """
    raw_sentences, metadata = parse_conllu(conllu_text)
    if bulletin_id is None:
        bulletin_id = metadata.get("bulletin_id", "bulletin")
    if publication_date is None:
        publication_date = metadata.get("publication_date")
    if isinstance(publication_date, str):
        try:
            publication_date = datetime.date.fromisoformat(publication_date)
        except ValueError as exc:
            raise BulletinStructureError(
                f"bad publication_date {publication_date!r} (want YYYY-MM-DD)"
            ) from exc

    texts: list[str | None]
    if text is not None:
        lines = [line for line in text.splitlines() if line.strip()]
        if len(lines) != len(raw_sentences):
            raise BulletinStructureError(
                f"text source has {len(lines)} sentences but the parse has "
                f"{len(raw_sentences)}"
            )
        texts = list(lines)
    else:
        texts = [comment for _, comment in raw_sentences]

    sentences = []
    for (tokens, _), sent_text in zip(raw_sentences, texts):
        if sent_text is None:
            sent_text = " ".join(t.surface for t in tokens)
        phrases = detect_date_phrases(tokens, publication_date)
        sentences.append(
            Sentence(tokens=tuple(tokens), date_phrases=tuple(phrases), text=sent_text)
        )
    return Bulletin(
        id=bulletin_id,
        publication_date=publication_date,
        sentences=tuple(sentences),
    )


def load_bulletin(
    text_source,
    conllu_source,
    bulletin_id: str | None = None,
    publication_date: datetime.date | str | None = None,
) -> Bulletin:
    """Load a bulletin from a CoNLL-U file (path or file-like) plus an optional
    raw-text file with one sentence per line."""
    conllu_text = _read_source(conllu_source)
    text = _read_source(text_source) if text_source is not None else None
    return parse_bulletin(
        conllu_text,
        text=text,
        bulletin_id=bulletin_id,
        publication_date=publication_date,
    )


def bulletin_to_conllu(bulletin: Bulletin) -> str:
    """Serialize a bulletin back to CoNLL-U; reloading the output reproduces the
    bulletin exactly (date phrases are re-detected from the same tokens)."""
    out = [f"# bulletin_id = {bulletin.id}"]
    if bulletin.publication_date is not None:
        out.append(f"# publication_date = {bulletin.publication_date.isoformat()}")
    for sentence in bulletin.sentences:
        out.append(f"# text = {sentence.text}")
        for t in sentence.tokens:
            out.append(
                "\t".join(
                    [str(t.index), t.surface, t.lemma, "_", "_", "_", str(t.head),
                     t.deprel, "_", "_"]
                )
            )
        out.append("")
    return "\n".join(out) + "\n"


def load_corpus_dir(parse_dir, text_dir=None) -> list[Bulletin]:
    """Load every ``*.conllu`` bulletin under ``parse_dir`` (sorted by filename);
    raw text comes from a same-stem ``.txt`` in ``text_dir`` when present."""
    parse_dir = Path(parse_dir)
    bulletins = []
    for conllu_path in sorted(parse_dir.glob("*.conllu")):
        text_path = None
        if text_dir is not None:
            candidate = Path(text_dir) / (conllu_path.stem + ".txt")
            if candidate.exists():
                text_path = candidate
        bulletin = load_bulletin(text_path, conllu_path)
        if bulletin.id == "bulletin":
            bulletin = Bulletin(
                id=conllu_path.stem,
                publication_date=bulletin.publication_date,
                sentences=bulletin.sentences,
            )
        bulletins.append(bulletin)
    return bulletins


@dataclass
class Vocabulary:
    """Unique lowercased lemmas with exact corpus counts, ordered by descending
    count (ties alphabetical) so that word index 0 is the most frequent word."""

    words: list[str]
    counts: list[int]
    min_count: int = 1
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.words) != len(self.counts):
            raise ValueError("words and counts must be parallel")
        self._index = {w: i for i, w in enumerate(self.words)}
        if len(self._index) != len(self.words):
            raise ValueError("vocabulary words must be unique")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def __iter__(self) -> Iterator[str]:
        return iter(self.words)

    def index(self, word: str) -> int:
        return self._index[word]

    def count(self, word: str) -> int:
        return self.counts[self._index[word]]

    @classmethod
    def from_counter(cls, counter: collections.Counter, min_count: int) -> "Vocabulary":
        kept = {w: c for w, c in counter.items() if c >= min_count}
        if not kept:
            raise EmptyVocabularyError(
                f"no word reaches min_count={min_count} "
                f"(most frequent count: {max(counter.values(), default=0)})"
            )
        ordered = sorted(kept.items(), key=lambda item: (-item[1], item[0]))
        return cls(
            words=[w for w, _ in ordered],
            counts=[c for _, c in ordered],
            min_count=min_count,
        )


def corpus_sentences(bulletins: Iterable[Bulletin]) -> Iterator[list[str]]:
    """Yield each sentence as a list of lowercased lemmas."""
    for bulletin in bulletins:
        for sentence in bulletin.sentences:
            yield [t.lemma.lower() for t in sentence.tokens]


def build_vocabulary(corpus: Iterable[Bulletin], min_count: int = 5) -> Vocabulary:
    """Count lowercased lemmas across the corpus and keep those with at least
    ``min_count`` occurrences."""
    counter: collections.Counter = collections.Counter()
    for lemmas in corpus_sentences(corpus):
        counter.update(lemmas)
    return Vocabulary.from_counter(counter, min_count)
