"""Epidemiological summaries over a line list: demographic distributions and
day-level distributions of the interval between two date features."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .extract import DATE_FEATURES


@dataclass(frozen=True)
class Histogram:
    """Integer-binned histogram. ``bin_edges`` has one more entry than
    ``counts``; bin i covers [bin_edges[i], bin_edges[i+1]). ``null_count``
    holds the cases lacking the required feature(s), so that
    sum(counts) + null_count equals the case count."""

    bin_edges: tuple[int, ...]
    counts: tuple[int, ...]
    null_count: int

    def total(self) -> int:
        return sum(self.counts) + self.null_count


def demographic_distribution(cases) -> tuple[Histogram, dict[str | None, int]]:
    """Age histogram in decade bins plus gender counts over male/female/None."""
    cases = list(cases)
    edges = tuple(range(0, 110, 10))
    counts = [0] * (len(edges) - 1)
    null_count = 0
    genders: dict[str | None, int] = {"male": 0, "female": 0, None: 0}
    for case in cases:
        if case.age is None:
            null_count += 1
        else:
            counts[min(case.age // 10, len(counts) - 1)] += 1
        genders[case.gender if case.gender in ("male", "female") else None] += 1
    return Histogram(edges, tuple(counts), null_count), genders


def interval_distribution(cases, from_feature: str, to_feature: str) -> Histogram:
    """Distribution of (to - from) in days over cases where both dates are
    present; negative intervals are retained. One bin per day."""
    for name in (from_feature, to_feature):
        if name not in DATE_FEATURES:
            raise ValueError(f"{name!r} is not a date feature (want one of {DATE_FEATURES})")
    cases = list(cases)
    deltas = []
    null_count = 0
    for case in cases:
        start = getattr(case, from_feature)
        end = getattr(case, to_feature)
        if start is None or end is None:
            null_count += 1
        else:
            deltas.append((end - start).days)
    if not deltas:
        return Histogram((), (), null_count)
    lo, hi = min(deltas), max(deltas)
    counts = [0] * (hi - lo + 1)
    for delta in deltas:
        counts[delta - lo] += 1
    return Histogram(tuple(range(lo, hi + 2)), tuple(counts), null_count)


def write_histogram_csv(histogram: Histogram, path) -> None:
    """Write ``bin_start,bin_end,count`` rows plus a trailing ``null,,count``."""
    rows = ["bin_start,bin_end,count"]
    for i, count in enumerate(histogram.counts):
        rows.append(f"{histogram.bin_edges[i]},{histogram.bin_edges[i + 1]},{count}")
    rows.append(f"null,,{histogram.null_count}")
    Path(path).write_text("\n".join(rows) + "\n")
