"""Scoring of automated line lists against human-annotated gold lists:
per-bulletin maximum-weight bipartite matching on quality score, average QS,
per-feature accuracy for demographics and dates, and per-class F1 for the
clinical features."""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field
from pathlib import Path

from .extract import (
    CLINICAL_FEATURES,
    DATE_FEATURES,
    FEATURES,
    LineListCase,
    read_linelist_csv,
)

ACCURACY_FEATURES = ("age", "gender") + DATE_FEATURES

_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GoldCase:
    """One human-annotated case: the nine nullable features plus bulletin id."""

    bulletin_id: str
    age: int | None = None
    gender: str | None = None
    onset_date: datetime.date | None = None
    hospitalization_date: datetime.date | None = None
    outcome_date: datetime.date | None = None
    animal_contact: str | None = None
    secondary_contact: str | None = None
    comorbidities: str | None = None
    specified_hcw: str | None = None

    def non_null_count(self) -> int:
        return sum(getattr(self, f) is not None for f in FEATURES)


def gold_from_case(case: LineListCase) -> GoldCase:
    return GoldCase(
        bulletin_id=case.bulletin_id,
        **{f: getattr(case, f) for f in FEATURES},
    )


def read_gold_csv(path) -> list[GoldCase]:
    """Read a gold line list (same CSV schema as the extraction output).
    Rows with no annotated feature at all are rejected."""
    golds = []
    for row_no, case in enumerate(read_linelist_csv(path), start=1):
        gold = gold_from_case(case)
        if gold.non_null_count() == 0:
            raise ValueError(f"{path}: gold case {row_no} has no non-null feature")
        golds.append(gold)
    return golds


def quality_score(auto_case, gold_case) -> float:
    """Fraction of the gold case's non-null features that the automated case
    reproduces exactly."""
    total = 0
    correct = 0
    for feature in FEATURES:
        gold_value = getattr(gold_case, feature)
        if gold_value is None:
            continue
        total += 1
        if getattr(auto_case, feature) == gold_value:
            correct += 1
    if total == 0:
        raise ValueError("quality score is undefined for an all-null gold case")
    return correct / total


def f1(predictions, golds, positive_class) -> float:
    """Harmonic mean of precision and recall for one class; 0 when undefined."""
    predictions = list(predictions)
    golds = list(golds)
    if len(predictions) != len(golds):
        raise ValueError("predictions and golds must be aligned")
    tp = sum(p == positive_class and g == positive_class for p, g in zip(predictions, golds))
    fp = sum(p == positive_class and g != positive_class for p, g in zip(predictions, golds))
    fn = sum(p != positive_class and g == positive_class for p, g in zip(predictions, golds))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def _hungarian_min_square(cost: list[list[float]]) -> list[int]:
    """O(n^3) Hungarian method on a square cost matrix (minimization).
    Returns the column assigned to each row."""
    n = len(cost)
    inf = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match_row = [0] * (n + 1)   # match_row[j] = row matched to column j
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match_row[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match_row[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match_row[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match_row[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match_row[j0] = match_row[j1]
            j0 = j1
    col_of_row = [0] * n
    for j in range(1, n + 1):
        if match_row[j]:
            col_of_row[match_row[j] - 1] = j - 1
    return col_of_row


def _best_total(weights: list[list[float]], forced: dict[int, int]) -> float:
    """Maximum total weight of a bipartite matching that contains the
    ``forced`` row->column pairs."""
    m = len(weights)
    n = len(weights[0]) if m else 0
    total = sum(weights[i][j] for i, j in forced.items())
    free_rows = [i for i in range(m) if i not in forced]
    used_cols = set(forced.values())
    free_cols = [j for j in range(n) if j not in used_cols]
    if not free_rows or not free_cols:
        return total
    size = max(len(free_rows), len(free_cols))
    cost = [[0.0] * size for _ in range(size)]
    for r, i in enumerate(free_rows):
        for c, j in enumerate(free_cols):
            cost[r][c] = -weights[i][j]
    assignment = _hungarian_min_square(cost)
    for r, i in enumerate(free_rows):
        c = assignment[r]
        if c < len(free_cols):
            total += weights[i][free_cols[c]]
    return total


@dataclass(frozen=True)
class Match:
    """A matched (automated case, gold case) pair with its quality score.
    Ordinals are positions within the bulletin's case lists."""

    auto_ordinal: int
    gold_ordinal: int
    auto: LineListCase
    gold: GoldCase
    qs: float


def match_bulletin(auto_cases, gold_cases) -> list[Match]:
    """Maximum-weight bipartite matching of one bulletin's cases on quality
    score. Zero-score pairs are kept, so the matching has min(|auto|, |gold|)
    pairs. Equal-weight optima are resolved toward the lexicographically
    smallest (auto_ordinal, gold_ordinal) pairs.

    Intended for per-bulletin case counts (about ten); the tie-break re-solves
    the assignment per candidate pair.
    """
    auto_cases = list(auto_cases)
    gold_cases = list(gold_cases)
    ids = {c.bulletin_id for c in auto_cases} | {c.bulletin_id for c in gold_cases}
    if len(ids) > 1:
        raise ValueError(f"cases span multiple bulletins: {sorted(ids)}")
    if not auto_cases or not gold_cases:
        return []
    weights = [[quality_score(a, g) for g in gold_cases] for a in auto_cases]
    best = _best_total(weights, {})
    forced: dict[int, int] = {}
    used: set[int] = set()
    for i in range(len(auto_cases)):
        if len(forced) == min(len(auto_cases), len(gold_cases)):
            break
        for j in range(len(gold_cases)):
            if j in used:
                continue
            trial = dict(forced)
            trial[i] = j
            if _best_total(weights, trial) >= best - _TOLERANCE:
                forced[i] = j
                used.add(j)
                break
    return [
        Match(i, j, auto_cases[i], gold_cases[j], weights[i][j])
        for i, j in sorted(forced.items())
    ]


QS_BIN_WIDTH = 0.05


def qs_histogram(qs_values) -> list[tuple[float, int]]:
    """Counts of QS values in bins of width 0.05 over [0, 1]; the last bin is
    closed at 1."""
    bins = int(round(1.0 / QS_BIN_WIDTH))
    counts = [0] * bins
    for value in qs_values:
        counts[min(int(value / QS_BIN_WIDTH), bins - 1)] += 1
    return [(round(i * QS_BIN_WIDTH, 2), counts[i]) for i in range(bins)]


@dataclass
class EvalReport:
    gold_cases: int
    auto_cases: int
    match_count: int
    average_qs: float | None
    feature_accuracy: dict[str, float | None]
    feature_support: dict[str, int]
    clinical_f1: dict[str, dict[str, float]]
    histogram: list[tuple[float, int]]
    bulletins_only_in_auto: list[str] = field(default_factory=list)
    bulletins_only_in_gold: list[str] = field(default_factory=list)
    matches: list[Match] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "counts": {
                "gold_cases": self.gold_cases,
                "auto_cases": self.auto_cases,
                "matches": self.match_count,
            },
            "average_qs": self.average_qs,
            "feature_accuracy": self.feature_accuracy,
            "feature_support": self.feature_support,
            "clinical_f1": self.clinical_f1,
            "qs_histogram": [{"bin": b, "count": c} for b, c in self.histogram],
            "diagnostics": {
                "bulletins_only_in_auto": self.bulletins_only_in_auto,
                "bulletins_only_in_gold": self.bulletins_only_in_gold,
            },
        }

    def render_text(self) -> str:
        avg = "n/a" if self.average_qs is None else f"{self.average_qs:.2f}"
        lines = [
            "Line list evaluation",
            "====================",
            f"Human lists: {self.gold_cases}  Auto lists: {self.auto_cases}  "
            f"Matches: {self.match_count}  Average QS: {avg}",
            "",
            "Feature accuracy (over matches with non-null gold)",
        ]
        for feature in ACCURACY_FEATURES:
            acc = self.feature_accuracy.get(feature)
            shown = "n/a " if acc is None else f"{acc:.2f}"
            lines.append(
                f"  {feature:<22} {shown}  (n={self.feature_support.get(feature, 0)})"
            )
        lines.append("")
        lines.append("Clinical feature F1 (per class and average)")
        for feature in CLINICAL_FEATURES:
            scores = self.clinical_f1.get(feature, {})
            lines.append(
                f"  {feature:<22} Y {scores.get('Y', 0.0):.2f}  "
                f"N {scores.get('N', 0.0):.2f}  avg {scores.get('average', 0.0):.2f}"
            )
        if self.bulletins_only_in_auto or self.bulletins_only_in_gold:
            lines.append("")
            if self.bulletins_only_in_auto:
                lines.append(
                    "Bulletins only in auto list: "
                    + ", ".join(self.bulletins_only_in_auto)
                )
            if self.bulletins_only_in_gold:
                lines.append(
                    "Bulletins only in gold list: "
                    + ", ".join(self.bulletins_only_in_gold)
                )
        return "\n".join(lines) + "\n"


def evaluate_corpus(auto_cases, gold_cases) -> EvalReport:
    """Match every bulletin's cases and aggregate QS, accuracy and F1 metrics.
    Bulletins present in only one list contribute zero matches and are listed
    in the report diagnostics."""
    auto_by_bulletin: dict[str, list] = {}
    for case in auto_cases:
        auto_by_bulletin.setdefault(case.bulletin_id, []).append(case)
    gold_by_bulletin: dict[str, list] = {}
    for case in gold_cases:
        gold_by_bulletin.setdefault(case.bulletin_id, []).append(case)

    matches: list[Match] = []
    for bulletin_id in sorted(set(auto_by_bulletin) & set(gold_by_bulletin)):
        matches.extend(
            match_bulletin(auto_by_bulletin[bulletin_id], gold_by_bulletin[bulletin_id])
        )

    average_qs = sum(m.qs for m in matches) / len(matches) if matches else None

    feature_accuracy: dict[str, float | None] = {}
    feature_support: dict[str, int] = {}
    for feature in ACCURACY_FEATURES:
        scored = [m for m in matches if getattr(m.gold, feature) is not None]
        feature_support[feature] = len(scored)
        if not scored:
            feature_accuracy[feature] = None
            continue
        hits = sum(getattr(m.auto, feature) == getattr(m.gold, feature) for m in scored)
        feature_accuracy[feature] = hits / len(scored)

    clinical_f1: dict[str, dict[str, float]] = {}
    for feature in CLINICAL_FEATURES:
        scored = [m for m in matches if getattr(m.gold, feature) is not None]
        predictions = [getattr(m.auto, feature) for m in scored]
        golds = [getattr(m.gold, feature) for m in scored]
        f1_y = f1(predictions, golds, "Y")
        f1_n = f1(predictions, golds, "N")
        clinical_f1[feature] = {"Y": f1_y, "N": f1_n, "average": (f1_y + f1_n) / 2}

    return EvalReport(
        gold_cases=sum(len(v) for v in gold_by_bulletin.values()),
        auto_cases=sum(len(v) for v in auto_by_bulletin.values()),
        match_count=len(matches),
        average_qs=average_qs,
        feature_accuracy=feature_accuracy,
        feature_support=feature_support,
        clinical_f1=clinical_f1,
        histogram=qs_histogram([m.qs for m in matches]),
        bulletins_only_in_auto=sorted(set(auto_by_bulletin) - set(gold_by_bulletin)),
        bulletins_only_in_gold=sorted(set(gold_by_bulletin) - set(auto_by_bulletin)),
        matches=matches,
    )


def write_report(report: EvalReport, output_dir) -> None:
    """Write metrics.json, report.txt and qs_histogram.csv."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / "metrics.json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n"
    )
    (output_dir / "report.txt").write_text(report.render_text())
    rows = ["bin,count"] + [f"{b:.2f},{c}" for b, c in report.histogram]
    (output_dir / "qs_histogram.csv").write_text("\n".join(rows) + "\n")
