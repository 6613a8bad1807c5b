"""Benchmark loading, positive/negative labeling, F1 and rank correlations.

The benchmark provides six similarity ratings (0/1/2) and six recommendation
votes (0/1) per article pair. Two labeling families derive positives from
them: "good recommendation" (mean vote at or above a threshold) and "diverse
recommendation" (additionally at least half the raters found the pair not
very similar).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .articles import Article, load_corpus
from .errors import InputDataError

log = logging.getLogger(__name__)

ANNOTATORS = 6

_HEADER = (
    ["pair_id", "article_a", "article_b"]
    + [f"q1_{i}" for i in range(1, ANNOTATORS + 1)]
    + [f"q2_{i}" for i in range(1, ANNOTATORS + 1)]
)


@dataclass(frozen=True)
class AnnotationRecord:
    """Six similarity ratings and six recommendation votes for one pair."""

    pair_id: str
    article_a: str
    article_b: str
    q1: tuple[int, ...]
    q2: tuple[int, ...]

    @property
    def mean_q1(self) -> float:
        return sum(self.q1) / len(self.q1)

    @property
    def mean_q2(self) -> float:
        return sum(self.q2) / len(self.q2)


@dataclass(frozen=True)
class EvalCondition:
    """GR@t or DR@t labeling rule; thresholds 0.5 and 0.75 are the usual grid."""

    family: str
    threshold: float

    def __post_init__(self):
        if self.family not in ("GR", "DR"):
            raise ValueError(f"unknown condition family {self.family!r}")
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("threshold must lie in (0, 1]")
        if self.threshold not in (0.5, 0.75):
            log.warning("non-standard condition threshold %s", self.threshold)

    @classmethod
    def parse(cls, text: str) -> "EvalCondition":
        try:
            family, thr = text.split("@", 1)
            return cls(family.upper(), float(thr))
        except ValueError:
            raise InputDataError(f"cannot parse evaluation condition {text!r}") from None

    @property
    def label(self) -> str:
        # 0.75 -> "GR@.75", 0.5 -> "GR@.5"
        txt = f"{self.threshold:g}"
        if txt.startswith("0."):
            txt = txt[1:]
        return f"{self.family}@{txt}"

    def __str__(self) -> str:
        return self.label


STANDARD_CONDITIONS = (
    EvalCondition("GR", 0.75),
    EvalCondition("GR", 0.5),
    EvalCondition("DR", 0.75),
    EvalCondition("DR", 0.5),
)


def write_ratings_csv(records: Iterable[AnnotationRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_HEADER)
        for r in records:
            writer.writerow([r.pair_id, r.article_a, r.article_b, *r.q1, *r.q2])


def read_ratings_csv(path) -> list[AnnotationRecord]:
    """Strict reader for the canonical ratings CSV."""
    records = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _HEADER:
            raise InputDataError(f"bad ratings header in {path}: got {header}")
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != len(_HEADER):
                raise InputDataError(
                    f"{path}:{lineno}: expected {len(_HEADER)} columns, got {len(rec)}"
                )
            pid, a, b = rec[0], rec[1], rec[2]
            if pid in seen:
                raise InputDataError(f"{path}:{lineno}: duplicate pair id {pid!r}")
            seen.add(pid)
            q1, q2 = [], []
            for col, value in zip(_HEADER[3:], rec[3:]):
                try:
                    iv = int(value)
                except ValueError:
                    raise InputDataError(
                        f"{path}:{lineno}: column {col}: non-integer rating {value!r}"
                    ) from None
                limit = 2 if col.startswith("q1") else 1
                if not 0 <= iv <= limit:
                    raise InputDataError(
                        f"{path}:{lineno}: column {col}: rating {iv} out of range"
                    )
                (q1 if col.startswith("q1") else q2).append(iv)
            records.append(AnnotationRecord(pid, a, b, tuple(q1), tuple(q2)))
    return records


def load_cnrec(root, expect_articles: int | None = 300,
               expect_pairs: int | None = 2700,
               ) -> tuple[dict[str, Article], list[AnnotationRecord]]:
    """Load a benchmark root: ``articles/*.txt`` plus ``annotations.csv``.

    Validates rating ranges, referential integrity, and (by default) the
    published corpus shape of 300 articles and 2700 annotated pairs.
    """
    root = Path(root)
    articles = load_corpus(root / "articles")
    ratings_path = root / "annotations.csv"
    if not ratings_path.is_file():
        raise InputDataError(f"ratings file not found: {ratings_path}")
    records = read_ratings_csv(ratings_path)
    for r in records:
        for aid in (r.article_a, r.article_b):
            if aid not in articles:
                raise InputDataError(
                    f"pair {r.pair_id} references missing article {aid!r}"
                )
    if expect_articles is not None and len(articles) != expect_articles:
        raise InputDataError(
            f"expected {expect_articles} articles, found {len(articles)}"
        )
    if expect_pairs is not None and len(records) != expect_pairs:
        raise InputDataError(
            f"expected {expect_pairs} annotated pairs, found {len(records)}"
        )
    return articles, records


def label_pairs(records: Iterable[AnnotationRecord],
                cond: EvalCondition) -> dict[str, bool]:
    """Positive/negative label per pair under an evaluation condition.

    GR@t: mean recommendation vote >= t. DR@t additionally requires at least
    half the raters to judge the pair not very similar (rating <= 1). Both
    thresholds are inclusive.
    """
    out = {}
    for r in records:
        positive = sum(r.q2) >= len(r.q2) * cond.threshold
        if cond.family == "DR":
            low_similarity = sum(1 for v in r.q1 if v <= 1)
            positive = positive and low_similarity * 2 >= len(r.q1)
        out[r.pair_id] = positive
    return out


def positive_rate(labels: Mapping[str, bool]) -> float:
    if not labels:
        raise ValueError("no labels")
    return sum(labels.values()) / len(labels)


def f1_from_precision_recall(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class ConfusionMetrics:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f1: float
    precision_defined: bool = True
    recall_defined: bool = True

    @classmethod
    def from_counts(cls, tp: int, fp: int, tn: int, fn: int) -> "ConfusionMetrics":
        p_def = tp + fp > 0
        r_def = tp + fn > 0
        precision = tp / (tp + fp) if p_def else 0.0
        recall = tp / (tp + fn) if r_def else 0.0
        return cls(tp, fp, tn, fn, precision, recall,
                   f1_from_precision_recall(precision, recall), p_def, r_def)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion_and_f1(labels: Mapping[str, bool],
                     decisions: Mapping[str, bool]) -> ConfusionMetrics:
    """Confusion counts and precision/recall/F1 for one method and condition."""
    if set(labels) != set(decisions):
        diff = sorted(set(labels) ^ set(decisions))[:5]
        raise InputDataError(f"label and decision pair sets differ (e.g. {diff})")
    tp = fp = tn = fn = 0
    for pid, truth in labels.items():
        if decisions[pid]:
            tp, fp = (tp + 1, fp) if truth else (tp, fp + 1)
        else:
            fn, tn = (fn + 1, tn) if truth else (fn, tn + 1)
    return ConfusionMetrics.from_counts(tp, fp, tn, fn)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # ties share the mean of the ranks they span (1-based)
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    if x.std() == 0.0 or y.std() == 0.0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


def correlations(scores: Mapping[str, float],
                 targets: Mapping[str, float]) -> tuple[float | None, float | None]:
    """Pearson and Spearman correlation between scores and target ratings.

    Spearman is Pearson over average-ranked data (ties get their mean rank).
    Returns None coefficients for constant inputs. Callers pass scores with
    the higher-is-better orientation (negated distances).
    """
    if set(scores) != set(targets):
        raise InputDataError("score and target pair sets differ")
    if len(scores) < 3:
        raise ValueError("correlations need at least three pairs")
    pids = sorted(scores)
    x = np.asarray([scores[p] for p in pids], dtype=np.float64)
    y = np.asarray([targets[p] for p in pids], dtype=np.float64)
    pearson = _pearson(x, y)
    spearman = _pearson(_average_ranks(x), _average_ranks(y))
    return pearson, spearman


@dataclass
class MetricsReport:
    """Per (method, condition) confusion metrics plus per-method correlations."""

    conditions: Sequence[EvalCondition]
    entries: dict[tuple[str, str], ConfusionMetrics]
    correlations: dict[str, tuple[float | None, float | None]]

    _METRICS_HEADER = [
        "method", "condition", "tp", "fp", "tn", "fn",
        "precision", "recall", "f1", "precision_defined", "recall_defined",
    ]

    def write_metrics_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self._METRICS_HEADER)
            for (method, cond), m in sorted(self.entries.items()):
                writer.writerow([
                    method, cond, m.tp, m.fp, m.tn, m.fn,
                    repr(m.precision), repr(m.recall), repr(m.f1),
                    int(m.precision_defined), int(m.recall_defined),
                ])

    def write_correlations_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["method", "pearson", "spearman"])
            for method in sorted(self.correlations):
                p, s = self.correlations[method]
                writer.writerow([
                    method,
                    "" if p is None else repr(p),
                    "" if s is None else repr(s),
                ])

    def format_table(self) -> str:
        """Side-by-side F1 table: one row per condition, one column per method."""
        methods = sorted({m for m, _ in self.entries})
        conds = [c.label for c in self.conditions]
        width = max((len(m) for m in methods), default=6) + 2
        lines = ["condition  " + "".join(f"{m:>{width}}" for m in methods)]
        for cond in conds:
            cells = []
            for m in methods:
                entry = self.entries.get((m, cond))
                cells.append(f"{entry.f1 * 100:>{width}.2f}" if entry else " " * width)
            lines.append(f"{cond:<11}" + "".join(cells))
        return "\n".join(lines)


def evaluate_scores(records: Sequence[AnnotationRecord],
                    decisions_by_method: Mapping[str, Mapping[str, bool]],
                    z_by_method: Mapping[str, Mapping[str, float]],
                    conditions: Sequence[EvalCondition] = STANDARD_CONDITIONS,
                    ) -> MetricsReport:
    """Join method decisions with benchmark labels across all conditions."""
    expected = {r.pair_id for r in records}
    for method, decisions in decisions_by_method.items():
        missing = expected - set(decisions)
        extra = set(decisions) - expected
        if missing or extra:
            example = sorted(missing or extra)[:5]
            raise InputDataError(
                f"method {method!r} pair set mismatch: "
                f"{len(missing)} missing, {len(extra)} unknown (e.g. {example})"
            )
    mean_q2 = {r.pair_id: r.mean_q2 for r in records}
    entries = {}
    for cond in conditions:
        labels = label_pairs(records, cond)
        for method, decisions in decisions_by_method.items():
            entries[(method, cond.label)] = confusion_and_f1(labels, decisions)
    corr = {}
    for method, zs in z_by_method.items():
        negated = {p: -z for p, z in zs.items()}
        corr[method] = correlations(negated, mean_q2)
    return MetricsReport(conditions=list(conditions), entries=entries,
                         correlations=corr)
