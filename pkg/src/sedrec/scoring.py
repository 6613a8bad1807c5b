"""Pairwise article distances: entity-set shortest distances over union
subgraphs, cosine baselines, z-normalization, and score tables.

Article distances are computed in two passes: a first pass over every
evaluated node pair finds the corpus-wide maximum finite path cost (shared by
all variants so their cross-run identities hold exactly), then a second pass
normalizes raw costs onto [0, 1], substitutes the disconnection penalty for
unreachable or unresolvable seeds, and aggregates per variant.
"""

from __future__ import annotations

import csv
import heapq
import logging
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .articles import (
    Article,
    ContextWordConfig,
    EntityAnnotation,
    ScreeningConfig,
    augment_context_words,
    screen_entities,
    seed_ids,
    tfidf_vectors,
)
from .errors import InputDataError
from .kg import KnowledgeGraph
from .subgraph import ExpansionConfig, SubGraph, expand, union
from .weighting import EdgeCosts, WeightingScheme

log = logging.getLogger(__name__)

DISCONNECTED = math.inf

Pair = tuple[str, str, str]  # (pair_id, article_a, article_b)


class SedVariant(Enum):
    ROW = "row"
    AVG = "avg"
    SYM = "sym"


@dataclass(frozen=True)
class ScoringConfig:
    variant: SedVariant = SedVariant.SYM
    penalty: float = 0.98
    weighting: WeightingScheme = WeightingScheme.RWS
    expansion: ExpansionConfig = ExpansionConfig()
    screening: ScreeningConfig = ScreeningConfig()
    context_words: ContextWordConfig = ContextWordConfig()
    reverse_direction: bool = False

    def __post_init__(self):
        if not 0.0 <= self.penalty <= 1.0:
            raise ValueError("penalty must lie in [0, 1]")


# ------------------------------------------------------------- distances

def _dijkstra(adjacency, costs: EdgeCosts, source: int) -> dict[int, float]:
    dist = {source: 0.0}
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, e in adjacency[u]:
            nd = d + costs.cost(u, v, e)
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def node_pair_distance(u: SubGraph, costs: EdgeCosts, source: int, target: int) -> float:
    """Shortest path cost from source to target over the union's edges.

    Edge costs are direction-of-traversal dependent. Returns DISCONNECTED
    (infinity) when no path exists within the subgraph.
    """
    if source not in u.members:
        raise ValueError(f"source node {source} is not in the union graph")
    if target not in u.members:
        raise ValueError(f"target node {target} is not in the union graph")
    if source == target:
        return 0.0
    return _dijkstra(u.adjacency(), costs, source).get(target, DISCONNECTED)


def distance_matrix(u: SubGraph, costs: EdgeCosts,
                    from_ids: Sequence[str], to_ids: Sequence[str]) -> list[list[float]]:
    """Raw directed distances between two identifier lists over a union graph.

    Seeds that did not resolve into the graph, and unreachable targets, appear
    as DISCONNECTED entries.
    """
    g = u.parent
    adjacency = u.adjacency()
    targets = [g.node_index(t) if g.has_node(t) else None for t in to_ids]
    rows = []
    for m in from_ids:
        if not g.has_node(m) or g.node_index(m) not in u.members:
            rows.append([DISCONNECTED] * len(to_ids))
            continue
        dist = _dijkstra(adjacency, costs, g.node_index(m))
        rows.append([
            DISCONNECTED if t is None else dist.get(t, DISCONNECTED)
            for t in targets
        ])
    return rows


def normalize_distance(raw: float, corpus_max_finite: float, penalty: float) -> float:
    """Scale a finite raw cost by the corpus maximum; gaps become the penalty."""
    if not math.isfinite(raw):
        return penalty
    if raw == 0.0:
        return 0.0
    return raw / corpus_max_finite


def _matrix_row_mean(mat, penalty, max_finite) -> float:
    total = 0.0
    for row in mat:
        total += min(normalize_distance(d, max_finite, penalty) for d in row)
    return total / len(mat)


def _matrix_all_mean(mat, penalty, max_finite) -> float:
    total = 0.0
    count = 0
    for row in mat:
        for d in row:
            total += normalize_distance(d, max_finite, penalty)
            count += 1
    return total / count


def _check_seeds(s1, s2) -> tuple[list[str], list[str]]:
    s1, s2 = sorted(set(s1)), sorted(set(s2))
    if not s1 or not s2:
        raise ValueError("article seed sets must be non-empty")
    return s1, s2


def sed_directional(s1: Iterable[str], s2: Iterable[str], u: SubGraph,
                    costs: EdgeCosts, penalty: float, max_finite: float) -> float:
    """Average minimum row-wise normalized distance from seed set s1 to s2.

    Seeds missing from the union graph contribute the penalty, so articles
    with unresolvable entities are not spuriously close.
    """
    s1, s2 = _check_seeds(s1, s2)
    mat = distance_matrix(u, costs, s1, s2)
    return _matrix_row_mean(mat, penalty, max_finite)


def sed_variant(s1: Iterable[str], s2: Iterable[str], u: SubGraph,
                costs: EdgeCosts, cfg: ScoringConfig, max_finite: float) -> float:
    """Article distance under the configured variant.

    ROW is the directional mean (s2->s1 when reversed); SYM averages both
    directions; AVG is the mean normalized distance over every seed pair.
    """
    s1, s2 = _check_seeds(s1, s2)
    if cfg.reverse_direction:
        s1, s2 = s2, s1
    p, mx = cfg.penalty, max_finite
    if cfg.variant is SedVariant.ROW:
        return _matrix_row_mean(distance_matrix(u, costs, s1, s2), p, mx)
    if cfg.variant is SedVariant.AVG:
        return _matrix_all_mean(distance_matrix(u, costs, s1, s2), p, mx)
    forward = _matrix_row_mean(distance_matrix(u, costs, s1, s2), p, mx)
    backward = _matrix_row_mean(distance_matrix(u, costs, s2, s1), p, mx)
    return (forward + backward) / 2.0


# -------------------------------------------------------------- baselines

def baseline_distance(v1: Mapping[str, float], v2: Mapping[str, float]) -> float:
    """Cosine distance in [0, 1]: negative similarities clamp to zero."""
    dot = sum(w * v2[t] for t, w in v1.items() if t in v2)
    s1 = sum(w * w for w in v1.values())
    s2 = sum(w * w for w in v2.values())
    if s1 == 0.0 or s2 == 0.0:
        return 1.0
    cos = min(dot / math.sqrt(s1 * s2), 1.0)
    return 1.0 - max(cos, 0.0)


# ---------------------------------------------------------- normalization

def znormalize(values: Sequence[float]) -> tuple[np.ndarray, float, float]:
    """Zero-mean unit-variance scores (population stddev) plus the constants.

    A zero-variance column yields all-zero scores and a warning; with the
    below-mean decision rule that means no recommendations.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        raise ValueError("z-normalization needs at least two scores")
    mean = float(arr.mean())
    std = float(arr.std())
    if std == 0.0:
        log.warning("constant score column: z-scores degenerate to zero")
        return np.zeros_like(arr), mean, 0.0
    return (arr - mean) / std, mean, std


def ensemble(z_columns: Mapping[str, Mapping[str, float]]) -> dict[str, float]:
    """Per-pair mean of member z-scores, re-normalized to zero mean, unit var."""
    if len(z_columns) < 2:
        raise ValueError("an ensemble needs at least two methods")
    methods = sorted(z_columns)
    pair_sets = [set(z_columns[m]) for m in methods]
    for m, pairs in zip(methods[1:], pair_sets[1:]):
        if pairs != pair_sets[0]:
            diff = sorted(pairs ^ pair_sets[0])[:5]
            raise InputDataError(
                f"method {m!r} scores a different pair set (e.g. {diff})"
            )
    pids = sorted(pair_sets[0])
    combined = [
        sum(z_columns[m][p] for m in methods) / len(methods) for p in pids
    ]
    z, _, _ = znormalize(combined)
    return dict(zip(pids, (float(v) for v in z)))


# ------------------------------------------------------------ score table

@dataclass(frozen=True)
class PairScore:
    pair_id: str
    method: str
    raw_distance: float
    z_score: float
    decision: bool


@dataclass(frozen=True)
class MethodStats:
    mean: float
    std: float
    max_finite: float | None = None


_SCORE_HEADER = ["pair_id", "method", "raw_distance", "z_score", "decision"]


@dataclass
class ScoreTable:
    rows: list[PairScore] = field(default_factory=list)
    stats: dict[str, MethodStats] = field(default_factory=dict)

    def methods(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.method not in seen:
                seen.append(r.method)
        return seen

    def column(self, method: str) -> dict[str, PairScore]:
        out = {r.pair_id: r for r in self.rows if r.method == method}
        if not out:
            raise KeyError(f"no scores for method {method!r}")
        return out

    def merge(self, other: "ScoreTable") -> None:
        dupes = set(self.methods()) & set(other.methods())
        if dupes:
            raise InputDataError(f"duplicate methods across score tables: {sorted(dupes)}")
        self.rows.extend(other.rows)
        self.stats.update(other.stats)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(_SCORE_HEADER)
            for r in sorted(self.rows, key=lambda r: (r.method, r.pair_id)):
                writer.writerow([
                    r.pair_id, r.method, repr(r.raw_distance),
                    repr(r.z_score), "1" if r.decision else "0",
                ])

    @classmethod
    def read_csv(cls, path) -> "ScoreTable":
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != _SCORE_HEADER:
                raise InputDataError(f"bad score CSV header in {path}: {header}")
            for lineno, rec in enumerate(reader, 2):
                if len(rec) != 5:
                    raise InputDataError(f"{path}:{lineno}: expected 5 columns")
                pid, method, raw_s, z_s, dec_s = rec
                if dec_s not in ("0", "1"):
                    raise InputDataError(f"{path}:{lineno}: bad decision {dec_s!r}")
                try:
                    raw, z = float(raw_s), float(z_s)
                except ValueError:
                    raise InputDataError(f"{path}:{lineno}: bad float") from None
                rows.append(PairScore(pid, method, raw, z, dec_s == "1"))
        return cls(rows=rows)


def table_from_raw(method: str, raw: Mapping[str, float],
                   max_finite: float | None = None) -> ScoreTable:
    """Build a score table from raw distances: z-normalize, decide at z < 0."""
    pids = sorted(raw)
    z, mean, std = znormalize([raw[p] for p in pids])
    rows = [
        PairScore(p, method, float(raw[p]), float(zv), bool(zv < 0.0))
        for p, zv in zip(pids, z)
    ]
    return ScoreTable(rows=rows, stats={method: MethodStats(mean, std, max_finite)})


def table_from_zscores(method: str, raw: Mapping[str, float],
                       z: Mapping[str, float]) -> ScoreTable:
    """Table for pre-normalized columns (ensembles): decide at z < 0."""
    rows = [
        PairScore(p, method, float(raw[p]), float(z[p]), bool(z[p] < 0.0))
        for p in sorted(z)
    ]
    mean = float(np.mean([raw[p] for p in sorted(z)]))
    std = float(np.std([raw[p] for p in sorted(z)]))
    return ScoreTable(rows=rows, stats={method: MethodStats(mean, std, None)})


# ---------------------------------------------------------- SED pipeline

def compute_seed_sets(articles: Mapping[str, Article],
                      annotations: Mapping[str, list[EntityAnnotation]],
                      kg: KnowledgeGraph, cfg: ScoringConfig,
                      article_ids: Iterable[str] | None = None) -> dict[str, frozenset[str]]:
    """Screened entities plus context-word nodes per article."""
    ids = sorted(article_ids) if article_ids is not None else sorted(articles)
    tfidf = tfidf_vectors(articles)
    out = {}
    for aid in ids:
        if aid not in articles:
            raise InputDataError(f"article {aid!r} is missing from the corpus")
        screened = screen_entities(annotations.get(aid, []), cfg.screening)
        context = augment_context_words(articles[aid], kg, tfidf, cfg.context_words)
        out[aid] = seed_ids(screened, context)
    return out


# worker context inherited through fork; see score_sed
_PAIR_CTX: dict | None = None


def _pair_matrices(pair: Pair):
    ctx = _PAIR_CTX
    pid, a, b = pair
    u = union(ctx["subgraphs"][a], ctx["subgraphs"][b])
    s1 = sorted(ctx["seeds"][a])
    s2 = sorted(ctx["seeds"][b])
    costs = ctx["costs"]
    mat_f = distance_matrix(u, costs, s1, s2)
    mat_b = distance_matrix(u, costs, s2, s1)
    local_max = 0.0
    for mat in (mat_f, mat_b):
        for row in mat:
            for d in row:
                if math.isfinite(d) and d > local_max:
                    local_max = d
    return pid, mat_f, mat_b, local_max


def _run_pair_pass(pairs: list[Pair], jobs: int):
    if jobs <= 1 or multiprocessing.get_start_method(allow_none=False) != "fork":
        return [_pair_matrices(p) for p in pairs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_pair_matrices, pairs, chunksize=64))


def score_sed(kg: KnowledgeGraph, articles: Mapping[str, Article],
              pairs: Sequence[Pair],
              annotations: Mapping[str, list[EntityAnnotation]],
              cfg: ScoringConfig, jobs: int = 1,
              method: str = "sed") -> ScoreTable:
    """Score every article pair under the configured distance variant.

    Pass one computes raw seed-to-seed distance matrices for each pair (in
    both directions, so the normalization constant is variant-independent)
    and the corpus-wide maximum finite cost; pass two aggregates. Results do
    not depend on ``jobs``.
    """
    global _PAIR_CTX
    if len(pairs) < 2:
        raise InputDataError("scoring needs at least two article pairs")
    article_ids = {a for _, a, b in pairs} | {b for _, a, b in pairs}
    seeds = compute_seed_sets(articles, annotations, kg, cfg, article_ids)
    empty = sorted(a for a, s in seeds.items() if not s)
    if empty:
        raise InputDataError(
            f"articles with no seed entities (no annotations or context words): {empty[:5]}"
        )
    subgraphs = {aid: expand(kg, seeds[aid], cfg.expansion) for aid in sorted(seeds)}
    costs = EdgeCosts(kg, cfg.weighting)

    _PAIR_CTX = {"subgraphs": subgraphs, "seeds": seeds, "costs": costs}
    try:
        results = _run_pair_pass(list(pairs), jobs)
    finally:
        _PAIR_CTX = None

    max_finite = max((r[3] for r in results), default=0.0)
    if max_finite <= 0.0:
        max_finite = 1.0

    p = cfg.penalty
    raw: dict[str, float] = {}
    for pid, mat_f, mat_b, _ in results:
        if cfg.variant is SedVariant.SYM:
            value = (_matrix_row_mean(mat_f, p, max_finite)
                     + _matrix_row_mean(mat_b, p, max_finite)) / 2.0
        else:
            mat = mat_b if cfg.reverse_direction else mat_f
            if cfg.variant is SedVariant.ROW:
                value = _matrix_row_mean(mat, p, max_finite)
            else:
                value = _matrix_all_mean(mat, p, max_finite)
        raw[pid] = value
    return table_from_raw(method, raw, max_finite=max_finite)


def score_tfidf(articles: Mapping[str, Article], pairs: Sequence[Pair],
                method: str = "tfidf") -> ScoreTable:
    """Cosine-distance baseline over the shared TF-IDF vector space."""
    if len(pairs) < 2:
        raise InputDataError("scoring needs at least two article pairs")
    vectors = tfidf_vectors(articles)
    raw = {}
    for pid, a, b in pairs:
        for aid in (a, b):
            if aid not in vectors:
                raise InputDataError(f"article {aid!r} is missing from the corpus")
        raw[pid] = baseline_distance(vectors[a], vectors[b])
    return table_from_raw(method, raw)


def import_embedding_scores(path, expected_pairs: Iterable[str],
                            method: str = "embedding") -> ScoreTable:
    """Load precomputed embedding distances (CSV of pair_id,distance)."""
    expected = set(expected_pairs)
    raw: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["pair_id", "distance"]:
            raise InputDataError(f"bad embedding CSV header in {path}: {header}")
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != 2:
                raise InputDataError(f"{path}:{lineno}: expected 2 columns")
            pid, dist_s = rec
            if pid not in expected:
                raise InputDataError(f"{path}:{lineno}: unknown pair id {pid!r}")
            if pid in raw:
                raise InputDataError(f"{path}:{lineno}: duplicate pair id {pid!r}")
            try:
                dist = float(dist_s)
            except ValueError:
                raise InputDataError(f"{path}:{lineno}: bad distance {dist_s!r}") from None
            if not 0.0 <= dist <= 1.0:
                raise InputDataError(
                    f"{path}:{lineno}: distance {dist} outside [0, 1]"
                )
            raw[pid] = dist
    missing = sorted(expected - set(raw))
    if missing:
        raise InputDataError(f"embedding file lacks {len(missing)} pairs (e.g. {missing[:5]})")
    return table_from_raw(method, raw)
