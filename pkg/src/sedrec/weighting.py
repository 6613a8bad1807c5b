"""Edge traversal costs: neighborhood-overlap weighting and frequency schemes.

All schemes map onto [0, 1] costs where better-connected or more informative
edges are cheaper. The overlap scheme is direction-of-traversal dependent;
the frequency schemes (attribute frequency and friends) are symmetric and
computed from whole-graph predicate statistics.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum

from .kg import KnowledgeGraph


class WeightingScheme(Enum):
    UNWEIGHTED = "unweighted"
    RWS = "rws"
    AF = "af"
    IAF = "iaf"
    AF_IAF = "af-iaf"
    JOINT_IC = "jointic"


@dataclass(frozen=True)
class EdgeCost:
    """Traversal cost of one edge in both directions."""

    cost_forward: float
    cost_backward: float


def rws_cost(g: KnowledgeGraph, source: int, target: int) -> float:
    """Overlap cost for traversing the edge source->target.

    One minus the conditional neighborhood-overlap probability of the target
    given the source, over closed first-order neighborhoods (each node counts
    itself). Always in [0, 1): adjacent nodes share at least both endpoints.
    """
    if g.edge_between(source, target) is None:
        raise ValueError(
            f"nodes {source} and {target} are not adjacent; "
            "edge costs are defined on edges only"
        )
    ns = g.closed_neighborhood(source)
    nt = g.closed_neighborhood(target)
    return 1.0 - len(ns & nt) / len(ns)


def _predicate_stats(g: KnowledgeGraph) -> tuple[Counter, dict[str, set[int]]]:
    counts: Counter = Counter()
    incident: dict[str, set[int]] = defaultdict(set)
    for e, preds in enumerate(g.edge_predicates):
        u, v = g.edge_endpoints[e]
        for p in preds:
            counts[p] += 1
            incident[p].add(u)
            incident[p].add(v)
    return counts, incident


def frequency_scores(g: KnowledgeGraph, scheme: WeightingScheme) -> dict[str, float]:
    """Normalized per-predicate scores in [0, 1] for AF / IAF / AF-IAF.

    AF favors predicates common in the graph (count over max count); IAF
    favors rare ones (log of node count over incident nodes, scaled by its
    maximum); AF-IAF multiplies the two.
    """
    counts, incident = _predicate_stats(g)
    if not counts:
        return {}
    if scheme is WeightingScheme.AF:
        mx = max(counts.values())
        return {p: c / mx for p, c in counts.items()}
    if scheme is WeightingScheme.IAF:
        n = len(g)
        raw = {p: math.log(n / len(incident[p])) for p in counts}
        mx = max(raw.values())
        if mx <= 0.0:
            return {p: 0.0 for p in counts}
        return {p: r / mx for p, r in raw.items()}
    if scheme is WeightingScheme.AF_IAF:
        af = frequency_scores(g, WeightingScheme.AF)
        iaf = frequency_scores(g, WeightingScheme.IAF)
        return {p: af[p] * iaf[p] for p in af}
    raise ValueError(f"{scheme} is not a frequency scheme")


def frequency_costs(g: KnowledgeGraph, scheme: WeightingScheme) -> tuple[float, ...]:
    """Symmetric per-edge costs under a frequency scheme.

    An edge costs one minus the best (highest) score among its collapsed
    predicates, so favored predicates make cheap edges.
    """
    scores = frequency_scores(g, scheme)
    return tuple(
        1.0 - max(scores[p] for p in preds) for preds in g.edge_predicates
    )


def joint_ic_costs(g: KnowledgeGraph) -> tuple[float, ...]:
    """Symmetric per-edge costs from joint information content.

    For each orientation (u, p, v) of an edge, the joint IC is the predicate's
    self-information plus the object's conditional self-information given the
    predicate, over collapsed-edge incidence frequencies. An edge's IC is its
    most informative orientation; costs are one minus the min-max normalized
    edge IC, so the globally most informative edge costs 0 and the least
    informative costs 1.
    """
    counts, _ = _predicate_stats(g)
    if not counts:
        return ()
    total = sum(counts.values())
    deg_p: dict[tuple[str, int], int] = defaultdict(int)
    for e, preds in enumerate(g.edge_predicates):
        u, v = g.edge_endpoints[e]
        for p in preds:
            deg_p[(p, u)] += 1
            deg_p[(p, v)] += 1

    ics = []
    for e, preds in enumerate(g.edge_predicates):
        u, v = g.edge_endpoints[e]
        best = -math.inf
        for p in preds:
            ic_pred = -math.log(counts[p] / total)
            for obj in (u, v):
                ic_obj = -math.log(deg_p[(p, obj)] / (2 * counts[p]))
                best = max(best, ic_pred + ic_obj)
        ics.append(best)

    lo, hi = min(ics), max(ics)
    if hi == lo:
        return tuple(0.0 for _ in ics)
    return tuple(1.0 - (ic - lo) / (hi - lo) for ic in ics)


def joint_ic_cost(g: KnowledgeGraph, source: int, target: int) -> float:
    """Joint-IC cost between two adjacent nodes."""
    e = g.edge_between(source, target)
    if e is None:
        raise ValueError(f"nodes {source} and {target} are not adjacent")
    return joint_ic_costs(g)[e]


class EdgeCosts:
    """Direction-aware cost lookup for one graph under one scheme.

    Overlap costs are computed lazily per queried edge direction and memoized
    (only union-graph edges are ever relaxed); frequency and joint-IC schemes
    precompute their whole-graph tables up front. Safe for concurrent reads;
    racing memo inserts write identical values.
    """

    def __init__(self, g: KnowledgeGraph, scheme: WeightingScheme):
        self.graph = g
        self.scheme = scheme
        self._memo: dict[tuple[int, int], float] = {}
        self._edge_memo: dict[int, float] = {}
        self._nbhd: dict[int, frozenset[int]] = {}
        self._pred_scores: dict[str, float] | None = None
        self._per_edge: tuple[float, ...] | None = None
        if scheme in (WeightingScheme.AF, WeightingScheme.IAF, WeightingScheme.AF_IAF):
            self._pred_scores = frequency_scores(g, scheme)
        elif scheme is WeightingScheme.JOINT_IC:
            # min-max bounds need every edge anyway, so keep the full table
            self._per_edge = joint_ic_costs(g)

    def _closed(self, node: int) -> frozenset[int]:
        nb = self._nbhd.get(node)
        if nb is None:
            nb = self.graph.closed_neighborhood(node)
            self._nbhd[node] = nb
        return nb

    def cost(self, source: int, target: int, edge: int) -> float:
        """Cost of relaxing ``edge`` in the direction source->target."""
        if self.scheme is WeightingScheme.UNWEIGHTED:
            return 1.0
        if self._per_edge is not None:
            return self._per_edge[edge]
        if self._pred_scores is not None:
            c = self._edge_memo.get(edge)
            if c is None:
                scores = self._pred_scores
                c = 1.0 - max(scores[p] for p in self.graph.edge_predicates[edge])
                self._edge_memo[edge] = c
            return c
        key = (source, target)
        c = self._memo.get(key)
        if c is None:
            ns = self._closed(source)
            nt = self._closed(target)
            c = 1.0 - len(ns & nt) / len(ns)
            self._memo[key] = c
        return c

    def edge_cost(self, source: int, target: int) -> EdgeCost:
        """Both directional costs of the edge between two adjacent nodes."""
        e = self.graph.edge_between(source, target)
        if e is None:
            raise ValueError(f"nodes {source} and {target} are not adjacent")
        return EdgeCost(self.cost(source, target, e), self.cost(target, source, e))
