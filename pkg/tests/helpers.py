"""Shared construction helpers for the test suite."""

from __future__ import annotations

from sedrec.kg import KnowledgeGraph, PruneConfig, TripleRecord, build_graph

IDENTITY_PRUNE = PruneConfig(english_only=False, min_out_degree=0)


def nt(subject, predicate, obj):
    return TripleRecord(subject, predicate, obj)


def lit(subject, predicate, value, lang=None):
    return TripleRecord(subject, predicate, value, is_literal=True, lang=lang)


def graph_from_edges(edges, titles=None) -> KnowledgeGraph:
    """Build a graph from (u, v) or (u, v, predicate) tuples, no pruning."""
    triples = []
    for edge in edges:
        u, v, *rest = edge
        pred = rest[0] if rest else "rel"
        triples.append(nt(u, pred, v))
    if titles:
        for ident, title in titles.items():
            triples.append(lit(ident, "type.object.name", title, "en"))
    return build_graph(triples, IDENTITY_PRUNE)
