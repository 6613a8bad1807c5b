"""Command line pipeline: ingest, convert, score, evaluate, compare.

Every output file is written with a ``.manifest.json`` sidecar recording the
exact configuration, input digests, and output digest; repeated runs with the
same inputs produce byte-identical output bodies (manifests differ only in
their timestamp).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .articles import load_annotations
from .errors import InputDataError
from .evaluation import (
    AnnotationRecord,
    EvalCondition,
    evaluate_scores,
    load_cnrec,
    read_ratings_csv,
    write_ratings_csv,
)
from .kg import (
    ParseTally,
    PruneConfig,
    build_graph,
    load_snapshot,
    parse_ntriples,
    read_stoplist,
    save_snapshot,
)
from .scoring import (
    ScoreTable,
    ScoringConfig,
    SedVariant,
    ensemble,
    import_embedding_scores,
    score_sed,
    score_tfidf,
    table_from_zscores,
)
from .subgraph import ExpansionConfig
from .articles import ContextWordConfig, ScreeningConfig
from .weighting import WeightingScheme

KG_ENV_VAR = "SEDREC_KG"


# ------------------------------------------------------------- manifests

def _digest_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _digest_path(path) -> str:
    path = Path(path)
    if path.is_file():
        return _digest_file(path)
    h = hashlib.sha256()
    for sub in sorted(p for p in path.rglob("*") if p.is_file()):
        h.update(str(sub.relative_to(path)).encode())
        h.update(_digest_file(sub).encode())
    return "sha256:" + h.hexdigest()


def write_manifest(output: Path, command: str, config: dict, inputs: list) -> None:
    manifest = {
        "tool": "sedrec",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {str(p): _digest_path(p) for p in inputs},
        "outputs": {str(output): _digest_path(output)},
        "created": datetime.now(timezone.utc).isoformat(),
    }
    sidecar = Path(str(output) + ".manifest.json")
    sidecar.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                       encoding="utf-8")


def _require_file(path, what: str) -> Path:
    if path is None:
        raise InputDataError(f"missing required {what}")
    p = Path(path)
    if not p.exists():
        raise InputDataError(f"{what} not found: {p}")
    return p


# ---------------------------------------------------------------- ingest

def cmd_ingest(args) -> int:
    triples_path = _require_file(args.triples, "triples file")
    stoplist = frozenset()
    if args.stoplist:
        stoplist = read_stoplist(_require_file(args.stoplist, "stoplist file"))
    cfg = PruneConfig(
        english_only=args.english_only,
        min_out_degree=args.min_out_degree,
        stoplist=stoplist,
        drop_leaves=args.drop_leaves,
    )
    tally = ParseTally()
    graph = build_graph(parse_ntriples(triples_path, tally), cfg)
    save_snapshot(graph, args.out)
    print(graph.prune_stats.format_report())
    print(f"parsed {tally.records} triples from {tally.lines} lines, "
          f"{tally.error_count} malformed lines skipped")
    print(f"snapshot: {args.out} ({len(graph)} nodes, {graph.num_edges} edges)")
    write_manifest(Path(args.out), "ingest", {
        "english_only": args.english_only,
        "min_out_degree": args.min_out_degree,
        "stoplist": args.stoplist,
        "drop_leaves": args.drop_leaves,
    }, [triples_path] + ([args.stoplist] if args.stoplist else []))
    return 0


# --------------------------------------------------------------- convert

_LONG_HEADER = ["pair_id", "article_a", "article_b", "annotator", "q1", "q2"]


def _convert_long_ratings(path: Path) -> list[AnnotationRecord]:
    """Pivot one-row-per-annotator ratings into the canonical wide records."""
    acc: dict[str, dict] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != 6:
                raise InputDataError(f"{path}:{lineno}: expected 6 columns")
            pid, a, b, annotator_s, q1_s, q2_s = rec
            try:
                annotator, q1, q2 = int(annotator_s), int(q1_s), int(q2_s)
            except ValueError:
                raise InputDataError(f"{path}:{lineno}: non-integer field") from None
            if not 1 <= annotator <= 6:
                raise InputDataError(f"{path}:{lineno}: annotator must be 1..6")
            if not 0 <= q1 <= 2 or not 0 <= q2 <= 1:
                raise InputDataError(f"{path}:{lineno}: rating out of range")
            entry = acc.setdefault(pid, {"a": a, "b": b, "q1": {}, "q2": {}})
            if entry["a"] != a or entry["b"] != b:
                raise InputDataError(f"{path}:{lineno}: inconsistent articles for {pid}")
            if annotator in entry["q1"]:
                raise InputDataError(f"{path}:{lineno}: duplicate annotator for {pid}")
            entry["q1"][annotator] = q1
            entry["q2"][annotator] = q2
    records = []
    for pid in sorted(acc):
        entry = acc[pid]
        if sorted(entry["q1"]) != [1, 2, 3, 4, 5, 6]:
            raise InputDataError(f"pair {pid}: expected ratings from 6 annotators")
        records.append(AnnotationRecord(
            pid, entry["a"], entry["b"],
            tuple(entry["q1"][i] for i in range(1, 7)),
            tuple(entry["q2"][i] for i in range(1, 7)),
        ))
    return records


def cmd_convert(args) -> int:
    articles_dir = _require_file(args.articles, "articles directory")
    ratings_path = _require_file(args.ratings, "ratings file")
    out = Path(args.out)
    (out / "articles").mkdir(parents=True, exist_ok=True)

    with open(ratings_path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header == _LONG_HEADER:
        records = _convert_long_ratings(ratings_path)
    else:
        records = read_ratings_csv(ratings_path)  # already wide: validate
    write_ratings_csv(records, out / "annotations.csv")

    copied = 0
    for src in sorted(Path(articles_dir).glob("*.txt")):
        (out / "articles" / src.name).write_bytes(src.read_bytes())
        copied += 1
    if copied == 0:
        raise InputDataError(f"no .txt articles under {articles_dir}")
    print(f"converted {len(records)} pairs and {copied} articles into {out}")
    write_manifest(out / "annotations.csv", "convert",
                   {"articles": str(articles_dir), "ratings": str(ratings_path)},
                   [articles_dir, ratings_path])
    return 0


# ----------------------------------------------------------------- score

def _parse_drop_types(text: str) -> frozenset[str]:
    if text.lower() in ("", "none"):
        return frozenset()
    return frozenset(t.strip().upper() for t in text.split(",") if t.strip())


def _parse_top_entities(text: str):
    if text.lower() == "all":
        return None
    value = int(text)
    if value < 1:
        raise InputDataError("--top-entities must be >= 1 or 'all'")
    return value


def cmd_score(args) -> int:
    corpus_root = _require_file(args.corpus, "corpus root")
    articles, records = load_cnrec(corpus_root, expect_articles=None,
                                   expect_pairs=None)
    pairs = [(r.pair_id, r.article_a, r.article_b) for r in records]

    if args.method == "tfidf":
        table = score_tfidf(articles, pairs, method=args.label or "tfidf")
        config = {"method": "tfidf"}
        inputs = [corpus_root]
    elif args.method == "embedding":
        emb = _require_file(args.embedding_file, "embedding file (--embedding-file)")
        table = import_embedding_scores(emb, [p[0] for p in pairs],
                                        method=args.label or "embedding")
        config = {"method": "embedding", "embedding_file": str(emb)}
        inputs = [corpus_root, emb]
    else:
        kg_path = args.kg or os.environ.get(KG_ENV_VAR)
        kg = load_snapshot(_require_file(kg_path, "graph snapshot (--kg)"))
        annotations = load_annotations(
            _require_file(args.annotations, "entity annotations (--annotations)"))
        cfg = ScoringConfig(
            variant=SedVariant(args.variant),
            penalty=args.penalty,
            weighting=WeightingScheme(args.weighting),
            expansion=ExpansionConfig(args.hops),
            screening=ScreeningConfig(
                drop_types=_parse_drop_types(args.drop_types),
                top_k=_parse_top_entities(args.top_entities),
            ),
            context_words=ContextWordConfig(args.context_words),
            reverse_direction=args.reverse_direction,
        )
        table = score_sed(kg, articles, pairs, annotations, cfg, jobs=args.jobs,
                          method=args.label or "sed")
        config = {
            "method": "sed", "variant": args.variant, "penalty": args.penalty,
            "weighting": args.weighting, "hops": args.hops,
            "top_entities": args.top_entities, "drop_types": args.drop_types,
            "context_words": args.context_words,
            "reverse_direction": args.reverse_direction, "jobs": args.jobs,
            "normalization": {
                m: {"mean": s.mean, "std": s.std, "max_finite": s.max_finite}
                for m, s in table.stats.items()
            },
        }
        inputs = [corpus_root, Path(kg_path), Path(args.annotations)]

    table.write_csv(args.out)
    print(f"wrote {len(table.rows)} scores for method "
          f"{table.methods()[0]!r} to {args.out}")
    write_manifest(Path(args.out), "score", config, inputs)
    return 0


# -------------------------------------------------------------- evaluate

def _load_score_tables(paths) -> ScoreTable:
    table = ScoreTable()
    for path in paths:
        table.merge(ScoreTable.read_csv(_require_file(path, "score file")))
    return table


def _split_scores_args(values) -> list[str]:
    out = []
    for v in values or []:
        out.extend(s for s in v.split(",") if s)
    return out


def _evaluation_inputs(args) -> tuple[ScoreTable, list[AnnotationRecord], list[EvalCondition]]:
    score_paths = _split_scores_args(args.scores)
    if not score_paths:
        raise InputDataError("at least one --scores file is required")
    table = _load_score_tables(score_paths)
    root = _require_file(args.cnrec, "benchmark root (--cnrec)")
    expect_articles = args.expect_articles or None
    expect_pairs = args.expect_pairs or None
    _, records = load_cnrec(root, expect_articles=expect_articles,
                            expect_pairs=expect_pairs)
    conditions = [EvalCondition.parse(c)
                  for c in args.conditions.split(",") if c.strip()]
    expected_pairs = {r.pair_id for r in records}
    for method in table.methods():
        have = set(table.column(method))
        if have != expected_pairs:
            missing = sorted(expected_pairs - have)
            extra = sorted(have - expected_pairs)
            example = (missing or extra)[:5]
            raise InputDataError(
                f"score file for {method!r} does not cover the benchmark "
                f"pairs: {len(missing)} missing, {len(extra)} unknown "
                f"(e.g. {example})"
            )
    return table, records, conditions


def _with_ensemble(table: ScoreTable, spec: str | None) -> ScoreTable:
    if not spec:
        return table
    members = [m.strip() for m in spec.split(",") if m.strip()]
    if len(members) < 2:
        raise InputDataError("--ensemble needs at least two method names")
    z_cols = {}
    raw_means = {}
    for m in members:
        col = table.column(m)
        z_cols[m] = {pid: ps.z_score for pid, ps in col.items()}
    combined = ensemble(z_cols)
    for pid in combined:
        raw_means[pid] = sum(z_cols[m][pid] for m in members) / len(members)
    label = "+".join(members)
    table.merge(table_from_zscores(label, raw_means, combined))
    return table


def cmd_evaluate(args) -> int:
    table, records, conditions = _evaluation_inputs(args)
    table = _with_ensemble(table, args.ensemble)
    decisions = {m: {pid: ps.decision for pid, ps in table.column(m).items()}
                 for m in table.methods()}
    zs = {m: {pid: ps.z_score for pid, ps in table.column(m).items()}
          for m in table.methods()}
    report = evaluate_scores(records, decisions, zs, conditions)
    report.write_metrics_csv(args.out_metrics)
    report.write_correlations_csv(args.out_correlations)
    print(report.format_table())
    config = {
        "scores": _split_scores_args(args.scores),
        "conditions": [c.label for c in conditions],
        "ensemble": args.ensemble,
    }
    inputs = _split_scores_args(args.scores) + [args.cnrec]
    write_manifest(Path(args.out_metrics), "evaluate", config, inputs)
    write_manifest(Path(args.out_correlations), "evaluate", config, inputs)
    return 0


def cmd_compare(args) -> int:
    table, records, conditions = _evaluation_inputs(args)
    decisions = {m: {pid: ps.decision for pid, ps in table.column(m).items()}
                 for m in table.methods()}
    zs = {m: {pid: ps.z_score for pid, ps in table.column(m).items()}
          for m in table.methods()}
    report = evaluate_scores(records, decisions, zs, conditions)
    print(report.format_table())
    if args.out:
        report.write_metrics_csv(args.out)
        write_manifest(Path(args.out), "compare", {
            "scores": _split_scores_args(args.scores),
            "conditions": [c.label for c in conditions],
        }, _split_scores_args(args.scores) + [args.cnrec])
    return 0


# ----------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sedrec",
        description="Entity-graph shortest-distance scoring pipeline",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and prune a triple dump into a snapshot")
    p.add_argument("--triples", required=True, help="N-Triples file, optionally .gz")
    p.add_argument("--out", required=True, help="snapshot output path")
    p.add_argument("--english-only", action="store_true")
    p.add_argument("--min-out-degree", type=int, default=20)
    p.add_argument("--stoplist", help="file with one node identifier per line")
    p.add_argument("--drop-leaves", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("convert", help="adapt a raw benchmark layout to the canonical root")
    p.add_argument("--articles", required=True, help="directory of <id>.txt files")
    p.add_argument("--ratings", required=True,
                   help="ratings CSV, wide canonical or long per-annotator form")
    p.add_argument("--out", required=True, help="canonical root to create")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("score", help="score all annotated article pairs")
    p.add_argument("--corpus", required=True, help="canonical benchmark root")
    p.add_argument("--out", required=True, help="score CSV output path")
    p.add_argument("--method", choices=["sed", "tfidf", "embedding"], default="sed")
    p.add_argument("--kg", help=f"graph snapshot (default ${KG_ENV_VAR})")
    p.add_argument("--annotations", help="entity annotation TSV")
    p.add_argument("--embedding-file", help="CSV of pair_id,distance")
    p.add_argument("--variant", choices=[v.value for v in SedVariant], default="sym")
    p.add_argument("--reverse-direction", action="store_true")
    p.add_argument("--hops", type=int, choices=[1, 2], default=1)
    p.add_argument("--weighting", choices=[w.value for w in WeightingScheme],
                   default="rws")
    p.add_argument("--penalty", type=float, default=0.98)
    p.add_argument("--top-entities", default="5", help="positive integer or 'all'")
    p.add_argument("--drop-types", default="LOC,GPE",
                   help="entity types to screen out, or 'none'")
    p.add_argument("--context-words", type=int, default=2)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--label", help="method label override for the output column")
    p.set_defaults(func=cmd_score)

    for name, helptext in (("evaluate", "metrics against the benchmark labels"),
                           ("compare", "side-by-side method table")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--scores", action="append", required=True,
                       help="score CSV (repeat or comma-separate for several)")
        p.add_argument("--cnrec", required=True, help="canonical benchmark root")
        p.add_argument("--conditions", default="GR@.75,GR@.5,DR@.75,DR@.5")
        p.add_argument("--expect-articles", type=int, default=300,
                       help="expected article count; 0 disables the check")
        p.add_argument("--expect-pairs", type=int, default=2700,
                       help="expected pair count; 0 disables the check")
        if name == "evaluate":
            p.add_argument("--ensemble", help="comma-separated methods to blend")
            p.add_argument("--out-metrics", default="metrics.csv")
            p.add_argument("--out-correlations", default="correlations.csv")
            p.set_defaults(func=cmd_evaluate)
        else:
            p.add_argument("--out", help="optional metrics CSV output")
            p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
