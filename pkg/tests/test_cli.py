import json

import pytest

from sedrec.cli import main
from sedrec.evaluation import load_cnrec
from sedrec.kg import load_snapshot
from sedrec.scoring import ScoreTable


@pytest.fixture(scope="module")
def snapshot(synthetic_root, tmp_path_factory):
    out = tmp_path_factory.mktemp("snap") / "kg.snap"
    rc = main([
        "ingest", "--triples", str(synthetic_root / "kg.nt"),
        "--english-only", "--min-out-degree", "0", "--out", str(out),
    ])
    assert rc == 0
    return out


def read_scores(path):
    return ScoreTable.read_csv(path)


# ----------------------------------------------------------------- ingest

def test_ingest_writes_snapshot_stats_and_manifest(snapshot, capsys):
    graph = load_snapshot(snapshot)
    assert len(graph) > 200
    manifest = json.loads((snapshot.parent / "kg.snap.manifest.json").read_text())
    assert manifest["command"] == "ingest"
    assert manifest["config"]["min_out_degree"] == 0
    assert any("kg.nt" in k for k in manifest["inputs"])


def test_ingest_missing_input_is_usage_error(tmp_path, capsys):
    rc = main(["ingest", "--triples", str(tmp_path / "nope.nt"),
               "--out", str(tmp_path / "x.snap")])
    assert rc == 2
    assert "not found" in capsys.readouterr().err


def test_ingest_stoplist_flag(synthetic_root, tmp_path, capsys):
    out = tmp_path / "pruned.snap"
    rc = main([
        "ingest", "--triples", str(synthetic_root / "kg.nt"),
        "--min-out-degree", "0",
        "--stoplist", str(synthetic_root / "stoplist.txt"),
        "--out", str(out),
    ])
    assert rc == 0
    graph = load_snapshot(out)
    assert not graph.has_node("m.glob0")


def test_ingest_min_out_degree_zero_keeps_counts(synthetic_root, tmp_path, capsys):
    out = tmp_path / "all.snap"
    main(["ingest", "--triples", str(synthetic_root / "kg.nt"),
          "--min-out-degree", "0", "--out", str(out)])
    report = capsys.readouterr().out
    lines = [l for l in report.splitlines() if l.startswith(("input", "out-degree"))]
    assert len(lines) == 2
    assert lines[0].split()[1:] == lines[1].split()[1:]


# ------------------------------------------------------------------ score

@pytest.fixture(scope="module")
def sed_scores(synthetic_root, snapshot, tmp_path_factory):
    out = tmp_path_factory.mktemp("scores") / "sed.csv"
    rc = main([
        "score", "--corpus", str(synthetic_root), "--kg", str(snapshot),
        "--annotations", str(synthetic_root / "entities.tsv"),
        "--variant", "sym", "--hops", "1", "--weighting", "rws",
        "--penalty", "0.98", "--top-entities", "5",
        "--drop-types", "LOC,GPE", "--context-words", "2",
        "--out", str(out),
    ])
    assert rc == 0
    return out


def test_score_sed_produces_full_csv(sed_scores):
    table = read_scores(sed_scores)
    col = table.column("sed")
    assert len(col) == 2700
    assert all(0.0 <= r.raw_distance <= 1.0 for r in col.values())


def test_score_writes_manifest_with_normalization(sed_scores):
    manifest = json.loads((sed_scores.parent / "sed.csv.manifest.json").read_text())
    assert manifest["command"] == "score"
    assert manifest["config"]["normalization"]["sed"]["std"] > 0
    assert manifest["outputs"]


def test_score_is_deterministic(synthetic_root, snapshot, tmp_path):
    args = [
        "score", "--corpus", str(synthetic_root), "--kg", str(snapshot),
        "--annotations", str(synthetic_root / "entities.tsv"),
    ]
    out1, out2 = tmp_path / "one.csv", tmp_path / "two.csv"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    m1 = json.loads((tmp_path / "one.csv.manifest.json").read_text())
    m2 = json.loads((tmp_path / "two.csv.manifest.json").read_text())
    m1["outputs"] = m2["outputs"] = None  # paths differ; digests compared below
    m1.pop("created"), m2.pop("created")
    assert m1 == m2
    d1 = json.loads((tmp_path / "one.csv.manifest.json").read_text())["outputs"]
    d2 = json.loads((tmp_path / "two.csv.manifest.json").read_text())["outputs"]
    assert list(d1.values()) == list(d2.values())


def test_score_env_var_supplies_kg(synthetic_root, snapshot, tmp_path, monkeypatch):
    monkeypatch.setenv("SEDREC_KG", str(snapshot))
    out = tmp_path / "env.csv"
    rc = main([
        "score", "--corpus", str(synthetic_root),
        "--annotations", str(synthetic_root / "entities.tsv"),
        "--out", str(out),
    ])
    assert rc == 0 and out.exists()


def test_score_jobs_identical_output(synthetic_root, snapshot, tmp_path):
    args = [
        "score", "--corpus", str(synthetic_root), "--kg", str(snapshot),
        "--annotations", str(synthetic_root / "entities.tsv"),
    ]
    serial, parallel = tmp_path / "serial.csv", tmp_path / "parallel.csv"
    assert main(args + ["--out", str(serial), "--jobs", "1"]) == 0
    assert main(args + ["--out", str(parallel), "--jobs", "4"]) == 0
    assert serial.read_bytes() == parallel.read_bytes()


def test_score_row_directions_average_to_sym(synthetic_root, snapshot, tmp_path):
    base = [
        "score", "--corpus", str(synthetic_root), "--kg", str(snapshot),
        "--annotations", str(synthetic_root / "entities.tsv"),
    ]
    fwd, rev, sym = (tmp_path / n for n in ("f.csv", "r.csv", "s.csv"))
    assert main(base + ["--variant", "row", "--out", str(fwd)]) == 0
    assert main(base + ["--variant", "row", "--reverse-direction",
                        "--out", str(rev)]) == 0
    assert main(base + ["--variant", "sym", "--out", str(sym)]) == 0
    f = {r.pair_id: r.raw_distance for r in read_scores(fwd).rows}
    b = {r.pair_id: r.raw_distance for r in read_scores(rev).rows}
    s = {r.pair_id: r.raw_distance for r in read_scores(sym).rows}
    assert all(s[p] == (f[p] + b[p]) / 2.0 for p in s)


@pytest.fixture(scope="module")
def tfidf_scores(synthetic_root, tmp_path_factory):
    out = tmp_path_factory.mktemp("scores") / "tfidf.csv"
    rc = main(["score", "--corpus", str(synthetic_root), "--method", "tfidf",
               "--out", str(out)])
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def embedding_scores(synthetic_root, tmp_path_factory):
    out = tmp_path_factory.mktemp("scores") / "embedding.csv"
    rc = main(["score", "--corpus", str(synthetic_root), "--method", "embedding",
               "--embedding-file", str(synthetic_root / "embeddings.csv"),
               "--out", str(out)])
    assert rc == 0
    return out


def test_score_tfidf_needs_no_kg(tfidf_scores):
    assert len(read_scores(tfidf_scores).column("tfidf")) == 2700


def test_score_embedding_import(embedding_scores):
    col = read_scores(embedding_scores).column("embedding")
    assert len(col) == 2700


# --------------------------------------------------------------- evaluate

def test_evaluate_emits_metrics_and_correlations(
        synthetic_root, sed_scores, tfidf_scores, embedding_scores, tmp_path, capsys):
    metrics = tmp_path / "metrics.csv"
    corr = tmp_path / "corr.csv"
    rc = main([
        "evaluate",
        "--scores", f"{sed_scores},{tfidf_scores}",
        "--scores", str(embedding_scores),
        "--cnrec", str(synthetic_root),
        "--ensemble", "sed,tfidf,embedding",
        "--out-metrics", str(metrics),
        "--out-correlations", str(corr),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "GR@.75" in out and "sed+tfidf+embedding" in out
    lines = metrics.read_text().splitlines()
    assert len(lines) == 1 + 4 * 4  # header + 4 methods x 4 conditions
    corr_lines = corr.read_text().splitlines()
    assert len(corr_lines) == 1 + 4
    assert (tmp_path / "metrics.csv.manifest.json").exists()


def test_evaluate_rejects_missing_pair(synthetic_root, sed_scores, tmp_path, capsys):
    crippled = tmp_path / "short.csv"
    lines = sed_scores.read_text().splitlines()
    crippled.write_text("\n".join(lines[:-1]) + "\n")
    rc = main(["evaluate", "--scores", str(crippled),
               "--cnrec", str(synthetic_root)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "missing" in err and "p" in err


def test_evaluate_rejects_unknown_condition(synthetic_root, sed_scores, capsys):
    rc = main(["evaluate", "--scores", str(sed_scores),
               "--cnrec", str(synthetic_root), "--conditions", "bogus"])
    assert rc == 2


def test_compare_prints_table(synthetic_root, sed_scores, tfidf_scores, capsys):
    rc = main(["compare", "--scores", f"{sed_scores},{tfidf_scores}",
               "--cnrec", str(synthetic_root)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "sed" in out and "tfidf" in out and "DR@.5" in out


# ---------------------------------------------------------------- convert

def test_convert_long_format(tmp_path):
    raw = tmp_path / "raw"
    (raw / "docs").mkdir(parents=True)
    (raw / "docs" / "a1.txt").write_text("Title A\nBody.")
    (raw / "docs" / "a2.txt").write_text("Title B\nBody.")
    rows = ["pair_id,article_a,article_b,annotator,q1,q2"]
    for ann in range(1, 7):
        rows.append(f"px,a1,a2,{ann},{ann % 3},{ann % 2}")
    (raw / "ratings.csv").write_text("\n".join(rows) + "\n")
    out = tmp_path / "canonical"
    rc = main(["convert", "--articles", str(raw / "docs"),
               "--ratings", str(raw / "ratings.csv"), "--out", str(out)])
    assert rc == 0
    articles, records = load_cnrec(out, expect_articles=2, expect_pairs=1)
    assert records[0].q1 == (1, 2, 0, 1, 2, 0)
    assert records[0].q2 == (1, 0, 1, 0, 1, 0)


def test_convert_rejects_incomplete_annotators(tmp_path, capsys):
    raw = tmp_path / "raw"
    (raw / "docs").mkdir(parents=True)
    (raw / "docs" / "a1.txt").write_text("T\nB")
    rows = ["pair_id,article_a,article_b,annotator,q1,q2", "px,a1,a1,1,0,0"]
    (raw / "ratings.csv").write_text("\n".join(rows) + "\n")
    rc = main(["convert", "--articles", str(raw / "docs"),
               "--ratings", str(raw / "ratings.csv"),
               "--out", str(tmp_path / "c")])
    assert rc == 2
    assert "6 annotators" in capsys.readouterr().err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_ingest_accepts_gzip_triples(synthetic_root, tmp_path):
    import gzip as gz

    packed = tmp_path / "kg.nt.gz"
    packed.write_bytes(gz.compress((synthetic_root / "kg.nt").read_bytes()))
    out = tmp_path / "gz.snap"
    rc = main(["ingest", "--triples", str(packed), "--min-out-degree", "0",
               "--out", str(out)])
    assert rc == 0
    plain = tmp_path / "plain.snap"
    main(["ingest", "--triples", str(synthetic_root / "kg.nt"),
          "--min-out-degree", "0", "--out", str(plain)])
    assert out.read_bytes() == plain.read_bytes()
