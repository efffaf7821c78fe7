"""Acceptance gate: one test per criterion, each reporting PASS or FAIL.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also listed in the terminal summary.
"""

import os
import random
import time
from pathlib import Path

import numpy as np
import pytest

import conftest
from conftest import FIXTURES, random_corpus
from depvec.bench import (
    BenchContext,
    build_benchmark,
    evaluate,
    precision_at_k,
    rank_for_entry,
    recall_at_k,
    reciprocal_rank,
)
from depvec.cli import main
from depvec.cluster import agglomerate, gap_curve, kmeans, normalize_rows, select_k
from depvec.corpus import Corpus, ProjectSnapshot, load_corpus
from depvec.embed import build_model, truncated_svd
from depvec.errors import NoCandidates
from depvec.recommend import (
    ALL,
    ScoringParams,
    SliceIndex,
    nearest_neighbors,
    popularity_ranking,
    recommend,
    score_candidates,
)
from depvec.reqparse import parse_requirements
from depvec.synth import synth_corpus
from oracles import (
    adjusted_rand_index,
    best_rank_error,
    brute_force_jaccard_ranking,
    jacobi_svd,
    naive_average_linkage,
    planted_blobs,
    popularity_order,
)

REFERENCE_CORPUS_ENV = "DEPVEC_REFERENCE_CORPUS"


def report(key: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    conftest.ACCEPTANCE[key] = (status, detail)
    print(f"criterion {key}: {status} - {detail}")
    assert ok, detail


def test_c1_svd_matches_dense_oracle():
    rng = np.random.default_rng(2024)
    worst_sigma = worst_err = 0.0
    elapsed = 0.0
    for i in range(20):
        m, n = int(rng.integers(10, 81)), int(rng.integers(10, 61))
        A = (rng.random((m, n)) < rng.uniform(0.05, 0.3)).astype(float)
        A[rng.integers(m)] = 1.0
        start = time.perf_counter()
        f = truncated_svd(A, 8, seed=i)
        elapsed += time.perf_counter() - start
        sv = jacobi_svd(A)
        worst_sigma = max(worst_sigma, float(np.max(np.abs(f.sigma - sv[:8]) / sv[:8])))
        err = np.linalg.norm(A - (f.U * f.sigma) @ f.V.T)
        ref = best_rank_error(sv, 8)
        worst_err = max(worst_err, abs(err - ref) / ref if ref > 0 else abs(err))
    ok = worst_sigma <= 1e-6 and worst_err <= 1e-6 and elapsed < 2.0
    report("1", ok, f"max rel sigma err {worst_sigma:.2e}, max rel recon err {worst_err:.2e}, {elapsed:.2f}s")


def test_c2_baseline_equivalence():
    rng = np.random.default_rng(7)
    mismatches = checked = 0
    for trial in range(100):
        corpus = random_corpus(rng, int(rng.integers(2, 60)), int(rng.integers(3, 25)))
        index = SliceIndex(corpus.snapshots)
        query = corpus.snapshots[int(rng.integers(len(corpus)))].deps
        neighbors = nearest_neighbors(query, index, "jaccard", ALL)
        params = ScoringParams(0, 0, ALL, "jaccard", None)
        try:
            scored = [r.library for r in score_candidates(query, neighbors, params, index.idf, popularity=index.df)]
        except NoCandidates:
            scored = []
        rows = [(s.repo_id, s.year, s.deps) for s in corpus.snapshots]
        baseline = popularity_order(query, rows)
        if baseline:
            assert [r.library for r in popularity_ranking(query, index)] == baseline
        checked += 1
        mismatches += scored != baseline
    report("2", mismatches == 0, f"{checked} corpora, {mismatches} ordering mismatches")


def test_c3_jaccard_brute_force():
    rng = np.random.default_rng(11)
    mismatches = queries = 0
    for trial in range(40):
        corpus = random_corpus(rng, int(rng.integers(2, 51)), int(rng.integers(3, 20)))
        rows = [(s.repo_id, s.year, s.deps) for s in corpus.snapshots]
        alpha = float(rng.choice([-3, -2, -1, 0, 1, 2]))
        beta = float(rng.choice([0, 1, 2]))
        k = [1, 5, 10, 25, ALL][int(rng.integers(5))]
        for snap in corpus.snapshots[:5]:
            expected = brute_force_jaccard_ranking(snap.deps, rows, snap.key, alpha, beta, k)
            try:
                got = recommend(snap.key, None, corpus, ScoringParams(alpha, beta, k, "jaccard", None), year=snap.year)
                got = [(r.library, r.score) for r in got]
            except NoCandidates:
                got = []
            queries += 1
            same_order = [lib for lib, _ in got] == [lib for lib, _ in expected]
            same_scores = all(a[1] == pytest.approx(b[1], rel=1e-12) for a, b in zip(got, expected))
            mismatches += not (same_order and same_scores)
    report("3", mismatches == 0, f"{queries} queries, {mismatches} ranking mismatches")


def test_c4_metric_suite():
    ok = (
        reciprocal_rank(["D", "x", "y"], {"D"}) == 1.0
        and precision_at_k(["D", "x", "y"], {"D"}, 1) == 1.0
        and recall_at_k(["D", "x", "y"], {"D"}, 5) == 1.0
        and reciprocal_rank(["x", "D", "y"], {"D"}) == 0.5
        and precision_at_k(["x", "D", "y"], {"D"}, 1) == 0.0
        and reciprocal_rank(["x", "y"], {"D"}) == 0.0
    )
    rnd = random.Random(5)
    universe = [f"l{i}" for i in range(15)]
    bad = 0
    for _ in range(20):
        ranked = rnd.sample(universe, rnd.randint(0, 15))
        targets = set(rnd.sample(universe, rnd.randint(1, 5)))
        k = rnd.randint(1, 12)
        hits = [name for name in ranked[:k] if name in targets]
        first = next((i + 1 for i, name in enumerate(ranked) if name in targets), None)
        expected = (1.0 / first if first else 0.0, len(hits) / k, len(hits) / len(targets))
        got = (reciprocal_rank(ranked, targets), precision_at_k(ranked, targets, k), recall_at_k(ranked, targets, k))
        bad += got != expected
    report("4", ok and bad == 0, f"3 worked examples {'ok' if ok else 'wrong'}, 20 random recounts, {bad} mismatches")


@pytest.mark.skipif(not os.environ.get(REFERENCE_CORPUS_ENV), reason=f"set {REFERENCE_CORPUS_ENV} to a released corpus file")
def test_c5_reference_corpus_numbers():
    corpus = load_corpus(Path(os.environ[REFERENCE_CORPUS_ENV]))
    model = build_model(corpus, d=32, seed=0)
    ctx = BenchContext(corpus, model)
    bench = build_benchmark(corpus)
    base = evaluate(ScoringParams(model_kind="baseline"), bench, ctx=ctx).mrr
    dre = evaluate(ScoringParams(-1, 2, 500, "dre"), bench, ctx=ctx).mrr
    ok = abs(base - 0.144) <= 0.005 and abs(dre - 0.189) <= 0.010
    report("5.reference", ok, f"baseline MRR {base:.4f} (0.144), DRE MRR {dre:.4f} (0.189)")


def test_c5_synthetic_substitute():
    start = time.perf_counter()
    rle_mrr, base_mrr = [], []
    for seed in range(5):
        corpus = synth_corpus(n_domains=8, libs_per_domain=60, zipf_s=1.5, n_projects=2000, years=3, seed=seed).corpus
        model = build_model(corpus, d=32, seed=seed)
        ctx = BenchContext(corpus, model)
        bench = build_benchmark(corpus)
        rle_mrr.append(evaluate(ScoringParams(-1, 2, 200, "rle"), bench, ctx=ctx).mrr)
        base_mrr.append(evaluate(ScoringParams(model_kind="baseline"), bench, ctx=ctx).mrr)
    elapsed = time.perf_counter() - start
    rle, base = float(np.mean(rle_mrr)), float(np.mean(base_mrr))
    ok = rle >= 1.2 * base and elapsed < 120
    report("5.synth", ok, f"RLE MRR {rle:.4f} vs baseline {base:.4f} (ratio {rle / base:.2f}), {elapsed:.1f}s")


def test_c6_gap_selection():
    hits, worst_ari, picks = 0, 1.0, []
    for seed in range(5):
        X, labels = planted_blobs(6, 40, 32, seed)
        X = normalize_rows(X)
        choice = select_k(gap_curve(X, range(2, 65), n_refs=10, seed=seed, threads=os.cpu_count() or 1))
        picks.append(choice.k)
        hits += abs(choice.k - 6) <= 1
        worst_ari = min(worst_ari, adjusted_rand_index(kmeans(X, 6, seed=seed).labels, labels))
    report("6", hits >= 4 and worst_ari >= 0.95, f"selected k {picks}, {hits}/5 within 6±1, min ARI {worst_ari:.3f}")


def test_c7_dendrogram_oracle():
    rng = np.random.default_rng(3)
    worst, bad = 0.0, 0
    sizes = [2, 3, 5, 10, 20, 40, 64]
    for n in sizes:
        X = rng.standard_normal((n, 8))
        tree = agglomerate(X)
        expected = naive_average_linkage(X)
        bad += [(m.a, m.b) for m in tree.merges] != [(a, b) for a, b, _ in expected]
        worst = max(worst, max(abs(m.height - h) for m, (_, _, h) in zip(tree.merges, expected)))
    report("7", bad == 0 and worst <= 1e-9, f"sizes {sizes}, {bad} order mismatches, max height diff {worst:.1e}")


EXPECTED_NAMES = {
    "01_pins": {"numpy", "scipy", "matplotlib"},
    "02_comments": {"numpy", "pandas"},
    "03_markers": {"requests", "enum34", "pywin32"},
    "04_extras": {"flask", "requests", "celery"},
    "05_continuations": {"django", "scikit-learn", "beautiful-soup"},
    "06_editable": {"my-tool", "other-pkg", "attrs"},
    "07_includes": {"flask"},
    "08_empty": set(),
    "09_all_commented": set(),
    "10_index_options": {"zope-interface"},
    "11_hashes": {"cryptography", "six"},
    "12_urls": {"vcs-lib", "mypkg"},
    "13_bom_crlf": {"pyyaml", "tqdm", "pillow"},
    "14_case_and_ops": {"python-dateutil", "sqlalchemy", "numpy"},
    "15_garbage": {"good-lib", "another-lib"},
}


def test_c8_parser_fixtures():
    files = sorted((FIXTURES / "requirements").glob("*.txt"))
    wrong = []
    for path in files:
        rep = parse_requirements(path.read_bytes().decode("utf-8"))
        expected = EXPECTED_NAMES[path.stem]
        if rep.names != expected or rep.is_empty != (not expected):
            wrong.append(path.stem)
    ok = len(files) == 15 and not wrong
    report("8", ok, f"{len(files)} fixtures, mismatched: {wrong or 'none'}")


def test_c9_cli_determinism(tmp_path):
    def run(tag):
        corpus, model, part = (tmp_path / f"{tag}.{ext}" for ext in ("jsonl", "json", "csv"))
        codes = [
            main(["synth", "--projects", "300", "--seed", "9", "--out", str(corpus)]),
            main(["embed", "--corpus", str(corpus), "--dim", "16", "--seed", "9", "--out", str(model)]),
            main(["cluster", "--model", str(model), "--select-k", "2..12", "--refs", "5", "--seed", "9",
                  "--out", str(part)]),
        ]
        return codes, [p.read_bytes() for p in (corpus, model, part)]

    (codes_a, a), (codes_b, b) = run("a"), run("b")
    same = [x == y for x, y in zip(a, b)]
    ok = codes_a == codes_b == [0, 0, 0] and all(same)
    report("9", ok, f"synth/embed/cluster byte-identical: {same}")


def test_c10_temporal_poison():
    corpus = synth_corpus(n_projects=300, years=3, seed=2).corpus
    bench = build_benchmark(corpus)
    years = corpus.years
    leaks = checked = 0
    for y in years[:-1]:
        snaps = list(corpus.snapshots)
        for s in corpus.snapshots:
            if s.year == y + 1:
                snaps.remove(s)
                snaps.append(ProjectSnapshot(s.repo_id, s.year, s.deps | {"zz-sentinel"}))
        snaps.append(ProjectSnapshot("poison/only", y + 1, frozenset({"zz-sentinel"})))
        dirty = Corpus(snaps)
        ctx = BenchContext(dirty, build_model(dirty, d=16, seed=2))
        for kind in ("rle", "dre", "jaccard", "baseline"):
            for k in (10, ALL):
                params = ScoringParams(-1, 2, k, kind)
                for entry in (e for e in bench if e.year == y):
                    checked += 1
                    leaks += "zz-sentinel" in rank_for_entry(entry, params, ctx)
    report("10", leaks == 0 and checked > 0, f"{checked} year-Y rankings, {leaks} contain the sentinel")
