"""Benchmark replayed from year-over-year dependency changes."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, slice_year
from .embed import EmbeddingModel
from .errors import EmptySlice, EmptyTargets, MalformedRecord, NoCandidates, NoConsecutivePairs, UnknownLibraries
from .recommend import (
    ALL,
    ModelKind,
    Neighbor,
    ResolvedQuery,
    ScoringParams,
    SliceIndex,
    nearest_neighbors,
    query_vector,
    score_candidates,
)

log = logging.getLogger(__name__)

MAX_CHANGES = 10


@dataclass(frozen=True)
class BenchmarkEntry:
    repo_id: str
    year: int
    given: frozenset[str]
    targets: frozenset[str]

    def to_dict(self) -> dict:
        return {
            "repo": self.repo_id,
            "year": self.year,
            "given": sorted(self.given),
            "targets": sorted(self.targets),
        }


def build_benchmark(corpus: Corpus, max_changes: int = MAX_CHANGES) -> list[BenchmarkEntry]:
    """One entry per (repo, Y) whose Y+1 version adds at least one library
    and changes at most ``max_changes`` in total."""
    entries = []
    pairs = 0
    for snap in corpus.snapshots:
        nxt = corpus.get(snap.repo_id, snap.year + 1)
        if nxt is None:
            continue
        pairs += 1
        added = nxt.deps - snap.deps
        removed = snap.deps - nxt.deps
        if added and len(added) + len(removed) <= max_changes:
            entries.append(BenchmarkEntry(snap.repo_id, snap.year, snap.deps, frozenset(added)))
    if not pairs:
        raise NoConsecutivePairs("no repository has snapshots in two consecutive years")
    return entries


def dumps_benchmark(entries) -> str:
    return "".join(json.dumps(e.to_dict()) + "\n" for e in entries)


def save_benchmark(entries, path) -> None:
    Path(path).write_text(dumps_benchmark(entries), encoding="utf-8")


def load_benchmark(path) -> list[BenchmarkEntry]:
    entries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            entry = BenchmarkEntry(
                str(rec["repo"]), int(rec["year"]), frozenset(rec["given"]), frozenset(rec["targets"])
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(f"bad benchmark record ({exc})", lineno) from None
        if not entry.targets:
            raise MalformedRecord("empty targets", lineno)
        entries.append(entry)
    return entries


# -- metrics -------------------------------------------------------------------

def _check(targets) -> None:
    if not targets:
        raise EmptyTargets("targets must be nonempty")


def reciprocal_rank(ranked, targets) -> float:
    _check(targets)
    for i, name in enumerate(ranked, start=1):
        if name in targets:
            return 1.0 / i
    return 0.0


mrr = reciprocal_rank


def precision_at_k(ranked, targets, k: int) -> float:
    _check(targets)
    return len(set(ranked[:k]) & set(targets)) / k


def recall_at_k(ranked, targets, k: int) -> float:
    _check(targets)
    return len(set(ranked[:k]) & set(targets)) / len(targets)


@dataclass(frozen=True)
class MetricsReport:
    n_entries: int
    prec1: float
    prec3: float
    prec5: float
    prec10: float
    rec5: float
    rec10: float
    mrr: float


def entry_metrics(ranked, targets) -> tuple[float, ...]:
    return (
        precision_at_k(ranked, targets, 1),
        precision_at_k(ranked, targets, 3),
        precision_at_k(ranked, targets, 5),
        precision_at_k(ranked, targets, 10),
        recall_at_k(ranked, targets, 5),
        recall_at_k(ranked, targets, 10),
        reciprocal_rank(ranked, targets),
    )


def aggregate(per_entry: list[tuple[float, ...]]) -> MetricsReport:
    n = len(per_entry)
    if not n:
        raise EmptyTargets("no benchmark entries to aggregate")
    # fsum is exactly rounded, so the mean does not depend on entry order
    means = [math.fsum(col) / n for col in zip(*per_entry)]
    return MetricsReport(n, *means)


# -- ranking with temporal isolation -------------------------------------------

class BenchContext:
    """Per-year slice indexes shared across entries and grid points."""

    def __init__(self, corpus: Corpus, model: EmbeddingModel | None):
        self.corpus = corpus
        self.model = model
        self._slices: dict[int, SliceIndex] = {}

    def slice(self, year: int) -> SliceIndex:
        if year not in self._slices:
            self._slices[year] = SliceIndex(slice_year(self.corpus, year), self.model, label=str(year))
        return self._slices[year]


def _query(entry: BenchmarkEntry) -> ResolvedQuery:
    return ResolvedQuery(entry.given, (entry.repo_id, entry.year), [], False)


def entry_neighbors(entry: BenchmarkEntry, kind: ModelKind, k, ctx: BenchContext) -> list[Neighbor]:
    index = ctx.slice(entry.year)
    q = _query(entry)
    try:
        if kind is ModelKind.JACCARD:
            probe = q.deps
        else:
            probe = query_vector(q, kind, ctx.model)[0]
        return nearest_neighbors(probe, index, kind, k, exclude=q.key)
    except UnknownLibraries:
        return []


def rank_for_entry(
    entry: BenchmarkEntry,
    params: ScoringParams,
    ctx: BenchContext,
    neighbors: list[Neighbor] | None = None,
) -> list[str]:
    """Full untruncated ranking for one entry using only its year's slice.

    Neighbors, idf, and baseline popularity all come from year ``entry.year``.
    """
    index = ctx.slice(entry.year)
    kind = params.model_kind
    try:
        if kind is ModelKind.BASELINE:
            return [lib for lib in index.popular if lib not in entry.given]
        if neighbors is None:
            neighbors = entry_neighbors(entry, kind, params.k_neighbors, ctx)
        full = ScoringParams(params.alpha, params.beta, params.k_neighbors, kind, None)
        recs = score_candidates(entry.given, neighbors, full, index.idf, popularity=index.df)
    except (NoCandidates, EmptySlice) as exc:
        log.debug("%s@%d: %s", entry.repo_id, entry.year, exc)
        return []
    return [r.library for r in recs]


def evaluate(
    params: ScoringParams,
    benchmark: list[BenchmarkEntry],
    corpus: Corpus | None = None,
    model: EmbeddingModel | None = None,
    ctx: BenchContext | None = None,
) -> MetricsReport:
    if ctx is None:
        ctx = BenchContext(corpus, model)
    per_entry = [entry_metrics(rank_for_entry(e, params, ctx), e.targets) for e in benchmark]
    return aggregate(per_entry)


# -- grid search ---------------------------------------------------------------

ALPHA_GRID = (-3.0, -2.0, -1.0, 0.0, 1.0, 2.0)
BETA_GRID = (0.0, 1.0, 2.0)
K_GRID = (1, 10, 50, 100, 200, 500, 1000, ALL)


@dataclass(frozen=True)
class GridRow:
    model: str
    alpha: float | None
    beta: float | None
    k_neighbors: int | None
    metrics: MetricsReport


RESULT_COLUMNS = ["model", "alpha", "beta", "k_neighbors", "prec1", "prec3", "prec5", "rec5", "rec10", "mrr", "n_entries"]


def _fmt(value) -> str:
    return "" if value is None else repr(value)


def results_csv(rows: list[GridRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for row in rows:
        m = row.metrics
        k = row.k_neighbors
        k_text = "" if row.model == ModelKind.BASELINE.value else ("all" if k is None else str(k))
        writer.writerow(
            [row.model, _fmt(row.alpha), _fmt(row.beta), k_text,
             repr(m.prec1), repr(m.prec3), repr(m.prec5), repr(m.rec5), repr(m.rec10), repr(m.mrr), m.n_entries]
        )
    return buf.getvalue()


def grid_search(
    model_kinds,
    benchmark: list[BenchmarkEntry],
    corpus: Corpus,
    model: EmbeddingModel | None,
    alpha_grid=ALPHA_GRID,
    beta_grid=BETA_GRID,
    k_grid=K_GRID,
    progress=None,
) -> list[GridRow]:
    """Evaluate every (kind, K, alpha, beta) point.

    Neighbor lists are computed once per (kind, K) and reused for all
    (alpha, beta) pairs.
    """
    ctx = BenchContext(corpus, model)
    rows = []
    for kind in map(ModelKind, model_kinds):
        if kind is ModelKind.BASELINE:
            rows.append(GridRow(kind.value, None, None, None, evaluate(ScoringParams(model_kind=kind), benchmark, ctx=ctx)))
            continue
        for k in k_grid:
            cached = [entry_neighbors(e, kind, k, ctx) for e in benchmark]
            for alpha, beta in itertools.product(alpha_grid, beta_grid):
                params = ScoringParams(alpha, beta, k, kind, None)
                per_entry = [
                    entry_metrics(rank_for_entry(e, params, ctx, nbrs), e.targets)
                    for e, nbrs in zip(benchmark, cached)
                ]
                rows.append(GridRow(kind.value, alpha, beta, k, aggregate(per_entry)))
                if progress:
                    progress(rows[-1])
    return rows
