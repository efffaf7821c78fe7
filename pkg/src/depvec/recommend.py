"""Neighbor-based library recommendation.

For a query project, the K nearest snapshots are found (cosine distance over
embeddings, or Jaccard distance over dependency sets) and every library they
use that the query lacks is scored as

    score(L) = idf(L) ** alpha * sum(sim(r) ** beta for neighbors r containing L)

with ``sim = clamp(1 - distance, 0, 1)``.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .corpus import Corpus, IdfTable, ProjectSnapshot, incidence, idf_from_snapshots, slice_year
from .embed import EmbeddingModel, dre_vector, fold_in, rle_vector
from .errors import BothEmpty, EmptySlice, NoCandidates, UnknownLibraries, UsageError, ZeroVector

log = logging.getLogger(__name__)


class ModelKind(str, Enum):
    RLE = "rle"
    DRE = "dre"
    JACCARD = "jaccard"
    BASELINE = "baseline"


ALL = None  # k_neighbors value meaning "every snapshot in the slice"


@dataclass(frozen=True)
class ScoringParams:
    alpha: float = -1.0
    beta: float = 2.0
    k_neighbors: int | None = 500
    model_kind: ModelKind = ModelKind.RLE
    top_n: int | None = 10

    def __post_init__(self):
        object.__setattr__(self, "model_kind", ModelKind(self.model_kind))
        if self.beta < 0:
            raise UsageError("beta must be >= 0")
        if self.k_neighbors is not None and self.k_neighbors < 1:
            raise UsageError("k_neighbors must be positive or ALL")
        if self.top_n is not None and self.top_n < 1:
            raise UsageError("top_n must be positive")


def preset(mode: str, kind: ModelKind | str = ModelKind.RLE, top_n: int | None = 10) -> ScoringParams:
    """Named parameter sets: ``relevant`` favors popular, well-supported
    libraries; ``explore`` boosts rare ones."""
    kind = ModelKind(kind)
    if mode == "relevant":
        k = 100 if kind is ModelKind.JACCARD else 500
        return ScoringParams(-1.0, 2.0, k, kind, top_n)
    if mode == "explore":
        return ScoringParams(3.0, 2.0, 50, kind, top_n)
    raise UsageError(f"unknown mode {mode!r}; expected relevant or explore")


@dataclass(frozen=True)
class Recommendation:
    library: str
    score: float
    supporting_neighbors: int

    def to_dict(self) -> dict:
        return {"library": self.library, "score": self.score, "supporting_neighbors": self.supporting_neighbors}


@dataclass(frozen=True)
class Neighbor:
    snapshot: ProjectSnapshot
    distance: float


def jaccard_distance(a, b) -> float:
    a, b = set(a), set(b)
    union = len(a | b)
    if not union:
        raise BothEmpty("Jaccard distance of two empty sets")
    return 1.0 - len(a & b) / union


class SliceIndex:
    """Precomputed view of a set of snapshots for neighbor search.

    Holds the slice's library document frequencies, a binary incidence matrix
    over the slice's own vocabulary, and lazily computed embedding vectors.
    """

    def __init__(self, snapshots, model: EmbeddingModel | None = None, label: str = "slice"):
        self.snapshots: list[ProjectSnapshot] = sorted(snapshots, key=lambda s: s.key)
        if not self.snapshots:
            raise EmptySlice(f"{label} has no snapshots")
        self.label = label
        self.model = model
        self.df = Counter()
        for s in self.snapshots:
            self.df.update(s.deps)
        self.vocab = sorted(self.df)
        self.col_index = {name: j for j, name in enumerate(self.vocab)}
        self.matrix = incidence(self.snapshots, self.col_index)
        self.sizes = np.array([len(s.deps) for s in self.snapshots], dtype=np.float64)
        self.row_of = {s.key: i for i, s in enumerate(self.snapshots)}
        self._vectors: dict[ModelKind, tuple[np.ndarray, np.ndarray]] = {}
        self._idf: IdfTable | None = None
        self._popular: list[str] | None = None

    def __len__(self) -> int:
        return len(self.snapshots)

    @property
    def idf(self) -> IdfTable:
        if self._idf is None:
            self._idf = idf_from_snapshots(self.snapshots, self.label)
        return self._idf

    @property
    def popular(self) -> list[str]:
        """Slice libraries by descending df, then name."""
        if self._popular is None:
            self._popular = sorted(self.df, key=lambda name: (-self.df[name], name))
        return self._popular

    def vectors(self, kind: ModelKind) -> tuple[np.ndarray, np.ndarray]:
        """(vectors, norms) for every snapshot; unembeddable rows are zero."""
        if kind not in self._vectors:
            if self.model is None:
                raise UsageError(f"{kind.value} neighbors need an embedding model")
            out = np.zeros((len(self), self.model.dim))
            for i, snap in enumerate(self.snapshots):
                try:
                    if kind is ModelKind.RLE:
                        out[i] = rle_vector(snap.deps, self.model)[0]
                    else:
                        out[i] = dre_vector(snap.deps, self.model, key=snap.key)[0]
                except UnknownLibraries:
                    pass
            self._vectors[kind] = (out, np.linalg.norm(out, axis=1))
        return self._vectors[kind]


def _order(distances: np.ndarray, keep: np.ndarray, k: int | None) -> np.ndarray:
    rows = np.flatnonzero(keep)
    # rows are already in (repo_id, year) order, so a stable sort breaks ties by repo_id
    rows = rows[np.argsort(distances[rows], kind="stable")]
    return rows if k is None else rows[:k]


def _exclusion_mask(index: SliceIndex, exclude) -> np.ndarray:
    keep = np.ones(len(index), dtype=bool)
    if exclude is None:
        return keep
    if isinstance(exclude, tuple):
        row = index.row_of.get(exclude)
        if row is not None:
            keep[row] = False
    else:
        for i, s in enumerate(index.snapshots):
            if s.repo_id == exclude:
                keep[i] = False
    return keep


def cosine_distances(query_vec: np.ndarray, index: SliceIndex, kind: ModelKind) -> np.ndarray:
    vecs, norms = index.vectors(kind)
    q = np.asarray(query_vec, dtype=np.float64)
    qn = np.linalg.norm(q)
    if qn == 0:
        raise ZeroVector("query vector is zero")
    with np.errstate(divide="ignore", invalid="ignore"):
        sim = (vecs @ q) / (norms * qn)
    # snapshots with no embeddable dependency count as dissimilar
    sim = np.where(norms > 0, sim, 0.0)
    return np.clip(1.0 - sim, 0.0, 2.0)


def jaccard_distances(query_deps, index: SliceIndex) -> np.ndarray:
    q = set(query_deps)
    ind = np.zeros(len(index.vocab))
    for name in q:
        j = index.col_index.get(name)
        if j is not None:
            ind[j] = 1.0
    inter = index.matrix @ ind
    union = index.sizes + len(q) - inter
    return 1.0 - inter / union


def nearest_neighbors(
    query,
    index: SliceIndex,
    kind: ModelKind | str,
    k: int | None,
    exclude=None,
) -> list[Neighbor]:
    """Exact K nearest snapshots, ascending by distance then (repo_id, year).

    ``query`` is a vector for RLE/DRE and a dependency set for JACCARD.
    ``exclude`` drops one snapshot (a ``(repo_id, year)`` key) or every
    snapshot of a repository (a bare ``repo_id``).
    """
    kind = ModelKind(kind)
    if kind is ModelKind.JACCARD:
        dist = jaccard_distances(query, index)
    elif kind is ModelKind.BASELINE:
        raise UsageError("the baseline does not use neighbors")
    else:
        dist = cosine_distances(query, index, kind)
    rows = _order(dist, _exclusion_mask(index, exclude), k)
    return [Neighbor(index.snapshots[i], float(dist[i])) for i in rows]


def _rank(scores: dict[str, float], support: Counter, popularity, top_n) -> list[Recommendation]:
    keys = {name: (-score, -popularity.get(name, 0), name) for name, score in scores.items()}
    ranked = sorted(keys, key=keys.__getitem__)
    if top_n is not None:
        ranked = ranked[:top_n]
    return [Recommendation(name, scores[name], support[name]) for name in ranked]


def score_candidates(
    query_deps,
    neighbors: list[Neighbor],
    params: ScoringParams,
    idf: IdfTable,
    popularity=None,
) -> list[Recommendation]:
    """Score every neighbor library absent from the query.

    ``popularity`` (library -> slice df) breaks score ties; it defaults to
    the document frequencies of ``idf``.
    """
    if not neighbors:
        raise EmptySlice("no neighbors to score from")
    query = set(query_deps)
    acc: dict[str, float] = {}
    support: Counter = Counter()
    for nb in neighbors:
        weight = min(max(1.0 - nb.distance, 0.0), 1.0) ** params.beta
        for lib in nb.snapshot.deps:
            if lib not in query:
                acc[lib] = acc.get(lib, 0.0) + weight
                support[lib] += 1
    if not acc:
        raise NoCandidates("every neighbor library is already a dependency")
    scores = {lib: idf.get(lib) ** params.alpha * total for lib, total in acc.items()}
    return _rank(scores, support, idf.df if popularity is None else popularity, params.top_n)


def popularity_ranking(query_deps, index: SliceIndex, top_n: int | None = None) -> list[Recommendation]:
    """Slice libraries the query lacks, most frequent first."""
    query = set(query_deps)
    out = []
    for lib in index.popular:
        if lib in query:
            continue
        if top_n is not None and len(out) == top_n:
            break
        out.append(Recommendation(lib, float(index.df[lib]), index.df[lib]))
    if not out:
        raise NoCandidates("the query already uses every library in the slice")
    return out


@dataclass(frozen=True)
class ResolvedQuery:
    deps: frozenset[str]
    key: tuple[str, int] | None  # set for in-corpus snapshots
    unknown: list[str]
    folded_in: bool


def resolve_query(query, corpus: Corpus) -> ResolvedQuery:
    """Accept a dependency set or an in-corpus ``(repo_id, year)`` pair."""
    if isinstance(query, tuple) and len(query) == 2 and isinstance(query[0], str):
        snap = corpus.get(*query)
        if snap is None:
            raise EmptySlice(f"snapshot {query[0]}@{query[1]} is not in the corpus")
        return ResolvedQuery(snap.deps, snap.key, [], False)
    deps = frozenset(query)
    if not deps:
        raise UnknownLibraries([])
    return ResolvedQuery(deps, None, [], False)


def query_vector(q: ResolvedQuery, kind: ModelKind, model: EmbeddingModel) -> tuple[np.ndarray, list[str], bool]:
    """Embed a resolved query; returns (vector, ignored names, folded_in)."""
    if kind is ModelKind.RLE:
        vec, unknown = rle_vector(q.deps, model)
        return vec, unknown, False
    if q.key is not None and q.key in model.repo_index:
        return model.repo_matrix[model.repo_index[q.key]], model.split_known(q.deps)[1], False
    vec, unknown = fold_in(q.deps, model)
    return vec, unknown, True


def recommend_from_index(
    q: ResolvedQuery,
    index: SliceIndex,
    params: ScoringParams,
    model: EmbeddingModel | None,
    idf: IdfTable,
) -> list[Recommendation]:
    kind = params.model_kind
    if kind is ModelKind.BASELINE:
        return popularity_ranking(q.deps, index, params.top_n)
    if kind is ModelKind.JACCARD:
        probe = q.deps
    else:
        if model is None:
            raise UsageError(f"{kind.value} needs an embedding model")
        probe, unknown, folded = query_vector(q, kind, model)
        if unknown:
            log.info("ignored %d unknown libraries: %s", len(unknown), ", ".join(unknown))
        if folded:
            log.info("query folded into the embedding space")
    neighbors = nearest_neighbors(probe, index, kind, params.k_neighbors, exclude=q.key)
    return score_candidates(q.deps, neighbors, params, idf, popularity=index.df)


def recommend(
    query,
    model: EmbeddingModel | None,
    corpus: Corpus,
    params: ScoringParams,
    year: int | None = None,
    idf: IdfTable | None = None,
) -> list[Recommendation]:
    """Recommend libraries for a dependency set or an in-corpus snapshot.

    Neighbors (and the baseline's popularity counts) come from the ``year``
    slice, or from the whole corpus when ``year`` is None.  ``idf`` defaults
    to the slice's own table.  The query snapshot never counts as its own
    neighbor.
    """
    q = resolve_query(query, corpus)
    snapshots = corpus.snapshots if year is None else slice_year(corpus, year)
    index = SliceIndex(snapshots, model, label="corpus" if year is None else str(year))
    return recommend_from_index(q, index, params, model, index.idf if idf is None else idf)


def with_overrides(params: ScoringParams, **kw) -> ScoringParams:
    return replace(params, **{k: v for k, v in kw.items() if v is not None})
