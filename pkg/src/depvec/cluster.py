"""K-means over library embeddings, gap-curve model selection, and dendrograms."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidRefs, TooFewItems, TooFewPoints, UsageError

log = logging.getLogger(__name__)


def normalize_rows(X: np.ndarray) -> np.ndarray:
    """Unit-length copies of the rows of ``X``; zero rows stay zero."""
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return np.divide(X, norms, out=np.zeros_like(X), where=norms > 0)


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def intra_distance(X: np.ndarray, labels: np.ndarray, k: int) -> float:
    """Total Euclidean distance of points to the mean of their group."""
    centroids = _group_means(X, labels, k)
    return float(np.linalg.norm(X - centroids[labels], axis=1).sum())


def _group_means(X: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, labels, X)
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    return sums / np.maximum(counts, 1.0)[:, None]


@dataclass
class ClusterPartition:
    k: int
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float  # sum of distances to centroids
    sse: float
    n_iter: int
    sse_history: list[float] = field(default_factory=list, repr=False)

    def assignments(self, names) -> dict[str, int]:
        return {name: int(c) for name, c in zip(names, self.labels)}

    def to_csv(self, names) -> str:
        rows = ["library,cluster_id"]
        rows += [f"{name},{int(c)}" for name, c in zip(names, self.labels)]
        return "\n".join(rows) + "\n"


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sq_dists(X, centers[:1])[:, 0]
    for i in range(1, k):
        total = closest.sum()
        if total <= 0:
            # all points coincide with chosen centers
            centers[i] = X[rng.integers(n)]
        else:
            centers[i] = X[rng.choice(n, p=closest / total)]
        closest = np.minimum(closest, _sq_dists(X, centers[i : i + 1])[:, 0])
    return centers


def _repair_empty(X: np.ndarray, labels: np.ndarray, centers: np.ndarray, k: int) -> None:
    """Give every empty cluster the farthest point from its current center."""
    counts = np.bincount(labels, minlength=k)
    empty = np.flatnonzero(counts == 0)
    if not len(empty):
        return
    dist = np.linalg.norm(X - centers[labels], axis=1)
    order = np.argsort(-dist, kind="stable")
    pos = 0
    for c in empty:
        while counts[labels[order[pos]]] <= 1:
            pos += 1
        p = order[pos]
        counts[labels[p]] -= 1
        labels[p] = c
        counts[c] = 1
        pos += 1


def _lloyd(X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int, tol: float) -> ClusterPartition:
    centers = _kmeans_pp(X, k, rng)
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        labels = np.argmin(_sq_dists(X, centers), axis=1)
        _repair_empty(X, labels, centers, k)
        new_centers = _group_means(X, labels, k)
        history.append(float(((X - new_centers[labels]) ** 2).sum()))
        shift = np.linalg.norm(new_centers - centers, axis=1).max()
        centers = new_centers
        if shift < tol:
            break
    return ClusterPartition(
        k=k,
        labels=labels,
        centroids=centers,
        inertia=float(np.linalg.norm(X - centers[labels], axis=1).sum()),
        sse=history[-1],
        n_iter=n_iter,
        sse_history=history,
    )


def kmeans(
    X,
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-4,
    n_init: int = 10,
) -> ClusterPartition:
    """Lloyd's algorithm with k-means++ seeding, best of ``n_init`` starts.

    Expects row-normalized vectors when cosine geometry is intended.  Each run
    stops when no centroid moves by more than ``tol`` or after ``max_iter``
    rounds; the run with the lowest squared error wins.
    """
    X = np.asarray(X, dtype=np.float64)
    if k < 1 or n_init < 1:
        raise UsageError("k and n_init must be >= 1")
    if X.shape[0] < k:
        raise TooFewPoints(f"{X.shape[0]} points cannot form {k} clusters")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        run = _lloyd(X, k, rng, max_iter, tol)
        if best is None or run.sse < best.sse:
            best = run
    return best


# -- gap curve -----------------------------------------------------------------

class GapEntry(NamedTuple):
    k: int
    W: float
    W_ref_mean: float
    W_ref_std: float
    gap: float


@dataclass
class GapCurve:
    entries: list[GapEntry]

    @property
    def ks(self) -> list[int]:
        return [e.k for e in self.entries]

    @property
    def gaps(self) -> np.ndarray:
        return np.array([e.gap for e in self.entries])

    def to_csv(self) -> str:
        rows = ["k,W,W_ref_mean,W_ref_std,gap"]
        rows += [f"{e.k},{e.W!r},{e.W_ref_mean!r},{e.W_ref_std!r},{e.gap!r}" for e in self.entries]
        return "\n".join(rows) + "\n"


def _gap_entry(X: np.ndarray, k: int, n_refs: int, seed: int) -> GapEntry:
    part = kmeans(X, k, seed=seed)
    rng = np.random.default_rng([seed, k])
    refs = np.array([intra_distance(X, rng.permutation(part.labels), k) for _ in range(n_refs)])
    return GapEntry(k, part.inertia, float(refs.mean()), float(refs.std()), float(refs.mean() - part.inertia))


def gap_curve(X, k_range=range(2, 65), n_refs: int = 10, seed: int = 0, threads: int = 1) -> GapCurve:
    """Fitted vs. size-preserving random-partition intra-cluster distance per k.

    Each reference clustering permutes the fitted labels over the same points,
    so group sizes match the fitted partition.
    """
    if n_refs < 1:
        raise InvalidRefs("n_refs must be >= 1")
    ks = sorted(set(int(k) for k in k_range))
    if not ks or ks[0] < 1:
        raise UsageError("k range must be nonempty and start at >= 1")
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] < ks[-1]:
        raise TooFewPoints(f"{X.shape[0]} points cannot form {ks[-1]} clusters")
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            entries = list(pool.map(lambda k: _gap_entry(X, k, n_refs, seed), ks))
    else:
        entries = [_gap_entry(X, k, n_refs, seed) for k in ks]
    return GapCurve(entries)


class KChoice(NamedTuple):
    k: int
    saturated: bool


def select_k(curve: GapCurve, epsilon: float = 0.02, window: int = 3) -> KChoice:
    """Smallest k after which ``window`` consecutive gap gains stay below
    ``epsilon * max(gap)``.  Falls back to the largest k, unsaturated."""
    if not curve.entries:
        raise UsageError("empty gap curve")
    ks = curve.ks
    gaps = curve.gaps
    threshold = epsilon * gaps.max()
    gains = np.diff(gaps)
    for i in range(len(gains) - window + 1):
        if np.all(gains[i : i + window] < threshold):
            return KChoice(ks[i], True)
    log.info("gap curve did not saturate; using k=%d", ks[-1])
    return KChoice(ks[-1], False)


# -- dendrogram ----------------------------------------------------------------

class Merge(NamedTuple):
    a: int
    b: int
    height: float
    node: int
    size: int


@dataclass
class Dendrogram:
    merges: list[Merge]
    leaves: list[str]

    def to_newick(self) -> str:
        n = len(self.leaves)
        heights = {i: 0.0 for i in range(n)}
        text = {i: _newick_label(name) for i, name in enumerate(self.leaves)}
        for m in self.merges:
            heights[m.node] = m.height
            la = max(m.height - heights[m.a], 0.0)
            lb = max(m.height - heights[m.b], 0.0)
            text[m.node] = f"({text.pop(m.a)}:{la!r},{text.pop(m.b)}:{lb!r})"
        return (text[self.merges[-1].node] if self.merges else text[0]) + ";\n"

    def to_json(self) -> str:
        doc = {
            "leaves": list(self.leaves),
            "merges": [
                {"a": m.a, "b": m.b, "height": m.height, "node": m.node, "size": m.size}
                for m in self.merges
            ],
        }
        return json.dumps(doc, indent=2) + "\n"


def _newick_label(name: str) -> str:
    if any(c in name for c in " ():;,[]'\t"):
        return "'" + name.replace("'", "''") + "'"
    return name


def cosine_distance_matrix(X: np.ndarray) -> np.ndarray:
    U = normalize_rows(X)
    D = np.clip(1.0 - U @ U.T, 0.0, 2.0)
    np.fill_diagonal(D, 0.0)
    return (D + D.T) / 2.0


def agglomerate(X, labels=None, metric: str = "cosine", linkage: str = "average") -> Dendrogram:
    """Bottom-up average-linkage clustering under cosine distance.

    Node ``i < n`` is leaf ``i``; the merge at step ``t`` creates node
    ``n + t``.  Ties are resolved by the smallest ``(a, b)`` pair of node ids.
    """
    if metric != "cosine" or linkage != "average":
        raise UsageError("only cosine distance with average linkage is supported")
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise TooFewItems("need at least two items to agglomerate")
    if np.any(np.linalg.norm(X, axis=1) == 0):
        raise UsageError("cosine distance needs nonzero vectors")
    labels = [str(i) for i in range(n)] if labels is None else [str(x) for x in labels]

    total = 2 * n - 1
    D = np.full((total, total), np.inf)
    D[:n, :n] = cosine_distance_matrix(X)
    np.fill_diagonal(D, np.inf)
    size = np.zeros(total, dtype=np.int64)
    size[:n] = 1
    active = np.zeros(total, dtype=bool)
    active[:n] = True

    merges = []
    for step in range(n - 1):
        ids = np.flatnonzero(active)
        sub = D[np.ix_(ids, ids)]
        sub[np.tril_indices(len(ids))] = np.inf
        # row-major argmin over the upper triangle returns the smallest (a, b)
        flat = int(np.argmin(sub))
        i, j = divmod(flat, len(ids))
        a, b = int(ids[i]), int(ids[j])
        height = float(D[a, b])
        node = n + step
        na, nb = size[a], size[b]
        row = (na * D[a, :] + nb * D[b, :]) / (na + nb)
        active[a] = active[b] = False
        row[~active] = np.inf
        D[node, :] = row
        D[:, node] = row
        D[node, node] = np.inf
        size[node] = na + nb
        active[node] = True
        merges.append(Merge(a, b, height, node, int(na + nb)))
    return Dendrogram(merges, labels)
