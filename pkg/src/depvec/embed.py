"""Truncated SVD embeddings of libraries and repository snapshots."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, CooccurrenceMatrix, IdfTable, build_matrix, idf_table, smoothed_idf
from .errors import (
    EmptyMatrix,
    MalformedModel,
    RankTooLarge,
    UnknownLibraries,
    UsageError,
    VersionMismatch,
    ZeroVector,
)

log = logging.getLogger(__name__)

MODEL_VERSION = 1
SCALINGS = ("sigma", "none")


@dataclass(frozen=True)
class SvdFactors:
    U: np.ndarray  # rows x d
    sigma: np.ndarray  # d, descending
    V: np.ndarray  # cols x d
    extra_iterations: int = 0


def _fix_signs(U: np.ndarray, V: np.ndarray) -> None:
    """Flip factor pairs in place so each V column's largest-|.| entry is >= 0."""
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[idx, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    U *= signs
    V *= signs


def truncated_svd(
    M,
    d: int,
    seed: int = 0,
    oversample: int = 10,
    power_iters: int = 4,
    tol: float = 1e-9,
    max_extra_iters: int = 300,
) -> SvdFactors:
    """Rank-``d`` SVD by randomized range finding.

    A Gaussian sketch of ``d + oversample`` columns is refined by
    ``power_iters`` rounds of orthonormalized subspace iteration.  Iteration
    then continues until every kept triplet satisfies
    ``||M v - s u|| <= tol * s_max`` (or ``max_extra_iters`` is hit), so the
    leading singular values are accurate even when the spectrum has no gap
    after ``d``.
    """
    if isinstance(M, CooccurrenceMatrix):
        M = M.entries
    m, n = M.shape
    if m == 0 or n == 0 or (sp.issparse(M) and M.nnz == 0) or (not sp.issparse(M) and not np.any(M)):
        raise EmptyMatrix("matrix has no nonzero entries")
    if not 1 <= d <= min(m, n):
        raise RankTooLarge(f"d={d} must lie in [1, {min(m, n)}]")
    if sp.issparse(M):
        M = sp.csr_matrix(M, dtype=np.float64)
    else:
        M = np.asarray(M, dtype=np.float64)
    MT = M.T.tocsr() if sp.issparse(M) else M.T

    rng = np.random.default_rng(seed)
    width = min(d + oversample, min(m, n))
    Q, _ = np.linalg.qr(M @ rng.standard_normal((n, width)))

    def subspace_step(Q):
        Z, _ = np.linalg.qr(MT @ Q)
        Q, _ = np.linalg.qr(M @ Z)
        return Q

    for _ in range(power_iters):
        Q = subspace_step(Q)

    extra = 0
    while True:
        B = np.asarray(MT @ Q).T  # Q^T M, width x n
        ub, s, vt = np.linalg.svd(B, full_matrices=False)
        U = Q @ ub[:, :d]
        sigma = s[:d].copy()
        V = vt[:d].T.copy()
        resid = np.linalg.norm(M @ V - U * sigma, axis=0).max()
        if resid <= tol * sigma[0] or extra >= max_extra_iters:
            break
        Q = subspace_step(Q)
        extra += 1
    if extra >= max_extra_iters:
        log.warning("truncated_svd: residual %.3g after %d extra iterations", resid, extra)
    _fix_signs(U, V)
    return SvdFactors(U=U, sigma=sigma, V=V, extra_iterations=extra)


@dataclass
class EmbeddingModel:
    dim: int
    scaling: str
    seed: int
    singular_values: np.ndarray
    vocab: list[str]
    library_matrix: np.ndarray  # len(vocab) x dim
    repo_keys: list[tuple[str, int]]
    repo_matrix: np.ndarray  # len(repo_keys) x dim
    idf: IdfTable
    lib_index: dict[str, int] = field(init=False, repr=False)
    repo_index: dict[tuple[str, int], int] = field(init=False, repr=False)

    def __post_init__(self):
        self.lib_index = {name: j for j, name in enumerate(self.vocab)}
        self.repo_index = {key: i for i, key in enumerate(self.repo_keys)}

    def library_vector(self, name: str) -> np.ndarray:
        return self.library_matrix[self.lib_index[name]]

    def repo_vector(self, repo_id: str, year: int) -> np.ndarray:
        return self.repo_matrix[self.repo_index[(repo_id, year)]]

    def split_known(self, deps) -> tuple[list[str], list[str]]:
        known = sorted(d for d in deps if d in self.lib_index)
        unknown = sorted(d for d in deps if d not in self.lib_index)
        return known, unknown


def build_model(corpus: Corpus, d: int = 32, scaling: str = "sigma", seed: int = 0) -> EmbeddingModel:
    """Factor the corpus co-occurrence matrix and keep d-dimensional vectors.

    With ``scaling="sigma"`` library vectors are ``V * sigma`` and repository
    vectors are the fold-in ``M @ V`` (which equals ``U * sigma``).  With
    ``scaling="none"`` the raw singular vectors are used.
    """
    if scaling not in SCALINGS:
        raise UsageError(f"scaling must be one of {SCALINGS}, got {scaling!r}")
    matrix = build_matrix(corpus)
    f = truncated_svd(matrix, d, seed=seed)
    if scaling == "sigma":
        libs = f.V * f.sigma
        repos = np.asarray(matrix.entries @ f.V)
    else:
        libs = f.V
        repos = f.U
    return EmbeddingModel(
        dim=d,
        scaling=scaling,
        seed=seed,
        singular_values=f.sigma,
        vocab=list(matrix.cols),
        library_matrix=np.ascontiguousarray(libs),
        repo_keys=list(matrix.rows),
        repo_matrix=np.ascontiguousarray(repos),
        idf=idf_table(corpus),
    )


def rle_vector(deps, model: EmbeddingModel) -> tuple[np.ndarray, list[str]]:
    """Mean of the library vectors of ``deps``; returns (vector, ignored names)."""
    known, unknown = model.split_known(deps)
    if not known:
        raise UnknownLibraries(unknown)
    rows = model.library_matrix[[model.lib_index[k] for k in known]]
    return rows.mean(axis=0), unknown


def fold_in(deps, model: EmbeddingModel) -> tuple[np.ndarray, list[str]]:
    """Project a dependency set into the repository space of ``model``.

    For a training snapshot this reproduces its stored repository vector:
    the indicator times ``V`` for sigma scaling, additionally divided by the
    singular values for unscaled models.
    """
    known, unknown = model.split_known(deps)
    if not known:
        raise UnknownLibraries(unknown)
    idx = [model.lib_index[k] for k in known]
    if model.scaling == "sigma":
        # library_matrix = V * sigma, so undo the scaling to get V rows
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(model.singular_values > 0, model.library_matrix[idx] / model.singular_values, 0.0)
        return v.sum(axis=0), unknown
    with np.errstate(divide="ignore", invalid="ignore"):
        u = model.library_matrix[idx].sum(axis=0) / model.singular_values
    return np.where(model.singular_values > 0, u, 0.0), unknown


def dre_vector(deps, model: EmbeddingModel, key: tuple[str, int] | None = None):
    """Direct repository vector: the stored row for a training snapshot, else fold-in."""
    if key is not None and key in model.repo_index:
        known, unknown = model.split_known(deps)
        return model.repo_matrix[model.repo_index[key]], unknown
    return fold_in(deps, model)


def cosine_distance(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise ZeroVector("cosine distance is undefined for a zero vector")
    return float(np.clip(1.0 - np.dot(x, y) / (nx * ny), 0.0, 2.0))


# -- persistence ----------------------------------------------------------------

def model_to_dict(model: EmbeddingModel) -> dict:
    return {
        "version": MODEL_VERSION,
        "dim": model.dim,
        "scaling": model.scaling,
        "seed": model.seed,
        "singular_values": [float(x) for x in model.singular_values],
        "vocab": list(model.vocab),
        "libraries": {
            name: [float(x) for x in row] for name, row in zip(model.vocab, model.library_matrix)
        },
        "repos": {
            f"{repo}@{year}": [float(x) for x in row]
            for (repo, year), row in zip(model.repo_keys, model.repo_matrix)
        },
        "idf": {"n": model.idf.n, "df": model.idf.df},
    }


def dumps_model(model: EmbeddingModel) -> str:
    return json.dumps(model_to_dict(model), separators=(",", ":")) + "\n"


def save_model(model: EmbeddingModel, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def _floats(values, dim: int, what: str) -> list[float]:
    if not isinstance(values, list) or len(values) != dim:
        raise MalformedModel(f"{what}: expected {dim} numbers")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise MalformedModel(f"{what}: non-numeric entry")
    return values


def model_from_dict(doc) -> EmbeddingModel:
    if not isinstance(doc, dict):
        raise MalformedModel("model document must be a JSON object")
    if doc.get("version") != MODEL_VERSION:
        raise VersionMismatch(f"model version {doc.get('version')!r}, expected {MODEL_VERSION}")
    try:
        dim = doc["dim"]
        scaling = doc["scaling"]
        vocab = doc["vocab"]
        libs = doc["libraries"]
        repos = doc["repos"]
        sv = _floats(doc["singular_values"], dim, "singular_values")
        idf_doc = doc["idf"]
        n, df = idf_doc["n"], idf_doc["df"]
        seed = doc["seed"]
    except (KeyError, TypeError) as exc:
        raise MalformedModel(f"missing or invalid field: {exc}") from None
    if scaling not in SCALINGS:
        raise MalformedModel(f"unknown scaling {scaling!r}")
    if not isinstance(vocab, list) or set(vocab) != set(libs):
        raise MalformedModel("vocab and libraries disagree")
    lib_matrix = np.array([_floats(libs[name], dim, name) for name in vocab], dtype=np.float64)
    keys = []
    rows = []
    for label, vec in repos.items():
        repo, sep, year = label.rpartition("@")
        if not sep or not year.lstrip("-").isdigit():
            raise MalformedModel(f"bad repository key {label!r}")
        keys.append((repo, int(year)))
        rows.append(_floats(vec, dim, label))
    repo_matrix = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    df = {str(k): int(v) for k, v in df.items()}
    idf = IdfTable("corpus", int(n), df, {k: smoothed_idf(int(n), v) for k, v in df.items()})
    return EmbeddingModel(
        dim=dim,
        scaling=scaling,
        seed=seed,
        singular_values=np.array(sv, dtype=np.float64),
        vocab=vocab,
        library_matrix=lib_matrix.reshape(len(vocab), dim),
        repo_keys=keys,
        repo_matrix=repo_matrix,
        idf=idf,
    )


def load_model(path: str | Path) -> EmbeddingModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedModel(f"{path}: invalid JSON ({exc.msg})") from None
    return model_from_dict(doc)
