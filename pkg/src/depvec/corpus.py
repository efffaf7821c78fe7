"""Multi-year dependency corpus, co-occurrence matrix and document frequencies."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import (
    DuplicateSnapshot,
    EmptyCorpus,
    EmptyScope,
    MalformedLayout,
    MalformedRecord,
    MissingRoot,
)
from .reqparse import normalize_name, parse_requirements

log = logging.getLogger(__name__)

_REQ_FILE = re.compile(r"^requirements-(\d{4})\.txt$")


@dataclass(frozen=True)
class ProjectSnapshot:
    repo_id: str
    year: int
    deps: frozenset[str]

    def __post_init__(self):
        if not self.deps:
            raise ValueError(f"snapshot {self.key} has no dependencies")

    @property
    def key(self) -> tuple[str, int]:
        return (self.repo_id, self.year)

    @property
    def label(self) -> str:
        return f"{self.repo_id}@{self.year}"


@dataclass
class Corpus:
    """Snapshots ordered by (repo_id, year) with a per-year index."""

    snapshots: list[ProjectSnapshot]
    year_index: dict[int, list[int]] = field(init=False, repr=False)
    _by_key: dict[tuple[str, int], int] = field(init=False, repr=False)

    def __post_init__(self):
        self.snapshots = sorted(self.snapshots, key=lambda s: s.key)
        self._by_key = {}
        self.year_index = {}
        for i, snap in enumerate(self.snapshots):
            if snap.key in self._by_key:
                raise DuplicateSnapshot(f"duplicate snapshot {snap.label}")
            self._by_key[snap.key] = i
            self.year_index.setdefault(snap.year, []).append(i)

    def __len__(self) -> int:
        return len(self.snapshots)

    def __eq__(self, other) -> bool:
        return isinstance(other, Corpus) and self.snapshots == other.snapshots

    @property
    def years(self) -> list[int]:
        return sorted(self.year_index)

    def get(self, repo_id: str, year: int) -> ProjectSnapshot | None:
        i = self._by_key.get((repo_id, year))
        return None if i is None else self.snapshots[i]

    def vocabulary(self) -> list[str]:
        return sorted(set().union(*(s.deps for s in self.snapshots)))


def slice_year(corpus: Corpus, year: int) -> list[ProjectSnapshot]:
    """All snapshots taken in ``year`` (empty when the year is absent)."""
    return [corpus.snapshots[i] for i in corpus.year_index.get(year, [])]


# -- ingestion and persistence ------------------------------------------------

def ingest_tree(root: str | Path) -> Corpus:
    """Build a corpus from ``root/owner__name/requirements-<year>.txt`` files.

    Files not matching the layout are logged and skipped, as are files whose
    parse yields no dependencies.
    """
    root = Path(root)
    if not root.is_dir():
        raise MissingRoot(f"corpus root {root} does not exist")
    snapshots = []
    for repo_dir in sorted(p for p in root.iterdir()):
        if not repo_dir.is_dir():
            log.warning("%s", MalformedLayout(f"{repo_dir}: not a repository directory"))
            continue
        repo_id = repo_dir.name.replace("__", "/", 1)
        for path in sorted(repo_dir.iterdir()):
            m = _REQ_FILE.match(path.name)
            if not m or not path.is_file():
                log.warning("%s", MalformedLayout(f"{path}: does not match requirements-<year>.txt"))
                continue
            report = parse_requirements(path.read_text(encoding="utf-8-sig", errors="replace"))
            for lineno, reason in report.warnings:
                log.debug("%s:%d: %s", path, lineno, reason)
            if report.is_empty:
                log.info("%s: no dependencies, skipped", path)
                continue
            snapshots.append(ProjectSnapshot(repo_id, int(m.group(1)), frozenset(report.names)))
    return Corpus(snapshots)


def dumps_corpus(corpus: Corpus) -> str:
    lines = [
        json.dumps({"repo": s.repo_id, "year": s.year, "deps": sorted(s.deps)})
        for s in corpus.snapshots
    ]
    return "".join(line + "\n" for line in lines)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(dumps_corpus(corpus), encoding="utf-8")


def loads_corpus(text: str) -> Corpus:
    snapshots = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"invalid JSON ({exc.msg})", lineno) from None
        if not isinstance(rec, dict) or set(rec) != {"repo", "year", "deps"}:
            raise MalformedRecord("expected keys repo, year, deps", lineno)
        repo, year, deps = rec["repo"], rec["year"], rec["deps"]
        if not isinstance(repo, str) or not repo:
            raise MalformedRecord("repo must be a nonempty string", lineno)
        if not isinstance(year, int) or isinstance(year, bool):
            raise MalformedRecord("year must be an integer", lineno)
        if not isinstance(deps, list) or not deps or not all(isinstance(d, str) for d in deps):
            raise MalformedRecord("deps must be a nonempty list of strings", lineno)
        try:
            names = frozenset(normalize_name(d) for d in deps)
        except ValueError as exc:
            raise MalformedRecord(str(exc), lineno) from None
        if (repo, year) in seen:
            raise DuplicateSnapshot(f"line {lineno}: duplicate snapshot {repo}@{year}")
        seen.add((repo, year))
        snapshots.append(ProjectSnapshot(repo, year, names))
    return Corpus(snapshots)


def load_corpus(path: str | Path) -> Corpus:
    return loads_corpus(Path(path).read_text(encoding="utf-8"))


# -- matrix and document frequencies ------------------------------------------

@dataclass(frozen=True)
class CooccurrenceMatrix:
    rows: list[tuple[str, int]]
    cols: list[str]
    entries: sp.csr_matrix

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def incidence(snapshots, col_index: dict[str, int]) -> sp.csr_matrix:
    """Binary snapshot x library matrix over a fixed column index.

    Libraries missing from ``col_index`` are dropped.
    """
    indptr = [0]
    indices: list[int] = []
    for snap in snapshots:
        cols = sorted(col_index[d] for d in snap.deps if d in col_index)
        indices.extend(cols)
        indptr.append(len(indices))
    data = np.ones(len(indices), dtype=np.float64)
    return sp.csr_matrix(
        (data, np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(snapshots), len(col_index)),
    )


def build_matrix(corpus: Corpus) -> CooccurrenceMatrix:
    if not len(corpus):
        raise EmptyCorpus("cannot build a matrix from an empty corpus")
    cols = corpus.vocabulary()
    col_index = {name: j for j, name in enumerate(cols)}
    return CooccurrenceMatrix(
        rows=[s.key for s in corpus.snapshots],
        cols=cols,
        entries=incidence(corpus.snapshots, col_index),
    )


def smoothed_idf(n: int, df: int) -> float:
    return math.log((1 + n) / (1 + df)) + 1.0


@dataclass(frozen=True)
class IdfTable:
    scope: str  # "corpus" or the year as text
    n: int
    df: dict[str, int]
    idf: dict[str, float]

    def get(self, name: str) -> float:
        """IDF of ``name``; a library unseen in scope is treated as df = 0."""
        value = self.idf.get(name)
        return smoothed_idf(self.n, 0) if value is None else value


def document_frequencies(snapshots) -> Counter:
    df: Counter = Counter()
    for snap in snapshots:
        df.update(snap.deps)
    return df


def idf_from_snapshots(snapshots, scope: str) -> IdfTable:
    snapshots = list(snapshots)
    if not snapshots:
        raise EmptyScope(f"no snapshots in scope {scope}")
    n = len(snapshots)
    df = dict(sorted(document_frequencies(snapshots).items()))
    return IdfTable(scope, n, df, {name: smoothed_idf(n, c) for name, c in df.items()})


def idf_table(corpus: Corpus, year: int | None = None) -> IdfTable:
    """IDF over the whole corpus (``year=None``) or over one year slice."""
    if year is None:
        return idf_from_snapshots(corpus.snapshots, "corpus")
    return idf_from_snapshots(slice_year(corpus, year), str(year))


# -- distribution statistics --------------------------------------------------

@dataclass(frozen=True)
class DistributionReport:
    year: int | None
    n_projects: int
    df: dict[str, int]
    top: list[tuple[str, int, float]]
    frac_df_le_10: float
    frac_df_eq_1: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["library", "df", "percent"])
        for name, count in sorted(self.df.items(), key=lambda kv: (-kv[1], kv[0])):
            writer.writerow([name, count, f"{100.0 * count / self.n_projects:.4f}"])
        scope = "all" if self.year is None else self.year
        buf.write(f"# year: {scope}\n")
        buf.write(f"# projects: {self.n_projects}\n")
        buf.write(f"# libraries: {len(self.df)}\n")
        buf.write(f"# fraction_df_le_10: {self.frac_df_le_10:.6f}\n")
        buf.write(f"# fraction_df_eq_1: {self.frac_df_eq_1:.6f}\n")
        for rank, (name, count, pct) in enumerate(self.top, start=1):
            buf.write(f"# top{rank}: {name} {count} {pct:.1f}%\n")
        return buf.getvalue()


def stats(corpus: Corpus, year: int | None = None, top_n: int = 10) -> DistributionReport:
    snapshots = corpus.snapshots if year is None else slice_year(corpus, year)
    if not snapshots:
        raise EmptyScope(f"no snapshots for year {year}")
    df = document_frequencies(snapshots)
    n = len(snapshots)
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))
    counts = np.fromiter(df.values(), dtype=np.int64)
    return DistributionReport(
        year=year,
        n_projects=n,
        df=dict(sorted(df.items())),
        top=[(name, c, 100.0 * c / n) for name, c in ranked[:top_n]],
        frac_df_le_10=float(np.mean(counts <= 10)),
        frac_df_eq_1=float(np.mean(counts == 1)),
    )
