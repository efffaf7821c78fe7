from pathlib import Path

import numpy as np
import pytest

from depvec.corpus import Corpus, ProjectSnapshot

FIXTURES = Path(__file__).parent / "fixtures"


def make_corpus(records) -> Corpus:
    """records: iterable of (repo_id, year, deps)."""
    return Corpus([ProjectSnapshot(r, y, frozenset(d)) for r, y, d in records])


def random_corpus(rng: np.random.Generator, n_snapshots: int, n_libs: int, years=(2016,), max_deps=6) -> Corpus:
    libs = [f"lib{j:02d}" for j in range(n_libs)]
    records = []
    per_year = -(-n_snapshots // len(years))
    for year in years:
        for i in range(per_year):
            size = int(rng.integers(1, max_deps + 1))
            deps = set(rng.choice(libs, size=min(size, n_libs), replace=False).tolist())
            records.append((f"o/r{i:03d}", year, deps))
    return make_corpus(records[:n_snapshots] if len(years) == 1 else records)


@pytest.fixture
def small_corpus() -> Corpus:
    return make_corpus(
        [
            ("a/one", 2016, {"numpy", "scipy", "matplotlib"}),
            ("a/two", 2016, {"numpy", "pandas"}),
            ("b/web", 2016, {"flask", "requests", "jinja2"}),
            ("b/api", 2016, {"flask", "requests", "sqlalchemy"}),
            ("c/ml", 2016, {"numpy", "scipy", "scikit-learn"}),
            ("a/one", 2017, {"numpy", "scipy", "matplotlib", "pandas"}),
            ("b/web", 2017, {"flask", "requests", "jinja2", "gunicorn"}),
            ("c/ml", 2017, {"numpy", "scipy", "scikit-learn", "pandas"}),
        ]
    )


# acceptance criteria register their outcome here; printed after the run
ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {status} - {detail}")
