"""Synthetic multi-year corpora with planted library domains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, ProjectSnapshot
from .errors import UsageError


@dataclass(frozen=True)
class SynthConfig:
    n_domains: int = 8
    libs_per_domain: int = 60
    zipf_s: float = 1.5
    n_projects: int = 2000
    deps_min: int = 3
    deps_max: int = 12
    years: int = 3
    add_rate: float = 1.0
    seed: int = 0
    n_global: int = 20
    global_frac: float = 0.2
    rare_rate: float = 0.6
    drop_rate: float = 0.03
    start_year: int = 2018

    def validate(self) -> None:
        positive = ("n_domains", "libs_per_domain", "n_projects", "deps_min", "deps_max", "years")
        for name in positive:
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be positive")
        if self.deps_min > self.deps_max:
            raise UsageError("deps_min must not exceed deps_max")
        if self.deps_max > self.libs_per_domain + self.n_global:
            raise UsageError("deps_max exceeds the libraries available to one project")
        if self.zipf_s < 0 or self.add_rate < 0 or self.rare_rate < 0:
            raise UsageError("zipf_s, add_rate and rare_rate must be >= 0")
        if not 0 <= self.global_frac <= 1 or not 0 <= self.drop_rate < 1:
            raise UsageError("global_frac and drop_rate must be probabilities")


@dataclass
class SynthCorpus:
    corpus: Corpus
    config: SynthConfig
    project_domain: dict[str, int]
    library_domain: dict[str, int]  # -1 for global and project-specific libraries


def _zipf_weights(n: int, s: float) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1, dtype=np.float64) ** s
    return w / w.sum()


def _draw(rng, pool: list[str], weights: np.ndarray, exclude: set[str], count: int) -> list[str]:
    mask = np.array([name not in exclude for name in pool])
    if count <= 0 or not mask.any():
        return []
    w = np.where(mask, weights, 0.0)
    count = min(count, int(mask.sum()))
    idx = rng.choice(len(pool), size=count, replace=False, p=w / w.sum())
    return [pool[i] for i in idx]


def synth_corpus(config: SynthConfig | None = None, **overrides) -> SynthCorpus:
    """Generate projects whose dependencies come mostly from one home domain.

    Each project draws Zipf-weighted libraries from its domain pool and a small
    globally popular pool, plus a few project-specific libraries that produce
    the long tail.  Later years drop a few libraries and add new ones, mostly
    from the home domain, at ``add_rate`` per year.
    """
    cfg = config or SynthConfig()
    if overrides:
        cfg = SynthConfig(**{**cfg.__dict__, **overrides})
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)

    domains = [[f"d{d}-lib{j}" for j in range(cfg.libs_per_domain)] for d in range(cfg.n_domains)]
    global_pool = [f"common-lib{j}" for j in range(cfg.n_global)]
    dom_w = _zipf_weights(cfg.libs_per_domain, cfg.zipf_s)
    glob_w = _zipf_weights(cfg.n_global, cfg.zipf_s) if cfg.n_global else np.zeros(0)
    library_domain = {name: d for d, pool in enumerate(domains) for name in pool}
    library_domain.update({name: -1 for name in global_pool})

    width = len(str(cfg.n_projects - 1))
    snapshots = []
    project_domain = {}
    rare_counter = 0
    for p in range(cfg.n_projects):
        repo = f"synth/p{p:0{width}d}"
        home = int(rng.integers(cfg.n_domains))
        project_domain[repo] = home
        size = int(rng.integers(cfg.deps_min, cfg.deps_max + 1))
        n_global = int(rng.binomial(size, cfg.global_frac)) if cfg.n_global else 0
        deps = set(_draw(rng, global_pool, glob_w, set(), n_global))
        deps |= set(_draw(rng, domains[home], dom_w, deps, size - len(deps)))
        for _ in range(int(rng.poisson(cfg.rare_rate))):
            deps.add(f"rare-lib{rare_counter}")
            library_domain[f"rare-lib{rare_counter}"] = -1
            rare_counter += 1

        for t in range(cfg.years):
            if t > 0:
                dropped = {name for name in sorted(deps) if rng.random() < cfg.drop_rate}
                n_add = int(rng.poisson(cfg.add_rate))
                added = _draw(rng, domains[home], dom_w, deps, n_add)
                deps = (deps - dropped) | set(added)
                if not deps:
                    deps = set(_draw(rng, domains[home], dom_w, set(), 1))
            snapshots.append(ProjectSnapshot(repo, cfg.start_year + t, frozenset(deps)))
    return SynthCorpus(Corpus(snapshots), cfg, project_domain, library_domain)
