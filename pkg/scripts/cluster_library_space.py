"""Cluster the library embedding of a synthetic corpus and check the result
against the planted domains.

Writes the gap curve, the partition and a Newick dendrogram over cluster
centroids to ``--out-dir``, and prints how pure each cluster is with respect
to the planted domain labels.

    python3 scripts/cluster_library_space.py --out-dir runs/clusters
"""

from __future__ import annotations

import argparse
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from depvec.cluster import agglomerate, gap_curve, kmeans, normalize_rows, select_k
from depvec.embed import build_model
from depvec.synth import synth_corpus


@dataclass(frozen=True)
class ClusterRun:
    seed: int = 0
    dim: int = 32
    k_lo: int = 2
    k_hi: int = 32
    n_refs: int = 10
    min_df: int = 5  # rare libraries carry little signal and no domain label


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--k-hi", type=int, default=32)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out-dir", default="runs/clusters")
    args = parser.parse_args()
    run = ClusterRun(seed=args.seed, k_hi=args.k_hi)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    synth = synth_corpus(seed=run.seed)
    model = build_model(synth.corpus, d=run.dim, seed=run.seed)
    df = Counter(lib for s in synth.corpus.snapshots for lib in s.deps)
    keep = [i for i, lib in enumerate(model.vocab) if df[lib] >= run.min_df]
    names = [model.vocab[i] for i in keep]
    X = normalize_rows(model.library_matrix[keep])
    print(f"{len(names)} of {len(model.vocab)} libraries with df >= {run.min_df}")

    curve = gap_curve(X, range(run.k_lo, run.k_hi + 1), n_refs=run.n_refs, seed=run.seed, threads=args.threads)
    (out / "gap.csv").write_text(curve.to_csv(), encoding="utf-8")
    choice = select_k(curve)
    print(f"selected k={choice.k}{'' if choice.saturated else ' (unsaturated)'}")

    part = kmeans(X, choice.k, seed=run.seed)
    (out / "partition.csv").write_text(part.to_csv(names), encoding="utf-8")

    print(f"\n{'cluster':>7} {'size':>5} {'domain':>7} {'purity':>7}")
    for c in range(part.k):
        members = [names[i] for i in np.flatnonzero(part.labels == c)]
        domains = Counter(synth.library_domain[m] for m in members)
        top, count = domains.most_common(1)[0]
        label = "global" if top == -1 else f"d{top}"
        print(f"{c:>7} {len(members):>5} {label:>7} {count / len(members):>7.2f}")

    ids = np.unique(part.labels)
    centroids = np.array([X[part.labels == c].mean(axis=0) for c in ids])
    tree = agglomerate(centroids, labels=[f"cluster_{c}" for c in ids])
    (out / "tree.nwk").write_text(tree.to_newick(), encoding="utf-8")
    (out / "tree.json").write_text(tree.to_json(), encoding="utf-8")
    print(f"\nwrote gap.csv, partition.csv, tree.nwk, tree.json to {out}")


if __name__ == "__main__":
    main()
