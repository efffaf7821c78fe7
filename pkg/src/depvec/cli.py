"""Command-line entry point: ``depvec <command> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .cluster import agglomerate, gap_curve, kmeans, normalize_rows, select_k
from .corpus import dumps_corpus, idf_table, ingest_tree, load_corpus, stats
from .embed import build_model, dumps_model, load_model
from .errors import DataError, MalformedRecord, UnknownLibraries, UsageError
from .recommend import ALL, ModelKind, preset, recommend, with_overrides
from .reqparse import parse_requirements
from .synth import SynthConfig, synth_corpus

log = logging.getLogger("depvec")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _k_range(text: str) -> range:
    lo, sep, hi = text.partition("..")
    try:
        lo_i, hi_i = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}") from None
    if not sep or lo_i < 1 or hi_i < lo_i:
        raise argparse.ArgumentTypeError(f"expected LO..HI with 1 <= LO <= HI, got {text!r}")
    return range(lo_i, hi_i + 1)


def _neighbors(text: str) -> int | str:
    if text.lower() == "all":
        return "all"
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'all', got {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError("neighbors must be positive")
    return k


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# -- commands ------------------------------------------------------------------

def cmd_ingest(args) -> int:
    corpus = ingest_tree(args.root)
    _emit(dumps_corpus(corpus), args.out)
    log.info("wrote %d snapshots", len(corpus))
    return EXIT_OK


def cmd_stats(args) -> int:
    report = stats(load_corpus(args.corpus), args.year, top_n=args.top)
    _emit(report.to_csv(), args.out)
    return EXIT_OK


def cmd_embed(args) -> int:
    model = build_model(load_corpus(args.corpus), d=args.dim, scaling=args.scaling, seed=args.seed)
    _emit(dumps_model(model), args.out)
    log.info("embedded %d libraries and %d snapshots in %d dimensions",
             len(model.vocab), len(model.repo_keys), model.dim)
    return EXIT_OK


def _library_points(model) -> np.ndarray:
    return normalize_rows(model.library_matrix)


def cmd_cluster(args) -> int:
    model = load_model(args.model)
    X = _library_points(model)
    if args.k is not None:
        k = args.k
    else:
        curve = gap_curve(X, args.select_k, n_refs=args.refs, seed=args.seed, threads=args.threads)
        if args.gap_out:
            Path(args.gap_out).write_text(curve.to_csv(), encoding="utf-8")
        choice = select_k(curve, epsilon=args.epsilon, window=args.window)
        k = choice.k
        log.info("selected k=%d%s", k, "" if choice.saturated else " (gap curve did not saturate)")
    part = kmeans(X, k, seed=args.seed)
    _emit(part.to_csv(model.vocab), args.out)
    return EXIT_OK


def _read_partition(path: str, vocab: list[str]) -> np.ndarray:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "library,cluster_id":
        raise MalformedRecord("expected header library,cluster_id", 1)
    index = {name: j for j, name in enumerate(vocab)}
    labels = np.full(len(vocab), -1, dtype=np.int64)
    for lineno, line in enumerate(lines[1:], start=2):
        name, sep, cid = line.partition(",")
        if not sep or not cid.strip().isdigit() or name not in index:
            raise MalformedRecord(f"bad partition row {line!r}", lineno)
        labels[index[name]] = int(cid)
    if np.any(labels < 0):
        raise DataError(f"{path}: partition does not cover every model library")
    return labels


def cmd_dendrogram(args) -> int:
    model = load_model(args.model)
    labels = _read_partition(args.partition, model.vocab)
    X = _library_points(model)
    ids = np.unique(labels)
    centroids = np.array([X[labels == c].mean(axis=0) for c in ids])
    tree = agglomerate(centroids, labels=[f"cluster_{c}" for c in ids])
    _emit(tree.to_newick(), args.out)
    if args.json:
        Path(args.json).write_text(tree.to_json(), encoding="utf-8")
    return EXIT_OK


def cmd_recommend(args) -> int:
    if args.requirements is None and (args.repo is None or args.year is None):
        raise UsageError("give --requirements FILE or both --repo ID and --year Y")
    params = _scoring_params(args, top_n=args.top)
    model = load_model(args.model)
    corpus = load_corpus(args.corpus)
    if args.requirements is not None:
        report = parse_requirements(Path(args.requirements).read_text(encoding="utf-8-sig"))
        if report.is_empty:
            raise DataError(f"{args.requirements}: no dependencies found")
        query = report.names
        known, unknown = model.split_known(query)
        if params.model_kind in (ModelKind.RLE, ModelKind.DRE):
            if not known:
                raise UnknownLibraries(unknown)
            if unknown:
                log.warning("ignoring libraries unknown to the model: %s", ", ".join(unknown))
    else:
        query = (args.repo, args.year)
    recs = recommend(query, model, corpus, params, year=args.year, idf=idf_table(corpus))
    if args.format == "json":
        text = json.dumps([r.to_dict() for r in recs], indent=2) + "\n"
    else:
        width = max((len(r.library) for r in recs), default=7)
        text = "".join(f"{r.library:<{width}}  {r.score:>12.6g}  {r.supporting_neighbors:>6d}\n" for r in recs)
    _emit(text, args.out)
    return EXIT_OK


def _scoring_params(args, top_n):
    """Preset for --mode, with any explicit --alpha/--beta/--neighbors applied."""
    params = with_overrides(preset(args.mode, args.model_type, top_n=top_n), alpha=args.alpha, beta=args.beta)
    if args.neighbors is not None:
        params = replace(params, k_neighbors=ALL if args.neighbors == "all" else args.neighbors)
    return params


def cmd_bench(args) -> int:
    if args.bench_command == "build":
        entries = bench_mod.build_benchmark(load_corpus(args.corpus))
        _emit(bench_mod.dumps_benchmark(entries), args.out)
        log.info("wrote %d benchmark entries", len(entries))
        return EXIT_OK
    entries = bench_mod.load_benchmark(args.bench)
    corpus = load_corpus(args.corpus)
    model = load_model(args.model)
    if args.bench_command == "run":
        params = _scoring_params(args, top_n=None)
        metrics = bench_mod.evaluate(params, entries, corpus, model)
        baseline = params.model_kind is ModelKind.BASELINE
        row = bench_mod.GridRow(
            params.model_kind.value,
            None if baseline else params.alpha,
            None if baseline else params.beta,
            None if baseline else params.k_neighbors,
            metrics,
        )
        _emit(bench_mod.results_csv([row]), args.out)
        return EXIT_OK
    rows = bench_mod.grid_search(
        args.model_types,
        entries,
        corpus,
        model,
        alpha_grid=args.alphas,
        beta_grid=args.betas,
        k_grid=args.neighbors_grid,
        progress=lambda row: log.info("%s a=%s b=%s k=%s mrr=%.4f", row.model, row.alpha, row.beta,
                                      row.k_neighbors, row.metrics.mrr),
    )
    _emit(bench_mod.results_csv(rows), args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        n_domains=args.domains,
        libs_per_domain=args.libs_per_domain,
        zipf_s=args.zipf,
        n_projects=args.projects,
        deps_min=args.deps_min,
        deps_max=args.deps_max,
        years=args.years,
        add_rate=args.add_rate,
        seed=args.seed,
        start_year=args.start_year,
    )
    cfg.validate()
    synth = synth_corpus(cfg)
    _emit(dumps_corpus(synth.corpus), args.out)
    if args.labels:
        doc = {"projects": synth.project_domain, "libraries": synth.library_domain}
        Path(args.labels).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _add_scoring_flags(p, mode_default="relevant"):
    p.add_argument("--mode", choices=["relevant", "explore"], default=mode_default)
    p.add_argument("--model-type", choices=[k.value for k in ModelKind], default="rle")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--neighbors", type=_neighbors, help="K nearest snapshots, or 'all'")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="depvec", description="Library embeddings and recommendations from dependency co-occurrence.")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--threads", type=_positive, default=os.cpu_count() or 1)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse a requirements tree into a corpus file")
    p.add_argument("--root", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="library distribution report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--year", type=int)
    p.add_argument("--top", type=_positive, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("embed", help="build SVD embeddings")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dim", type=_positive, default=32)
    p.add_argument("--scaling", choices=["sigma", "none"], default="sigma")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("cluster", help="K-means over library embeddings")
    p.add_argument("--model", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--k", type=_positive)
    group.add_argument("--select-k", type=_k_range, default=range(2, 65), metavar="LO..HI")
    p.add_argument("--refs", type=_positive, default=10)
    p.add_argument("--epsilon", type=float, default=0.02)
    p.add_argument("--window", type=_positive, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--gap-out")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("dendrogram", help="average-linkage tree over cluster centroids")
    p.add_argument("--model", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--out")
    p.add_argument("--json")
    p.set_defaults(func=cmd_dendrogram)

    p = sub.add_parser("recommend", help="suggest libraries for a project")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--requirements")
    p.add_argument("--repo")
    p.add_argument("--year", type=int)
    _add_scoring_flags(p)
    p.add_argument("--top", type=_positive, default=10)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("bench", help="build and evaluate the evolution benchmark")
    bsub = p.add_subparsers(dest="bench_command", required=True, parser_class=_Parser)
    b = bsub.add_parser("build")
    b.add_argument("--corpus", required=True)
    b.add_argument("--out", required=True)
    for name in ("run", "grid"):
        b = bsub.add_parser(name)
        b.add_argument("--bench", required=True)
        b.add_argument("--model", required=True)
        b.add_argument("--corpus", required=True)
        b.add_argument("--out")
        if name == "run":
            _add_scoring_flags(b)
        else:
            b.add_argument("--model-types", type=lambda s: [ModelKind(x).value for x in s.split(",")],
                           default=[k.value for k in ModelKind])
            b.add_argument("--alphas", type=_float_list, default=list(bench_mod.ALPHA_GRID))
            b.add_argument("--betas", type=_float_list, default=list(bench_mod.BETA_GRID))
            b.add_argument("--neighbors-grid",
                           type=lambda s: [ALL if (k := _neighbors(x)) == "all" else k for x in s.split(",")],
                           default=list(bench_mod.K_GRID))
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted domains")
    p.add_argument("--domains", type=_positive, default=8)
    p.add_argument("--libs-per-domain", type=_positive, default=60)
    p.add_argument("--zipf", type=float, default=1.5)
    p.add_argument("--projects", type=_positive, default=2000)
    p.add_argument("--deps-min", type=_positive, default=3)
    p.add_argument("--deps-max", type=_positive, default=12)
    p.add_argument("--years", type=_positive, default=3)
    p.add_argument("--add-rate", type=float, default=1.0)
    p.add_argument("--start-year", type=int, default=2018)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--labels", help="optional JSON file with planted domain labels")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(format="depvec: %(message)s", stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"depvec: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"depvec: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    log.setLevel(logging.DEBUG if args.verbose else logging.INFO)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"depvec: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"depvec: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, UnicodeDecodeError) as exc:
        print(f"depvec: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"depvec: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
