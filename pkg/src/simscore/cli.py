"""Command-line interface: ``simscore <subcommand> ...``."""

import argparse
import logging
import sys
from pathlib import Path

from . import plotting
from .config import ConfigError, ExperimentConfig, load_config, parse_overrides
from .evaluate import PRECISION_RANKS, friedman_mean_ranks, metrics
from .features import load_tracks
from .measures import MEASURES, MeasureParams, check_measure
from .pipeline import StageError, run_experiment, write_json, write_tracks
from .predict_continuous import EmbeddingConfig
from .quantize import assign, kmeans_fit, load_codebook, pooled_vectors, save_codebook, save_symbols
from .retrieval import (
    DEFAULT_FILTER_SIZE,
    TrackStore,
    combine,
    default_jobs,
    inverse_rank,
    read_results,
    retrieve,
    write_results,
)
from .synth import SyntheticSpec, generate_synthetic

log = logging.getLogger("simscore")


def _add_measure_args(p):
    p.add_argument("--measure", required=True, choices=MEASURES)
    p.add_argument("--codebook", help="codebook CSV (discrete measures and the filter stage)")
    p.add_argument("--compressor", default="seq_dict", choices=("seq_dict", "ppm", "block_sort"))
    p.add_argument("--block-sort-cmd", help="external block-sorting compressor, e.g. 'bzip2 -9 -c'")
    p.add_argument("--predictor", default="ppmc", choices=("ppmc", "lz78"))
    p.add_argument("--order", type=int, default=5, help="maximum PPM context order")
    p.add_argument("--d", type=int, default=4, help="embedding dimension")
    p.add_argument("--tau", type=int, default=1, help="time delay")
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--radius", type=int, default=8, help="self-prediction exclusion radius")
    p.add_argument("--seed", type=int, default=0, help="seed for the random baseline")
    p.add_argument("--pbr", type=float, default=240.0)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default $SIMSCORE_JOBS or 1)")


def _params(args):
    return MeasureParams(
        compressor=args.compressor,
        predictor=args.predictor,
        order=args.order,
        block_sort_cmd=args.block_sort_cmd,
        embedding=EmbeddingConfig(args.d, args.tau, args.horizon, args.radius),
        seed=args.seed,
    )


def _store(args):
    tracks = load_tracks(args.input_dir, args.pbr)
    codebook = load_codebook(args.codebook) if args.codebook else None
    check_measure(args.measure, codebook)
    return TrackStore(tracks, codebook)


def cmd_features(args):
    tracks = load_tracks(args.input_dir, args.pbr)
    write_tracks(tracks, args.output_dir)
    log.info("wrote %d processed tracks to %s", len(tracks), args.output_dir)


def cmd_quantize(args):
    if not (args.train or args.apply):
        raise SystemExit("quantize: give --train and/or --apply")
    tracks = load_tracks(args.input_dir, args.pbr)
    if args.train:
        vectors = pooled_vectors([t.chroma for t in tracks], args.sample_cap, args.seed)
        cb = kmeans_fit(vectors, args.codebook_size, args.restarts, args.seed)
        save_codebook(cb, args.codebook)
        log.info("trained K=%d codebook -> %s", cb.size, args.codebook)
    else:
        cb = load_codebook(args.codebook)
    if args.apply:
        out = Path(args.output_dir or "symbols")
        out.mkdir(parents=True, exist_ok=True)
        for t in tracks:
            save_symbols(assign(cb, t.chroma), out / f"{t.id}.txt")


def cmd_distance(args):
    store = _store(args)
    table = retrieve(store, args.measure, _params(args), L=None, jobs=args.jobs)
    write_results(table, args.output, with_rank=False)


def cmd_retrieve(args):
    store = _store(args)
    if store.codebook is None:
        raise SystemExit("retrieve: the filter stage needs --codebook")
    L = min(args.filter_size, len(store) - 1)
    table = retrieve(store, args.measure, _params(args), L, args.normalize == "on", args.jobs)
    write_results(table, args.output)


def cmd_combine(args):
    a, b = (inverse_rank(read_results(p)) for p in args.inputs)
    write_results(combine(a, b, args.beta), args.output)


def cmd_evaluate(args):
    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    ranks_at = tuple(int(m[2:]) for m in wanted if m.startswith("p@")) or PRECISION_RANKS
    cover_sets = {t.id: t.cover_set for t in load_tracks(args.input_dir)}
    report = {}
    for path in args.results:
        table = read_results(path)
        m = metrics(table, cover_sets, ranks_at)
        if "map" not in wanted:
            m.pop("map")
        report[Path(path).stem] = m
    if "friedman" in wanted:
        if len(report) < 2:
            raise SystemExit("evaluate: friedman needs at least two result files")
        aps = {name: {q["query_id"]: q["ap"] for q in m["per_query"]} for name, m in report.items()}
        mean_ranks, chi2 = friedman_mean_ranks(aps)
        friedman = {"mean_ranks": mean_ranks, "statistic": chi2}
    doc = next(iter(report.values())) if len(report) == 1 else {"results": report}
    if "friedman" in wanted:
        doc["friedman"] = friedman
    write_json(doc, args.output)
    if args.figures_dir:
        fig_dir = Path(args.figures_dir)
        fig_dir.mkdir(parents=True, exist_ok=True)
        with_map = {k: v for k, v in report.items() if "map" in v}
        if with_map:
            plotting.plot_average_precision(with_map, fig_dir / "average_precision.png")
        plotting.plot_precision_at_r(report, fig_dir / "precision_at_r.png")
        if "friedman" in wanted:
            plotting.plot_friedman(mean_ranks, chi2, fig_dir / "friedman.png")


def cmd_synth(args):
    spec = SyntheticSpec(
        args.n_cover_sets, args.covers_per_set, args.length, args.transpose_range,
        args.jitter, args.noise, args.seed,
    )
    write_tracks(generate_synthetic(spec), args.output_dir)


def cmd_run(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = list(args.set or [])
    for key in ("output_dir", "seed", "jobs"):
        value = getattr(args, key)
        if value is not None:
            overrides.append((key, value))
    if overrides:
        cfg = cfg.replace(**parse_overrides(overrides))
    m = run_experiment(cfg, figures=not args.no_figures)
    print(f"MAP={m['map']:.4f}  " + "  ".join(f"P@{r}={v:.4f}" for r, v in m["p_at"].items()))


def build_parser():
    p = argparse.ArgumentParser(prog="simscore", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("features", help="beat-synchronous, normalized chroma per track")
    s.add_argument("--input-dir", required=True)
    s.add_argument("--output-dir", required=True)
    s.add_argument("--pbr", type=float, default=240.0, help="preferred beat rate in bpm")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("quantize", help="train a K-means codebook and/or map tracks to symbols")
    s.add_argument("--input-dir", required=True)
    s.add_argument("--codebook", required=True, help="codebook CSV to write (--train) or read")
    s.add_argument("--codebook-size", type=int, default=12)
    s.add_argument("--restarts", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--sample-cap", type=int, default=200_000)
    s.add_argument("--train", action="store_true")
    s.add_argument("--apply", action="store_true")
    s.add_argument("--output-dir", help="symbol files directory for --apply")
    s.add_argument("--pbr", type=float, default=240.0)
    s.set_defaults(func=cmd_quantize)

    s = sub.add_parser("distance", help="all pairwise distances as CSV")
    s.add_argument("--input-dir", required=True)
    s.add_argument("--output", required=True)
    _add_measure_args(s)
    s.set_defaults(func=cmd_distance)

    s = sub.add_parser("retrieve", help="filter-and-refine retrieval")
    s.add_argument("--input-dir", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--filter-size", type=int, default=DEFAULT_FILTER_SIZE)
    s.add_argument("--normalize", choices=("on", "off"), default="off")
    _add_measure_args(s)
    s.set_defaults(func=cmd_retrieve)

    s = sub.add_parser("combine", help="combine two result tables by inverse rank")
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--inputs", nargs=2, required=True, metavar=("A.csv", "B.csv"))
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_combine)

    s = sub.add_parser("evaluate", help="MAP, precision@r and Friedman ranks")
    s.add_argument("--results", nargs="+", required=True)
    s.add_argument("--input-dir", required=True, help="track files providing cover-set labels")
    s.add_argument("--metrics", default="map,p@5,p@10,p@20")
    s.add_argument("--output", required=True)
    s.add_argument("--figures-dir")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("synth", help="generate a synthetic cover-set store")
    s.add_argument("--n-cover-sets", type=int, default=10)
    s.add_argument("--covers-per-set", type=int, default=3)
    s.add_argument("--length", type=int, default=160)
    s.add_argument("--transpose-range", type=int, default=5)
    s.add_argument("--jitter", type=float, default=0.1)
    s.add_argument("--noise", type=float, default=0.05)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output-dir", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("run", help="full experiment from a key=value config")
    s.add_argument("--config")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
    s.add_argument("--output-dir")
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int)
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "jobs", "absent") is None and args.command != "run":
        args.jobs = default_jobs()
    try:
        args.func(args)
    except StageError as exc:
        print(f"simscore: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError, OSError) as exc:
        print(f"simscore {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
