"""End-to-end experiment: features -> quantize -> retrieve -> evaluate."""

import json
import logging
import time
from pathlib import Path

from . import plotting
from .evaluate import metrics
from .features import load_tracks, save_track
from .measures import MeasureParams
from .predict_continuous import EmbeddingConfig
from .quantize import assign, kmeans_fit, load_codebook, pooled_vectors, save_codebook, save_symbols
from .retrieval import TrackStore, retrieve, write_results
from .synth import SyntheticSpec, generate_synthetic

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def measure_params(cfg):
    return MeasureParams(
        compressor=cfg.compressor,
        predictor=cfg.predictor,
        order=cfg.order,
        block_sort_cmd=cfg.block_sort_cmd,
        embedding=EmbeddingConfig(cfg.d, cfg.tau, cfg.horizon, cfg.radius),
        seed=cfg.seed,
    )


def write_tracks(tracks, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for t in tracks:
        save_track(t, directory / f"{t.id}.json")


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage tag
        raise StageError(name, str(exc) or type(exc).__name__) from exc


def run_experiment(cfg, figures=True):
    """Run every stage, writing intermediate artifacts under ``cfg.output_dir``.

    Returns the metrics dictionary (also written to ``metrics.json``).
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text())
    t0 = time.perf_counter()

    if cfg.input_dir is None:
        spec = SyntheticSpec(
            cfg.synth_sets, cfg.synth_covers, cfg.synth_length, cfg.synth_transpose,
            cfg.synth_jitter, cfg.synth_noise, cfg.seed,
        )
        _stage("synth", lambda: write_tracks(generate_synthetic(spec), out / "input"))
        input_dir = out / "input"
    else:
        input_dir = Path(cfg.input_dir)
        if not input_dir.is_dir():
            raise StageError("features", f"input directory not found: {input_dir}")

    def features():
        tracks = load_tracks(input_dir, cfg.pbr)
        if len(tracks) < 2:
            raise ValueError(f"need at least two tracks in {input_dir}")
        write_tracks(tracks, out / "processed")
        return tracks

    tracks = _stage("features", features)

    def quantize():
        if cfg.codebook_path is not None:
            if not Path(cfg.codebook_path).is_file():
                raise FileNotFoundError(f"codebook file not found: {cfg.codebook_path}")
            cb = load_codebook(cfg.codebook_path)
        else:
            vectors = pooled_vectors([t.chroma for t in tracks], cfg.sample_cap, cfg.seed)
            cb = kmeans_fit(vectors, cfg.codebook_size, cfg.restarts, cfg.seed)
        save_codebook(cb, out / "codebook.csv")
        sym_dir = out / "symbols"
        sym_dir.mkdir(exist_ok=True)
        for t in tracks:
            save_symbols(assign(cb, t.chroma), sym_dir / f"{t.id}.txt")
        return cb

    codebook = _stage("quantize", quantize)
    store = TrackStore(tracks, codebook)
    L = min(cfg.filter_size, len(store) - 1)
    table = _stage(
        "retrieve", retrieve, store, cfg.measure, measure_params(cfg), L, cfg.normalize, cfg.jobs
    )
    _stage("retrieve", write_results, table, out / "results.csv")

    def evaluate():
        m = metrics(table, store.cover_sets)
        m["measure"] = cfg.measure
        m["config"] = cfg.to_dict()
        write_json(m, out / "metrics.json")
        if figures:
            plotting.plot_average_precision({cfg.measure: m}, out / "average_precision.png")
            plotting.plot_precision_at_r({cfg.measure: m}, out / "precision_at_r.png")
            plotting.plot_distance_matrix(table, out / "distances.png", cfg.measure)
        return m

    result = _stage("evaluate", evaluate)
    log.info("run finished in %.1f s: MAP=%.4f", time.perf_counter() - t0, result["map"])
    return result
