"""Registry of pairwise distance measures between tracks.

Every measure is evaluated after transposing the candidate by the optimal
transposition index relative to the query. Discrete measures re-quantize
the transposed candidate with the shared codebook.
"""

from dataclasses import dataclass, field

from . import compress, predict_continuous, predict_discrete
from .baselines import crosscorr_baseline
from .features import oti, summary_vector, transpose
from .predict_continuous import EmbeddingConfig
from .quantize import assign, histogram

DISCRETE = {"ncd", "ncda", "ncd_pred", "ncda_pred", "dcross", "jsd"}
CONTINUOUS = {"nid", "dcross_cont", "nmse"}
OTHER = {"xcorr_simple", "random"}
MEASURES = tuple(sorted(DISCRETE | CONTINUOUS | OTHER))


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class MeasureParams:
    compressor: str = "seq_dict"
    predictor: str = "ppmc"
    order: int = predict_discrete.DEFAULT_ORDER
    block_sort_cmd: str = None
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    seed: int = 0


def check_measure(measure, codebook=None):
    if measure not in MEASURES:
        raise MeasureError(f"unknown measure {measure!r}; expected one of {MEASURES}")
    if measure in DISCRETE and codebook is None:
        raise MeasureError(f"measure {measure!r} needs a codebook")


def aligned_candidate(query_chroma, cand_chroma):
    shift = oti(summary_vector(query_chroma), summary_vector(cand_chroma))
    return transpose(cand_chroma, shift)


def pair_distance(measure, query_chroma, cand_chroma, params=MeasureParams(), codebook=None):
    """Distance between a query and a candidate chroma sequence."""
    check_measure(measure, codebook)
    if measure == "random":
        raise MeasureError("the random baseline is drawn per table, not per pair")
    if measure == "xcorr_simple":
        return crosscorr_baseline(query_chroma, cand_chroma)

    y = aligned_candidate(query_chroma, cand_chroma)
    x = query_chroma
    if measure in CONTINUOUS:
        cfg = params.embedding
        if measure == "nid":
            return predict_continuous.nid_continuous(x, y, cfg)
        if measure == "dcross_cont":
            return predict_continuous.d_cross_continuous(x, y, cfg)
        return predict_continuous.nmse_cross(x, y, cfg)

    sx, sy = assign(codebook, x), assign(codebook, y)
    if measure == "jsd":
        return predict_discrete.jsd(histogram(sx), histogram(sy))
    if measure in ("ncd", "ncda"):
        comp = compress.Compressor(params.compressor, params.order, params.block_sort_cmd)
        return getattr(compress, measure)(comp, sx, sy)
    fn = {
        "ncd_pred": predict_discrete.ncd_pred,
        "ncda_pred": predict_discrete.ncda_pred,
        "dcross": predict_discrete.d_cross_discrete,
    }[measure]
    return fn(params.predictor, sx, sy, params.order)
