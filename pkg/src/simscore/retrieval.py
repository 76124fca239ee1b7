"""Filter-and-refine retrieval and distance-table transforms.

A :class:`DistanceTable` holds a queries x candidates matrix. Self pairs are
NaN and never ranked; candidates not refined for a query are ``+inf`` and
rank after every refined candidate. Ranks use the average-rank convention
for ties throughout.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .baselines import random_matrix
from .measures import MeasureParams, check_measure, pair_distance
from .quantize import rotation_histograms

DEFAULT_FILTER_SIZE = 1000


class RetrievalError(ValueError):
    pass


class TrackStore:
    """Read-only collection of tracks with their codeword histograms."""

    def __init__(self, tracks, codebook=None):
        self.tracks = sorted(tracks, key=lambda t: t.id)
        self.ids = [t.id for t in self.tracks]
        if len(set(self.ids)) != len(self.ids):
            raise RetrievalError("track ids must be unique")
        self.index = {tid: i for i, tid in enumerate(self.ids)}
        self.codebook = codebook
        self._histograms = None

    def __len__(self):
        return len(self.tracks)

    def __getitem__(self, track_id):
        try:
            return self.tracks[self.index[track_id]]
        except KeyError:
            raise RetrievalError(f"unknown track id {track_id!r}") from None

    @property
    def cover_sets(self):
        return {t.id: t.cover_set for t in self.tracks}

    def rotation_histograms(self):
        """Array (n_tracks, 12, K); rotation 0 is the untransposed histogram."""
        if self.codebook is None:
            raise RetrievalError("filter stage needs a codebook")
        if self._histograms is None:
            self._histograms = np.stack(
                [rotation_histograms(self.codebook, t.chroma) for t in self.tracks]
            )
        return self._histograms


@dataclass
class DistanceTable:
    query_ids: list
    candidate_ids: list
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.query_ids), len(self.candidate_ids)):
            raise RetrievalError("table shape does not match its ids")

    def row(self, query_id):
        return self.values[self.query_ids.index(query_id)]

    def ranks(self):
        """Per-query average ranks among ranked (non-NaN) entries; NaN elsewhere."""
        out = np.full_like(self.values, np.nan)
        for i, row in enumerate(self.values):
            ok = ~np.isnan(row)
            out[i, ok] = rankdata(row[ok], method="average")
        return out

    def with_values(self, values):
        return DistanceTable(list(self.query_ids), list(self.candidate_ids), values)


def _self_mask(query_ids, candidate_ids):
    return np.array([[q == c for c in candidate_ids] for q in query_ids], dtype=bool)


def filter_stage(store, query_id, L=DEFAULT_FILTER_SIZE):
    """Top-L candidates by L1 distance between codeword histograms.

    The query's 12 rotated histograms are compared with each candidate's
    untransposed histogram and the minimum is kept. Ties go to the smaller id.
    """
    hists = store.rotation_histograms()
    qi = store.index.get(query_id)
    if qi is None:
        raise RetrievalError(f"unknown track id {query_id!r}")
    n_cand = len(store) - 1
    if L > n_cand:
        raise RetrievalError(f"filter size {L} exceeds {n_cand} candidates")
    l1 = np.abs(hists[qi][None, :, :] - hists[:, 0, None, :]).sum(axis=2).min(axis=1)
    order = sorted((d, tid) for i, (d, tid) in enumerate(zip(l1, store.ids)) if i != qi)
    return [tid for _, tid in order[:L]]


def refine(store, query_id, shortlist, measure, params=MeasureParams()):
    """Distances from the query to every candidate; +inf outside `shortlist`."""
    check_measure(measure, store.codebook)
    if not shortlist:
        raise RetrievalError("empty shortlist")
    query = store[query_id]
    row = np.full(len(store), np.inf)
    row[store.index[query_id]] = np.nan
    if measure == "random":
        draws = random_matrix(len(store), len(store), params.seed)[store.index[query_id]]
    for cid in shortlist:
        j = store.index[cid]
        if cid == query_id:
            continue
        if measure == "random":
            row[j] = draws[j]
        else:
            row[j] = pair_distance(measure, query.chroma, store[cid].chroma, params, store.codebook)
    return row


def _refine_task(args):
    store, qid, shortlist, measure, params = args
    return refine(store, qid, shortlist, measure, params)


def default_jobs():
    return int(os.environ.get("SIMSCORE_JOBS", "1"))


def retrieve(store, measure, params=MeasureParams(), L=None, normalize=False, jobs=None, queries=None):
    """Run filter (when L is given) and refine for every query.

    With ``L=None`` the filter is bypassed and every candidate is refined.
    """
    queries = list(store.ids if queries is None else queries)
    tasks = []
    for qid in queries:
        if L is None:
            shortlist = [c for c in store.ids if c != qid]
        else:
            shortlist = filter_stage(store, qid, min(L, len(store) - 1))
        tasks.append((store, qid, shortlist, measure, params))
    jobs = default_jobs() if jobs is None else jobs
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_refine_task, tasks))
    else:
        rows = [_refine_task(t) for t in tasks]
    table = DistanceTable(queries, list(store.ids), np.array(rows))
    return normalize_distances(table) if normalize else table


def random_baseline(store, seed):
    values = random_matrix(len(store), len(store), seed)
    values[_self_mask(store.ids, store.ids)] = np.nan
    return DistanceTable(list(store.ids), list(store.ids), values)


def normalize_distances(table):
    """Z-normalize each candidate column over its finite entries (population std)."""
    v = table.values.copy()
    for j in range(v.shape[1]):
        col = v[:, j]
        ok = np.isfinite(col)
        if not ok.any():
            continue
        mu = col[ok].mean()
        sd = col[ok].std()
        col[ok] = (col[ok] - mu) / sd if sd >= 1e-12 else col[ok] - mu
    return table.with_values(v)


def inverse_rank(table):
    """1 - 1/rank per query."""
    return table.with_values(1.0 - 1.0 / table.ranks())


def combine(a, b, beta):
    """max(a, b) * beta + min(a, b) * (1 - beta), entrywise."""
    if not 0 <= beta <= 1:
        raise RetrievalError("beta must lie in [0, 1]")
    if a.query_ids != b.query_ids or a.candidate_ids != b.candidate_ids:
        raise RetrievalError("tables index different queries or candidates")
    hi = np.fmax(a.values, b.values)
    lo = np.fmin(a.values, b.values)
    out = hi * beta + lo * (1 - beta)
    out[np.isnan(a.values) | np.isnan(b.values)] = np.nan
    return a.with_values(out)


# -- results CSV -------------------------------------------------------------


def write_results(table, path, with_rank=True):
    ranks = table.ranks()
    with open(path, "w") as fh:
        fh.write("query_id,candidate_id,distance" + (",rank" if with_rank else "") + "\n")
        for i, qid in enumerate(table.query_ids):
            order = np.argsort(np.where(np.isnan(ranks[i]), np.inf, ranks[i]), kind="stable")
            for j in order:
                if np.isnan(table.values[i, j]):
                    continue
                line = f"{qid},{table.candidate_ids[j]},{float(table.values[i, j])!r}"
                if with_rank:
                    r = ranks[i, j]
                    line += f",{int(r)}" if r == int(r) else f",{float(r)!r}"
                fh.write(line + "\n")


def read_results(path):
    """Parse a results or distance CSV back into a :class:`DistanceTable`."""
    import csv

    entries = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            entries[(rec["query_id"], rec["candidate_id"])] = float(rec["distance"])
    queries = sorted({q for q, _ in entries})
    cands = sorted({c for _, c in entries} | set(queries))
    values = np.full((len(queries), len(cands)), np.nan)
    qi = {q: i for i, q in enumerate(queries)}
    ci = {c: j for j, c in enumerate(cands)}
    for (q, c), d in entries.items():
        values[qi[q], ci[c]] = d
    # candidates missing for a query (but not the query itself) rank last
    mask = np.isnan(values) & ~_self_mask(queries, cands)
    values[mask] = np.inf
    return DistanceTable(queries, cands, values)
