"""Retrieval metrics: MAP, precision at rank r, Friedman mean ranks, AUC."""

import logging
import math

import numpy as np
from scipy.stats import rankdata

log = logging.getLogger(__name__)

PRECISION_RANKS = (5, 10, 20)


def _relevance(table, cover_sets):
    rel = np.zeros(table.values.shape, dtype=bool)
    for i, q in enumerate(table.query_ids):
        for j, c in enumerate(table.candidate_ids):
            rel[i, j] = c != q and cover_sets[c] == cover_sets[q]
    return rel


def average_precision(ranks, relevant):
    """Mean over relevant items of (#relevant ranked at or above it) / its rank.

    Ties share an average rank, so the hit count is averaged over the tied
    group the same way: relevant items strictly above plus (tied + 1) / 2.
    This keeps every precision at most 1 and is exact when there are no ties.
    """
    r = np.sort(np.asarray(ranks, dtype=float)[np.asarray(relevant, dtype=bool)])
    if r.size == 0:
        return float("nan")
    above = np.searchsorted(r, r, side="left")
    tied = np.searchsorted(r, r, side="right") - above
    hits = above + (tied + 1) / 2
    return float(np.mean(hits / r))


def mean_average_precision(table, cover_sets):
    """Return ``(per_query, map)``; queries without relevant candidates are skipped."""
    ranks = table.ranks()
    rel = _relevance(table, cover_sets)
    per_query = {}
    for i, q in enumerate(table.query_ids):
        ok = ~np.isnan(ranks[i])
        if not rel[i, ok].any():
            log.warning("query %s has no relevant candidates; excluded", q)
            continue
        per_query[q] = average_precision(ranks[i, ok], rel[i, ok])
    mean = float(np.mean(list(per_query.values()))) if per_query else float("nan")
    return per_query, mean


def precision_at_r(table, cover_sets, r):
    ranks = table.ranks()
    rel = _relevance(table, cover_sets)
    scores = []
    for i in range(len(table.query_ids)):
        ok = ~np.isnan(ranks[i])
        scores.append(np.count_nonzero(rel[i, ok] & (ranks[i, ok] <= r)) / r)
    return float(np.mean(scores))


def expected_random_ap(n_candidates, n_relevant):
    """Expected AP of a uniformly random ranking.

    A relevant item at position p has on average (p-1)(m-1)/(n-1) other
    relevant items above it, so E[AP] = (H_n + (m-1)/(n-1) (n - H_n)) / n.
    """
    n, m = n_candidates, n_relevant
    h = sum(1.0 / p for p in range(1, n + 1))
    if n == 1:
        return 1.0
    return (h + (m - 1) / (n - 1) * (n - h)) / n


def expected_random_map(table, cover_sets):
    rel = _relevance(table, cover_sets)
    vals = []
    for i in range(len(table.query_ids)):
        ok = ~np.isnan(table.values[i])
        m = int(rel[i, ok].sum())
        if m:
            vals.append(expected_random_ap(int(ok.sum()), m))
    return float(np.mean(vals))


def friedman_mean_ranks(ap_by_measure):
    """Mean Friedman rank per measure and the chi-square statistic.

    `ap_by_measure` maps measure name -> {query_id: AP}. Per query the
    measures are ranked by AP (highest AP gets rank k, ties averaged) and
    chi2 = 12n / (k(k+1)) * sum_j R_j^2 - 3n(k+1), with R_j the mean rank.
    """
    names = list(ap_by_measure)
    queries = sorted(set.intersection(*(set(v) for v in ap_by_measure.values())))
    k, n = len(names), len(queries)
    if k < 2 or n < 1:
        raise ValueError("need at least two measures and one common query")
    aps = np.array([[ap_by_measure[m][q] for m in names] for q in queries])
    ranks = np.apply_along_axis(rankdata, 1, aps)
    mean_ranks = ranks.mean(axis=0)
    chi2 = 12 * n / (k * (k + 1)) * np.sum(mean_ranks**2) - 3 * n * (k + 1)
    if math.isclose(chi2, 0.0, abs_tol=1e-9):
        chi2 = 0.0
    return dict(zip(names, mean_ranks.tolist())), float(chi2)


def auc(positive_scores, negative_scores):
    """Probability that a positive scores lower (closer) than a negative, ties 1/2."""
    pos = np.asarray(positive_scores, dtype=float)
    neg = np.asarray(negative_scores, dtype=float)
    less = (pos[:, None] < neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((less + 0.5 * ties) / (pos.size * neg.size))


def metrics(table, cover_sets, ranks_at=PRECISION_RANKS):
    per_query, mean = mean_average_precision(table, cover_sets)
    return {
        "map": mean,
        "p_at": {str(r): precision_at_r(table, cover_sets, r) for r in ranks_at},
        "per_query": [{"query_id": q, "ap": ap} for q, ap in per_query.items()],
    }
