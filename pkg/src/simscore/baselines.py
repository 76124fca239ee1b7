"""Baseline distances: random draws and a simplified chroma cross-correlation."""

import numpy as np

from .features import N_CHROMA, transpose


def random_matrix(n_queries, n_candidates, seed):
    return np.random.default_rng(seed).standard_normal((n_queries, n_candidates))


def crosscorr_baseline(X, Y, min_overlap=0.5):
    """1 - max normalized 2-D cross-correlation over transpositions and lags.

    Both beat-chroma matrices are mean-subtracted; the correlation at each
    lag is normalized by the Frobenius norms of the overlapping parts. Lags
    are limited to overlaps of at least ``min_overlap`` times the shorter
    length, since very short overlaps correlate by chance. No high-pass
    filtering of the correlation curve is applied.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    X = X - X.mean()
    Y = Y - Y.mean()
    if not np.any(X) or not np.any(Y):
        return 1.0
    n, m = len(X), len(Y)
    need = max(1, int(np.ceil(min_overlap * min(n, m))))
    best = -1.0
    for shift in range(N_CHROMA):
        Ys = transpose(Y, shift)
        for lag in range(-(m - need), n - need + 1):
            # X rows [lag, lag + m) overlap Y rows [0, m)
            x0, y0 = max(lag, 0), max(-lag, 0)
            length = min(n - x0, m - y0)
            if length < need:
                continue
            a = X[x0 : x0 + length]
            b = Ys[y0 : y0 + length]
            den = np.sqrt(np.sum(a * a) * np.sum(b * b))
            if den > 0:
                best = max(best, float(np.sum(a * b) / den))
    return 1.0 - best if best > -1.0 else 1.0
