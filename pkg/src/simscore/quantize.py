"""K-means codebooks, symbol strings and codeword histograms."""

import logging
from dataclasses import dataclass

import numpy as np

from .features import N_CHROMA, transpose

log = logging.getLogger(__name__)

MAX_ITER = 300


class QuantizeError(ValueError):
    pass


@dataclass(frozen=True)
class Codebook:
    centroids: np.ndarray  # K x dim
    seed: int = 0

    @property
    def size(self):
        return self.centroids.shape[0]


@dataclass(frozen=True)
class SymbolString:
    """Codeword indices over the alphabet ``range(k)``."""

    symbols: tuple
    k: int

    def __post_init__(self):
        syms = tuple(int(s) for s in self.symbols)
        object.__setattr__(self, "symbols", syms)
        if not syms:
            raise QuantizeError("empty symbol string")
        if self.k < 1 or min(syms) < 0 or max(syms) >= self.k:
            raise QuantizeError(f"symbols must lie in [0, {self.k})")

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    def __str__(self):
        return ",".join(map(str, self.symbols))


@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    mse: float
    history: tuple  # MSE after every assignment step


def _sq_dists(points, centroids):
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _nearest(points, centroids):
    d = _sq_dists(points, centroids)
    labels = np.argmin(d, axis=1)
    return labels, d[np.arange(len(points)), labels]


def lloyd(points, init, max_iter=MAX_ITER):
    """Run Lloyd iterations from `init` until assignments stop changing.

    Empty clusters are re-seeded with the point farthest from its centroid.
    """
    centroids = np.array(init, dtype=float)
    k = centroids.shape[0]
    labels, d = _nearest(points, centroids)
    history = [float(d.mean())]
    for _ in range(max_iter):
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, points)
        nonempty = counts > 0
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        for j in np.flatnonzero(~nonempty):
            far = int(np.argmax(d))
            centroids[j] = points[far]
            d[far] = 0.0
        new_labels, d = _nearest(points, centroids)
        history.append(float(d.mean()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return KMeansResult(centroids, new_labels, history[-1], tuple(history))


def kmeans_fit(vectors, k, restarts=20, seed=0):
    """Best-of-`restarts` K-means codebook (lowest mean squared error).

    Each restart initialises from `k` distinct points drawn without
    replacement, using its own sub-seed spawned from `seed`.
    """
    points = np.asarray(vectors, dtype=float)
    if points.ndim != 2:
        raise QuantizeError("vectors must be a 2-d array")
    if len(points) < k:
        raise QuantizeError("too few points")
    if restarts < 1:
        raise QuantizeError("restarts must be >= 1")
    if not 2 <= k <= 48:
        log.warning("codebook size K=%d outside the range [2, 48]", k)
    distinct = np.unique(points, axis=0)
    if len(distinct) < k:
        raise QuantizeError("too few distinct points")

    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        init = distinct[rng.choice(len(distinct), size=k, replace=False)]
        result = lloyd(points, init)
        if best is None or result.mse < best.mse:
            best = result
    return Codebook(best.centroids, seed)


def assign(codebook, seq):
    """Index of the nearest centroid for every row (ties to the smaller index)."""
    seq = np.atleast_2d(np.asarray(seq, dtype=float))
    if seq.shape[0] == 0:
        raise QuantizeError("cannot quantize an empty sequence")
    labels, _ = _nearest(seq, codebook.centroids)
    return SymbolString(labels.tolist(), codebook.size)


def histogram(s):
    if len(s) == 0:
        raise QuantizeError("empty symbol string")
    return np.bincount(np.asarray(s.symbols), minlength=s.k) / len(s)


def rotation_histograms(codebook, seq):
    """Codeword histograms of `seq` transposed by 0..11 semitones (12 x K)."""
    return np.stack([histogram(assign(codebook, transpose(seq, r))) for r in range(N_CHROMA)])


def pooled_vectors(sequences, cap=200_000, seed=0):
    """Stack rows of all sequences, subsampled (seeded) to at most `cap` rows."""
    pooled = np.concatenate([np.asarray(s, dtype=float) for s in sequences])
    if cap is not None and len(pooled) > cap:
        rng = np.random.default_rng(seed)
        pooled = pooled[np.sort(rng.choice(len(pooled), size=cap, replace=False))]
    return pooled


# -- files -------------------------------------------------------------------


def save_codebook(codebook, path):
    with open(path, "w") as fh:
        fh.write(f"# K={codebook.size} seed={codebook.seed}\n")
        for row in codebook.centroids:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_codebook(path):
    with open(path) as fh:
        header = fh.readline().strip()
        rows = [line for line in fh if line.strip()]
    if not header.startswith("#"):
        raise QuantizeError(f"{path}: missing '# K=.. seed=..' header")
    fields = dict(tok.split("=", 1) for tok in header[1:].split() if "=" in tok)
    centroids = np.array([[float(v) for v in r.split(",")] for r in rows])
    if centroids.ndim != 2 or centroids.shape[1] != N_CHROMA:
        raise QuantizeError(f"{path}: centroids must have 12 columns")
    if "K" in fields and int(fields["K"]) != len(centroids):
        raise QuantizeError(f"{path}: header K={fields['K']} but {len(centroids)} rows")
    return Codebook(centroids, int(fields.get("seed", 0)))


def save_symbols(s, path):
    with open(path, "w") as fh:
        fh.write(str(s) + "\n")


def load_symbols(path, k):
    with open(path) as fh:
        text = fh.read().strip()
    return SymbolString([int(t) for t in text.split(",")], k)
