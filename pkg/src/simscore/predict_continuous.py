"""Nearest-neighbour prediction in time-delay embedded chroma space.

Indices are 0-based. With embedding dimension ``d`` and delay ``tau`` the
embedded vector at time ``r`` stacks rows ``r, r - tau, ..., r - (d-1)*tau``
and exists for ``r >= (d-1)*tau``. A time ``t`` is a prediction target when
it is embeddable and ``t + h`` is inside the sequence; candidate neighbours
obey the same bounds in the source sequence.

Neighbours maximise the Pearson correlation between embedded vectors
(correlation with a constant vector is 0, ties go to the smallest index).
Prediction errors are rescaled by the per-component population variance of
the target sequence and summarised by a Gaussian entropy in bits.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

VAR_FLOOR = 1e-12
DET_REGULARIZER = 1e-9
LOG2_2PIE = math.log2(2 * math.pi * math.e)


class PredictionError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingConfig:
    d: int = 4
    tau: int = 1
    h: int = 1
    R: int = 8

    def __post_init__(self):
        if self.d < 1 or self.tau < 1 or self.h < 1 or self.R < 0:
            raise PredictionError("need d, tau, h >= 1 and R >= 0")
        if self.d not in (1, 2, 4) or self.tau not in (1, 2, 4, 6) or self.h not in (1, 4) or self.R != 8:
            log.debug("embedding parameters outside the evaluated grid: %s", self)

    @property
    def span(self):
        return (self.d - 1) * self.tau


@dataclass(frozen=True)
class Predictions:
    """Predicted rows for target times ``targets + h`` of the predicted sequence."""

    targets: np.ndarray  # t values
    successors: np.ndarray  # t + h, the rows being predicted
    values: np.ndarray  # len(targets) x 12
    neighbors: np.ndarray  # matched index q(t) in the source sequence (-1 if blended)


@dataclass(frozen=True)
class ErrorStats:
    errors: np.ndarray
    covariance: np.ndarray
    scale: np.ndarray


def embed(seq, cfg):
    """Delay-embedded vectors for r = (d-1)*tau .. N-1 (one row each)."""
    seq = np.asarray(seq, dtype=float)
    n = len(seq)
    if n <= cfg.span:
        raise PredictionError("insufficient length for embedding")
    blocks = [seq[cfg.span - j * cfg.tau : n - j * cfg.tau] for j in range(cfg.d)]
    return np.concatenate(blocks, axis=1)


def _standardize(vectors):
    centered = vectors - vectors.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1, keepdims=True)
    out = np.zeros_like(centered)
    np.divide(centered, norms, out=out, where=norms > 0)
    return out


def _valid_range(n, cfg):
    idx = np.arange(cfg.span, n - cfg.h)
    if idx.size == 0:
        raise PredictionError("sequence too short for embedding and horizon")
    return idx


def correlations(X, Y, cfg):
    """Pearson correlations between embedded targets of X and candidates of Y.

    Returns ``(targets, candidates, corr)`` with ``corr[i, j]`` the
    correlation between X at ``targets[i]`` and Y at ``candidates[j]``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    targets = _valid_range(len(X), cfg)
    candidates = _valid_range(len(Y), cfg)
    zx = _standardize(embed(X, cfg))[targets - cfg.span]
    zy = _standardize(embed(Y, cfg))[candidates - cfg.span]
    return targets, candidates, zx @ zy.T


def cross_predict(X, Y, cfg):
    """Predict X[t + h] by Y[q(t) + h], q(t) the best-correlated time in Y."""
    Y = np.asarray(Y, dtype=float)
    targets, candidates, corr = correlations(X, Y, cfg)
    q = candidates[np.argmax(corr, axis=1)]
    return Predictions(targets, targets + cfg.h, Y[q + cfg.h], q)


def self_predict(X, cfg):
    """As :func:`cross_predict` with Y = X, excluding candidates |k - t| <= R."""
    X = np.asarray(X, dtype=float)
    targets, candidates, corr = correlations(X, X, cfg)
    allowed = np.abs(candidates[None, :] - targets[:, None]) > cfg.R
    if not np.all(allowed.any(axis=1)):
        raise PredictionError("exclusion radius exhausts candidates")
    corr = np.where(allowed, corr, -np.inf)
    q = candidates[np.argmax(corr, axis=1)]
    return Predictions(targets, targets + cfg.h, X[q + cfg.h], q)


def mse(X, pred):
    X = np.asarray(X, dtype=float)
    return float(np.mean((pred.values - X[pred.successors]) ** 2))


def blend_weight(mse_self, mse_cross):
    total = mse_self + mse_cross
    return 0.5 if total == 0 else mse_self / total


def conditional_predict(X, Y, cfg):
    """Blend cross and self predictions, weighting cross by MSE_self / (MSE_self + MSE_cross)."""
    X = np.asarray(X, dtype=float)
    cross = cross_predict(X, Y, cfg)
    own = self_predict(X, cfg)
    # both share the same target set; kept explicit in case bounds diverge
    common, ic, io = np.intersect1d(cross.targets, own.targets, return_indices=True)
    cross = Predictions(common, common + cfg.h, cross.values[ic], cross.neighbors[ic])
    own = Predictions(common, common + cfg.h, own.values[io], own.neighbors[io])
    alpha = blend_weight(mse(X, own), mse(X, cross))
    values = alpha * cross.values + (1 - alpha) * own.values
    return Predictions(common, common + cfg.h, values, np.full(len(common), -1))


def error_stats(X, pred):
    X = np.asarray(X, dtype=float)
    if len(pred.targets) < 2:
        raise PredictionError("need at least two predictions for error statistics")
    scale = np.maximum(X.var(axis=0), VAR_FLOOR)
    errors = (pred.values - X[pred.successors]) / scale
    return ErrorStats(errors, np.cov(errors, rowvar=False, ddof=1), scale)


def gaussian_entropy(covariance):
    """0.5 * log2((2*pi*e)^k * det(cov + 1e-9 I)), in bits."""
    cov = np.atleast_2d(np.asarray(covariance, dtype=float))
    k = cov.shape[0]
    sign, logdet = np.linalg.slogdet(cov + DET_REGULARIZER * np.eye(k))
    if sign <= 0:
        raise PredictionError("covariance is not positive definite")
    return 0.5 * (k * LOG2_2PIE + logdet / math.log(2))


def self_entropy(X, cfg):
    return gaussian_entropy(error_stats(X, self_predict(X, cfg)).covariance)


def cross_entropy(X, Y, cfg):
    """Entropy of errors predicting X from Y (estimates H_x(X, Y))."""
    return gaussian_entropy(error_stats(X, cross_predict(X, Y, cfg)).covariance)


def conditional_entropy(X, Y, cfg):
    return gaussian_entropy(error_stats(X, conditional_predict(X, Y, cfg)).covariance)


def _ratio(num, den):
    if abs(den) < 1e-9:
        raise PredictionError("degenerate entropy normalizer")
    return num / den


def nid_from_entropies(h_x_given_y, h_y_given_x, h_x, h_y):
    return _ratio(max(h_x_given_y, h_y_given_x), max(h_x, h_y))


def d_cross_from_entropies(h_xy, h_yx, h_x, h_y):
    return _ratio(h_xy + h_yx, h_x + h_y)


def nid_continuous(X, Y, cfg, h_x=None, h_y=None):
    h_x = self_entropy(X, cfg) if h_x is None else h_x
    h_y = self_entropy(Y, cfg) if h_y is None else h_y
    return nid_from_entropies(
        conditional_entropy(X, Y, cfg), conditional_entropy(Y, X, cfg), h_x, h_y
    )


def d_cross_continuous(X, Y, cfg, h_x=None, h_y=None):
    h_x = self_entropy(X, cfg) if h_x is None else h_x
    h_y = self_entropy(Y, cfg) if h_y is None else h_y
    return d_cross_from_entropies(cross_entropy(X, Y, cfg), cross_entropy(Y, X, cfg), h_x, h_y)


def nmse(actual, predicted):
    """Mean over components of MSE / variance (population) of `actual`."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    var = np.maximum(actual.var(axis=0), VAR_FLOOR)
    return float(np.mean(np.mean((predicted - actual) ** 2, axis=0) / var))


def nmse_cross(X, Y, cfg):
    """Symmetrised NMSE: mean of NMSE(X | Y) and NMSE(Y | X)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    pxy = cross_predict(X, Y, cfg)
    pyx = cross_predict(Y, X, cfg)
    return 0.5 * (nmse(X[pxy.successors], pxy.values) + nmse(Y[pyx.successors], pyx.values))
