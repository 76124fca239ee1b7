"""Sequential symbol predictors and log-loss based distances.

Two predictors are provided:

``PPMC``
    Prediction by partial matching with escape method C, orders 0..D and a
    uniform order -1 fallback. Orders are blended recursively,
    ``P_o(s) = (c_o(s) + q_o * P_{o-1}(s)) / (n_o + q_o)``, where ``n_o`` is
    the number of observations in the order-o context and ``q_o`` the number
    of distinct symbols seen there; unseen contexts pass through. No symbol
    exclusion, so every distribution sums to one and is strictly positive.

``LZ78``
    Incremental LZ78 phrase tree. At a node with child counts ``c`` the next
    symbol has probability ``(c(s) + 1) / (sum(c) + K)``; an unseen symbol
    opens a new phrase and the walk restarts at the root.

Average log-loss (bits per symbol) estimates entropy rates by self-, cross-
and conditional self-prediction.
"""

import math

import numpy as np

from .quantize import SymbolString

DEFAULT_ORDER = 5
KINDS = ("ppmc", "lz78")


class PredictError(ValueError):
    pass


class PPMC:
    def __init__(self, k, order=DEFAULT_ORDER):
        if order < 0:
            raise PredictError("PPM order must be >= 0")
        self.k = k
        self.order = order
        # context tuple -> [counts list, total, distinct]
        self.contexts = {}
        self.history = []

    def reset_context(self):
        self.history = []

    def _active(self):
        """Seen contexts for the current history, lowest order first."""
        h = self.history
        out = []
        for o in range(min(self.order, len(h)) + 1):
            ctx = tuple(h[len(h) - o :])
            entry = self.contexts.get(ctx)
            if entry is not None:
                out.append(entry)
        return out

    def prob(self, s):
        p = 1.0 / self.k
        for counts, n, q in self._active():
            p = (counts[s] + q * p) / (n + q)
        return p

    def distribution(self):
        p = np.full(self.k, 1.0 / self.k)
        for counts, n, q in self._active():
            p = (np.asarray(counts, dtype=float) + q * p) / (n + q)
        return p

    def update(self, s):
        h = self.history
        for o in range(min(self.order, len(h)) + 1):
            ctx = tuple(h[len(h) - o :])
            entry = self.contexts.get(ctx)
            if entry is None:
                entry = self.contexts[ctx] = [[0] * self.k, 0, 0]
            counts = entry[0]
            if counts[s] == 0:
                entry[2] += 1
            counts[s] += 1
            entry[1] += 1
        self.advance(s)

    def advance(self, s):
        """Extend the context without learning (frozen model)."""
        self.history.append(s)
        if len(self.history) > self.order:
            del self.history[0]


class _Node:
    __slots__ = ("children", "counts", "total")

    def __init__(self):
        self.children = {}
        self.counts = {}
        self.total = 0


class LZ78:
    def __init__(self, k):
        self.k = k
        self.root = _Node()
        self.node = self.root

    def reset_context(self):
        self.node = self.root

    def prob(self, s):
        node = self.node
        return (node.counts.get(s, 0) + 1) / (node.total + self.k)

    def distribution(self):
        node = self.node
        c = np.array([node.counts.get(s, 0) for s in range(self.k)], dtype=float)
        return (c + 1.0) / (node.total + self.k)

    def update(self, s):
        node = self.node
        node.counts[s] = node.counts.get(s, 0) + 1
        node.total += 1
        child = node.children.get(s)
        if child is None:
            node.children[s] = _Node()
            self.node = self.root
        else:
            self.node = child

    def advance(self, s):
        self.node = self.node.children.get(s, self.root)


def make_predictor(kind, k, order=DEFAULT_ORDER):
    if kind == "ppmc":
        return PPMC(k, order)
    if kind == "lz78":
        return LZ78(k)
    raise PredictError(f"unknown predictor {kind!r}; expected one of {KINDS}")


def _check_same_alphabet(*strings):
    if len({s.k for s in strings}) != 1:
        raise PredictError("alphabet size mismatch")


def total_log_loss(kind, s, order=DEFAULT_ORDER):
    """Adaptive code length of `s` in bits: sum of -log2 P(s_i | s_<i)."""
    model = make_predictor(kind, s.k, order)
    bits = 0.0
    for sym in s:
        bits -= math.log2(model.prob(sym))
        model.update(sym)
    return bits


def self_log_loss(kind, s, order=DEFAULT_ORDER):
    return total_log_loss(kind, s, order) / len(s)


def cross_log_loss(kind, train, target, order=DEFAULT_ORDER):
    """Mean log-loss of `target` under a model fitted on `train` and then frozen."""
    _check_same_alphabet(train, target)
    model = make_predictor(kind, train.k, order)
    for sym in train:
        model.update(sym)
    model.reset_context()
    bits = 0.0
    for sym in target:
        bits -= math.log2(model.prob(sym))
        model.advance(sym)
    return bits / len(target)


def conditional_log_loss(kind, x, y, order=DEFAULT_ORDER):
    """Mean log-loss over `x` after priming an adaptive model with `y`."""
    _check_same_alphabet(x, y)
    model = make_predictor(kind, x.k, order)
    for sym in y:
        model.update(sym)
    bits = 0.0
    for sym in x:
        bits -= math.log2(model.prob(sym))
        model.update(sym)
    return bits / len(x)


def ncd_formula(joint, cx, cy):
    return (joint - min(cx, cy)) / max(cx, cy)


def ncd_pred(kind, x, y, order=DEFAULT_ORDER):
    """Log-loss analogue of NCD on the concatenated pair (canonical order)."""
    from .compress import canonical_pair, concat

    lx, ly = self_log_loss(kind, x, order), self_log_loss(kind, y, order)
    return ncd_formula(self_log_loss(kind, concat(*canonical_pair(x, y)), order), lx, ly)


def ncda_pred(kind, x, y, order=DEFAULT_ORDER):
    from .compress import canonical_align

    lx, ly = self_log_loss(kind, x, order), self_log_loss(kind, y, order)
    return ncd_formula(self_log_loss(kind, canonical_align(x, y), order), lx, ly)


def d_cross_formula(cross_xy, cross_yx, self_x, self_y):
    return (cross_xy + cross_yx) / (self_x + self_y)


def d_cross_discrete(kind, x, y, order=DEFAULT_ORDER):
    """Symmetrised cross-entropy rate over the sum of self entropy rates."""
    _check_same_alphabet(x, y)
    return d_cross_formula(
        cross_log_loss(kind, y, x, order),
        cross_log_loss(kind, x, y, order),
        self_log_loss(kind, x, order),
        self_log_loss(kind, y, order),
    )


def kl_divergence(p, q):
    """KL divergence in bits with 0 * log(0 / .) = 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    nz = p > 0
    return float(np.sum(p[nz] * np.log2(p[nz] / q[nz])))


def jsd(p, q):
    """KL(p || m) + KL(q || m) with m the mean histogram (no 1/2 factor)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise PredictError("histogram dimension mismatch")
    s = p + q
    # p / m written as 2p / (p + q): halving a subnormal mass can underflow to 0
    total = 0.0
    for a in (p, q):
        nz = a > 0
        total += float(np.sum(a[nz] * np.log2(2.0 * a[nz] / s[nz])))
    return total


__all__ = [
    "PPMC",
    "LZ78",
    "SymbolString",
    "make_predictor",
    "self_log_loss",
    "cross_log_loss",
    "conditional_log_loss",
    "ncd_pred",
    "ncda_pred",
    "d_cross_discrete",
    "jsd",
]
