"""Code lengths, string alignment and the NCD / NCDA distances.

Compressors
-----------
``seq_dict``
    LZ78 parse; phrase t (1-based) costs ``ceil(log2 t) + ceil(log2 K)``
    bits (dictionary index plus innovation symbol). A trailing phrase that
    is already in the dictionary is charged the same way.
``ppm``
    Ideal arithmetic-code length under the PPMC model of
    :mod:`simscore.predict_discrete`.
``block_sort``
    External program. The string is mapped to printable characters
    ``chr(33 + k)`` and piped to the command's stdin; the length of its
    stdout in bytes, times 8, is the code length.
"""

import shlex
import subprocess
from dataclasses import dataclass

import numpy as np

from .predict_discrete import DEFAULT_ORDER, total_log_loss
from .quantize import SymbolString

COMPRESSORS = ("seq_dict", "ppm", "block_sort")


class CompressError(ValueError):
    pass


def _ceil_log2(n):
    return (n - 1).bit_length() if n > 0 else 0


def lz78_phrases(symbols):
    """Incremental LZ78 parse; returns the list of phrases as tuples."""
    seen = set()
    phrases = []
    current = ()
    for s in symbols:
        current = current + (s,)
        if current not in seen:
            seen.add(current)
            phrases.append(current)
            current = ()
    if current:
        phrases.append(current)
    return phrases


def seq_dict_length(s):
    """LZ78 code length in bits (see module docstring for the phrase cost)."""
    sym_bits = _ceil_log2(s.k)
    # trie walk: same parse as lz78_phrases without materialising tuples
    root = {}
    node = root
    n_phrases = 0
    pending = False
    for sym in s:
        child = node.get(sym)
        if child is None:
            node[sym] = {}
            n_phrases += 1
            node = root
            pending = False
        else:
            node = child
            pending = True
    if pending:
        n_phrases += 1
    return float(sum(_ceil_log2(t) for t in range(1, n_phrases + 1)) + n_phrases * sym_bits)


@dataclass(frozen=True)
class Compressor:
    """Code-length backend selected by name."""

    name: str = "seq_dict"
    order: int = DEFAULT_ORDER
    block_sort_cmd: str = None

    def __post_init__(self):
        if self.name not in COMPRESSORS:
            raise CompressError(f"unknown compressor {self.name!r}; expected one of {COMPRESSORS}")

    def code_length(self, s):
        if len(s) == 0:
            raise CompressError("cannot compress an empty string")
        if self.name == "seq_dict":
            return seq_dict_length(s)
        if self.name == "ppm":
            return total_log_loss("ppmc", s, self.order)
        return block_sort_length(s, self.block_sort_cmd)

    __call__ = code_length


def to_text(s):
    if s.k > 90:
        raise CompressError("character mapping requires K <= 90")
    return "".join(chr(33 + v) for v in s)


def block_sort_length(s, cmd):
    if not cmd:
        raise CompressError("backend unavailable")
    try:
        proc = subprocess.run(
            shlex.split(cmd), input=to_text(s).encode("ascii"), capture_output=True, check=True
        )
    except (OSError, subprocess.CalledProcessError) as exc:
        raise CompressError(f"backend unavailable: {exc}") from None
    return 8.0 * len(proc.stdout)


def code_length(compressor, s):
    if isinstance(compressor, str):
        compressor = Compressor(compressor)
    return compressor(s)


def concat(x, y):
    if x.k != y.k:
        raise CompressError("alphabet size mismatch")
    if len(x) == 0 or len(y) == 0:
        raise CompressError("cannot concatenate an empty string")
    return SymbolString(x.symbols + y.symbols, x.k)


def _mode(symbols, k):
    return int(np.argmax(np.bincount(np.asarray(symbols), minlength=k)))


def best_lag(a, b):
    """Lag maximising r(l) = sum_n a[n] * b[(n + l) mod N] (ties to smallest l)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    # circular cross-correlation via FFT; integer inputs so rounding is exact
    r = np.fft.irfft(np.conj(np.fft.rfft(a)) * np.fft.rfft(b), n=len(a))
    return int(np.argmax(np.rint(r)))


def align(x, y):
    """Pad, lag-align and interleave two strings: ``a1 b1 a2 b2 ...``.

    The shorter string is padded at its end with the most frequent symbol of
    the longer one, then `y` is circularly shifted by the lag maximising the
    cross-correlation of the integer codes.
    """
    if x.k != y.k:
        raise CompressError("alphabet size mismatch")
    a, b = list(x.symbols), list(y.symbols)
    n = max(len(a), len(b))
    if len(a) < n:
        a += [_mode(b, x.k)] * (n - len(a))
    elif len(b) < n:
        b += [_mode(a, x.k)] * (n - len(b))
    lag = best_lag(a, b)
    b = b[lag:] + b[:lag]
    out = [None] * (2 * n)
    out[0::2] = a
    out[1::2] = b
    return SymbolString(out, x.k)


def canonical_pair(x, y):
    """Order a pair so that symmetric distances do not depend on argument order.

    The longer string goes first; equal lengths are ordered lexicographically.
    """
    first, second = sorted((x, y), key=lambda s: (-len(s), s.symbols))
    return first, second


def canonical_align(x, y):
    return align(*canonical_pair(x, y))


def ncd_from_lengths(cx, cy, cxy, cyx):
    return max(cxy - cx, cyx - cy) / max(cx, cy)


def ncda_from_lengths(cx, cy, c_aligned):
    return (c_aligned - min(cx, cy)) / max(cx, cy)


def ncd(compressor, x, y):
    """max{C(xy) - C(x), C(yx) - C(y)} / max{C(x), C(y)}."""
    c = compressor if callable(compressor) else Compressor(compressor)
    return ncd_from_lengths(c(x), c(y), c(concat(x, y)), c(concat(y, x)))


def ncda(compressor, x, y):
    """(C(<x, y>) - min{C(x), C(y)}) / max{C(x), C(y)} on the aligned pair."""
    c = compressor if callable(compressor) else Compressor(compressor)
    return ncda_from_lengths(c(x), c(y), c(canonical_align(x, y)))
