"""Beat-synchronous chroma features.

The pipeline starts from precomputed frame-level chroma and beat onsets:
resample the beat grid towards a preferred beat rate, average frames over
beat intervals, apply square-root compression and unit-norm each row.
Key invariance is handled with the optimal transposition index (OTI).

Conventions
-----------
circshift(v, i)[j] = v[(j - i) mod 12], i.e. ``np.roll(v, i)``.
All-zero (silent) rows are kept so that row indices stay on the beat grid.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

N_CHROMA = 12


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class Track:
    """A track with its beat-synchronous chroma sequence."""

    id: str
    cover_set: str
    chroma: np.ndarray  # N x 12

    def __post_init__(self):
        if self.chroma.ndim != 2 or self.chroma.shape[1] != N_CHROMA:
            raise FeatureError(f"track {self.id}: chroma must be N x 12")
        if self.chroma.shape[0] < 1:
            raise FeatureError(f"track {self.id}: empty chroma sequence")


def _as_onsets(onsets):
    onsets = np.asarray(onsets, dtype=float).ravel()
    if onsets.size < 2:
        raise FeatureError("insufficient beats")
    if np.any(np.diff(onsets) <= 0):
        raise FeatureError("beat onsets must be strictly increasing")
    return onsets


def resample_beats(onsets, pbr=240.0):
    """Subdivide each beat interval so the local rate approaches `pbr` bpm.

    Each interval of duration ``dt`` is split into ``round(pbr * dt / 60)``
    equal parts (at least one, halves rounded up).
    """
    onsets = _as_onsets(onsets)
    if pbr <= 0:
        raise FeatureError("pbr must be positive")
    out = [onsets[:1]]
    for a, b in zip(onsets[:-1], onsets[1:]):
        parts = max(1, math.floor(pbr * (b - a) / 60.0 + 0.5))
        sub = a + (b - a) * np.arange(1, parts + 1) / parts
        sub[-1] = b  # a + (b - a) can miss b by an ulp; keep onsets exact
        out.append(sub)
    return np.concatenate(out)


def beat_average(frame_times, frames, onsets):
    """Average frame chroma over the half-open intervals [onset_i, onset_i+1).

    Frames outside the grid are ignored. An empty interval copies the
    previous non-empty row (all-zero if there is none).
    """
    frame_times = np.asarray(frame_times, dtype=float).ravel()
    frames = np.asarray(frames, dtype=float)
    onsets = _as_onsets(onsets)
    if frames.ndim != 2 or frames.shape[1] != N_CHROMA:
        raise FeatureError("frame chroma must be n_frames x 12")
    if frames.shape[0] != frame_times.size:
        raise FeatureError("frame times and chroma differ in length")
    if frame_times.size > 1 and np.any(np.diff(frame_times) <= 0):
        raise FeatureError("frame times must be strictly increasing")

    n_beats = onsets.size - 1
    idx = np.searchsorted(onsets, frame_times, side="right") - 1
    keep = (idx >= 0) & (idx < n_beats)
    sums = np.zeros((n_beats, N_CHROMA))
    counts = np.zeros(n_beats)
    np.add.at(sums, idx[keep], frames[keep])
    np.add.at(counts, idx[keep], 1)

    out = np.zeros((n_beats, N_CHROMA))
    last = np.zeros(N_CHROMA)
    for i in range(n_beats):
        if counts[i] > 0:
            last = sums[i] / counts[i]
        out[i] = last
    return out


def sqrt_compress_normalize(seq):
    """Square-root compress each component, then scale rows to unit norm."""
    seq = np.asarray(seq, dtype=float)
    if np.any(seq < 0) or not np.all(np.isfinite(seq)):
        raise FeatureError("invalid chroma")
    out = np.sqrt(seq)
    norms = np.linalg.norm(out, axis=1, keepdims=True)
    np.divide(out, norms, out=out, where=norms > 0)
    return out


def summary_vector(seq):
    return np.asarray(seq, dtype=float).mean(axis=0)


def circshift(v, i):
    return np.roll(np.asarray(v), int(i) % N_CHROMA, axis=-1)


def oti(hx, hy):
    """Circular shift of `hy` maximising its inner product with `hx`.

    Ties go to the smallest shift; two all-zero vectors give 0.
    """
    hx = np.asarray(hx, dtype=float)
    hy = np.asarray(hy, dtype=float)
    scores = np.array([hx @ circshift(hy, i) for i in range(N_CHROMA)])
    return int(np.argmax(scores))


def transpose(seq, shift):
    """Rotate every chroma row by `shift` semitones (mod 12)."""
    return circshift(seq, shift)


def process_frames(frame_times, frames, beats, pbr=240.0):
    grid = resample_beats(beats, pbr)
    return sqrt_compress_normalize(beat_average(frame_times, frames, grid))


# -- track files -------------------------------------------------------------


def load_track(path, pbr=240.0):
    """Read a track JSON and return a processed :class:`Track`.

    Accepts either ``frames`` + ``beats`` (frame-level input) or
    ``beat_chroma`` (already beat-synchronous). Beat chroma is square-root
    compressed and normalized unless the file sets ``"normalized": true``,
    as processed-track files written by :func:`save_track` do.
    """
    with open(path) as fh:
        doc = json.load(fh)
    try:
        track_id = str(doc["id"])
        cover_set = str(doc["cover_set"])
    except KeyError as exc:
        raise FeatureError(f"{path}: missing field {exc}") from None
    if "beat_chroma" in doc:
        chroma = np.asarray(doc["beat_chroma"], dtype=float)
        if chroma.ndim != 2 or chroma.shape[1] != N_CHROMA:
            raise FeatureError(f"{path}: chroma vectors must have 12 components")
        if not doc.get("normalized", False):
            chroma = sqrt_compress_normalize(chroma)
    elif "frames" in doc and "beats" in doc:
        frames = doc["frames"]
        chroma = process_frames(frames["times"], frames["chroma"], doc["beats"], pbr)
    else:
        raise FeatureError(f"{path}: needs 'beat_chroma' or 'frames' and 'beats'")
    if chroma.ndim != 2 or chroma.shape[1] != N_CHROMA:
        raise FeatureError(f"{path}: chroma vectors must have 12 components")
    return Track(track_id, cover_set, chroma)


def save_track(track, path):
    doc = {
        "id": track.id,
        "cover_set": track.cover_set,
        "normalized": True,
        "beat_chroma": track.chroma.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_tracks(directory, pbr=240.0):
    """Load every ``*.json`` track in `directory`, sorted by track id."""
    paths = sorted(Path(directory).glob("*.json"))
    tracks = [load_track(p, pbr) for p in paths]
    ids = [t.id for t in tracks]
    if len(set(ids)) != len(ids):
        raise FeatureError(f"duplicate track ids in {directory}")
    return sorted(tracks, key=lambda t: t.id)
