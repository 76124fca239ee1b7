"""Synthetic cover-set generator.

A base "song" is a smoothed random walk over chord-like chroma templates,
arranged into repeated sections so that it has self-similar structure.
Each cover is the base rotated by a random number of semitones, time-warped
by deleting / duplicating beats, perturbed with Gaussian noise, clipped at
zero and re-normalized.
"""

from dataclasses import dataclass

import numpy as np

from .features import N_CHROMA, Track, transpose


@dataclass(frozen=True)
class SyntheticSpec:
    n_cover_sets: int = 10
    covers_per_set: int = 3
    length: int = 160
    transpose_range: int = 5
    jitter: float = 0.1
    noise: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n_cover_sets < 1 or self.covers_per_set < 1 or self.length < 2:
            raise ValueError("n_cover_sets, covers_per_set >= 1 and length >= 2 required")
        if not 0 <= self.jitter <= 0.5:
            raise ValueError("jitter must lie in [0, 0.5]")
        if self.noise < 0 or self.transpose_range < 0:
            raise ValueError("noise and transpose_range must be nonnegative")


def _normalize_rows(m):
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    out = np.zeros_like(m)
    np.divide(m, norms, out=out, where=norms > 0)
    return out


def _chord(rng):
    v = 0.05 * rng.random(N_CHROMA)
    root = rng.integers(N_CHROMA)
    third = 3 + rng.integers(2)
    v[[root, (root + third) % N_CHROMA, (root + 7) % N_CHROMA]] += 1.0
    return v


def _section(rng, n_beats, smoothing=0.6):
    rows = []
    current = _chord(rng)
    state = current.copy()
    while len(rows) < n_beats:
        current = _chord(rng)
        for _ in range(rng.integers(2, 7)):
            state = smoothing * state + (1 - smoothing) * current
            rows.append(state.copy())
    return np.array(rows[:n_beats])


def base_sequence(rng, length, n_sections=3):
    sections = [_section(rng, int(rng.integers(12, 25))) for _ in range(n_sections)]
    parts, total = [], 0
    order = [0, 1, 0, 2]
    while total < length:
        label = order[len(parts)] if len(parts) < len(order) else int(rng.integers(n_sections))
        parts.append(sections[label])
        total += len(sections[label])
    return _normalize_rows(np.concatenate(parts)[:length])


def time_warp(rng, seq, jitter):
    """Delete or duplicate each beat with probability jitter / 2 each."""
    if jitter == 0:
        return seq.copy()
    u = rng.random(len(seq))
    reps = np.where(u < jitter / 2, 0, np.where(u < jitter, 2, 1))
    if reps.sum() == 0:
        reps[0] = 1
    return np.repeat(seq, reps, axis=0)


def make_cover(rng, base, spec):
    shift = int(rng.integers(-spec.transpose_range, spec.transpose_range + 1))
    seq = time_warp(rng, transpose(base, shift), spec.jitter)
    if spec.noise > 0:
        seq = _normalize_rows(np.clip(seq + spec.noise * rng.standard_normal(seq.shape), 0, None))
    return seq


def generate_synthetic(spec):
    """Deterministic list of :class:`Track` objects, sorted by id."""
    tracks = []
    set_seeds = np.random.SeedSequence(spec.seed).spawn(spec.n_cover_sets)
    for c, ss in enumerate(set_seeds):
        rng = np.random.default_rng(ss)
        base = base_sequence(rng, spec.length)
        for j in range(spec.covers_per_set):
            cover_set = f"set{c:03d}"
            tracks.append(Track(f"{cover_set}_v{j}", cover_set, make_cover(rng, base, spec)))
    return tracks
