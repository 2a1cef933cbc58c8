"""Phrase segmentation: local boundary strengths and a threshold search.

Boundary strengths follow the local boundary detection model: for pitch,
inter-onset and rest interval sequences, an interval's strength is its size
times the relative change to its neighbours. The threshold search bisects on
the peak threshold until every phrase fits within a measure budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .midi import NoteEvent, Score


@dataclass(frozen=True)
class LBDMConfig:
    pitch_weight: float = 0.25
    ioi_weight: float = 0.50
    rest_weight: float = 0.25


@dataclass(frozen=True)
class Phrase:
    track: int
    start_measure: int
    end_measure: int
    notes: tuple[NoteEvent, ...] = field(default=(), repr=False)
    weight: float = 0.0
    pitch_entropy: float = 0.0
    ioi_entropy: float = 0.0

    def __post_init__(self):
        if self.start_measure > self.end_measure:
            raise ValueError("phrase starts after it ends")

    @property
    def length(self) -> int:
        return self.end_measure - self.start_measure + 1


def collapse_chords(notes: Sequence[NoteEvent]) -> list[NoteEvent]:
    """Keep the highest note of every onset, sorted by onset."""
    top: dict[int, NoteEvent] = {}
    for n in notes:
        cur = top.get(n.onset)
        if cur is None or n.pitch > cur.pitch:
            top[n.onset] = n
    return [top[t] for t in sorted(top)]


def degree_of_change(a: float, b: float) -> float:
    if a + b != 0 and a >= 0 and b >= 0:
        return abs(a - b) / (a + b)
    return 0.0


def _sequence_strength(x: np.ndarray) -> np.ndarray:
    n = len(x)
    s = np.zeros(n)
    for i in range(n):
        r = 0.0
        if i > 0:
            r += degree_of_change(x[i - 1], x[i])
        if i < n - 1:
            r += degree_of_change(x[i], x[i + 1])
        s[i] = x[i] * r
    top = s.max() if n else 0.0
    return s / top if top > 0 else s


def boundary_profile(notes: Sequence[NoteEvent], config: LBDMConfig = LBDMConfig()) -> np.ndarray:
    """Strength of a boundary between each pair of consecutive notes.

    ``notes`` should already be chord-collapsed; the result has one entry per
    interval, so it is empty for fewer than two notes.
    """
    if len(notes) < 2:
        return np.zeros(0)
    onset = np.array([n.onset for n in notes], dtype=float)
    dur = np.array([n.duration for n in notes], dtype=float)
    pitch = np.array([n.pitch for n in notes], dtype=float)
    pitch_iv = np.abs(np.diff(pitch))
    ioi = np.diff(onset)
    rest = np.maximum(0.0, onset[1:] - (onset[:-1] + dur[:-1]))
    return (
        config.pitch_weight * _sequence_strength(pitch_iv)
        + config.ioi_weight * _sequence_strength(ioi)
        + config.rest_weight * _sequence_strength(rest)
    )


def find_peaks(bs: Sequence[float], threshold: float) -> list[int]:
    """Local maxima strictly above ``threshold``.

    A plateau counts once, at its first index. Sequence ends count as lower
    neighbours, so a maximum at either end is a peak.
    """
    bs = np.asarray(bs, dtype=float)
    n = len(bs)
    peaks = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and bs[j + 1] == bs[i]:
            j += 1
        left_ok = i == 0 or bs[i - 1] < bs[i]
        right_ok = j == n - 1 or bs[j + 1] < bs[i]
        if bs[i] > threshold and left_ok and right_ok:
            peaks.append(i)
        i = j + 1
    return peaks


def phrase_spans(boundary_measures: Sequence[int], first: int, last: int) -> list[tuple[int, int]]:
    """Split measures ``first..last`` after each boundary measure."""
    ends = sorted({m for m in boundary_measures if first <= m < last})
    spans = []
    start = first
    for m in ends:
        spans.append((start, m))
        start = m + 1
    spans.append((start, last))
    return spans


def find_phrases(peaks: Sequence[int], score: Score, track: int, collapsed: Sequence[NoteEvent] | None = None) -> list[Phrase]:
    """Phrases ending at the measure of the note that opens each peak interval.

    Phrases tile the measures from the first to the last onset of the track;
    those without any onset are dropped.
    """
    notes = score.tracks[track]
    if not notes:
        return []
    collapsed = collapsed if collapsed is not None else collapse_chords(notes)
    bounds = score.measure_boundaries
    onset_measure = [score.measure_of(n.onset, bounds) for n in notes]
    first, last = min(onset_measure), max(onset_measure)
    cuts = [score.measure_of(collapsed[p].onset, bounds) for p in peaks]
    phrases = []
    for a, b in phrase_spans(cuts, first, last):
        members = tuple(n for n, m in zip(notes, onset_measure) if a <= m <= b)
        if members:
            phrases.append(Phrase(track, a, b, members))
    return phrases


def _default_epsilon(bs: np.ndarray) -> float:
    spread = float(bs.max() - bs.min())
    return 1e-6 * spread if spread > 0 else 1e-12


@dataclass(frozen=True)
class ThresholdResult:
    peaks: list[int]
    threshold: float | None
    k_max: int
    iterations: int


def threshold_search(
    bs: Sequence[float],
    lengths: Callable[[list[int]], list[int]],
    k_max: int = 4,
    epsilon: float | None = None,
) -> ThresholdResult:
    """Bisect the peak threshold so that every phrase spans at most ``k_max`` measures.

    ``lengths(peaks)`` returns the measure length of each phrase produced by
    those peaks. A working threshold is pushed up towards the top of the
    profile; an unworkable one is pushed down. When the bracket collapses at
    the bottom without any working threshold, ``k_max`` grows by one and the
    search restarts.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    bs = np.asarray(bs, dtype=float)
    if len(bs) == 0:
        return ThresholdResult([], None, k_max, 0)
    eps = epsilon if epsilon is not None else _default_epsilon(bs)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    lo, hi = float(bs.min()), float(bs.max())
    t = (lo + hi) / 2
    found = None
    it = 0
    while True:
        it += 1
        peaks = find_peaks(bs, t)
        if not peaks:
            hi = t
            t = (lo + hi) / 2
            if t - lo >= eps and lo < t:
                continue
            # no peak survives any threshold in the bracket
            if found is not None:
                return ThresholdResult(find_peaks(bs, found), found, k_max, it)
            if max(lengths([])) <= k_max:
                return ThresholdResult([], None, k_max, it)
            lo, hi = float(bs.min()), float(bs.max())
            t = (lo + hi) / 2
            k_max += 1
            continue
        if max(lengths(peaks), default=0) > k_max:
            hi = t
            t = (lo + hi) / 2
            if t - lo < eps or t <= lo:
                if found is not None:
                    return ThresholdResult(find_peaks(bs, found), found, k_max, it)
                lo, hi = float(bs.min()), float(bs.max())
                t = (lo + hi) / 2
                k_max += 1
        else:
            found = t
            lo = t
            t = (lo + hi) / 2
            if hi - t < eps or t >= hi:
                return ThresholdResult(peaks, found, k_max, it)


def identify_phrases(
    score: Score,
    track: int,
    k_max: int = 4,
    epsilon: float | None = None,
    config: LBDMConfig = LBDMConfig(),
) -> list[Phrase]:
    notes = score.tracks[track]
    if not notes:
        return []
    collapsed = collapse_chords(notes)
    bs = boundary_profile(collapsed, config)

    def lengths(peaks: list[int]) -> list[int]:
        return [p.length for p in find_phrases(peaks, score, track, collapsed)]

    result = threshold_search(bs, lengths, k_max, epsilon)
    return find_phrases(result.peaks, score, track, collapsed)
