"""Shannon entropy of pitch and inter-onset interval content, in bits."""

from __future__ import annotations

from collections import Counter
from typing import Hashable, Iterable

import numpy as np

from .segment import Phrase, collapse_chords


def shannon_entropy(symbols: Iterable[Hashable]) -> float:
    counts = np.array(list(Counter(symbols).values()), dtype=float)
    if counts.size <= 1:
        return 0.0
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def pitch_entropy(phrase: Phrase) -> float:
    if not phrase.notes:
        raise ValueError("entropy of an empty phrase")
    return shannon_entropy(n.pitch for n in collapse_chords(phrase.notes))


def ioi_entropy(phrase: Phrase) -> float:
    """Entropy over the onset gaps between consecutive notes of the phrase;
    the last note has no gap, so ``N`` notes give ``N - 1`` samples."""
    if not phrase.notes:
        raise ValueError("entropy of an empty phrase")
    onsets = [n.onset for n in collapse_chords(phrase.notes)]
    return shannon_entropy(np.diff(onsets).tolist())


def weigh(phrase: Phrase) -> Phrase:
    hp, hi = pitch_entropy(phrase), ioi_entropy(phrase)
    return Phrase(phrase.track, phrase.start_measure, phrase.end_measure, phrase.notes, hp + hi, hp, hi)
