"""Turn phrases into scheduling jobs and render the reduced score."""

from __future__ import annotations

import logging
from typing import Sequence

from ..assign import Assignment
from ..core import Instance, Job
from .entropy import weigh
from .midi import Score, write_midi
from .segment import LBDMConfig, Phrase, identify_phrases

log = logging.getLogger(__name__)


def phrase_job_id(phrase: Phrase) -> str:
    return f"t{phrase.track}:m{phrase.start_measure}-{phrase.end_measure}"


def segment_score(
    score: Score, k_max: int = 4, epsilon: float | None = None, config: LBDMConfig = LBDMConfig()
) -> list[Phrase]:
    """Weighted phrases of every track, grouped by track in order."""
    phrases = []
    for t in range(len(score.tracks)):
        phrases.extend(weigh(p) for p in identify_phrases(score, t, k_max, epsilon, config))
    return phrases


def build_instance(score: Score, phrases: Sequence[Phrase], machines: int) -> Instance:
    """One job per phrase, spanning its measures as ``[start, end + 1)``."""
    if machines < 1:
        raise ValueError(f"need at least one target track, got {machines}")
    if not phrases:
        log.warning("no phrases: the scheduling instance is empty")
    jobs = tuple(
        Job(phrase_job_id(p), p.start_measure, p.end_measure + 1, p.weight) for p in phrases
    )
    return Instance(jobs=jobs, machines=machines, horizon=max(score.n_measures, 1))


def render_reduction(
    score: Score,
    phrases: Sequence[Phrase],
    assignment: Assignment,
    machines: int | None = None,
) -> bytes:
    """Format 1 MIDI with a conductor track and one track per machine.

    Every phrase whose job id appears in ``assignment`` is copied verbatim,
    chords included, onto its machine's track.
    """
    machines = machines if machines is not None else assignment.machines_used
    by_id = {phrase_job_id(p): p for p in phrases}
    lanes: list[list[Phrase]] = [[] for _ in range(machines)]
    for job_id, m in assignment.machine_of.items():
        if not 1 <= m <= machines:
            raise ValueError(f"phrase {job_id} assigned to machine {m} outside 1..{machines}")
        lanes[m - 1].append(by_id[job_id])
    tracks = []
    for m, lane in enumerate(lanes, 1):
        lane.sort(key=lambda p: p.start_measure)
        for a, b in zip(lane, lane[1:]):
            if b.start_measure <= a.end_measure:
                raise ValueError(
                    f"machine {m}: {phrase_job_id(a)} and {phrase_job_id(b)} overlap"
                )
        tracks.append(sorted(n for p in lane for n in p.notes))
    # 15 melodic channels, skipping percussion (9)
    channels = [c % 15 + (c % 15 >= 9) for c in range(machines)]
    names = [f"reduced {m}" for m in range(1, machines + 1)]
    return write_midi(tracks, score.ticks_per_quarter, score.time_signatures, score.tempo, channels, names)
