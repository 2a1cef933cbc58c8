import logging

import pytest

from ofisp.assign import Assignment, greedy_assign
from ofisp.music import NoteEvent, Phrase, Score, build_instance, parse_midi, phrase_job_id, render_reduction
from ofisp.music import read_midi, segment_score

T = 480


def _score():
    return Score(T, [(0, 3, 4)], [[], [NoteEvent(0, T, 60)], [NoteEvent(0, T, 64)]], tempo=400_000)


def _phrases():
    return [
        Phrase(1, 0, 1, (NoteEvent(0, T, 60, track=1),), weight=1.0),
        Phrase(1, 2, 3, (NoteEvent(6 * T, T, 62, track=1),), weight=2.0),
        Phrase(2, 1, 2, (NoteEvent(3 * T, T, 64, track=2), NoteEvent(3 * T, T, 67, track=2)), weight=3.0),
    ]


def test_job_ids_and_intervals():
    inst = build_instance(_score(), _phrases(), machines=2)
    assert [j.id for j in inst.jobs] == ["t1:m0-1", "t1:m2-3", "t2:m1-2"]
    assert [(j.start, j.end, j.weight) for j in inst.jobs] == [(0, 2, 1.0), (2, 4, 2.0), (1, 3, 3.0)]
    assert inst.machines == 2


def test_build_rejects_zero_machines():
    with pytest.raises(ValueError):
        build_instance(_score(), _phrases(), machines=0)


def test_empty_phrase_list_warns(caplog):
    with caplog.at_level(logging.WARNING):
        inst = build_instance(_score(), [], machines=1)
    assert inst.is_empty
    assert "no phrases" in caplog.text


def test_render_copies_phrases_with_chords():
    phrases = _phrases()
    assignment = Assignment({"t1:m0-1": 1, "t1:m2-3": 1, "t2:m1-2": 2}, 2)
    score = parse_midi(render_reduction(_score(), phrases, assignment))
    assert score.tempo == 400_000
    assert score.time_signatures == [(0, 3, 4)]
    assert score.track_names[1:] == ["reduced 1", "reduced 2"]
    assert [n.pitch for n in score.tracks[1]] == [60, 62]
    assert sorted(n.pitch for n in score.tracks[2]) == [64, 67]
    assert [n.channel for n in score.tracks[2]] == [1, 1]


def test_render_rejects_overlap_and_bad_machine():
    phrases = _phrases()
    with pytest.raises(ValueError, match="overlap"):
        render_reduction(_score(), phrases, Assignment({"t1:m0-1": 1, "t2:m1-2": 1}, 1))
    with pytest.raises(ValueError, match="outside"):
        render_reduction(_score(), phrases, Assignment({"t1:m0-1": 3}, 3), machines=2)


def test_channels_skip_percussion():
    n = 12
    phrases = [Phrase(0, m, m, (NoteEvent(m * 4 * T, T, 60),)) for m in range(n)]
    assignment = Assignment({phrase_job_id(p): i + 1 for i, p in enumerate(phrases)}, n)
    score = parse_midi(render_reduction(Score(T, tracks=[[]]), phrases, assignment))
    channels = [t[0].channel for t in score.tracks[1:]]
    assert channels == [0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12]


def test_fixture_reduction_by_greedy(round_midi):
    score = read_midi(round_midi)
    phrases = segment_score(score)
    assert {p.track for p in phrases} == {1, 2, 3, 4}
    inst = build_instance(score, phrases, machines=4)
    # all phrases together need exactly as many lanes as the round has voices
    assignment = greedy_assign(inst.jobs)
    assert assignment.machines_used == 4
    out = parse_midi(render_reduction(score, phrases, assignment))
    assert sum(len(t) for t in out.tracks) == 4 * 64
