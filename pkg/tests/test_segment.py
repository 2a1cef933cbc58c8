import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ofisp.music import (
    NoteEvent,
    Phrase,
    Score,
    boundary_profile,
    collapse_chords,
    find_peaks,
    find_phrases,
    identify_phrases,
    ioi_entropy,
    pitch_entropy,
    read_midi,
    shannon_entropy,
    threshold_search,
    weigh,
)
from ofisp.music.segment import degree_of_change, phrase_spans

T = 480

# equal pitches, onsets 0 1 2 4 5 6 (beats), every note one beat long:
# the IOI sequence is 1 1 2 1 1 and the only rest follows the third note
SIX = [NoteEvent(o * T, T, 60) for o in (0, 1, 2, 4, 5, 6)]


def test_degree_of_change():
    assert degree_of_change(1, 3) == 0.5
    assert degree_of_change(0, 0) == 0.0
    assert degree_of_change(2, 2) == 0.0


def test_profile_hand_computed():
    # IOI strengths 0, 1/3, 4/3, 1/3, 0 normalise to 0, .25, 1, .25, 0 (weight .5);
    # the single rest gives 1 at index 2 (weight .25); pitch intervals are all 0
    bs = boundary_profile(SIX)
    assert np.allclose(bs, [0, 0.125, 0.75, 0.125, 0])
    assert find_peaks(bs, 0.0) == [2]


def test_profile_short_input():
    assert len(boundary_profile(SIX[:1])) == 0
    assert len(boundary_profile(SIX[:2])) == 1


def test_collapse_keeps_top_note():
    notes = [NoteEvent(0, 10, 60), NoteEvent(0, 10, 67), NoteEvent(10, 5, 55)]
    assert [n.pitch for n in collapse_chords(notes)] == [67, 55]


@pytest.mark.parametrize(
    "bs, t, peaks",
    [
        ([0, 1, 0], 0.0, [1]),
        ([0, 1, 0], 1.0, []),  # strictly above the threshold
        ([0, 1, 1, 0], 0.0, [1]),  # plateau counted once
        ([3, 1, 2], 0.0, [0, 2]),  # ends count
        ([1, 2, 2, 3], 0.0, [3]),
        ([5, 5, 5], 0.0, [0]),
        ([], 0.0, []),
    ],
)
def test_find_peaks(bs, t, peaks):
    assert find_peaks(bs, t) == peaks


def test_phrase_spans():
    assert phrase_spans([3, 5], 0, 9) == [(0, 3), (4, 5), (6, 9)]
    assert phrase_spans([9, 3, 3], 0, 9) == [(0, 3), (4, 9)]
    assert phrase_spans([], 2, 4) == [(2, 4)]


def test_find_phrases_cuts_at_measure_of_peak():
    # one note per beat over four 4/4 measures
    notes = [NoteEvent(b * T, T, 60 + b % 5) for b in range(16)]
    score = Score(T, tracks=[notes])
    ps = find_phrases([5], score, 0)  # note 5 lies in measure 1
    assert [(p.start_measure, p.end_measure) for p in ps] == [(0, 1), (2, 3)]
    assert sum(len(p.notes) for p in ps) == 16


def test_find_phrases_drops_empty_spans():
    notes = [NoteEvent(0, T, 60), NoteEvent(3 * 4 * T, T, 62)]
    score = Score(T, tracks=[notes])
    ps = find_phrases([0], score, 0)
    assert [(p.start_measure, p.end_measure) for p in ps] == [(0, 0), (1, 3)]
    assert [len(p.notes) for p in ps] == [1, 1]


def _measure_lengths(measure_of):
    last = int(measure_of[-1]) + 1

    def lengths(peaks):
        return [b - a + 1 for a, b in phrase_spans([measure_of[p] for p in peaks], 0, last)]

    return lengths


def test_threshold_search_grows_budget():
    res = threshold_search(np.array([0.2, 0.9, 0.1]), lambda peaks: [3], k_max=1)
    assert res.k_max == 3


def test_threshold_search_keeps_highest_working_threshold():
    # intervals fall in measures 0 0 1 1 2 2 3 3; last phrase runs to measure 4
    bs = np.array([0.1, 0.9, 0.2, 0.5, 0.1, 0.8, 0.3, 0.4])
    meas = [0, 0, 1, 1, 2, 2, 3, 3]
    res = threshold_search(bs, _measure_lengths(meas), k_max=3)
    assert res.k_max == 3
    assert max(_measure_lengths(meas)(res.peaks)) <= 3
    # a budget of 3 measures is met by the two strongest peaks alone
    assert res.peaks == [1, 5]


def test_threshold_search_rejects_bad_arguments():
    with pytest.raises(ValueError):
        threshold_search([0.1, 0.2], lambda p: [1], k_max=0)
    with pytest.raises(ValueError):
        threshold_search([0.1, 0.2], lambda p: [1], epsilon=0.0)
    assert threshold_search([], lambda p: [1]).peaks == []


@given(
    st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=40),
    st.lists(st.booleans(), min_size=40, max_size=40),
    st.integers(1, 6),
)
def test_threshold_search_bound_holds(bs, steps, k_max):
    meas = np.cumsum([0] + steps[: len(bs) - 1]).tolist()
    lengths = _measure_lengths(meas)
    res = threshold_search(bs, lengths, k_max)
    assert res.k_max >= k_max
    assert max(lengths(res.peaks)) <= res.k_max
    assert threshold_search(bs, lengths, k_max) == res


def test_identify_phrases_on_fixture(round_midi):
    score = read_midi(round_midi)
    for t in range(1, 5):
        ps = identify_phrases(score, t, k_max=4)
        assert ps and all(p.length <= 4 for p in ps)
        assert sum(len(p.notes) for p in ps) == 64


def test_round_voices_segment_alike(round_midi):
    # every voice sings the same tune transposed, two measures later
    score = read_midi(round_midi)
    shapes = []
    for v, t in enumerate(range(1, 5)):
        ps = [weigh(p) for p in identify_phrases(score, t)]
        shapes.append([(p.start_measure - 2 * v, p.end_measure - 2 * v, round(p.weight, 12)) for p in ps])
    assert all(s == shapes[0] for s in shapes)


# -- entropy ------------------------------------------------------------------


def test_entropy_single_symbol():
    assert shannon_entropy("aaaa") == 0.0
    assert shannon_entropy([]) == 0.0


@pytest.mark.parametrize("k", [2, 3, 4, 5, 8, 13])
def test_entropy_equiprobable(k):
    assert shannon_entropy(list(range(k)) * 3) == pytest.approx(math.log2(k), abs=1e-12)


def test_entropy_aabc():
    assert shannon_entropy("AABC") == pytest.approx(1.5, abs=1e-12)


def test_phrase_entropies():
    # chord at 0 collapses to 67; pitches 67 62 62 64 -> {2/4, 1/4, 1/4} = 1.5 bits
    notes = (
        NoteEvent(0, T, 60), NoteEvent(0, T, 67),
        NoteEvent(T, T, 62), NoteEvent(2 * T, T, 62), NoteEvent(4 * T, T, 64),
    )
    p = Phrase(0, 0, 1, notes)
    assert pitch_entropy(p) == pytest.approx(1.5)
    # onset gaps T, T, 2T -> 2/3, 1/3
    expected_ioi = -(2 / 3) * math.log2(2 / 3) - (1 / 3) * math.log2(1 / 3)
    assert ioi_entropy(p) == pytest.approx(expected_ioi)
    w = weigh(p)
    assert w.weight == pytest.approx(1.5 + expected_ioi)
    assert (w.pitch_entropy, w.ioi_entropy) == (pitch_entropy(p), ioi_entropy(p))


def test_entropy_of_empty_phrase():
    with pytest.raises(ValueError):
        pitch_entropy(Phrase(0, 0, 0))
    with pytest.raises(ValueError):
        ioi_entropy(Phrase(0, 0, 0))
