from .entropy import ioi_entropy, pitch_entropy, shannon_entropy, weigh
from .midi import MidiError, NoteEvent, Score, parse_midi, read_midi, write_midi
from .reduce import build_instance, phrase_job_id, render_reduction, segment_score
from .segment import (
    LBDMConfig,
    Phrase,
    boundary_profile,
    collapse_chords,
    find_peaks,
    find_phrases,
    identify_phrases,
    threshold_search,
)
