"""Write tests/data/frere_jacques_round.mid, a 4-voice round of the traditional tune.

Each voice sings the 8-measure tune twice, entering two measures after the
previous one, an octave apart where it keeps the voices readable.
"""

from pathlib import Path

from ofisp.music import NoteEvent, write_midi

TPQ = 480
Q, E, H = TPQ, TPQ // 2, 2 * TPQ

# (pitch, length) for one pass of the tune
TUNE = (
    [(60, Q), (62, Q), (64, Q), (60, Q)] * 2
    + [(64, Q), (65, Q), (67, H)] * 2
    + [(67, E), (69, E), (67, E), (65, E), (64, Q), (60, Q)] * 2
    + [(60, Q), (55, Q), (60, H)] * 2
)
VOICES = [(+12, 96), (0, 84), (-12, 80), (-24, 76)]  # (transpose, velocity)
MEASURE = 4 * TPQ


def voice(entry_measure: int, transpose: int, velocity: int, track: int, passes: int = 2):
    notes = []
    t = entry_measure * MEASURE
    for _ in range(passes):
        for pitch, length in TUNE:
            # slightly detached articulation
            notes.append(NoteEvent(t, length - TPQ // 16, pitch + transpose, velocity, track, track))
            t += length
    return notes


def build() -> bytes:
    tracks = [voice(2 * v, tr, vel, v + 1) for v, (tr, vel) in enumerate(VOICES)]
    names = ["voice 1", "voice 2", "voice 3", "voice 4"]
    return write_midi(tracks, TPQ, [(0, 4, 4)], 500_000, names=names)


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "tests" / "data" / "frere_jacques_round.mid"
    out.write_bytes(build())
    print(f"wrote {out}")
