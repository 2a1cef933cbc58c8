"""Standard MIDI File reading and writing, format 0 and 1.

Only what the reduction pipeline needs is kept: notes, time signatures and
tempo. Measures are derived from time signatures and ticks alone.
"""

from __future__ import annotations

import bisect
import struct
import warnings
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Sequence


class MidiError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class NoteEvent:
    onset: int
    duration: int
    pitch: int
    velocity: int = 64
    track: int = 0
    channel: int = 0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"note duration must be positive, got {self.duration}")
        if not 0 <= self.pitch <= 127 or not 0 <= self.velocity <= 127:
            raise ValueError("pitch and velocity must lie in 0..127")

    @property
    def end(self) -> int:
        return self.onset + self.duration


@dataclass
class Score:
    ticks_per_quarter: int
    time_signatures: list[tuple[int, int, int]] = field(default_factory=list)
    tracks: list[list[NoteEvent]] = field(default_factory=list)
    tempo: int = 500_000  # microseconds per quarter, first tempo event only
    track_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.time_signatures or self.time_signatures[0][0] > 0:
            self.time_signatures = [(0, 4, 4)] + list(self.time_signatures)
        self.time_signatures = sorted(self.time_signatures)

    @property
    def end_tick(self) -> int:
        return max((n.end for t in self.tracks for n in t), default=0)

    @property
    def measure_boundaries(self) -> list[int]:
        """Tick offsets of measure starts, closed by the end of the last measure.

        A time signature change that falls inside a measure starts a new one.
        """
        sigs = self.time_signatures
        end = max(self.end_tick, 1)
        bounds = [0]
        s = 0
        while bounds[-1] < end:
            cur = bounds[-1]
            while s + 1 < len(sigs) and sigs[s + 1][0] <= cur:
                s += 1
            _, num, den = sigs[s]
            nxt = cur + self.ticks_per_quarter * 4 * num // den
            if s + 1 < len(sigs) and sigs[s + 1][0] < nxt:
                nxt = sigs[s + 1][0]
            bounds.append(nxt)
        return bounds

    @property
    def n_measures(self) -> int:
        return len(self.measure_boundaries) - 1

    def measure_of(self, tick: int, bounds: Sequence[int] | None = None) -> int:
        bounds = bounds if bounds is not None else self.measure_boundaries
        return bisect.bisect_right(bounds, tick) - 1


# -- reading ------------------------------------------------------------------


def _read_varlen(data: bytes, pos: int) -> tuple[int, int]:
    value = 0
    for _ in range(4):
        if pos >= len(data):
            raise MidiError("truncated variable-length quantity")
        b = data[pos]
        pos += 1
        value = (value << 7) | (b & 0x7F)
        if not b & 0x80:
            return value, pos
    raise MidiError("variable-length quantity longer than 4 bytes")


_DATA_LEN = {0x80: 2, 0x90: 2, 0xA0: 2, 0xB0: 2, 0xC0: 1, 0xD0: 1, 0xE0: 2}


def _parse_track(data: bytes):
    """Yield ``(tick, kind, payload)`` with kind in note_on/note_off/meta."""
    pos, tick, status = 0, 0, None
    while pos < len(data):
        delta, pos = _read_varlen(data, pos)
        tick += delta
        if pos >= len(data):
            raise MidiError("truncated event")
        b = data[pos]
        if b == 0xFF:
            if pos + 2 > len(data):
                raise MidiError("truncated meta event")
            mtype = data[pos + 1]
            length, pos = _read_varlen(data, pos + 2)
            payload = data[pos:pos + length]
            if len(payload) < length:
                raise MidiError("truncated meta event")
            pos += length
            yield tick, "meta", (mtype, payload)
            if mtype == 0x2F:
                return
            continue
        if b in (0xF0, 0xF7):
            length, pos = _read_varlen(data, pos + 1)
            pos += length
            continue
        if b & 0x80:
            status = b
            pos += 1
        elif status is None:
            raise MidiError("running status without a previous status byte")
        kind = status & 0xF0
        n = _DATA_LEN.get(kind)
        if n is None:
            raise MidiError(f"unsupported status byte {status:#x}")
        args = data[pos:pos + n]
        if len(args) < n:
            raise MidiError("truncated channel event")
        pos += n
        channel = status & 0x0F
        if kind == 0x90 and args[1] > 0:
            yield tick, "note_on", (channel, args[0], args[1])
        elif kind in (0x80, 0x90):
            yield tick, "note_off", (channel, args[0], 0)


def parse_midi(data: bytes) -> Score:
    """Parse SMF bytes into a :class:`Score`.

    Note-ons are paired first-in first-out per channel and pitch; a note-on
    with velocity 0 is a note-off. Format 0 files are split into one track per
    channel. Notes left sounding at the end of a track are dropped with a
    warning.
    """
    if len(data) < 14 or data[:4] != b"MThd":
        raise MidiError("missing MThd header")
    hlen, fmt, ntrks, division = struct.unpack(">IHHH", data[4:14])
    if hlen < 6:
        raise MidiError("malformed header length")
    if fmt == 2:
        raise MidiError("format 2 MIDI files are not supported")
    if fmt not in (0, 1):
        raise MidiError(f"unknown MIDI format {fmt}")
    if division & 0x8000:
        raise MidiError("SMPTE time division is not supported")
    pos = 8 + hlen
    raw_tracks = []
    while pos < len(data) and len(raw_tracks) < ntrks:
        if pos + 8 > len(data):
            raise MidiError("truncated chunk header")
        ctype = data[pos:pos + 4]
        (clen,) = struct.unpack(">I", data[pos + 4:pos + 8])
        body = data[pos + 8:pos + 8 + clen]
        if len(body) < clen:
            raise MidiError("truncated track chunk")
        pos += 8 + clen
        if ctype == b"MTrk":
            raw_tracks.append(body)
    if len(raw_tracks) < ntrks:
        raise MidiError(f"header announces {ntrks} tracks, found {len(raw_tracks)}")

    sigs: list[tuple[int, int, int]] = []
    tempo = None
    per_track: list[list[NoteEvent]] = []
    names: list[str] = []
    for t, body in enumerate(raw_tracks):
        sounding: dict[tuple[int, int], deque] = defaultdict(deque)
        notes: list[NoteEvent] = []
        name = ""
        for tick, kind, payload in _parse_track(body):
            if kind == "meta":
                mtype, p = payload
                if mtype == 0x58 and len(p) >= 2:
                    sigs.append((tick, p[0], 2 ** p[1]))
                elif mtype == 0x51 and len(p) == 3 and tempo is None:
                    tempo = int.from_bytes(p, "big")
                elif mtype == 0x03:
                    name = p.decode("latin-1")
                continue
            ch, pitch, vel = payload
            if kind == "note_on":
                sounding[ch, pitch].append((tick, vel))
            elif sounding[ch, pitch]:
                start, v = sounding[ch, pitch].popleft()
                if tick > start:
                    notes.append(NoteEvent(start, tick - start, pitch, v, t, ch))
        leftover = sum(len(q) for q in sounding.values())
        if leftover:
            warnings.warn(f"track {t}: dropped {leftover} unmatched note-on event(s)")
        notes.sort()
        per_track.append(notes)
        names.append(name)

    if fmt == 0:
        by_channel: dict[int, list[NoteEvent]] = defaultdict(list)
        for n in per_track[0] if per_track else []:
            by_channel[n.channel].append(n)
        per_track = []
        names = []
        for t, ch in enumerate(sorted(by_channel)):
            per_track.append([NoteEvent(n.onset, n.duration, n.pitch, n.velocity, t, n.channel) for n in by_channel[ch]])
            names.append(f"channel {ch}")

    # conflicting signatures at one tick: the last one read wins
    dedup = {tick: (tick, num, den) for tick, num, den in sorted(sigs, key=lambda s: s[0])}
    return Score(
        ticks_per_quarter=division,
        time_signatures=sorted(dedup.values()),
        tracks=per_track,
        tempo=tempo or 500_000,
        track_names=names,
    )


def read_midi(path) -> Score:
    with open(path, "rb") as fh:
        return parse_midi(fh.read())


# -- writing ------------------------------------------------------------------


def _varlen(value: int) -> bytes:
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


def _chunk(events: list[tuple[int, int, bytes]]) -> bytes:
    """Encode ``(tick, order, message)`` events; ``order`` breaks tick ties."""
    body = bytearray()
    last = 0
    for tick, _, msg in sorted(events, key=lambda e: (e[0], e[1])):
        body += _varlen(tick - last) + msg
        last = tick
    body += _varlen(0) + b"\xff\x2f\x00"
    return b"MTrk" + struct.pack(">I", len(body)) + bytes(body)


def _log2_int(den: int) -> int:
    if den <= 0 or den & (den - 1):
        raise MidiError(f"time signature denominator {den} is not a power of two")
    return den.bit_length() - 1


def write_midi(
    tracks: Sequence[Sequence[NoteEvent]],
    ticks_per_quarter: int,
    time_signatures: Sequence[tuple[int, int, int]] = ((0, 4, 4),),
    tempo: int = 500_000,
    channels: Sequence[int] | None = None,
    names: Sequence[str] | None = None,
) -> bytes:
    """Format 1 file: a conductor track followed by one track per note list.

    Notes in output track ``t`` use ``channels[t]`` when given, otherwise
    their own channel.
    """
    conductor = [(0, 0, b"\xff\x51\x03" + tempo.to_bytes(3, "big"))]
    for tick, num, den in time_signatures:
        conductor.append((tick, 1, bytes([0xFF, 0x58, 0x04, num, _log2_int(den), 24, 8])))
    chunks = [_chunk(conductor)]
    for t, notes in enumerate(tracks):
        events = []
        if names is not None:
            label = names[t].encode("latin-1", "replace")
            events.append((0, -1, b"\xff\x03" + _varlen(len(label)) + label))
        for n in notes:
            ch = channels[t] if channels is not None else n.channel
            # note-offs first at equal ticks so re-parsing pairs correctly
            events.append((n.onset, 1, bytes([0x90 | ch, n.pitch, max(n.velocity, 1)])))
            events.append((n.end, 0, bytes([0x80 | ch, n.pitch, 0])))
        chunks.append(_chunk(events))
    header = b"MThd" + struct.pack(">IHHH", 6, 1, len(chunks), ticks_per_quarter)
    return header + b"".join(chunks)
