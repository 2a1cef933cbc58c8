"""Reduce the bundled four-voice round to a chosen number of tracks and summarise the result."""

import argparse
import json
import subprocess
import sys
from pathlib import Path

from ofisp.music import read_midi

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--machines", type=int, default=2)
    ap.add_argument("--out", default="reduced.mid")
    ap.add_argument("--midi", default=str(ROOT / "tests" / "data" / "frere_jacques_round.mid"))
    args, extra = ap.parse_known_args()

    cmd = [sys.executable, "-m", "ofisp.cli", "reduce", args.midi, "--machines", str(args.machines),
           "--out", args.out, *extra]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode == 2:
        sys.exit(proc.stderr)
    rep = json.loads(proc.stdout)
    sol = rep["solution"]
    print(f"phrases {rep['phrases']}, variables {rep['instance']['variables']['total']}, "
          f"solve {rep['timings']['solve_s']:.2f}s")
    if sol is None:
        print("no feasible sample")
        return
    print(f"kept {len(sol['selection'])} phrases, weight {sol['weight']:.3f}, "
          f"idle slots {sol['soft_violations'] - sol['hard_violations']}")
    score = read_midi(args.out)
    for name, notes in zip(score.track_names[1:], score.tracks[1:]):
        print(f"  {name}: {len(notes)} notes")


if __name__ == "__main__":
    main()
