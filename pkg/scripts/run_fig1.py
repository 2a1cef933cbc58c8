"""Solve the four-job example with and without the idle-time term and print both schedules."""

import argparse
from dataclasses import replace

from ofisp.cli import solve_instance
from ofisp.core import fig1_instance
from ofisp.qubo import default_penalties
from ofisp.solver import AnnealSchedule


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reads", type=int, default=1000)
    ap.add_argument("--sweeps", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    inst = fig1_instance()
    base = default_penalties(inst)
    sched = AnnealSchedule(reads=args.reads, sweeps=args.sweeps, seed=args.seed)
    print(f"{'p2':>8}  {'selection':<14} {'weight':>6} {'idle':>4} {'energy':>10}")
    for p2 in (base.p2, 0.0):
        rep, _, _ = solve_instance(inst, replace(base, p2=p2), sched)
        sol = rep["solution"]
        idle = sol["soft_violations"] - sol["hard_violations"]
        print(f"{p2:8.4f}  {','.join(sol['selection']):<14} {sol['weight']:6.1f} {idle:4d} {sol['energy']:10.4f}")


if __name__ == "__main__":
    main()
