"""Encode and anneal random instances of growing size; print a timing and quality table.

Columns: jobs, slots, variables, encode/anneal/polish seconds, and soft
violations of the min-soft pick before and after polishing.
"""

import argparse
import time

import numpy as np

from ofisp.core import random_instance
from ofisp.qubo import encode
from ofisp.solver import AnnealSchedule, polish, select_solution, simulated_anneal


def soft_of(picked):
    return "-" if picked is None else str(picked[1].soft_violations)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[25, 50, 100, 200, 400, 591])
    ap.add_argument("--machines", type=int, default=2)
    ap.add_argument("--reads", type=int, default=20)
    ap.add_argument("--sweeps", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    # warm the kernels so the first row is not a compile timing
    simulated_anneal(encode(random_instance(rng, 3, 3, 1)), AnnealSchedule(reads=1, sweeps=1))
    print(f"{'N':>5} {'K':>5} {'vars':>6} {'enc_s':>7} {'sa_s':>7} {'pol_s':>7} {'soft':>6} {'soft+pol':>8}")
    for n in args.sizes:
        horizon = max(4, int(n * 276 / 591))
        inst = random_instance(rng, n, horizon, args.machines, max_len=8)
        t0 = time.perf_counter()
        model = encode(inst)
        t1 = time.perf_counter()
        ss = simulated_anneal(model, AnnealSchedule(reads=args.reads, sweeps=args.sweeps, seed=args.seed))
        t2 = time.perf_counter()
        ps = polish(model, ss)
        t3 = time.perf_counter()
        raw = select_solution(ss, model, inst, "min_soft")
        pol = select_solution(ps, model, inst, "min_soft")
        print(f"{n:5d} {horizon:5d} {model.n_vars:6d} {t1 - t0:7.3f} {t2 - t1:7.2f} {t3 - t2:7.2f} "
              f"{soft_of(raw):>6} {soft_of(pol):>8}")


if __name__ == "__main__":
    main()
