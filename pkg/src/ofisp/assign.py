"""Greedy interval partitioning of selected jobs onto machines."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .core import Job


@dataclass(frozen=True)
class Assignment:
    machine_of: Mapping[str, int] = field(default_factory=dict)
    machines_used: int = 0

    def jobs_on(self, machine: int) -> list[str]:
        return [j for j, m in self.machine_of.items() if m == machine]


def greedy_assign(jobs: Iterable[Job]) -> Assignment:
    """Place jobs by start time on the lowest-numbered free machine.

    A machine is free for a job when its last job ends at or before the job's
    start. Uses as many machines as the maximum overlap depth.
    """
    order = sorted(jobs, key=lambda j: (j.start, j.end, j.id))
    busy: list[tuple[int, int]] = []  # (end, machine)
    free: list[int] = []
    opened = 0
    machine_of: dict[str, int] = {}
    for job in order:
        while busy and busy[0][0] <= job.start:
            heapq.heappush(free, heapq.heappop(busy)[1])
        if free:
            m = heapq.heappop(free)
        else:
            opened += 1
            m = opened
        machine_of[job.id] = m
        heapq.heappush(busy, (job.end, m))
    return Assignment(machine_of, opened)


def depth(jobs: Iterable[Job]) -> int:
    """Maximum number of jobs covering one slot."""
    events = []
    for j in jobs:
        events.append((j.start, 1))
        events.append((j.end, -1))
    # ends sort before starts at equal times
    events.sort()
    cur = best = 0
    for _, d in events:
        cur += d
        best = max(best, cur)
    return best


def assignment_from_machines(ids: list[str], machine_of: Mapping[int, tuple[int, ...]], chosen) -> Assignment:
    """Assignment for machine-indexed solutions; multi-assigned jobs are skipped."""
    out = {}
    for i in chosen:
        ms = machine_of.get(i, ())
        if len(ms) == 1:
            out[ids[i]] = ms[0]
    return Assignment(out, max(out.values(), default=0))
