"""Scheduling instances, job selections and feasibility evaluation.

Time is discrete. A job occupies the half-open interval ``[start, end)`` and
the horizon ``K`` is split into unit slots ``[k, k+1)`` for ``k = 0..K-1``.
Two jobs with ``a.end == b.start`` therefore never compete for a slot and can
run back to back on one machine.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np


@dataclass(frozen=True)
class Job:
    id: str
    start: int
    end: int
    weight: float = 0.0

    @property
    def duration(self) -> int:
        return self.end - self.start

    def covers(self, k: int) -> bool:
        return self.start <= k < self.end

    def overlaps(self, other: "Job") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class Instance:
    """A set of fixed-interval jobs to be scheduled on ``machines`` machines.

    ``eligibility`` maps a job id to the 1-based machine indices allowed to
    run it. When it is ``None`` all machines are identical.
    """

    jobs: tuple[Job, ...]
    machines: int
    horizon: int
    exclusion_pairs: tuple[tuple[str, str], ...] = ()
    eligibility: Mapping[str, frozenset[int]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        pairs = tuple(sorted(tuple(sorted((str(a), str(b)))) for a, b in self.exclusion_pairs))
        object.__setattr__(self, "exclusion_pairs", pairs)
        if self.eligibility is not None:
            elig = {str(k): frozenset(int(m) for m in v) for k, v in self.eligibility.items()}
            object.__setattr__(self, "eligibility", elig)

    @property
    def n_jobs(self) -> int:
        return len(self.jobs)

    @property
    def is_empty(self) -> bool:
        return not self.jobs

    def index_of(self, job_id: str) -> int:
        return self._index[str(job_id)]

    @property
    def _index(self) -> dict[str, int]:
        # cached lazily; frozen dataclass so go through __dict__
        idx = self.__dict__.get("_index_cache")
        if idx is None:
            idx = {job.id: i for i, job in enumerate(self.jobs)}
            self.__dict__["_index_cache"] = idx
        return idx

    def coverage(self) -> np.ndarray:
        """Number of jobs covering each slot, length ``horizon``."""
        diff = np.zeros(self.horizon + 1, dtype=np.int64)
        for job in self.jobs:
            diff[max(job.start, 0)] += 1
            diff[min(job.end, self.horizon)] -= 1
        return np.cumsum(diff)[: self.horizon]

    def covering(self, k: int) -> list[int]:
        return [i for i, job in enumerate(self.jobs) if job.covers(k)]

    def eligible(self, i: int, machine: int) -> bool:
        if self.eligibility is None:
            return True
        allowed = self.eligibility.get(self.jobs[i].id)
        return allowed is None or machine in allowed


@dataclass(frozen=True)
class Selection:
    """Chosen jobs, as positions into ``Instance.jobs``.

    ``machine_of`` is only filled for machine-indexed encodings; a job listed
    with more than one machine is an infeasible multi-assignment.
    """

    chosen: tuple[int, ...] = ()
    machine_of: Mapping[int, tuple[int, ...]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "chosen", tuple(sorted(set(int(i) for i in self.chosen))))

    def __contains__(self, i: int) -> bool:
        return i in self.chosen

    def __len__(self) -> int:
        return len(self.chosen)

    def ids(self, inst: Instance) -> list[str]:
        return [inst.jobs[i].id for i in self.chosen]

    @classmethod
    def from_ids(cls, inst: Instance, ids: Iterable[str]) -> "Selection":
        return cls(tuple(inst.index_of(j) for j in ids))


@dataclass(frozen=True)
class ViolationReport:
    occupancy: tuple[int, ...]
    hard_violations: int
    soft_violations: int
    total_weight: float
    exclusion_violations: int = 0
    assignment_violations: int = 0

    @property
    def feasible(self) -> bool:
        return (
            self.hard_violations == 0
            and self.exclusion_violations == 0
            and self.assignment_violations == 0
        )

    @property
    def idle_slots(self) -> int:
        return self.soft_violations - self.hard_violations


class InstanceError(ValueError):
    pass


def validate_instance(inst: Instance) -> list[str]:
    """Return every invariant breach of ``inst``; an empty list means ok."""
    defects = []
    if inst.machines < 1:
        defects.append(f"machines must be positive, got {inst.machines}")
    if inst.horizon < 1:
        defects.append(f"horizon must be positive, got {inst.horizon}")
    seen = set()
    for job in inst.jobs:
        if job.id in seen:
            defects.append(f"duplicate job id {job.id!r}")
        seen.add(job.id)
        if job.start >= job.end:
            defects.append(f"job {job.id!r}: empty interval [{job.start}, {job.end})")
        if job.start < 0 or job.end > inst.horizon:
            defects.append(f"job {job.id!r}: interval [{job.start}, {job.end}) outside horizon [0, {inst.horizon}]")
        if job.weight < 0:
            defects.append(f"job {job.id!r}: negative weight {job.weight}")
    for a, b in inst.exclusion_pairs:
        if a == b:
            defects.append(f"exclusion pair ({a!r}, {b!r}) repeats one job")
        for j in (a, b):
            if j not in seen:
                defects.append(f"exclusion pair references unknown job {j!r}")
    if inst.eligibility is not None:
        for j, allowed in inst.eligibility.items():
            if j not in seen:
                defects.append(f"eligibility references unknown job {j!r}")
            if not allowed:
                defects.append(f"job {j!r}: empty eligibility set")
            bad = [m for m in allowed if not 1 <= m <= inst.machines]
            if bad:
                defects.append(f"job {j!r}: eligibility machines {sorted(bad)} out of range 1..{inst.machines}")
    return defects


def check_instance(inst: Instance) -> None:
    defects = validate_instance(inst)
    if defects:
        raise InstanceError("; ".join(defects))


def _assigned_counts(inst: Instance, sel: Selection) -> dict[int, int]:
    if sel.machine_of is None:
        return {i: 1 for i in sel.chosen}
    return {i: max(1, len(sel.machine_of.get(i, ()))) for i in sel.chosen}


def occupancy(inst: Instance, sel: Selection, k: int) -> int:
    """Chosen jobs (counting machine multi-assignments) running in slot ``k``."""
    if not 0 <= k <= inst.horizon:
        raise IndexError(f"time point {k} outside 0..{inst.horizon}")
    counts = _assigned_counts(inst, sel)
    return sum(c for i, c in counts.items() if inst.jobs[i].covers(k))


def occupancy_profile(inst: Instance, sel: Selection) -> np.ndarray:
    diff = np.zeros(inst.horizon + 1, dtype=np.int64)
    for i, c in _assigned_counts(inst, sel).items():
        job = inst.jobs[i]
        diff[job.start] += c
        diff[job.end] -= c
    return np.cumsum(diff)[: inst.horizon]


def evaluate(inst: Instance, sel: Selection) -> ViolationReport:
    occ = occupancy_profile(inst, sel)
    M = inst.machines
    chosen = set(sel.chosen)
    excl = sum(
        1 for a, b in inst.exclusion_pairs if inst.index_of(a) in chosen and inst.index_of(b) in chosen
    )
    bad_assign = 0
    if sel.machine_of is not None:
        per_machine: dict[int, list[int]] = {}
        for i in sel.chosen:
            ms = sel.machine_of.get(i, ())
            if len(ms) > 1:
                bad_assign += 1
            for m in ms:
                if not inst.eligible(i, m):
                    bad_assign += 1
                per_machine.setdefault(m, []).append(i)
        for jobs in per_machine.values():
            for a in range(len(jobs)):
                for b in range(a + 1, len(jobs)):
                    if inst.jobs[jobs[a]].overlaps(inst.jobs[jobs[b]]):
                        bad_assign += 1
    return ViolationReport(
        occupancy=tuple(int(o) for o in occ),
        hard_violations=int(np.count_nonzero(occ > M)),
        soft_violations=int(np.count_nonzero(occ != M)),
        total_weight=float(sum(inst.jobs[i].weight for i in sel.chosen)),
        exclusion_violations=excl,
        assignment_violations=bad_assign,
    )


# -- serialization ---------------------------------------------------------


def instance_to_dict(inst: Instance) -> dict:
    doc = {
        "machines": inst.machines,
        "horizon": inst.horizon,
        "jobs": [{"id": j.id, "start": j.start, "end": j.end, "weight": j.weight} for j in inst.jobs],
    }
    if inst.exclusion_pairs:
        doc["exclusions"] = [list(p) for p in inst.exclusion_pairs]
    if inst.eligibility is not None:
        doc["eligibility"] = {k: sorted(v) for k, v in inst.eligibility.items()}
    return doc


def instance_from_dict(doc: Mapping) -> Instance:
    try:
        jobs = tuple(
            Job(str(j["id"]), int(j["start"]), int(j["end"]), float(j.get("weight", 0.0)))
            for j in doc["jobs"]
        )
        return Instance(
            jobs=jobs,
            machines=int(doc["machines"]),
            horizon=int(doc["horizon"]),
            exclusion_pairs=tuple((str(a), str(b)) for a, b in doc.get("exclusions", ())),
            eligibility=doc.get("eligibility"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"malformed instance document: {exc!r}") from exc


def load_instance(path: str | Path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def save_instance(inst: Instance, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2)
        fh.write("\n")


def fig1_instance() -> Instance:
    """Four-job, one-machine example: the heaviest schedule leaves a gap.

    ``{b1, b3}`` weighs 23 but slot 2 is idle; ``{b1, b2, b4}`` weighs 18 and
    keeps the machine busy the whole time.
    """
    jobs = (
        Job("b1", 0, 2, 5.0),
        Job("b2", 2, 4, 6.0),
        Job("b3", 3, 6, 18.0),
        Job("b4", 4, 6, 7.0),
    )
    return Instance(jobs=jobs, machines=1, horizon=6)


def random_instance(
    rng: np.random.Generator,
    n_jobs: int,
    horizon: int,
    machines: int,
    max_len: int | None = None,
    max_weight: float = 10.0,
    integer_weights: bool = False,
) -> Instance:
    max_len = max_len or horizon
    jobs = []
    for i in range(n_jobs):
        length = int(rng.integers(1, min(max_len, horizon) + 1))
        start = int(rng.integers(0, horizon - length + 1))
        w = rng.integers(0, int(max_weight) + 1) if integer_weights else rng.uniform(0, max_weight)
        jobs.append(Job(f"j{i}", start, start + length, float(w)))
    return Instance(jobs=tuple(jobs), machines=machines, horizon=horizon)

