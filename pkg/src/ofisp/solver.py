"""Simulated annealing and exhaustive search over QUBO models."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numba as nb
import numpy as np

from .core import Instance, Selection, ViolationReport, evaluate
from .qubo import QuboModel, decode, energies

BRUTE_FORCE_LIMIT = 24

POLICIES = ("min_energy", "max_weight_feasible", "min_soft")


@dataclass(frozen=True)
class AnnealSchedule:
    """Annealing parameters; ``None`` temperatures are derived from the model."""

    reads: int = 1000
    sweeps: int = 1000
    t_init: float | None = None
    t_final: float | None = None
    seed: int = 0
    cooling: str = "geometric"

    def __post_init__(self):
        if self.reads < 1 or self.sweeps < 1:
            raise ValueError("reads and sweeps must be >= 1")
        if self.cooling != "geometric":
            raise ValueError(f"unsupported cooling {self.cooling!r}")
        if self.t_final is not None and self.t_final <= 0:
            raise ValueError("t_final must be positive")
        if self.t_init is not None and self.t_final is not None and self.t_init < self.t_final:
            raise ValueError("t_init must be >= t_final")


@dataclass(frozen=True)
class Sample:
    bits: np.ndarray
    energy: float
    num_occurrences: int


@dataclass(frozen=True)
class SampleSet:
    """Distinct final states, sorted by energy then by bit pattern."""

    states: np.ndarray
    energies: np.ndarray
    counts: np.ndarray

    def __len__(self) -> int:
        return len(self.energies)

    def __iter__(self) -> Iterator[Sample]:
        for s, e, c in zip(self.states, self.energies, self.counts):
            yield Sample(s, float(e), int(c))

    @property
    def first(self) -> Sample:
        return next(iter(self))

    @classmethod
    def from_states(cls, model: QuboModel, states: np.ndarray) -> "SampleSet":
        states = np.asarray(states, dtype=np.int8).reshape(-1, model.n_vars)
        uniq, counts = np.unique(states, axis=0, return_counts=True)
        e = energies(model, uniq)
        # lexsort: last key is primary
        order = np.lexsort(tuple(uniq[:, j] for j in range(uniq.shape[1] - 1, -1, -1)) + (e,))
        return cls(uniq[order], e[order], counts[order])


# -- incremental local fields -------------------------------------------------


@nb.njit(cache=True)
def local_fields(x, lin, indptr, indices, data):
    """``field[v] = lin[v] + sum_u Q[v, u] x[u]``; flipping v changes the energy
    by ``(1 - 2 x[v]) * field[v]``."""
    n = x.shape[0]
    f = lin.copy()
    for v in range(n):
        for p in range(indptr[v], indptr[v + 1]):
            f[v] += data[p] * x[indices[p]]
    return f


@nb.njit(cache=True)
def apply_flip(v, x, field, indptr, indices, data):
    """Flip bit ``v`` in place, update neighbour fields, return the delta."""
    step = 1 - 2 * x[v]
    delta = step * field[v]
    x[v] = 1 - x[v]
    for p in range(indptr[v], indptr[v + 1]):
        field[indices[p]] += data[p] * step
    return delta


@nb.njit(cache=True)
def _anneal(lin, indptr, indices, data, betas, chain_seeds):
    n = lin.shape[0]
    reads = chain_seeds.shape[0]
    out = np.zeros((reads, n), dtype=np.int8)
    order = np.arange(n)
    for r in range(reads):
        np.random.seed(chain_seeds[r])
        x = np.zeros(n, dtype=np.int64)
        for v in range(n):
            x[v] = np.random.randint(0, 2)
        field = local_fields(x, lin, indptr, indices, data)
        for beta in betas:
            for a in range(n - 1, 0, -1):
                b = np.random.randint(0, a + 1)
                tmp = order[a]
                order[a] = order[b]
                order[b] = tmp
            for v in order:
                delta = (1 - 2 * x[v]) * field[v]
                if delta <= 0.0 or np.random.random() < math.exp(-delta * beta):
                    apply_flip(v, x, field, indptr, indices, data)
        for v in range(n):
            out[r, v] = x[v]
    return out


def default_temperatures(model: QuboModel, seed: int = 0) -> tuple[float, float]:
    """Hot start at the largest single-flip delta of a random state."""
    lin, *_ = model.arrays()
    indptr, indices, data = model.adjacency()
    rng = np.random.default_rng([seed, 0xA11EA1])
    x = rng.integers(0, 2, size=model.n_vars).astype(np.int64)
    field = local_fields(x, lin, indptr, indices, data)
    t_init = float(np.max(np.abs(field))) if model.n_vars else 0.0
    if t_init == 0.0:
        t_init = 1.0
    return t_init, 1e-3 * t_init


def resolve_temperatures(model: QuboModel, sched: AnnealSchedule) -> tuple[float, float]:
    t_init, t_final = default_temperatures(model, sched.seed)
    if sched.t_init is not None:
        t_init = sched.t_init
    if sched.t_final is not None:
        t_final = sched.t_final
    elif sched.t_init is not None:
        t_final = 1e-3 * t_init
    if not t_init >= t_final > 0:
        raise ValueError(f"need t_init >= t_final > 0, got {t_init}, {t_final}")
    return t_init, t_final


def temperature_schedule(t_init: float, t_final: float, sweeps: int) -> np.ndarray:
    if sweeps == 1:
        return np.array([t_init])
    return t_init * (t_final / t_init) ** (np.arange(sweeps) / (sweeps - 1))


def simulated_anneal(model: QuboModel, sched: AnnealSchedule | None = None) -> SampleSet:
    """Metropolis single-flip annealing, one independent chain per read.

    Each chain starts from random bits and makes ``sweeps`` passes, each
    visiting every variable once in a fresh random order. Chain ``r`` draws
    from its own stream derived from ``(seed, r)``.
    """
    sched = sched or AnnealSchedule()
    if model.n_vars < 1:
        raise ValueError("cannot anneal a model without variables")
    t_init, t_final = resolve_temperatures(model, sched)
    betas = 1.0 / temperature_schedule(t_init, t_final, sched.sweeps)
    chain_seeds = np.random.SeedSequence(sched.seed).generate_state(sched.reads, dtype=np.uint32)
    lin, *_ = model.arrays()
    indptr, indices, data = model.adjacency()
    states = _anneal(lin, indptr, indices, data, betas, chain_seeds.astype(np.int64))
    return SampleSet.from_states(model, states)


# -- slack-aware descent ------------------------------------------------------


@nb.njit(cache=True)
def _flip_logged(v, x, field, indptr, indices, data, journal, jlen):
    journal[jlen] = v
    return apply_flip(v, x, field, indptr, indices, data), jlen + 1


@nb.njit(cache=True)
def _reopt_group(g, x, field, indptr, indices, data, gptr, gvars, journal, jlen):
    """Set the slack bits of group ``g`` to their best values; return delta."""
    a, b = gptr[g], gptr[g + 1]
    L = b - a
    cur = 0
    for i in range(L):
        if x[gvars[a + i]]:
            cur |= 1 << i
    start = cur
    e = 0.0
    best_e = 0.0
    best = start
    for c in range(1 << L):
        diff = c ^ cur
        for i in range(L):
            if (diff >> i) & 1:
                e += apply_flip(gvars[a + i], x, field, indptr, indices, data)
        cur = c
        if e < best_e - 1e-12:
            best_e = e
            best = c
    # go from the last visited config to the best one, logging net changes
    diff = cur ^ best
    for i in range(L):
        if (diff >> i) & 1:
            apply_flip(gvars[a + i], x, field, indptr, indices, data)
    net = start ^ best
    for i in range(L):
        if (net >> i) & 1:
            journal[jlen] = gvars[a + i]
            jlen += 1
    return best_e, jlen


@nb.njit(cache=True)
def _try_move(move, x, field, indptr, indices, data, gptr, gvars, vgptr, vgroups, journal, tol):
    jlen = 0
    total = 0.0
    for v in move:
        d, jlen = _flip_logged(v, x, field, indptr, indices, data, journal, jlen)
        total += d
    for v in move:
        for p in range(vgptr[v], vgptr[v + 1]):
            d, jlen = _reopt_group(vgroups[p], x, field, indptr, indices, data, gptr, gvars, journal, jlen)
            total += d
    if total < -tol:
        return total
    for k in range(jlen - 1, -1, -1):
        apply_flip(journal[k], x, field, indptr, indices, data)
    return 0.0


@nb.njit(cache=True)
def _polish(states, lin, indptr, indices, data, n_dec, gptr, gvars, vgptr, vgroups, tol, max_passes):
    out = states.copy()
    n = lin.shape[0]
    journal = np.zeros(4 * n + 8, dtype=np.int64)
    single = np.zeros(1, dtype=np.int64)
    pair = np.zeros(2, dtype=np.int64)
    for r in range(states.shape[0]):
        x = states[r].astype(np.int64)
        field = local_fields(x, lin, indptr, indices, data)
        for g in range(gptr.shape[0] - 1):
            _reopt_group(g, x, field, indptr, indices, data, gptr, gvars, journal, 0)
        for _ in range(max_passes):
            improved = False
            for v in range(n_dec):
                single[0] = v
                if _try_move(single, x, field, indptr, indices, data, gptr, gvars, vgptr, vgroups, journal, tol) < 0:
                    improved = True
            # swap a chosen decision for an unchosen neighbouring one
            for u in range(n_dec):
                if x[u] == 0:
                    continue
                for p in range(indptr[u], indptr[u + 1]):
                    v = indices[p]
                    if v >= n_dec or x[v] == 1 or x[u] == 0:
                        continue
                    pair[0] = u
                    pair[1] = v
                    if _try_move(pair, x, field, indptr, indices, data, gptr, gvars, vgptr, vgroups, journal, tol) < 0:
                        improved = True
            if not improved:
                break
        for v in range(n):
            out[r, v] = x[v]
    return out


def _slack_groups(model: QuboModel, indptr: np.ndarray, indices: np.ndarray):
    reg = model.registry
    slots: dict[int, list[int]] = {}
    for b, bit in enumerate(reg.slack):
        slots.setdefault(bit.slot, []).append(reg.n_decision + b)
    groups = [slots[k] for k in sorted(slots)]
    gptr = np.cumsum([0] + [len(g) for g in groups]).astype(np.int64)
    gvars = np.array([v for g in groups for v in g], dtype=np.int64)
    group_of = {v: gi for gi, g in enumerate(groups) for v in g}
    per_var = []
    for v in range(reg.n_decision):
        touched = {group_of[u] for u in indices[indptr[v]:indptr[v + 1]] if u in group_of}
        per_var.append(sorted(touched))
    vgptr = np.cumsum([0] + [len(t) for t in per_var]).astype(np.int64)
    vgroups = np.array([g for t in per_var for g in t], dtype=np.int64)
    return gptr, gvars, vgptr, vgroups


def polish(model: QuboModel, samples: SampleSet, top: int = 64, max_passes: int = 100) -> SampleSet:
    """Descend from the ``top`` lowest-energy samples with slack-aware moves.

    Slack bits stand between single-flip states as barriers of height ``p1``,
    which freezes annealing long before the idle-time term is resolved. Here a
    move flips one decision variable, or swaps a chosen one for an unchosen
    neighbour, and re-optimises the slack bits of every slot it touches; it is
    kept only when the total energy drops. Every returned state has energy no
    higher than the state it started from.
    """
    if len(samples) == 0 or model.registry.n_decision == 0:
        return samples
    lin, *_ = model.arrays()
    indptr, indices, data = model.adjacency()
    gptr, gvars, vgptr, vgroups = _slack_groups(model, indptr, indices)
    scale = 1.0 + float(np.abs(lin).max(initial=0.0) + np.abs(data).max(initial=0.0))
    head = samples.states[:top].astype(np.int64)
    refined = _polish(head, lin, indptr, indices, data, model.registry.n_decision,
                      gptr, gvars, vgptr, vgroups, 1e-9 * scale, max_passes)
    counts = samples.counts[:top]
    states = np.concatenate([np.repeat(refined, counts, axis=0), np.repeat(samples.states[top:], samples.counts[top:], axis=0)])
    return SampleSet.from_states(model, states)


# -- exhaustive oracle ---------------------------------------------------------


@nb.njit(cache=True)
def _gray_search(lin, indptr, indices, data, offset, tol):
    n = lin.shape[0]
    x = np.zeros(n, dtype=np.int64)
    field = lin.copy()
    e = offset
    best_e = e
    best_state = 0
    state = 0
    for step in range(1, 1 << n):
        # bit flipped between consecutive Gray codes
        v = 0
        while not (step >> v) & 1:
            v += 1
        e += apply_flip(v, x, field, indptr, indices, data)
        state ^= 1 << v
        if e < best_e - tol or (e <= best_e + tol and state < best_state):
            best_e = e
            best_state = state
    return best_state


def brute_force(model: QuboModel) -> tuple[np.ndarray, float]:
    """Global minimum by enumeration; ties go to the smallest bit pattern,
    reading variable 0 as the least significant bit."""
    n = model.n_vars
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} variables, model has {n}")
    if n == 0:
        return np.zeros(0, dtype=np.int8), float(model.offset)
    lin, *_ = model.arrays()
    indptr, indices, data = model.adjacency()
    scale = 1.0 + float(np.abs(lin).sum() + np.abs(data).sum() / 2 + abs(model.offset))
    state = _gray_search(lin, indptr, indices, data, float(model.offset), 1e-12 * scale)
    bits = np.array([(state >> v) & 1 for v in range(n)], dtype=np.int8)
    return bits, float(energies(model, bits)[0])


def oracle_sampleset(model: QuboModel) -> SampleSet:
    bits, _ = brute_force(model)
    return SampleSet.from_states(model, bits[None, :])


# -- solution selection --------------------------------------------------------


def select_solution(
    samples: SampleSet, model: QuboModel, inst: Instance, policy: str = "max_weight_feasible"
) -> tuple[Selection, ViolationReport, float] | None:
    """Pick one feasible decoded sample, or ``None`` if none is feasible.

    Samples are visited in energy order. ``min_energy`` takes the first
    feasible one; ``max_weight_feasible`` maximises total weight (fewer soft
    violations, then lower energy break ties); ``min_soft`` minimises soft
    violations with weight as tie-break.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; choose from {POLICIES}")
    best = None
    best_key = None
    for rank, sample in enumerate(samples):
        sel = decode(model, sample.bits)
        report = evaluate(inst, sel)
        if not report.feasible:
            continue
        if policy == "min_energy":
            return sel, report, sample.energy
        if policy == "max_weight_feasible":
            key = (-report.total_weight, report.soft_violations, rank)
        else:
            key = (report.soft_violations, -report.total_weight, rank)
        if best_key is None or key < best_key:
            best_key = key
            best = (sel, report, sample.energy)
    return best
