"""Quadratic pseudo-Boolean models for minimal-idle interval scheduling.

A :class:`QuboModel` is stored sparse: a linear map, an upper-triangular
quadratic map keyed by ``(u, v)`` with ``u < v`` and a constant offset. Every
model is a minimization; job weights enter with a negative sign.

Variable order is fixed so exports are reproducible: decision variables in
job order (job-major, machine-minor for the machine-indexed encoding), then
slack bits slot-major, bit-minor.
"""

from __future__ import annotations

import io
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Hashable, Iterable, Sequence

import numpy as np

from .core import Instance, InstanceError, Selection


@dataclass(frozen=True)
class SlackBit:
    slot: int
    coefficient: int


@dataclass(frozen=True)
class VariableRegistry:
    """Role of every variable. Decisions come first, slack bits after."""

    decision: tuple[Hashable, ...] = ()
    slack: tuple[SlackBit, ...] = ()
    machine_indexed: bool = False

    @property
    def n_decision(self) -> int:
        return len(self.decision)

    @property
    def n_slack(self) -> int:
        return len(self.slack)

    @property
    def n_vars(self) -> int:
        return self.n_decision + self.n_slack

    def slack_for_slot(self, k: int) -> list[tuple[int, int]]:
        """``(variable index, coefficient)`` pairs of slot ``k``."""
        base = self.n_decision
        return [(base + i, b.coefficient) for i, b in enumerate(self.slack) if b.slot == k]

    def role(self, v: int) -> str:
        if 0 <= v < self.n_decision:
            return "decision"
        if self.n_decision <= v < self.n_vars:
            return "slack"
        raise IndexError(v)


@dataclass(frozen=True)
class PenaltyConfig:
    p1: float
    p2: float
    p_pair: float
    p_elig: float

    def __post_init__(self):
        # p2 == 0 switches the idle-time term off and is allowed
        if not self.p1 > self.p2 >= 0:
            raise ValueError(f"penalties need p1 > p2 >= 0, got p1={self.p1}, p2={self.p2}")
        if self.p_pair <= 0 or self.p_elig <= 0:
            raise ValueError("p_pair and p_elig must be positive")


@dataclass(frozen=True)
class QuboModel:
    n_vars: int
    linear: dict[int, float] = field(default_factory=dict)
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0
    registry: VariableRegistry = field(default_factory=VariableRegistry)

    @property
    def n_terms(self) -> int:
        return len(self.linear) + len(self.quadratic)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Dense linear vector plus quadratic terms as ``(rows, cols, values)``."""
        lin = np.zeros(self.n_vars)
        for v, a in self.linear.items():
            lin[v] = a
        if self.quadratic:
            keys = np.array(list(self.quadratic.keys()), dtype=np.int64)
            vals = np.array(list(self.quadratic.values()), dtype=np.float64)
            return lin, keys[:, 0].copy(), keys[:, 1].copy(), vals
        empty = np.zeros(0, dtype=np.int64)
        return lin, empty, empty.copy(), np.zeros(0)

    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric CSR neighbourhood ``(indptr, indices, data)``."""
        _, rows, cols, vals = self.arrays()
        r = np.concatenate([rows, cols])
        c = np.concatenate([cols, rows])
        d = np.concatenate([vals, vals])
        order = np.lexsort((c, r))
        r, c, d = r[order], c[order], d[order]
        indptr = np.zeros(self.n_vars + 1, dtype=np.int64)
        np.add.at(indptr, r + 1, 1)
        return np.cumsum(indptr), c.astype(np.int64), d.astype(np.float64)


class _Builder:
    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.linear: dict[int, float] = defaultdict(float)
        self.quadratic: dict[tuple[int, int], float] = defaultdict(float)
        self.offset = 0.0

    def add_linear(self, v: int, a: float) -> None:
        self.linear[v] += a

    def add_quadratic(self, u: int, v: int, q: float) -> None:
        if u == v:
            self.linear[u] += q  # x*x == x
            return
        if u > v:
            u, v = v, u
        self.quadratic[u, v] += q

    def add_squared(self, terms: Sequence[tuple[int, float]], constant: float, scale: float) -> None:
        """Add ``scale * (sum(c * x_v) + constant) ** 2``."""
        if scale == 0:
            return
        for a, (u, cu) in enumerate(terms):
            self.add_linear(u, scale * (cu * cu + 2 * constant * cu))
            for v, cv in terms[a + 1:]:
                self.add_quadratic(u, v, 2 * scale * cu * cv)
        self.offset += scale * constant * constant

    def build(self, registry: VariableRegistry) -> QuboModel:
        lin = {v: a for v, a in sorted(self.linear.items()) if a != 0}
        quad = {k: q for k, q in sorted(self.quadratic.items()) if q != 0}
        return QuboModel(self.n_vars, lin, quad, self.offset, registry)


# -- encoders ----------------------------------------------------------------


def _structure_check(inst: Instance) -> None:
    if inst.machines < 1 or inst.horizon < 1:
        raise InstanceError("machines and horizon must be positive")
    for job in inst.jobs:
        if not 0 <= job.start < job.end <= inst.horizon:
            raise InstanceError(f"job {job.id!r} interval [{job.start}, {job.end}) invalid for horizon {inst.horizon}")


def default_penalties(inst: Instance) -> PenaltyConfig:
    """Penalties that make every hard violation dearer than any feasible state.

    With ``W`` the total weight and ``K'`` the slot count, the soft term can
    cost at most ``p2 * M**2 * K' = (W + 1) * M**2`` on a feasible state, while
    a hard violation costs at least ``p1 - W``.
    """
    if inst.is_empty:
        raise InstanceError("cannot derive penalties for an empty instance")
    w_total = sum(job.weight for job in inst.jobs)
    M = inst.machines
    p1 = (M * M + 1) * (w_total + 1)
    p2 = (w_total + 1) / inst.horizon
    return PenaltyConfig(p1=p1, p2=p2, p_pair=p1, p_elig=p1)


def slack_binary_expansion(bound: int) -> list[int]:
    """Bit coefficients whose subset sums are exactly ``0..bound``."""
    if bound < 0:
        raise ValueError("slack bound must be nonnegative")
    n_bits = bound.bit_length()
    if n_bits == 0:
        return []
    coeffs = [1 << b for b in range(n_bits - 1)]
    coeffs.append(bound - ((1 << (n_bits - 1)) - 1))
    return coeffs


def _slack_layout(targets: Sequence[int]) -> tuple[SlackBit, ...]:
    return tuple(SlackBit(k, c) for k, t in enumerate(targets) for c in slack_binary_expansion(int(t)))


def _occupancy_terms(
    builder: _Builder,
    cover_vars: list[list[int]],
    targets: Sequence[int],
    slack: tuple[SlackBit, ...],
    n_decision: int,
    machines: int,
    pen: PenaltyConfig,
) -> None:
    slack_by_slot: dict[int, list[tuple[int, float]]] = defaultdict(list)
    for b, bit in enumerate(slack):
        slack_by_slot[bit.slot].append((n_decision + b, float(bit.coefficient)))
    for k, vars_k in enumerate(cover_vars):
        occ = [(v, 1.0) for v in vars_k]
        # hard: occupancy + slack == min(M, c_k); only reachable targets so
        # every feasible slot can zero this term
        builder.add_squared(occ + slack_by_slot[k], -float(targets[k]), pen.p1)
        # soft: occupancy == M
        builder.add_squared(occ, -float(machines), pen.p2)


def encode_min_idle(inst: Instance, pen: PenaltyConfig) -> QuboModel:
    """Job-selection model for identical machines.

    ``x_i`` selects job ``i``. Slot ``k`` covered by ``c_k`` jobs gets the
    hard term ``p1 * (occ_k + slack_k - min(M, c_k))**2`` with slack ranging
    over ``0..min(M, c_k)``, and the soft term ``p2 * (occ_k - M)**2``.
    """
    if inst.eligibility is not None:
        raise InstanceError("instance has eligibility sets; use encode_unidentical")
    _structure_check(inst)
    N, M = inst.n_jobs, inst.machines
    cover = [[] for _ in range(inst.horizon)]
    for i, job in enumerate(inst.jobs):
        for k in range(job.start, job.end):
            cover[k].append(i)
    targets = [min(M, len(c)) for c in cover]
    slack = _slack_layout(targets)
    builder = _Builder(N + len(slack))
    for i, job in enumerate(inst.jobs):
        builder.add_linear(i, -job.weight)
    _occupancy_terms(builder, cover, targets, slack, N, M, pen)
    for a, b in inst.exclusion_pairs:
        builder.add_quadratic(inst.index_of(a), inst.index_of(b), pen.p_pair)
    registry = VariableRegistry(tuple(job.id for job in inst.jobs), slack)
    return builder.build(registry)


def encode_unidentical(inst: Instance, pen: PenaltyConfig) -> QuboModel:
    """Machine-indexed model: ``x_ij`` puts job ``i`` on machine ``j``.

    Besides the occupancy terms this adds ``p1 * x_ij * x_ij'`` (one machine
    per job), ``p1 * x_ij * x_i'j`` for overlapping jobs sharing a machine and
    ``p_elig * x_ij`` when machine ``j`` is not allowed for job ``i``.
    """
    if inst.eligibility is None:
        raise InstanceError("encode_unidentical needs an eligibility map")
    _structure_check(inst)
    N, M = inst.n_jobs, inst.machines

    def var(i: int, j: int) -> int:
        return i * M + (j - 1)

    cover = [[] for _ in range(inst.horizon)]
    for i, job in enumerate(inst.jobs):
        for k in range(job.start, job.end):
            cover[k].extend(var(i, j) for j in range(1, M + 1))
    targets = [min(M, len(c)) for c in cover]
    slack = _slack_layout(targets)
    n_dec = N * M
    builder = _Builder(n_dec + len(slack))
    for i, job in enumerate(inst.jobs):
        for j in range(1, M + 1):
            builder.add_linear(var(i, j), -job.weight)
            if not inst.eligible(i, j):
                builder.add_linear(var(i, j), pen.p_elig)
            for j2 in range(j + 1, M + 1):
                builder.add_quadratic(var(i, j), var(i, j2), pen.p1)
    for i in range(N):
        for i2 in range(i + 1, N):
            if inst.jobs[i].overlaps(inst.jobs[i2]):
                for j in range(1, M + 1):
                    builder.add_quadratic(var(i, j), var(i2, j), pen.p1)
    _occupancy_terms(builder, cover, targets, slack, n_dec, M, pen)
    for a, b in inst.exclusion_pairs:
        ia, ib = inst.index_of(a), inst.index_of(b)
        for j in range(1, M + 1):
            for j2 in range(1, M + 1):
                builder.add_quadratic(var(ia, j), var(ib, j2), pen.p_pair)
    labels = tuple((job.id, j) for job in inst.jobs for j in range(1, M + 1))
    registry = VariableRegistry(labels, slack, machine_indexed=True)
    return builder.build(registry)


def encode(inst: Instance, pen: PenaltyConfig | None = None) -> QuboModel:
    pen = pen or default_penalties(inst)
    if inst.eligibility is None:
        return encode_min_idle(inst, pen)
    return encode_unidentical(inst, pen)


def add_mutual_exclusion(model: QuboModel, i: int, j: int, p: float) -> QuboModel:
    """Return a copy of ``model`` with ``p * x_i * x_j`` added."""
    if i == j:
        raise ValueError("mutual exclusion needs two distinct variables")
    n_dec = model.registry.n_decision if model.registry.decision else model.n_vars
    for v in (i, j):
        if not 0 <= v < n_dec:
            raise KeyError(f"unknown decision variable {v}")
    key = (min(i, j), max(i, j))
    quad = dict(model.quadratic)
    quad[key] = quad.get(key, 0.0) + p
    return replace(model, quadratic=dict(sorted(quad.items())))


# -- evaluation --------------------------------------------------------------


def _as_bits(model: QuboModel, bits) -> np.ndarray:
    x = np.asarray(bits, dtype=np.int64)
    if x.shape[-1] != model.n_vars:
        raise ValueError(f"expected {model.n_vars} bits, got {x.shape[-1]}")
    return x


def energy(model: QuboModel, bits) -> float:
    x = _as_bits(model, bits)
    if x.ndim != 1:
        raise ValueError("energy takes a single state; use energies for batches")
    e = model.offset
    for v, a in model.linear.items():
        if x[v]:
            e += a
    for (u, v), q in model.quadratic.items():
        if x[u] and x[v]:
            e += q
    return float(e)


def energies(model: QuboModel, states: np.ndarray) -> np.ndarray:
    """Vectorised energy of a ``(m, n_vars)`` batch of states."""
    x = _as_bits(model, states).astype(np.float64)
    if x.ndim == 1:
        x = x[None, :]
    lin, rows, cols, vals = model.arrays()
    e = model.offset + x @ lin
    if len(vals):
        e += (x[:, rows] * x[:, cols]) @ vals
    return e


# -- Ising -------------------------------------------------------------------


@dataclass(frozen=True)
class IsingModel:
    h: dict[int, float]
    J: dict[tuple[int, int], float]
    offset: float
    n_vars: int

    def energy(self, spins) -> float:
        s = np.asarray(spins)
        e = self.offset
        for v, hv in self.h.items():
            e += hv * s[v]
        for (u, v), j in self.J.items():
            e += j * s[u] * s[v]
        return float(e)


def to_ising(model: QuboModel) -> IsingModel:
    """Substitute ``x = (1 - s) / 2`` so bit 0 maps to spin +1."""
    h: dict[int, float] = defaultdict(float)
    J: dict[tuple[int, int], float] = {}
    offset = model.offset
    for v, a in model.linear.items():
        h[v] -= a / 2
        offset += a / 2
    for (u, v), q in model.quadratic.items():
        J[u, v] = q / 4
        h[u] -= q / 4
        h[v] -= q / 4
        offset += q / 4
    return IsingModel(dict(sorted(h.items())), J, offset, model.n_vars)


def bits_to_spins(bits) -> np.ndarray:
    return 1 - 2 * np.asarray(bits, dtype=np.int64)


# -- decoding ----------------------------------------------------------------


def decode(model: QuboModel, bits) -> Selection:
    x = _as_bits(model, bits)
    reg = model.registry
    dec = x[: reg.n_decision]
    if not reg.machine_indexed:
        return Selection(tuple(int(i) for i in np.flatnonzero(dec)))
    machine_of: dict[int, list[int]] = defaultdict(list)
    job_pos: dict[Hashable, int] = {}
    for label in reg.decision:
        job_pos.setdefault(label[0], len(job_pos))
    for v in np.flatnonzero(dec):
        job_id, m = reg.decision[v]
        machine_of[job_pos[job_id]].append(m)
    return Selection(tuple(machine_of), {i: tuple(ms) for i, ms in machine_of.items()})


# -- coordinate-list text format --------------------------------------------


def export(model: QuboModel, fh=None) -> bytes:
    """Write ``p qubo <n_vars> <n_terms>`` followed by ``i j value`` lines."""
    out = io.StringIO()
    reg = model.registry
    out.write(f"c offset {model.offset!r}\n")
    out.write(f"c roles decision={reg.n_decision} slack={reg.n_slack}\n")
    out.write(f"p qubo {model.n_vars} {model.n_terms}\n")
    for v, a in sorted(model.linear.items()):
        out.write(f"{v} {v} {a!r}\n")
    for (u, v), q in sorted(model.quadratic.items()):
        out.write(f"{u} {v} {q!r}\n")
    data = out.getvalue().encode("ascii")
    if fh is not None:
        fh.write(data)
    return data


def import_qubo(data: bytes | str) -> QuboModel:
    text = data.decode("ascii") if isinstance(data, bytes) else data
    offset = 0.0
    n_dec = n_slack = None
    n_vars = n_terms = None
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "c":
            if parts[1:2] == ["offset"]:
                offset = float(parts[2])
            elif parts[1:2] == ["roles"]:
                roles = dict(p.split("=") for p in parts[2:])
                n_dec, n_slack = int(roles["decision"]), int(roles["slack"])
            continue
        if parts[0] == "p":
            if parts[1] != "qubo":
                raise ValueError(f"line {lineno}: unsupported problem type {parts[1]!r}")
            n_vars, n_terms = int(parts[2]), int(parts[3])
            continue
        if n_vars is None:
            raise ValueError(f"line {lineno}: term before header")
        u, v, val = int(parts[0]), int(parts[1]), float(parts[2])
        if u == v:
            linear[u] = val
        else:
            quadratic[min(u, v), max(u, v)] = val
    if n_vars is None:
        raise ValueError("missing 'p qubo' header")
    if len(linear) + len(quadratic) != n_terms:
        raise ValueError(f"header announces {n_terms} terms, found {len(linear) + len(quadratic)}")
    if n_dec is None:
        n_dec, n_slack = n_vars, 0
    registry = VariableRegistry(tuple(range(n_dec)), tuple(SlackBit(-1, 0) for _ in range(n_slack)))
    return QuboModel(n_vars, linear, quadratic, offset, registry)


def variable_bound(inst: Instance) -> int:
    """``N + K * ceil(log2(M + 1))``: the worst-case variable count."""
    return inst.n_jobs + inst.horizon * math.ceil(math.log2(inst.machines + 1))


def from_terms(
    n_vars: int,
    linear: dict[int, float] | None = None,
    quadratic: Iterable[tuple[tuple[int, int], float]] | dict | None = None,
    offset: float = 0.0,
) -> QuboModel:
    """Build a plain model with every variable marked as a decision."""
    b = _Builder(n_vars)
    for v, a in (linear or {}).items():
        b.add_linear(v, a)
    items = quadratic.items() if isinstance(quadratic, dict) else (quadratic or ())
    for (u, v), q in items:
        b.add_quadratic(u, v, q)
    b.offset = offset
    return b.build(VariableRegistry(tuple(range(n_vars))))
