"""Command line entry point: ``ofisp {phrases,encode,solve,reduce,check}``.

Exit codes: 0 success or feasible result, 1 infeasible result, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from .assign import Assignment, assignment_from_machines, greedy_assign
from .core import (
    Instance,
    InstanceError,
    Selection,
    ViolationReport,
    check_instance,
    evaluate,
    load_instance,
    save_instance,
)
from .music import MidiError, build_instance, read_midi, render_reduction, segment_score
from .qubo import PenaltyConfig, QuboModel, default_penalties, encode, export
from .solver import (
    BRUTE_FORCE_LIMIT,
    AnnealSchedule,
    SampleSet,
    brute_force,
    polish,
    resolve_temperatures,
    select_solution,
    simulated_anneal,
)

log = logging.getLogger("ofisp")

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT = 0, 1, 2

POLICY_FLAGS = {
    "min-energy": "min_energy",
    "max-weight": "max_weight_feasible",
    "min-soft": "min_soft",
}


class InputError(Exception):
    pass


# -- shared helpers -----------------------------------------------------------


def _penalties(inst: Instance, args) -> PenaltyConfig:
    base = default_penalties(inst)
    p1 = base.p1 if args.p1 is None else args.p1
    p2 = base.p2 if args.p2 is None else args.p2
    try:
        return replace(base, p1=p1, p2=p2)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _schedule(args) -> AnnealSchedule:
    try:
        return AnnealSchedule(
            reads=args.reads, sweeps=args.sweeps, t_init=args.t_init, t_final=args.t_final, seed=args.seed
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _load(path: str) -> Instance:
    try:
        inst = load_instance(path)
        check_instance(inst)
    except (OSError, json.JSONDecodeError, InstanceError) as exc:
        raise InputError(f"cannot load instance {path}: {exc}") from exc
    return inst


def _violations(report: ViolationReport) -> dict:
    return {
        "weight": report.total_weight,
        "hard_violations": report.hard_violations,
        "soft_violations": report.soft_violations,
        "exclusion_violations": report.exclusion_violations,
        "assignment_violations": report.assignment_violations,
        "feasible": report.feasible,
    }


def _assignment(inst: Instance, sel: Selection) -> Assignment:
    if sel.machine_of is not None:
        return assignment_from_machines([j.id for j in inst.jobs], sel.machine_of, sel.chosen)
    return greedy_assign(inst.jobs[i] for i in sel.chosen)


def _solution_doc(inst: Instance, picked) -> dict | None:
    if picked is None:
        return None
    sel, report, e = picked
    assignment = _assignment(inst, sel)
    return {
        "selection": sel.ids(inst),
        "energy": e,
        **_violations(report),
        "assignment": dict(sorted(assignment.machine_of.items())),
        "machines_used": assignment.machines_used,
    }


def solve_instance(
    inst: Instance,
    pen: PenaltyConfig,
    sched: AnnealSchedule,
    policy: str = "min_energy",
    oracle: bool = False,
    refine: bool = True,
) -> tuple[dict, QuboModel, SampleSet]:
    """Encode, sample, select under every policy and assign; returns the report."""
    timings = {}
    t0 = time.perf_counter()
    model = encode(inst, pen)
    timings["encode_s"] = time.perf_counter() - t0
    temps = resolve_temperatures(model, sched) if model.n_vars else (None, None)

    t0 = time.perf_counter()
    use_oracle = oracle and model.n_vars <= BRUTE_FORCE_LIMIT
    if oracle and not use_oracle:
        log.warning("model has %d variables, too many for the oracle; annealing instead", model.n_vars)
    if use_oracle:
        bits, _ = brute_force(model)
        samples = SampleSet.from_states(model, bits[None, :])
    else:
        samples = simulated_anneal(model, sched)
    timings["solve_s"] = time.perf_counter() - t0
    refine = refine and not use_oracle
    if refine:
        t0 = time.perf_counter()
        samples = polish(model, samples)
        timings["polish_s"] = time.perf_counter() - t0

    solutions = {
        flag: _solution_doc(inst, select_solution(samples, model, inst, name))
        for flag, name in POLICY_FLAGS.items()
    }
    chosen_flag = next(f for f, n in POLICY_FLAGS.items() if n == policy)
    report = {
        "instance": {
            "jobs": inst.n_jobs,
            "horizon": inst.horizon,
            "machines": inst.machines,
            "variables": {
                "decision": model.registry.n_decision,
                "slack": model.registry.n_slack,
                "total": model.n_vars,
            },
        },
        "penalties": {"p1": pen.p1, "p2": pen.p2, "p_pair": pen.p_pair, "p_elig": pen.p_elig},
        "solver": {
            "method": "brute_force" if use_oracle else "simulated_annealing",
            "reads": sched.reads,
            "sweeps": sched.sweeps,
            "t_init": temps[0],
            "t_final": temps[1],
            "seed": sched.seed,
            "polish": refine,
            "distinct_samples": len(samples),
        },
        "policy": chosen_flag,
        "solution": solutions[chosen_flag],
        "solutions": solutions,
        "feasible": solutions[chosen_flag] is not None,
        "timings": timings,
    }
    return report, model, samples


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=False) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- subcommands --------------------------------------------------------------


def cmd_phrases(args) -> int:
    try:
        score = read_midi(args.midi)
    except (OSError, MidiError) as exc:
        raise InputError(f"cannot read {args.midi}: {exc}") from exc
    phrases = segment_score(score, k_max=args.k_max)
    fields = ["track", "start_measure", "end_measure", "pitch_entropy", "ioi_entropy", "weight"]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for p in phrases:
            writer.writerow([p.track, p.start_measure, p.end_measure,
                             f"{p.pitch_entropy:.6f}", f"{p.ioi_entropy:.6f}", f"{p.weight:.6f}"])
    finally:
        if args.out:
            fh.close()
    log.info("%d phrases over %d tracks", len(phrases), len({p.track for p in phrases}))
    return EXIT_OK


def cmd_encode(args) -> int:
    inst = _load(args.instance)
    if inst.is_empty:
        raise InputError("instance has no jobs")
    pen = _penalties(inst, args)
    model = encode(inst, pen)
    data = export(model)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("ascii"))
    print(
        f"variables: decision={model.registry.n_decision} slack={model.registry.n_slack} "
        f"total={model.n_vars} terms={model.n_terms}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    if inst.is_empty:
        raise InputError("instance has no jobs")
    report, _, _ = solve_instance(
        inst, _penalties(inst, args), _schedule(args), POLICY_FLAGS[args.policy], args.oracle, not args.no_polish
    )
    _emit(report, args.out)
    return EXIT_OK if report["feasible"] else EXIT_INFEASIBLE


def cmd_reduce(args) -> int:
    if args.machines < 1:
        raise InputError("--machines must be at least 1")
    try:
        score = read_midi(args.midi)
    except (OSError, MidiError) as exc:
        raise InputError(f"cannot read {args.midi}: {exc}") from exc
    t0 = time.perf_counter()
    phrases = segment_score(score, k_max=args.k_max)
    seg_s = time.perf_counter() - t0
    inst = build_instance(score, phrases, args.machines)
    if inst.is_empty:
        raise InputError("no phrases found in the input")
    if args.instance_out:
        save_instance(inst, args.instance_out)
    report, _, _ = solve_instance(
        inst, _penalties(inst, args), _schedule(args), POLICY_FLAGS[args.policy], args.oracle, not args.no_polish
    )
    report["timings"]["segment_s"] = seg_s
    report["phrases"] = len(phrases)
    solution = report["solution"]
    if solution is not None:
        assignment = Assignment(solution["assignment"], solution["machines_used"])
        midi = render_reduction(score, phrases, assignment, machines=args.machines)
        Path(args.out).write_bytes(midi)
        report["output"] = str(args.out)
    _emit(report, args.report)
    return EXIT_OK if report["feasible"] else EXIT_INFEASIBLE


def cmd_check(args) -> int:
    inst = _load(args.instance)
    try:
        doc = json.loads(Path(args.solution).read_text())
        if "assignment" in doc and "selection" not in doc:
            pairs = doc["assignment"]
            if isinstance(pairs, dict):
                pairs = list(pairs.items())
            machine_of: dict[int, list[int]] = {}
            for job_id, m in pairs:
                machine_of.setdefault(inst.index_of(job_id), []).append(int(m))
            sel = Selection(tuple(machine_of), {i: tuple(ms) for i, ms in machine_of.items()})
        else:
            sel = Selection.from_ids(inst, doc["selection"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot read solution {args.solution}: {exc}") from exc
    report = evaluate(inst, sel)
    _emit({**_violations(report), "occupancy": list(report.occupancy)}, args.out)
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


# -- argument parsing ---------------------------------------------------------


def _add_penalty_flags(p):
    p.add_argument("--p1", type=float, help="hard-constraint penalty (default derived from weights)")
    p.add_argument("--p2", type=float, help="idle-time penalty; 0 disables it")


def _add_solver_flags(p):
    p.add_argument("--reads", type=int, default=1000)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--t-init", type=float)
    p.add_argument("--t-final", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=sorted(POLICY_FLAGS), default="min-energy")
    p.add_argument("--oracle", action="store_true", help="exhaustive search when the model is small enough")
    p.add_argument("--no-polish", action="store_true", help="skip the slack-aware descent after annealing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ofisp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phrases", help="segment a MIDI file into weighted phrases (CSV)")
    p.add_argument("midi")
    p.add_argument("--k-max", type=int, default=4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_phrases)

    p = sub.add_parser("encode", help="compile an instance to a QUBO coordinate file")
    p.add_argument("instance")
    _add_penalty_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("solve", help="encode, anneal, select and assign")
    p.add_argument("instance")
    _add_penalty_flags(p)
    _add_solver_flags(p)
    p.add_argument("--out", help="report path (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("reduce", help="reduce a multi-track MIDI file to --machines tracks")
    p.add_argument("midi")
    p.add_argument("--machines", type=int, required=True)
    p.add_argument("--k-max", type=int, default=4)
    _add_penalty_flags(p)
    _add_solver_flags(p)
    p.add_argument("--out", required=True, help="reduced MIDI path")
    p.add_argument("--report", help="report path (default stdout)")
    p.add_argument("--instance-out", help="also save the scheduling instance")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("check", help="evaluate a selection or assignment against an instance")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
