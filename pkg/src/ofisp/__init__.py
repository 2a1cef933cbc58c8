"""Minimal-idle fixed interval scheduling via QUBO, with a music reduction front end."""

from .assign import Assignment, depth, greedy_assign
from .core import (
    Instance,
    InstanceError,
    Job,
    Selection,
    ViolationReport,
    evaluate,
    fig1_instance,
    load_instance,
    occupancy,
    save_instance,
    validate_instance,
)
from .qubo import (
    IsingModel,
    PenaltyConfig,
    QuboModel,
    add_mutual_exclusion,
    decode,
    default_penalties,
    encode,
    encode_min_idle,
    encode_unidentical,
    energy,
    export,
    import_qubo,
    slack_binary_expansion,
    to_ising,
)
from .solver import AnnealSchedule, SampleSet, brute_force, polish, select_solution, simulated_anneal

__version__ = "0.1.0"
