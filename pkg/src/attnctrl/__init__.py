"""Driver-attentiveness controller synthesis toolkit.

Models shared-control autonomous driving as a continuous-time Markov
chain whose controller periodically chooses alert and speed settings,
evaluates nuisance/progress/risk objectives with a uniformization
solver, and searches the controller design space with a multi-objective
genetic algorithm cross-checked by simulation and enumeration.
"""

__version__ = "0.1.0"

from .ctmc import Ctmc, RewardStructure, validate
from .design_space import (
    ControllerGenotype,
    ProblemSpec,
    StateCoord,
    build_ctmc,
    build_reward_structures,
    decode_option,
    design_space_size,
    encode_option,
    state_coord,
    state_index,
)
from .errors import ConfigError, ConsistencyError, InputError, ResourceError
from .config import load_problem_spec, parse_problem_spec
from .simulation import (
    MapeEvent,
    RewardEstimate,
    Trajectory,
    accrue_rewards,
    classify_transition,
    estimate_rewards,
    interpret_trajectory,
    simulate,
)
from .solver import (
    SolverSettings,
    accumulated_occupancy,
    expected_cumulative_reward,
    expected_cumulative_rewards,
    poisson_truncation,
    transient_distribution,
)
from .synthesis import (
    GaSettings,
    ObjectiveVector,
    ParetoFront,
    crowding_distance,
    dominates,
    evaluate,
    exhaustive_pareto,
    fast_nondominated_sort,
    hypervolume,
    nsga2,
)

__all__ = [
    "Ctmc",
    "RewardStructure",
    "validate",
    "ControllerGenotype",
    "ProblemSpec",
    "StateCoord",
    "build_ctmc",
    "build_reward_structures",
    "decode_option",
    "design_space_size",
    "encode_option",
    "state_coord",
    "state_index",
    "ConfigError",
    "ConsistencyError",
    "InputError",
    "ResourceError",
    "load_problem_spec",
    "parse_problem_spec",
    "MapeEvent",
    "RewardEstimate",
    "Trajectory",
    "accrue_rewards",
    "classify_transition",
    "estimate_rewards",
    "interpret_trajectory",
    "simulate",
    "SolverSettings",
    "accumulated_occupancy",
    "expected_cumulative_reward",
    "expected_cumulative_rewards",
    "poisson_truncation",
    "transient_distribution",
    "GaSettings",
    "ObjectiveVector",
    "ParetoFront",
    "crowding_distance",
    "dominates",
    "evaluate",
    "exhaustive_pareto",
    "fast_nondominated_sort",
    "hypervolume",
    "nsga2",
    "__version__",
]
