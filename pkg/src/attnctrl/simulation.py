"""Stochastic simulation of CTMC trajectories with reward accrual.

Serves as the Monte Carlo cross-check for the transient solver and as
the producer of human-readable monitor/analyse/plan/execute event logs
for controller trajectories.

Randomness comes from ``random.Random`` (Mersenne Twister), which has a
stable cross-platform implementation, so trajectories are reproducible
bit for bit from the seed alone.  Run i of a multi-run estimate uses
seed + i, which keeps estimates independent of how runs are sharded
across workers.
"""

from __future__ import annotations

import csv
import io
import math
import random
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import accumulate

from .ctmc import Ctmc, RewardStructure
from .design_space import ProblemSpec, state_coord
from .errors import ConsistencyError, InputError

# 99% two-sided normal quantile, Phi^-1(0.995).
Z99 = 2.5758293035489004


@dataclass(frozen=True)
class Trajectory:
    """One sampled path: jump events (time, from, to) up to end_time.

    Event times are strictly increasing and at most end_time; the
    initial state is recorded explicitly so empty paths remain usable.
    """

    seed: int
    initial_state: int
    events: tuple[tuple[float, int, int], ...]
    end_time: float

    def state_at_end(self) -> int:
        return self.events[-1][2] if self.events else self.initial_state


@dataclass(frozen=True)
class RewardEstimate:
    mean: float
    std_error: float
    runs: int
    confidence_99_half_width: float


@dataclass(frozen=True)
class MapeEvent:
    """One classified transition of a controller trajectory."""

    time: float
    kind: str  # driver_change | timer | controller_action | mrm_start | mrm_finish
    source: int
    target: int
    description: str


class _JumpTables:
    """Per-state cumulative outgoing rates for successor sampling."""

    def __init__(self, ctmc: Ctmc):
        self.targets = [tuple(t for t, _ in row) for row in ctmc.rows]
        self.cum_rates = [
            tuple(accumulate(r for _, r in row)) for row in ctmc.rows
        ]

    def sample(self, state: int, u: float) -> int:
        cum = self.cum_rates[state]
        return self.targets[state][bisect_right(cum, u * cum[-1])]


def _sample_events(
    tables: _JumpTables, initial: int, T: float, rng: random.Random
) -> list[tuple[float, int, int]]:
    events = []
    state = initial
    t = 0.0
    while True:
        cum = tables.cum_rates[state]
        if not cum:
            break
        exit_rate = cum[-1]
        # Redraw when the holding time underflows to a non-advancing
        # step, keeping event times strictly increasing.
        while True:
            advanced = t - math.log1p(-rng.random()) / exit_rate
            if advanced > t:
                break
        if advanced >= T:
            break
        state_next = tables.sample(state, rng.random())
        events.append((advanced, state, state_next))
        t, state = advanced, state_next
    return events


def simulate(ctmc: Ctmc, T: float, seed: int) -> Trajectory:
    """Sample one trajectory over [0, T], deterministic given seed.

    Holding times are exponential in the state's exit rate; successors
    are drawn proportionally to outgoing rates.
    """
    if T < 0:
        raise InputError(f"horizon must be nonnegative, got {T}")
    rng = random.Random(seed)
    events = _sample_events(_JumpTables(ctmc), ctmc.initial_state, T, rng)
    return Trajectory(
        seed=seed,
        initial_state=ctmc.initial_state,
        events=tuple(events),
        end_time=T,
    )


def accrue_rewards(trajectory: Trajectory, reward: RewardStructure) -> float:
    """Pathwise cumulative reward: state rates over holding times plus
    transition rewards for each fired jump."""
    r1 = reward.state_rates
    r2 = reward.transition_rewards
    state = trajectory.initial_state
    if state >= len(r1):
        raise InputError(
            f"trajectory state {state} outside reward structure "
            f"({len(r1)} states)"
        )
    total = 0.0
    prev_time = 0.0
    for time, source, target in trajectory.events:
        if source != state:
            raise InputError(
                f"event at t={time} leaves state {source}, expected {state}"
            )
        if target >= len(r1):
            raise InputError(
                f"trajectory state {target} outside reward structure "
                f"({len(r1)} states)"
            )
        total += (time - prev_time) * r1[state]
        if r2:
            total += r2.get((source, target), 0.0)
        prev_time, state = time, target
    total += (trajectory.end_time - prev_time) * r1[state]
    return total


def _accrue_block(
    tables: _JumpTables,
    initial: int,
    rewards: tuple[RewardStructure, ...],
    T: float,
    seeds: range,
) -> list[list[float]]:
    block = []
    for seed in seeds:
        events = _sample_events(tables, initial, T, random.Random(seed))
        trajectory = Trajectory(seed, initial, tuple(events), T)
        block.append([accrue_rewards(trajectory, r) for r in rewards])
    return block


def estimate_rewards(
    ctmc: Ctmc,
    rewards: list[RewardStructure] | tuple[RewardStructure, ...],
    T: float,
    runs: int,
    seed: int,
    workers: int = 1,
) -> list[RewardEstimate]:
    """Monte Carlo estimates over `runs` independent trajectories.

    Run i uses seed + i, so results are a pure function of (seed, runs)
    and do not depend on the worker count.  The 99% half-width uses the
    normal approximation, which is optimistic for small run counts.
    """
    if runs < 2:
        raise InputError(f"need at least 2 runs for a standard error, got {runs}")
    if T < 0:
        raise InputError(f"horizon must be nonnegative, got {T}")
    rewards = tuple(rewards)
    tables = _JumpTables(ctmc)
    initial = ctmc.initial_state

    if workers <= 1:
        blocks = [_accrue_block(tables, initial, rewards, T, range(seed, seed + runs))]
    else:
        chunk = -(-runs // workers)
        shards = [
            range(seed + lo, seed + min(lo + chunk, runs))
            for lo in range(0, runs, chunk)
        ]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(
                pool.map(
                    lambda s: _accrue_block(tables, initial, rewards, T, s), shards
                )
            )

    estimates = []
    for j in range(len(rewards)):
        values = [row[j] for block in blocks for row in block]
        mean = math.fsum(values) / runs
        variance = math.fsum((v - mean) ** 2 for v in values) / (runs - 1)
        std_error = math.sqrt(variance / runs)
        estimates.append(
            RewardEstimate(
                mean=mean,
                std_error=std_error,
                runs=runs,
                confidence_99_half_width=Z99 * std_error,
            )
        )
    return estimates


def _option_description(spec: ProblemSpec, alerts: int, speed: int) -> str:
    flags = ", ".join(
        f"alert{i + 1} {'ON' if alerts >> i & 1 else 'OFF'}" for i in range(spec.m)
    )
    return f"controller: {flags}, speed level {speed}"


def classify_transition(spec: ProblemSpec, source: int, target: int) -> MapeEvent:
    """Classify one transition of a controller CTMC (time left at 0).

    Raises ConsistencyError when the pair fits no transition family,
    which would indicate a model construction bug.
    """
    mrm = spec.mrm_state
    if mrm is not None and target == mrm:
        src = state_coord(spec, source)
        return MapeEvent(
            0.0, "mrm_start", source, target,
            f"mrm: timeout at attentiveness level {src.level}, "
            "minimal-risk manoeuvre started",
        )
    if mrm is not None and source == mrm:
        if target != 0:
            raise ConsistencyError(
                f"transition {source} -> {target}: manoeuvre must return "
                "to the initial state"
            )
        return MapeEvent(
            0.0, "mrm_finish", source, target,
            "mrm: manoeuvre complete, journey restarts",
        )
    src = state_coord(spec, source)
    dst = state_coord(spec, target)
    same_av = src.alerts == dst.alerts and src.speed == dst.speed
    if (
        not src.controller_active
        and dst.controller_active
        and src.level != dst.level
        and same_av
    ):
        return MapeEvent(
            0.0, "driver_change", source, target,
            f"driver: attentiveness level {src.level} -> {dst.level}, "
            "controller invoked",
        )
    if (
        not src.controller_active
        and dst.controller_active
        and src.level == dst.level
        and src.level != 0
        and same_av
    ):
        return MapeEvent(
            0.0, "timer", source, target,
            f"timer: periodic wake-up at attentiveness level {src.level}",
        )
    if (
        src.controller_active
        and not dst.controller_active
        and src.level == dst.level
    ):
        if src.level == 0 and target != 0:
            raise ConsistencyError(
                f"transition {source} -> {target}: reset from an attentive "
                "driver must select the initial state"
            )
        return MapeEvent(
            0.0, "controller_action", source, target,
            _option_description(spec, dst.alerts, dst.speed),
        )
    raise ConsistencyError(
        f"transition {source} -> {target} ({src} -> {dst}) fits no "
        "transition family"
    )


def interpret_trajectory(spec: ProblemSpec, trajectory: Trajectory) -> list[MapeEvent]:
    """Narrate a trajectory of a CTMC built from `spec` as an ordered
    monitor/analyse/plan/execute event log."""
    log = []
    for time, source, target in trajectory.events:
        event = classify_transition(spec, source, target)
        log.append(
            MapeEvent(time, event.kind, source, target, event.description)
        )
    return log


def mape_log_lines(log: list[MapeEvent]) -> list[str]:
    return [f"t={event.time:14.6f}s  {event.description}" for event in log]


def mape_log_csv(log: list[MapeEvent]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["time", "kind", "from_state", "to_state", "description"])
    for e in log:
        writer.writerow([repr(e.time), e.kind, e.source, e.target, e.description])
    return out.getvalue()


def trajectory_lines(trajectory: Trajectory) -> list[str]:
    return [
        f"t={time:14.6f}s  {source} -> {target}"
        for time, source, target in trajectory.events
    ]


def trajectory_csv(trajectory: Trajectory) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["time", "from_state", "to_state"])
    for time, source, target in trajectory.events:
        writer.writerow([repr(time), source, target])
    return out.getvalue()
