"""Trajectory sampling, pathwise rewards and event-log narration."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from attnctrl.ctmc import Ctmc, RewardStructure
from attnctrl.design_space import (
    ControllerGenotype,
    ProblemSpec,
    StateCoord,
    build_ctmc,
    build_reward_structures,
    state_coord,
    state_index,
)
from attnctrl.errors import ConsistencyError, InputError
from attnctrl.simulation import (
    Z99,
    Trajectory,
    accrue_rewards,
    classify_transition,
    estimate_rewards,
    interpret_trajectory,
    mape_log_csv,
    mape_log_lines,
    simulate,
    trajectory_csv,
    trajectory_lines,
)
from attnctrl.solver import expected_cumulative_rewards

from conftest import ctmcs

ONE_MINUS_EXP_MINUS_1 = 0.6321205588285577


def two_by_two_spec() -> ProblemSpec:
    """n=2, m=2, q=2 instance with adjacent-level driver transitions."""
    rates = np.zeros((2, 2, 4, 2))
    rates[0, 1] = 1.0 / 30.0
    rates[1, 0] = 1.0 / 25.0
    return ProblemSpec(
        n=2,
        m=2,
        q=2,
        nuisance=[0.0, 1.0, 2.0, 3.0],
        progress=[2.0, 1.0],
        risk=[[0.1, 0.05], [4.0, 2.0]],
        driver_rates=rates,
        controller_action_rate=2.0,
        timer_rate=0.25,
        horizon_T=3600.0,
    )


class TestSimulate:
    def test_chain_without_transitions_stays_home(self):
        chain = Ctmc.from_rates(2, 1, {})
        trajectory = simulate(chain, 10.0, seed=3)
        assert trajectory.events == ()
        assert trajectory.state_at_end() == 1
        assert trajectory.end_time == 10.0

    def test_zero_horizon_has_no_events(self):
        chain = Ctmc.from_rates(2, 0, {(0, 1): 5.0})
        assert simulate(chain, 0.0, seed=0).events == ()

    def test_negative_horizon_rejected(self):
        chain = Ctmc.from_rates(2, 0, {(0, 1): 5.0})
        with pytest.raises(InputError, match="nonnegative"):
            simulate(chain, -1.0, seed=0)

    def test_deterministic_in_seed(self):
        chain = Ctmc.from_rates(3, 0, {(0, 1): 1.0, (1, 2): 0.5, (2, 0): 2.0})
        assert simulate(chain, 25.0, seed=7) == simulate(chain, 25.0, seed=7)
        assert simulate(chain, 25.0, seed=7) != simulate(chain, 25.0, seed=8)

    def test_first_jump_is_exponential(self):
        chain = Ctmc.from_rates(2, 0, {(0, 1): 1.0})
        runs = 10**5
        total = math.fsum(
            simulate(chain, 50.0, seed).events[0][0] for seed in range(runs)
        )
        # Exp(1) has mean and sd 1; truncation at t=50 is negligible.
        assert abs(total / runs - 1.0) <= 3.0 / math.sqrt(runs)

    @given(ctmcs(max_states=6), st.floats(0.0, 30.0), st.integers(0, 2**32 - 1))
    def test_path_invariants(self, chain, T, seed):
        trajectory = simulate(chain, T, seed)
        state = trajectory.initial_state
        assert state == chain.initial_state
        prev = 0.0
        for time, source, target in trajectory.events:
            assert source == state
            assert time > prev
            assert time < T
            assert chain.has_edge(source, target)
            prev, state = time, target


class TestAccrueRewards:
    def test_empty_path_accrues_the_initial_state(self):
        trajectory = Trajectory(seed=0, initial_state=0, events=(), end_time=3.0)
        assert accrue_rewards(trajectory, RewardStructure([2.0])) == 6.0

    def test_hand_worked_path(self):
        trajectory = Trajectory(
            seed=0,
            initial_state=0,
            events=((1.0, 0, 1), (2.5, 1, 0)),
            end_time=4.0,
        )
        reward = RewardStructure(
            state_rates=[2.0, 1.0],
            transition_rewards={(0, 1): 10.0, (1, 0): 0.5},
        )
        # 1.0s at rate 2 + 10 + 1.5s at rate 1 + 0.5 + 1.5s at rate 2
        assert accrue_rewards(trajectory, reward) == 17.0

    def test_zero_structure_accrues_nothing(self):
        trajectory = Trajectory(0, 0, ((1.0, 0, 1),), 4.0)
        assert accrue_rewards(trajectory, RewardStructure([0.0, 0.0])) == 0.0

    def test_broken_chaining_rejected(self):
        trajectory = Trajectory(0, 0, ((1.0, 1, 0),), 4.0)
        with pytest.raises(InputError, match="leaves state 1, expected 0"):
            accrue_rewards(trajectory, RewardStructure([1.0, 1.0]))

    def test_state_outside_structure_rejected(self):
        trajectory = Trajectory(0, 0, ((1.0, 0, 5),), 4.0)
        with pytest.raises(InputError, match="outside reward structure"):
            accrue_rewards(trajectory, RewardStructure([1.0, 1.0]))


class TestEstimateRewards:
    def test_needs_two_runs(self):
        chain = Ctmc.from_rates(1, 0, {})
        with pytest.raises(InputError, match="at least 2 runs"):
            estimate_rewards(chain, [RewardStructure([1.0])], 1.0, runs=1, seed=0)

    def test_degenerate_chain_estimates_exactly(self):
        chain = Ctmc.from_rates(1, 0, {})
        (estimate,) = estimate_rewards(
            chain, [RewardStructure([2.0])], 3.0, runs=100, seed=0
        )
        assert estimate.mean == 6.0
        assert estimate.std_error == 0.0
        assert estimate.confidence_99_half_width == 0.0
        assert estimate.runs == 100

    def test_half_width_is_z99_std_errors(self):
        chain = Ctmc.from_rates(2, 0, {(0, 1): 1.0})
        (estimate,) = estimate_rewards(
            chain, [RewardStructure([1.0, 0.0])], 1.0, runs=500, seed=11
        )
        assert estimate.confidence_99_half_width == Z99 * estimate.std_error
        assert estimate.std_error > 0.0

    def test_brackets_the_transient_solver(self):
        chain = Ctmc.from_rates(2, 0, {(0, 1): 1.0})
        (estimate,) = estimate_rewards(
            chain, [RewardStructure([1.0, 0.0])], 1.0, runs=10**5, seed=42
        )
        assert abs(estimate.mean - ONE_MINUS_EXP_MINUS_1) <= 3.0 * estimate.std_error

    def test_worker_count_does_not_change_results(self):
        chain = Ctmc.from_rates(3, 0, {(0, 1): 1.0, (1, 2): 0.5, (2, 0): 2.0})
        rewards = [
            RewardStructure([1.0, 0.0, 0.0]),
            RewardStructure([0.0, 2.0, 0.0], {(2, 0): 1.0}),
        ]
        serial = estimate_rewards(chain, rewards, 20.0, runs=501, seed=9)
        threaded = estimate_rewards(chain, rewards, 20.0, runs=501, seed=9, workers=4)
        assert serial == threaded

    def test_joint_call_matches_separate_calls(self):
        chain = Ctmc.from_rates(2, 0, {(0, 1): 1.0, (1, 0): 1.0})
        a = RewardStructure([1.0, 0.0])
        b = RewardStructure([0.0, 1.0], {(1, 0): 2.0})
        joint = estimate_rewards(chain, [a, b], 5.0, runs=200, seed=1)
        assert joint[0] == estimate_rewards(chain, [a], 5.0, runs=200, seed=1)[0]
        assert joint[1] == estimate_rewards(chain, [b], 5.0, runs=200, seed=1)[0]


def test_reference_controller_brackets_solver(reference_spec):
    spec = reference_spec.with_horizon(600.0)
    genotype = ControllerGenotype([5, 1, 4, 0, 7, 3, 6, 2] * 2)
    ctmc = build_ctmc(spec, genotype)
    rewards = build_reward_structures(spec)
    exact = expected_cumulative_rewards(ctmc, list(rewards), spec.horizon_T)
    estimates = estimate_rewards(
        ctmc, list(rewards), spec.horizon_T, runs=400, seed=2024
    )
    for value, estimate in zip(exact, estimates):
        assert abs(value - estimate.mean) <= max(
            estimate.confidence_99_half_width, 1e-9
        )


class TestClassifyTransition:
    def test_controller_action_wording(self):
        spec = two_by_two_spec()
        source = state_index(spec, StateCoord(1, 3, 0, True))
        target = state_index(spec, StateCoord(1, 1, 1, False))
        event = classify_transition(spec, source, target)
        assert event.kind == "controller_action"
        assert event.description == "controller: alert1 ON, alert2 OFF, speed level 1"

    def test_driver_change_wording(self):
        spec = two_by_two_spec()
        source = state_index(spec, StateCoord(0, 0, 0, False))
        target = state_index(spec, StateCoord(1, 0, 0, True))
        event = classify_transition(spec, source, target)
        assert event.kind == "driver_change"
        assert "attentiveness level 0 -> 1" in event.description

    def test_timer_wording(self):
        spec = two_by_two_spec()
        source = state_index(spec, StateCoord(1, 2, 1, False))
        target = state_index(spec, StateCoord(1, 2, 1, True))
        event = classify_transition(spec, source, target)
        assert event.kind == "timer"
        assert "periodic wake-up" in event.description

    def test_mrm_kinds(self):
        spec = replace(two_by_two_spec(), mrm_enabled=True)
        inattentive = state_index(spec, StateCoord(1, 0, 1, False))
        start = classify_transition(spec, inattentive, spec.mrm_state)
        assert start.kind == "mrm_start"
        assert "minimal-risk manoeuvre" in start.description
        finish = classify_transition(spec, spec.mrm_state, 0)
        assert finish.kind == "mrm_finish"

    def test_mrm_must_return_to_initial(self):
        spec = replace(two_by_two_spec(), mrm_enabled=True)
        with pytest.raises(ConsistencyError, match="must return"):
            classify_transition(spec, spec.mrm_state, 2)

    def test_reset_must_select_the_initial_state(self):
        spec = two_by_two_spec()
        source = state_index(spec, StateCoord(0, 1, 0, True))
        target = state_index(spec, StateCoord(0, 1, 0, False))
        with pytest.raises(ConsistencyError, match="must select the initial state"):
            classify_transition(spec, source, target)

    def test_unclassifiable_pair_rejected(self):
        spec = two_by_two_spec()
        source = state_index(spec, StateCoord(0, 0, 0, False))
        target = state_index(spec, StateCoord(1, 0, 0, False))
        with pytest.raises(ConsistencyError, match="fits no"):
            classify_transition(spec, source, target)


class TestInterpretTrajectory:
    def test_empty_trajectory(self):
        spec = two_by_two_spec()
        assert interpret_trajectory(spec, Trajectory(0, 0, (), 10.0)) == []

    def test_recounts_the_raw_transitions(self, reference_spec):
        spec = reference_spec
        genotype = ControllerGenotype([5, 1, 4, 0, 7, 3, 6, 2] * 2)
        ctmc = build_ctmc(spec, genotype)
        trajectory = simulate(ctmc, 2000.0, seed=5)
        assert len(trajectory.events) > 50
        log = interpret_trajectory(spec, trajectory)
        assert len(log) == len(trajectory.events)
        assert [e.time for e in log] == [t for t, _, _ in trajectory.events]

        def recount(kind_filter):
            return sum(1 for e in log if e.kind == kind_filter)

        driver = timer = action = 0
        for _, source, target in trajectory.events:
            src, dst = state_coord(spec, source), state_coord(spec, target)
            if src.level != dst.level:
                driver += 1
            elif not src.controller_active and dst.controller_active:
                timer += 1
            else:
                action += 1
        assert recount("driver_change") == driver
        assert recount("timer") == timer
        assert recount("controller_action") == action

    def test_mrm_trajectory_narrates_the_manoeuvre(self, reference_spec):
        spec = replace(reference_spec, mrm_enabled=True, mrm_timeout_tau=5.0)
        genotype = ControllerGenotype([0] * 16)
        ctmc = build_ctmc(spec, genotype)
        kinds = set()
        for seed in range(40):
            trajectory = simulate(ctmc, 3600.0, seed=seed)
            kinds |= {e.kind for e in interpret_trajectory(spec, trajectory)}
            if {"mrm_start", "mrm_finish"} <= kinds:
                break
        assert {"mrm_start", "mrm_finish"} <= kinds


class TestExporters:
    def sample_log(self):
        spec = two_by_two_spec()
        source = state_index(spec, StateCoord(1, 3, 0, True))
        target = state_index(spec, StateCoord(1, 1, 1, False))
        event = classify_transition(spec, source, target)
        return [replace(event, time=1.5)]

    def test_mape_log_lines_format(self):
        (line,) = mape_log_lines(self.sample_log())
        assert line == (
            "t=      1.500000s  controller: alert1 ON, alert2 OFF, speed level 1"
        )

    def test_mape_log_csv_round_trips(self):
        text = mape_log_csv(self.sample_log())
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == ["time", "kind", "from_state", "to_state", "description"]
        assert len(rows) == 2
        time, kind, source, target, description = rows[1]
        assert float(time) == 1.5
        assert kind == "controller_action"
        assert description == "controller: alert1 ON, alert2 OFF, speed level 1"

    def test_trajectory_lines_format(self):
        trajectory = Trajectory(0, 0, ((0.25, 0, 3),), 1.0)
        assert trajectory_lines(trajectory) == ["t=      0.250000s  0 -> 3"]

    def test_trajectory_csv_round_trips_exactly(self):
        events = ((0.1 + 0.2, 0, 1), (1.0 / 3.0 + 1.0, 1, 0))
        trajectory = Trajectory(0, 0, events, 5.0)
        rows = list(csv.reader(io.StringIO(trajectory_csv(trajectory))))
        assert rows[0] == ["time", "from_state", "to_state"]
        parsed = [(float(t), int(s), int(d)) for t, s, d in rows[1:]]
        assert parsed == list(events)  # repr() keeps full precision
