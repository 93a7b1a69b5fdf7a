"""Cross-check the transient solver against stochastic simulation.

Two sweeps: random sparse chains with random reward structures, then
sampled controllers of a bundled instance with its three objective
rewards.  Each check asks whether the solver value lies inside the 99%
confidence interval of an independent Monte Carlo estimate; the script
exits nonzero if coverage falls below 90%, far under the ~99% expected
from calibrated intervals.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from attnctrl.config import load_problem_spec
from attnctrl.ctmc import Ctmc, RewardStructure
from attnctrl.design_space import ControllerGenotype, build_ctmc, build_reward_structures
from attnctrl.simulation import estimate_rewards
from attnctrl.solver import expected_cumulative_reward, expected_cumulative_rewards

REPO_ROOT = Path(__file__).resolve().parent.parent
OBJECTIVE_NAMES = ("nuisance", "progress", "risk")


def random_chain(rng: random.Random, max_states: int) -> Ctmc:
    num_states = rng.randint(2, max_states)
    rates = {
        (s, t): rng.uniform(0.05, 2.0)
        for s in range(num_states)
        for t in range(num_states)
        if s != t and rng.random() < 0.35
    }
    return Ctmc.from_rates(num_states, 0, rates)


def random_reward(rng: random.Random, ctmc: Ctmc) -> RewardStructure:
    return RewardStructure(
        state_rates=[rng.uniform(0.0, 2.0) for _ in range(ctmc.num_states)],
        transition_rewards={
            (s, t): rng.uniform(0.0, 1.5)
            for s, t, _ in ctmc.edges()
            if rng.random() < 0.3
        },
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cases", type=int, default=25, help="random chains")
    parser.add_argument("--runs", type=int, default=20_000)
    parser.add_argument("--horizon", type=float, default=1.5, help="random-chain horizon (s)")
    parser.add_argument("--max-states", type=int, default=10)
    parser.add_argument(
        "--config", type=Path, default=REPO_ROOT / "configs" / "reference.cfg"
    )
    parser.add_argument("--controllers", type=int, default=3)
    parser.add_argument("--controller-runs", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    checks = 0
    inside = 0

    for case in range(args.cases):
        ctmc = random_chain(rng, args.max_states)
        reward = random_reward(rng, ctmc)
        exact = expected_cumulative_reward(ctmc, reward, args.horizon)
        estimate = estimate_rewards(
            ctmc, [reward], args.horizon, args.runs, rng.randrange(2**32)
        )[0]
        ok = abs(estimate.mean - exact) <= estimate.confidence_99_half_width + 1e-9
        checks += 1
        inside += ok
        print(
            f"chain {case + 1:3d}/{args.cases}: {ctmc.num_states:2d} states  "
            f"solver {exact:9.6f}  simulated {estimate.mean:9.6f} "
            f"+/- {estimate.confidence_99_half_width:.6f}  "
            f"{'ok' if ok else 'OUTSIDE'}"
        )

    spec = load_problem_spec(args.config)
    for _ in range(args.controllers):
        genotype = ControllerGenotype(
            [rng.randrange(spec.num_options) for _ in range(spec.genotype_length)]
        )
        ctmc = build_ctmc(spec, genotype)
        rewards = build_reward_structures(spec)
        exact_values = expected_cumulative_rewards(ctmc, rewards, spec.horizon_T)
        estimates = estimate_rewards(
            ctmc,
            rewards,
            spec.horizon_T,
            args.controller_runs,
            rng.randrange(2**32),
        )
        print(f"controller {genotype}:")
        for name, exact, estimate in zip(OBJECTIVE_NAMES, exact_values, estimates):
            ok = abs(estimate.mean - exact) <= estimate.confidence_99_half_width
            checks += 1
            inside += ok
            print(
                f"  {name:9} solver {exact:12.4f}  simulated {estimate.mean:12.4f} "
                f"+/- {estimate.confidence_99_half_width:.4f}  "
                f"{'ok' if ok else 'OUTSIDE'}"
            )

    print(f"\n{inside}/{checks} checks inside the 99% interval")
    return 0 if inside >= 0.9 * checks else 1


if __name__ == "__main__":
    sys.exit(main())
