"""Continuous-time Markov chains and reward structures.

A chain is a finite state set, a designated initial state and a sparse
set of strictly positive transition rates (1/s).  Rates are stored
row-grouped (per-source list of ``(target, rate)`` pairs, sorted by
target) because every solver and simulation kernel iterates outgoing
edges.  Self-loops are semantically inert in a CTMC and are dropped at
construction with a warning.

Instances are immutable after construction and safe to share across
parallel evaluation workers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import InputError

RateMap = Mapping[tuple[int, int], float]


def _as_edge_items(rates: RateMap | Iterable[tuple[int, int, float]]):
    if isinstance(rates, Mapping):
        return [(s, t, r) for (s, t), r in rates.items()]
    return [(s, t, r) for s, t, r in rates]


@dataclass(frozen=True)
class Ctmc:
    """Sparse-rate CTMC with a designated initial state."""

    num_states: int
    initial_state: int
    rows: tuple[tuple[tuple[int, float], ...], ...]
    state_labels: dict[int, str] | None = field(default=None, compare=False)

    @classmethod
    def from_rates(
        cls,
        num_states: int,
        initial_state: int,
        rates: RateMap | Iterable[tuple[int, int, float]],
        state_labels: dict[int, str] | None = None,
    ) -> "Ctmc":
        """Build a chain from a sparse rate map.

        Edge endpoints must index into ``[0, num_states)``; self-loops are
        dropped with a warning.  Rate *values* are stored as given so that
        :func:`validate` can report every violation of the value invariants.
        """
        if num_states < 1:
            raise InputError(f"num_states must be >= 1, got {num_states}")
        grouped: list[list[tuple[int, float]]] = [[] for _ in range(num_states)]
        for s, t, r in _as_edge_items(rates):
            if not (0 <= s < num_states and 0 <= t < num_states):
                raise InputError(
                    f"transition ({s} -> {t}) out of range for {num_states} states"
                )
            if s == t:
                warnings.warn(
                    f"dropping self-loop on state {s} (inert in a CTMC)",
                    stacklevel=2,
                )
                continue
            grouped[s].append((t, float(r)))
        rows = tuple(tuple(sorted(row)) for row in grouped)
        return cls(num_states, initial_state, rows, state_labels)

    def exit_rate(self, s: int) -> float:
        """Total outgoing rate of state ``s``; 0 for absorbing states."""
        if not 0 <= s < self.num_states:
            raise InputError(f"state index {s} out of range [0, {self.num_states})")
        return float(self.exit_rates[s])

    def max_exit_rate(self) -> float:
        """Largest exit rate over all states; 0 iff the chain has no transitions."""
        return float(self.exit_rates.max()) if self.num_states else 0.0

    @cached_property
    def exit_rates(self) -> np.ndarray:
        out = np.zeros(self.num_states)
        for s, row in enumerate(self.rows):
            out[s] = math.fsum(r for _, r in row)
        out.flags.writeable = False
        return out

    @cached_property
    def num_transitions(self) -> int:
        return sum(len(row) for row in self.rows)

    def edges(self) -> Iterable[tuple[int, int, float]]:
        for s, row in enumerate(self.rows):
            for t, r in row:
                yield s, t, r

    def has_edge(self, s: int, t: int) -> bool:
        return any(u == t for u, _ in self.rows[s])

    def label(self, s: int) -> str:
        if self.state_labels and s in self.state_labels:
            return self.state_labels[s]
        return f"s{s}"


@dataclass(frozen=True, eq=False)
class RewardStructure:
    """State reward rates (per second) plus instantaneous transition rewards."""

    state_rates: np.ndarray
    transition_rewards: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __init__(
        self,
        state_rates,
        transition_rewards: Mapping[tuple[int, int], float] | None = None,
    ):
        rates = np.array(state_rates, dtype=float)  # own the buffer
        rates.flags.writeable = False
        object.__setattr__(self, "state_rates", rates)
        object.__setattr__(
            self,
            "transition_rewards",
            dict(transition_rewards) if transition_rewards else {},
        )

    @property
    def num_states(self) -> int:
        return self.state_rates.shape[0]


def validate(ctmc: Ctmc, rewards: Iterable[RewardStructure] = ()) -> list[str]:
    """Check every CTMC/reward invariant; return all violations (empty = ok)."""
    problems: list[str] = []
    if not 0 <= ctmc.initial_state < ctmc.num_states:
        problems.append(
            f"initial state {ctmc.initial_state} out of range [0, {ctmc.num_states})"
        )
    for s, t, r in ctmc.edges():
        if s == t:
            problems.append(f"self-loop stored on state {s}")
        if not math.isfinite(r):
            problems.append(f"non-finite rate on ({s} -> {t}): {r!r}")
        elif r <= 0:
            problems.append(f"non-positive rate on ({s} -> {t}): {r!r}")
    for i, rew in enumerate(rewards):
        if rew.num_states != ctmc.num_states:
            problems.append(
                f"reward[{i}]: {rew.num_states} state rates for "
                f"{ctmc.num_states} states"
            )
        else:
            bad = ~(np.isfinite(rew.state_rates) & (rew.state_rates >= 0))
            for s in np.flatnonzero(bad):
                problems.append(
                    f"reward[{i}]: invalid state rate at {s}: "
                    f"{rew.state_rates[s]!r}"
                )
        for (s, t), v in rew.transition_rewards.items():
            if not (math.isfinite(v) and v >= 0):
                problems.append(
                    f"reward[{i}]: invalid transition reward on ({s} -> {t}): {v!r}"
                )
            if not (0 <= s < ctmc.num_states) or not ctmc.has_edge(s, t):
                problems.append(
                    f"reward[{i}]: dangling transition reward on ({s} -> {t}): "
                    "no such transition"
                )
    return problems
