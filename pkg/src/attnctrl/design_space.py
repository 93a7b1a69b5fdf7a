"""Parametric CTMC design space for driver-attentiveness management.

A problem instance has ``n`` driver attentiveness levels (0 = attentive,
n-1 = inattentive), ``m`` independent alerts and ``q`` speed levels
(0 = nominal).  A candidate controller assigns to every context
``(level >= 1, active alerts, speed)`` one of the ``2^m * q`` possible
(alerts, speed) combinations; the vector of these assignments is the
controller genotype.  Each genotype induces one CTMC over the state set
(level, alerts, speed, controller active?) built from three transition
families:

    1. driver attentiveness changes, leaving controller-idle states and
       activating the controller;
    2. fixed controller actions: the reset to the initial state when the
       driver is found attentive, and the periodic timer that reactivates
       the controller while the driver is not attentive;
    3. the controller's chosen (alerts, speed) option, after which the
       controller deactivates.

Optionally a minimum-risk-manoeuvre (MRM) extension adds one dedicated
state entered from the inattentive level at rate ``1/tau``.

State indexing: controller flag fastest, then speed, then alert bitmask,
then level; the MRM state, when enabled, is the last index.  Genotype
indexing: (level-1) outermost, then alert bitmask, then speed.  Alert
bitmask bit ``i`` is alert ``i+1``; options decode as
``alerts = option % 2^m``, ``speed = option // 2^m``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .ctmc import Ctmc, RewardStructure
from .errors import InputError


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A full driver-attentiveness problem instance.

    All rates are per second and the horizon is in seconds; the
    configuration loader converts from the file's units.
    ``driver_rates[l, l', a, v]`` is the rate of the attentiveness
    transition ``l -> l'`` while alerts ``a`` and speed ``v`` are in
    effect; zero entries mean no transition, and the diagonal must be
    zero.
    """

    n: int
    m: int
    q: int
    nuisance: np.ndarray
    progress: np.ndarray
    risk: np.ndarray
    driver_rates: np.ndarray
    controller_action_rate: float
    timer_rate: float
    horizon_T: float
    risk_mrm: float = 0.0
    mrm_timeout_tau: float = 15.0
    mrm_enabled: bool = False

    def __post_init__(self):
        for name in ("nuisance", "progress", "risk", "driver_rates"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float))
            getattr(self, name).flags.writeable = False
        problems = self._invariant_violations()
        if problems:
            raise InputError("invalid problem spec: " + "; ".join(problems))

    def _invariant_violations(self) -> list[str]:
        p = []
        if self.n < 2:
            p.append(f"n must be >= 2, got {self.n}")
        if self.m < 1:
            p.append(f"m must be >= 1, got {self.m}")
        if self.q < 1:
            p.append(f"q must be >= 1, got {self.q}")
        if p:
            return p
        na = 1 << self.m
        if self.nuisance.shape != (na,):
            p.append(f"nuisance must have 2^m = {na} entries")
        elif self.nuisance[0] != 0.0:
            p.append("nuisance[0] must be 0 (no alerts cause no nuisance)")
        if self.progress.shape != (self.q,):
            p.append(f"progress must have q = {self.q} entries")
        if self.risk.shape != (self.n, self.q):
            p.append(f"risk must be an {self.n} x {self.q} table")
        if self.driver_rates.shape != (self.n, self.n, na, self.q):
            p.append(
                f"driver_rates must have shape ({self.n}, {self.n}, {na}, {self.q})"
            )
        elif np.any(np.diagonal(self.driver_rates, axis1=0, axis2=1) != 0.0):
            p.append("driver_rates diagonal (l -> l) must be zero")
        for name in ("nuisance", "progress", "risk", "driver_rates"):
            table = getattr(self, name)
            if not np.all(np.isfinite(table) & (table >= 0)):
                p.append(f"{name} entries must be finite and nonnegative")
        if not self.controller_action_rate > 0:
            p.append("controller_action_rate must be positive")
        if not self.timer_rate > 0:
            p.append("timer_rate must be positive")
        if not self.horizon_T > 0:
            p.append("horizon_T must be positive")
        if not self.mrm_timeout_tau > 0:
            p.append("mrm_timeout_tau must be positive")
        if not (np.isfinite(self.risk_mrm) and self.risk_mrm >= 0):
            p.append("risk_mrm must be finite and nonnegative")
        return p

    @property
    def num_alert_masks(self) -> int:
        return 1 << self.m

    @property
    def num_options(self) -> int:
        return self.num_alert_masks * self.q

    @property
    def genotype_length(self) -> int:
        return (self.n - 1) * self.num_alert_masks * self.q

    @property
    def num_states(self) -> int:
        base = self.n * self.num_alert_masks * self.q * 2
        return base + 1 if self.mrm_enabled else base

    @property
    def mrm_state(self) -> int | None:
        return self.num_states - 1 if self.mrm_enabled else None

    def with_horizon(self, horizon_seconds: float) -> "ProblemSpec":
        return replace(self, horizon_T=horizon_seconds)


@dataclass(frozen=True)
class StateCoord:
    """One point of the state set (level, alerts, speed, controller flag)."""

    level: int
    alerts: int
    speed: int
    controller_active: bool


@dataclass(frozen=True)
class ControllerGenotype:
    """Option vector of one candidate controller, ordered per module docstring."""

    options: tuple[int, ...]

    def __init__(self, options: Sequence[int]):
        object.__setattr__(self, "options", tuple(int(o) for o in options))

    def __str__(self) -> str:
        return "-".join(str(o) for o in self.options)


def check_genotype(spec: ProblemSpec, genotype: ControllerGenotype) -> None:
    """Raise InputError unless the genotype fits the spec's design space."""
    if len(genotype.options) != spec.genotype_length:
        raise InputError(
            f"genotype has {len(genotype.options)} options, expected "
            f"{spec.genotype_length} for n={spec.n}, m={spec.m}, q={spec.q}"
        )
    for i, o in enumerate(genotype.options):
        if not 0 <= o < spec.num_options:
            raise InputError(
                f"genotype option [{i}] = {o} out of range [0, {spec.num_options})"
            )


def state_index(spec: ProblemSpec, coord: StateCoord) -> int:
    """Bijective index of a coordinate; controller flag varies fastest."""
    if not 0 <= coord.level < spec.n:
        raise InputError(f"level {coord.level} out of range [0, {spec.n})")
    if not 0 <= coord.alerts < spec.num_alert_masks:
        raise InputError(
            f"alert bitmask {coord.alerts} out of range [0, {spec.num_alert_masks})"
        )
    if not 0 <= coord.speed < spec.q:
        raise InputError(f"speed level {coord.speed} out of range [0, {spec.q})")
    return (
        (coord.level * spec.num_alert_masks + coord.alerts) * spec.q + coord.speed
    ) * 2 + int(coord.controller_active)


def state_coord(spec: ProblemSpec, index: int) -> StateCoord:
    """Inverse of :func:`state_index`; the MRM state has no coordinate."""
    if spec.mrm_enabled and index == spec.mrm_state:
        raise InputError("the MRM state has no (level, alerts, speed) coordinate")
    base = spec.n * spec.num_alert_masks * spec.q * 2
    if not 0 <= index < base:
        raise InputError(f"state index {index} out of range [0, {base})")
    active = bool(index & 1)
    index >>= 1
    speed = index % spec.q
    index //= spec.q
    alerts = index % spec.num_alert_masks
    level = index // spec.num_alert_masks
    return StateCoord(level, alerts, speed, active)


def decode_option(spec: ProblemSpec, option: int) -> tuple[int, int]:
    """Option integer -> (alert bitmask, speed level); alerts in the low bits."""
    if not 0 <= option < spec.num_options:
        raise InputError(f"option {option} out of range [0, {spec.num_options})")
    return option % spec.num_alert_masks, option // spec.num_alert_masks


def encode_option(spec: ProblemSpec, alerts: int, speed: int) -> int:
    if not 0 <= alerts < spec.num_alert_masks:
        raise InputError(f"alert bitmask {alerts} out of range")
    if not 0 <= speed < spec.q:
        raise InputError(f"speed level {speed} out of range")
    return speed * spec.num_alert_masks + alerts


def option_index(spec: ProblemSpec, level: int, alerts: int, speed: int) -> int:
    """Genotype position of the controller context (level >= 1, alerts, speed)."""
    if not 1 <= level < spec.n:
        raise InputError(f"controller contexts need level in [1, {spec.n})")
    return ((level - 1) * spec.num_alert_masks + alerts) * spec.q + speed


def design_space_size(spec: ProblemSpec) -> int:
    """Number of candidate controllers, (2^m q)^((n-1) 2^m q), exactly."""
    return spec.num_options**spec.genotype_length


def _state_label(spec: ProblemSpec, coord: StateCoord) -> str:
    bits = format(coord.alerts, f"0{spec.m}b")[::-1]  # bit i printed as alert i+1
    flag = "ctl" if coord.controller_active else "idle"
    return f"l{coord.level} a{bits} v{coord.speed} {flag}"


def build_ctmc(spec: ProblemSpec, genotype: ControllerGenotype) -> Ctmc:
    """Materialize the CTMC induced by one controller genotype."""
    check_genotype(spec, genotype)
    na, q = spec.num_alert_masks, spec.q
    initial = state_index(spec, StateCoord(0, 0, 0, False))
    edges: list[tuple[int, int, float]] = []
    labels: dict[int, str] = {}

    for level in range(spec.n):
        for alerts in range(na):
            for speed in range(q):
                idle = state_index(spec, StateCoord(level, alerts, speed, False))
                active = state_index(spec, StateCoord(level, alerts, speed, True))
                labels[idle] = _state_label(spec, StateCoord(level, alerts, speed, False))
                labels[active] = _state_label(spec, StateCoord(level, alerts, speed, True))

                # Family 1: driver attentiveness changes (controller idle
                # -> activated, alerts and speed unchanged).
                for target_level in range(spec.n):
                    rate = spec.driver_rates[level, target_level, alerts, speed]
                    if rate > 0.0:
                        edges.append(
                            (
                                idle,
                                state_index(
                                    spec, StateCoord(target_level, alerts, speed, True)
                                ),
                                float(rate),
                            )
                        )

                if level == 0:
                    # Family 2a: driver found attentive -> clear alerts,
                    # nominal speed, controller deactivates.
                    edges.append((active, initial, spec.controller_action_rate))
                else:
                    # Family 2b: periodic timer reactivation while the
                    # driver is not attentive.
                    edges.append((idle, active, spec.timer_rate))
                    # Family 3: the controller's chosen option, after
                    # which it deactivates.
                    opt = genotype.options[option_index(spec, level, alerts, speed)]
                    new_alerts, new_speed = decode_option(spec, opt)
                    edges.append(
                        (
                            active,
                            state_index(
                                spec, StateCoord(level, new_alerts, new_speed, False)
                            ),
                            spec.controller_action_rate,
                        )
                    )

    if spec.mrm_enabled:
        mrm = spec.mrm_state
        labels[mrm] = "MRM"
        timeout_rate = 1.0 / spec.mrm_timeout_tau
        for alerts in range(na):
            for speed in range(q):
                for flag in (False, True):
                    src = state_index(spec, StateCoord(spec.n - 1, alerts, speed, flag))
                    edges.append((src, mrm, timeout_rate))
        edges.append((mrm, initial, spec.controller_action_rate))

    return Ctmc.from_rates(spec.num_states, initial, edges, labels)


def build_reward_structures(
    spec: ProblemSpec,
) -> tuple[RewardStructure, RewardStructure, RewardStructure]:
    """Nuisance, progress and risk reward structures over the state indexing.

    State rates depend only on the relevant coordinate (alerts, speed and
    (level, speed) respectively).  The MRM state, when present, accrues
    nothing; instead each transition into it carries the one-off
    ``risk_mrm`` as a transition reward on the risk structure.
    """
    num = spec.num_states
    nuisance = np.zeros(num)
    progress = np.zeros(num)
    risk = np.zeros(num)
    for idx in range(spec.n * spec.num_alert_masks * spec.q * 2):
        c = state_coord(spec, idx)
        nuisance[idx] = spec.nuisance[c.alerts]
        progress[idx] = spec.progress[c.speed]
        risk[idx] = spec.risk[c.level, c.speed]

    risk_transitions: dict[tuple[int, int], float] = {}
    if spec.mrm_enabled:
        mrm = spec.mrm_state
        for alerts in range(spec.num_alert_masks):
            for speed in range(spec.q):
                for flag in (False, True):
                    src = state_index(spec, StateCoord(spec.n - 1, alerts, speed, flag))
                    risk_transitions[(src, mrm)] = spec.risk_mrm

    return (
        RewardStructure(nuisance),
        RewardStructure(progress),
        RewardStructure(risk, risk_transitions),
    )
