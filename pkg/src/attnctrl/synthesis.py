"""Multi-objective synthesis of controller option vectors.

Searches the genotype space for controllers that minimise nuisance,
maximise progress, and minimise risk over the journey horizon.  The
search is an NSGA-II-style genetic algorithm over an unbounded
nondominated archive; an exhaustive enumerator provides the exact
answer on small instances, and an exact 3-D hypervolume measures front
quality.

Everything here is deterministic: the GA draws all random variates from
one seeded generator in a fixed per-generation order, so results do not
depend on evaluation caching or on the worker count used for parallel
solver calls.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np

from .design_space import (
    ControllerGenotype,
    ProblemSpec,
    build_ctmc,
    build_reward_structures,
    check_genotype,
    design_space_size,
)
from .errors import ConsistencyError, InputError
from .solver import SolverSettings, expected_cumulative_rewards

DEFAULT_ENUMERATION_LIMIT = 4096


@dataclass(frozen=True)
class ObjectiveVector:
    """Cumulative nuisance (min), progress (max), risk (min) over the
    journey horizon."""

    nuisance: float
    progress: float
    risk: float

    def __post_init__(self) -> None:
        values = (self.nuisance, self.progress, self.risk)
        if not all(math.isfinite(v) for v in values):
            raise InputError(f"objective values must be finite, got {values}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.nuisance, self.progress, self.risk)

    def oriented(self) -> tuple[float, float, float]:
        """All-minimization view used by sorting and hypervolume."""
        return (self.nuisance, -self.progress, self.risk)


@dataclass(frozen=True)
class GaSettings:
    population_size: int = 100
    generations: int = 200
    crossover_probability: float = 0.9
    # None means 1 / genotype length, resolved per problem instance.
    mutation_probability_per_gene: float | None = None
    tournament_size: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        problems = []
        if self.population_size < 4 or self.population_size % 2:
            problems.append(
                f"population_size must be even and at least 4, "
                f"got {self.population_size}"
            )
        if self.generations < 0:
            problems.append(f"generations must be nonnegative, got {self.generations}")
        if not 0.0 <= self.crossover_probability <= 1.0:
            problems.append(
                f"crossover_probability outside [0, 1]: {self.crossover_probability}"
            )
        mut = self.mutation_probability_per_gene
        if mut is not None and not 0.0 <= mut <= 1.0:
            problems.append(f"mutation_probability_per_gene outside [0, 1]: {mut}")
        if self.tournament_size < 2:
            problems.append(
                f"tournament_size must be at least 2, got {self.tournament_size}"
            )
        if problems:
            raise InputError("; ".join(problems))


@dataclass(frozen=True)
class ParetoFront:
    """Mutually nondominated (genotype, objectives) pairs, sorted by
    genotype, plus run metadata."""

    entries: tuple[tuple[ControllerGenotype, ObjectiveVector], ...]
    metadata: dict = field(default_factory=dict)

    def objectives(self) -> list[ObjectiveVector]:
        return [obj for _, obj in self.entries]


def evaluate(
    spec: ProblemSpec,
    genotype: ControllerGenotype,
    settings: SolverSettings = SolverSettings(),
) -> ObjectiveVector:
    """Exact objective vector of one controller: builds its CTMC and
    accumulates all three rewards from a single solver pass."""
    check_genotype(spec, genotype)
    ctmc = build_ctmc(spec, genotype)
    rewards = build_reward_structures(spec)
    nuisance, progress, risk = expected_cumulative_rewards(
        ctmc, rewards, spec.horizon_T, settings
    )
    return ObjectiveVector(nuisance=nuisance, progress=progress, risk=risk)


def dominates(u: ObjectiveVector, v: ObjectiveVector) -> bool:
    """Pareto dominance: no worse in all objectives, better in one."""
    if u.nuisance > v.nuisance or u.risk > v.risk or u.progress < v.progress:
        return False
    return u.nuisance < v.nuisance or u.risk < v.risk or u.progress > v.progress


def _domination_matrix(objs: list[ObjectiveVector]) -> np.ndarray:
    """dom[i, j] == True iff objs[i] dominates objs[j]."""
    nu = np.array([o.nuisance for o in objs])
    pr = np.array([o.progress for o in objs])
    ri = np.array([o.risk for o in objs])
    no_worse = (
        (nu[:, None] <= nu[None, :])
        & (pr[:, None] >= pr[None, :])
        & (ri[:, None] <= ri[None, :])
    )
    strictly_better = (
        (nu[:, None] < nu[None, :])
        | (pr[:, None] > pr[None, :])
        | (ri[:, None] < ri[None, :])
    )
    return no_worse & strictly_better


def fast_nondominated_sort(objs: list[ObjectiveVector]) -> list[list[int]]:
    """Partition indices into fronts; front 0 is the nondominated set,
    later fronts become nondominated once earlier ones are removed."""
    if not objs:
        return []
    dom = _domination_matrix(objs)
    counts = dom.sum(axis=0)
    alive = np.ones(len(objs), dtype=bool)
    fronts = []
    while alive.any():
        members = np.flatnonzero(alive & (counts == 0))
        if members.size == 0:
            raise ConsistencyError("domination counts left no undominated point")
        fronts.append([int(i) for i in members])
        alive[members] = False
        counts = counts - dom[members].sum(axis=0)
    return fronts


def crowding_distance(front: list[ObjectiveVector]) -> list[float]:
    """NSGA-II diversity measure: boundary points per objective get
    infinity, interior points the sum of normalized neighbor gaps.
    Objectives with zero range across the front contribute nothing."""
    size = len(front)
    if size <= 2:
        return [math.inf] * size
    distance = [0.0] * size
    for values in zip(*(o.as_tuple() for o in front)):
        order = sorted(range(size), key=lambda i: values[i])
        lo, hi = values[order[0]], values[order[-1]]
        if hi == lo:
            continue
        distance[order[0]] = distance[order[-1]] = math.inf
        for k in range(1, size - 1):
            gap = values[order[k + 1]] - values[order[k - 1]]
            distance[order[k]] += gap / (hi - lo)
    return distance


class _Archive:
    """Unbounded nondominated archive keyed by genotype.

    A candidate is inserted unless some member dominates it; members it
    dominates are removed.  Entries with equal objective vectors but
    different genotypes are all retained: they are distinct controllers.
    Since no nondominated point is ever discarded, the archive's
    hypervolume never decreases.
    """

    def __init__(self) -> None:
        self._members: dict[tuple[int, ...], ObjectiveVector] = {}

    def __len__(self) -> int:
        return len(self._members)

    def offer(self, options: tuple[int, ...], obj: ObjectiveVector) -> None:
        if options in self._members:
            return
        remove = []
        for other_options, other in self._members.items():
            if dominates(other, obj):
                return
            if dominates(obj, other):
                remove.append(other_options)
        for key in remove:
            del self._members[key]
        self._members[options] = obj

    def entries(self) -> list[tuple[ControllerGenotype, ObjectiveVector]]:
        return [
            (ControllerGenotype(options), obj)
            for options, obj in sorted(self._members.items())
        ]

    def objective_tuples(self) -> list[tuple[float, float, float]]:
        return [obj.as_tuple() for obj in self._members.values()]


class _CachedEvaluator:
    """Memoizes evaluate() by genotype; optionally fans solver calls
    out to a thread pool.  Results are independent of worker count."""

    def __init__(self, spec: ProblemSpec, settings: SolverSettings, workers: int):
        self.spec = spec
        self.settings = settings
        self.workers = max(1, workers)
        self.cache: dict[tuple[int, ...], ObjectiveVector] = {}
        self.evaluations = 0

    def _solve(self, options: tuple[int, ...]) -> ObjectiveVector:
        return evaluate(self.spec, ControllerGenotype(options), self.settings)

    def evaluate_all(
        self, population: list[tuple[int, ...]]
    ) -> list[ObjectiveVector]:
        missing = sorted({opts for opts in population if opts not in self.cache})
        if missing:
            self.evaluations += len(missing)
            if self.workers == 1 or len(missing) == 1:
                solved = map(self._solve, missing)
            else:
                with ThreadPoolExecutor(max_workers=self.workers) as pool:
                    solved = pool.map(self._solve, missing)
            self.cache.update(zip(missing, solved))
        return [self.cache[opts] for opts in population]


def _assert_mutually_nondominated(
    entries: list[tuple[ControllerGenotype, ObjectiveVector]]
) -> None:
    objs = [obj for _, obj in entries]
    dom = _domination_matrix(objs) if objs else None
    if dom is not None and dom.any():
        i, j = map(int, np.argwhere(dom)[0])
        raise ConsistencyError(
            f"front entry {entries[i][0]} dominates {entries[j][0]}"
        )


def _tournament_winner(
    candidates: np.ndarray, ranks: list[int], crowding: list[float]
) -> int:
    best = int(candidates[0])
    for c in candidates[1:]:
        c = int(c)
        if (ranks[c], -crowding[c]) < (ranks[best], -crowding[best]):
            best = c
    return best


def _rank_and_crowding(
    objs: list[ObjectiveVector],
) -> tuple[list[int], list[float], list[list[int]]]:
    fronts = fast_nondominated_sort(objs)
    ranks = [0] * len(objs)
    crowding = [0.0] * len(objs)
    for rank, front in enumerate(fronts):
        distances = crowding_distance([objs[i] for i in front])
        for i, d in zip(front, distances):
            ranks[i] = rank
            crowding[i] = d
    return ranks, crowding, fronts


def nsga2(
    spec: ProblemSpec,
    ga: GaSettings,
    solver: SolverSettings = SolverSettings(),
    workers: int = 1,
    progress_callback: Callable[[dict], None] | None = None,
) -> ParetoFront:
    """NSGA-II search over the controller design space.

    Binary-tournament selection on (rank, crowding), uniform crossover,
    per-gene uniform-reset mutation, (mu+lambda) environmental
    selection.  Returns the nondominated archive of every candidate
    evaluated along the way, sorted by genotype; per-generation progress
    records land in the metadata.  Deterministic given the seed.
    """
    started = time.perf_counter()
    length = spec.genotype_length
    num_options = spec.num_options
    pop_size = ga.population_size
    mutation = (
        ga.mutation_probability_per_gene
        if ga.mutation_probability_per_gene is not None
        else 1.0 / length
    )
    rng = np.random.default_rng(ga.seed)
    evaluator = _CachedEvaluator(spec, solver, workers)
    archive = _Archive()
    progress: list[dict] = []

    def record(generation: int, objs: list[ObjectiveVector]) -> None:
        best_nuisance = min(o.nuisance for o in objs)
        best_progress = max(o.progress for o in objs)
        best_risk = min(o.risk for o in objs)
        entry = {
            "generation": generation,
            "evaluations": evaluator.evaluations,
            "archive_size": len(archive),
            "best_nuisance": best_nuisance,
            "best_progress": best_progress,
            "best_risk": best_risk,
            "archive_objectives": archive.objective_tuples(),
        }
        progress.append(entry)
        if progress_callback is not None:
            progress_callback(entry)

    population = [
        tuple(int(g) for g in row)
        for row in rng.integers(0, num_options, size=(pop_size, length))
    ]
    objectives = evaluator.evaluate_all(population)
    for options, obj in zip(population, objectives):
        archive.offer(options, obj)
    record(0, objectives)

    for generation in range(1, ga.generations + 1):
        ranks, crowding, _ = _rank_and_crowding(objectives)
        # All variates are drawn unconditionally in a fixed order, so
        # the stream never depends on cache state or prior outcomes.
        tourneys = rng.integers(0, pop_size, size=(pop_size, ga.tournament_size))
        cross_draw = rng.random(size=pop_size // 2)
        swap_mask = rng.random(size=(pop_size // 2, length)) < 0.5
        mutate_mask = rng.random(size=(pop_size, length)) < mutation
        mutate_values = rng.integers(0, num_options, size=(pop_size, length))

        parents = [
            population[_tournament_winner(row, ranks, crowding)] for row in tourneys
        ]
        offspring = []
        for pair in range(pop_size // 2):
            a = list(parents[2 * pair])
            b = list(parents[2 * pair + 1])
            if cross_draw[pair] < ga.crossover_probability:
                for gene in range(length):
                    if swap_mask[pair, gene]:
                        a[gene], b[gene] = b[gene], a[gene]
            offspring.append(a)
            offspring.append(b)
        for child_index, child in enumerate(offspring):
            for gene in range(length):
                if mutate_mask[child_index, gene]:
                    child[gene] = int(mutate_values[child_index, gene])
        offspring = [tuple(child) for child in offspring]

        child_objs = evaluator.evaluate_all(offspring)
        for options, obj in zip(offspring, child_objs):
            archive.offer(options, obj)

        combined = population + offspring
        combined_objs = objectives + child_objs
        _, combined_crowding, fronts = _rank_and_crowding(combined_objs)
        chosen: list[int] = []
        for front in fronts:
            if len(chosen) + len(front) <= pop_size:
                chosen.extend(front)
            else:
                remaining = pop_size - len(chosen)
                # Most crowded first; ties resolved by combined index.
                ordered = sorted(front, key=lambda i: (-combined_crowding[i], i))
                chosen.extend(ordered[:remaining])
                break
        population = [combined[i] for i in chosen]
        objectives = [combined_objs[i] for i in chosen]
        record(generation, objectives)

    entries = archive.entries()
    _assert_mutually_nondominated(entries)
    metadata = {
        "algorithm": "nsga2",
        "population_size": pop_size,
        "generations": ga.generations,
        "crossover_probability": ga.crossover_probability,
        "mutation_probability_per_gene": mutation,
        "tournament_size": ga.tournament_size,
        "seed": ga.seed,
        "solver_epsilon": solver.epsilon,
        "evaluations": evaluator.evaluations,
        "front_size": len(entries),
        "progress": progress,
        "wall_clock_seconds": time.perf_counter() - started,
    }
    return ParetoFront(entries=tuple(entries), metadata=metadata)


def exhaustive_pareto(
    spec: ProblemSpec,
    solver: SolverSettings = SolverSettings(),
    limit: int = DEFAULT_ENUMERATION_LIMIT,
    workers: int = 1,
) -> ParetoFront:
    """Evaluate every genotype and return the exact nondominated set.

    Refuses design spaces larger than `limit` since enumeration cost is
    proportional to the exact size reported in the error.
    """
    started = time.perf_counter()
    size = design_space_size(spec)
    if size > limit:
        raise InputError(
            f"design space holds {size} genotypes, above the enumeration "
            f"limit {limit}; raise the limit or use nsga2"
        )
    evaluator = _CachedEvaluator(spec, solver, workers)
    genotypes = [
        tuple(options)
        for options in product(range(spec.num_options), repeat=spec.genotype_length)
    ]
    objectives = evaluator.evaluate_all(genotypes)
    archive = _Archive()
    for options, obj in zip(genotypes, objectives):
        archive.offer(options, obj)
    entries = archive.entries()
    _assert_mutually_nondominated(entries)
    metadata = {
        "algorithm": "exhaustive",
        "design_space_size": size,
        "solver_epsilon": solver.epsilon,
        "evaluations": evaluator.evaluations,
        "front_size": len(entries),
        "wall_clock_seconds": time.perf_counter() - started,
    }
    return ParetoFront(entries=tuple(entries), metadata=metadata)


def _staircase_area(points: list[tuple[float, float]], rx: float, ry: float) -> float:
    """Area of the union of boxes [x, rx] x [y, ry] over (x, y) points."""
    minimal: list[tuple[float, float]] = []
    best_y = math.inf
    for x, y in sorted(points):
        if y < best_y:
            minimal.append((x, y))
            best_y = y
    area = 0.0
    prev_y = ry
    for x, y in minimal:
        area += (rx - x) * (prev_y - y)
        prev_y = y
    return area


def hypervolume(front: list[ObjectiveVector], reference: ObjectiveVector) -> float:
    """Exact dominated hypervolume of a 3-objective front.

    All objectives are oriented as minimization; every front point must
    dominate the reference.  Computed by sweeping the risk axis and
    accumulating 2-D staircase areas of the slabs.
    """
    points = []
    for obj in front:
        if not dominates(obj, reference):
            raise InputError(
                f"front point {obj.as_tuple()} does not dominate the "
                f"reference {reference.as_tuple()}"
            )
        points.append(obj.oriented())
    if not points:
        return 0.0
    rx, ry, rz = reference.oriented()
    levels = sorted({p[2] for p in points})
    volume = 0.0
    xy: list[tuple[float, float]] = []
    for i, z in enumerate(levels):
        xy.extend((x, y) for x, y, pz in points if pz == z)
        z_next = levels[i + 1] if i + 1 < len(levels) else rz
        volume += _staircase_area(xy, rx, ry) * (z_next - z)
    return volume


def front_csv(front: ParetoFront) -> str:
    """Comma-separated front table with a '#' metadata header.

    Only reproducible metadata goes in the header (wall-clock time and
    per-generation progress stay in the manifest and progress log), so
    repeated runs with one seed emit byte-identical tables.  The last
    column flags rows whose objective vector also appears in another
    row (distinct controllers with identical objectives).
    """
    lines = []
    for key in sorted(front.metadata):
        if key in ("wall_clock_seconds", "progress"):
            continue
        lines.append(f"# {key}: {front.metadata[key]}")
    lines.append("genotype,nuisance,progress,risk,duplicate_objectives")
    counts: dict[tuple[float, float, float], int] = {}
    for _, obj in front.entries:
        counts[obj.as_tuple()] = counts.get(obj.as_tuple(), 0) + 1
    for genotype, obj in front.entries:
        flag = 1 if counts[obj.as_tuple()] > 1 else 0
        lines.append(
            f"{genotype},{obj.nuisance!r},{obj.progress!r},{obj.risk!r},{flag}"
        )
    return "\n".join(lines) + "\n"


def progress_csv(front: ParetoFront) -> str:
    """Per-generation progress table (GA fronts only)."""
    lines = ["generation,evaluations,archive_size,best_nuisance,best_progress,best_risk"]
    for entry in front.metadata.get("progress", []):
        lines.append(
            f"{entry['generation']},{entry['evaluations']},{entry['archive_size']},"
            f"{entry['best_nuisance']!r},{entry['best_progress']!r},{entry['best_risk']!r}"
        )
    return "\n".join(lines) + "\n"


def plot_script(csv_name: str) -> str:
    """Matplotlib script that renders a front CSV as a 3-D scatter."""
    return f'''"""Render the synthesized Pareto front ({csv_name}) in 3-D."""

import csv
from pathlib import Path

import matplotlib.pyplot as plt

rows = []
with Path(__file__).parent.joinpath({csv_name!r}).open() as handle:
    for row in csv.DictReader(
        line for line in handle if not line.startswith("#")
    ):
        rows.append(
            (float(row["nuisance"]), float(row["progress"]), float(row["risk"]))
        )

fig = plt.figure(figsize=(7, 6))
ax = fig.add_subplot(projection="3d")
ax.scatter(*zip(*rows), c=[r[2] for r in rows], cmap="viridis", s=25)
ax.set_xlabel("nuisance")
ax.set_ylabel("progress")
ax.set_zlabel("risk")
ax.set_title(f"Pareto front ({{len(rows)}} controllers)")
plt.tight_layout()
plt.show()
'''
