"""Command-line interface.

Subcommands: validate, check, synthesize, enumerate, simulate.  Every
artifact-producing run writes a manifest recording the config hash and
all settings needed to reproduce it.  Exit codes: 0 success, 2 bad
input or configuration, 3 resource limits, 4 internal errors.

All primary artifacts (front/progress/estimate tables, plot scripts,
logs) are byte-identical across reruns with the same config and seed,
independent of --workers; the manifest is excluded from that guarantee
because it records wall-clock duration.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import traceback
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .config import load_problem_spec, read_config_bytes
from .design_space import (
    ControllerGenotype,
    ProblemSpec,
    build_ctmc,
    build_reward_structures,
    design_space_size,
)
from .errors import ConfigError, ConsistencyError, InputError, ResourceError
from .simulation import (
    estimate_rewards,
    interpret_trajectory,
    mape_log_csv,
    mape_log_lines,
    simulate,
)
from .solver import SolverSettings
from .synthesis import (
    DEFAULT_ENUMERATION_LIMIT,
    GaSettings,
    ParetoFront,
    evaluate,
    exhaustive_pareto,
    front_csv,
    nsga2,
    plot_script,
    progress_csv,
)

OBJECTIVE_NAMES = ("nuisance", "progress", "risk")


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record emitted beside every output artifact."""

    command: str
    config_path: str
    config_sha256: str
    settings: dict
    tool_version: str
    duration_seconds: float
    outputs: tuple[str, ...]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def _load_spec(args: argparse.Namespace) -> tuple[ProblemSpec, str]:
    raw = read_config_bytes(args.config)
    spec = load_problem_spec(args.config)
    horizon = getattr(args, "horizon_hours", None)
    if horizon is not None:
        if not horizon > 0:
            raise InputError(f"--horizon-hours must be positive, got {horizon}")
        spec = spec.with_horizon(horizon * 3600.0)
    return spec, hashlib.sha256(raw).hexdigest()


def _parse_genotype(spec: ProblemSpec, text: str) -> ControllerGenotype:
    expected = (
        f"expected {spec.genotype_length} hyphen-joined integers in "
        f"[0, {spec.num_options})"
    )
    parts = text.split("-")
    try:
        options = tuple(int(p) for p in parts)
    except ValueError:
        raise InputError(f"malformed genotype {text!r}: {expected}") from None
    if len(options) != spec.genotype_length or not all(
        0 <= o < spec.num_options for o in options
    ):
        raise InputError(f"malformed genotype {text!r}: {expected}")
    return ControllerGenotype(options)


def _write_outputs(directory: Path, artifacts: dict[str, str]) -> list[str]:
    """Write all artifacts or none: partially written files are removed
    when any write fails."""
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for name, text in artifacts.items():
            path = directory / name
            path.write_text(text)
            written.append(path)
    except OSError:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return [str(p) for p in written]


def _finish_run(
    args: argparse.Namespace,
    config_sha: str,
    settings: dict,
    artifacts: dict[str, str],
    started: float,
) -> None:
    outdir = Path(args.output)
    names = tuple(sorted(artifacts))
    manifest = RunManifest(
        command=args.command,
        config_path=str(args.config),
        config_sha256=config_sha,
        settings=settings,
        tool_version=__version__,
        duration_seconds=time.perf_counter() - started,
        outputs=names,
    )
    artifacts = dict(artifacts)
    artifacts["manifest.json"] = manifest.to_json()
    for path in _write_outputs(outdir, artifacts):
        print(f"wrote {path}")


def cmd_validate(args: argparse.Namespace) -> int:
    spec, config_sha = _load_spec(args)
    probe = ControllerGenotype((0,) * spec.genotype_length)
    violations = validate_model(spec, probe)
    if violations:
        raise ConsistencyError(
            "constructed model failed validation: " + "; ".join(violations)
        )
    print(f"config: {args.config} (sha256 {config_sha[:12]})")
    print(
        f"levels n={spec.n}, alerts m={spec.m} "
        f"({spec.num_alert_masks} masks), speed levels q={spec.q}"
    )
    print(
        f"tables: nuisance[{spec.num_alert_masks}], progress[{spec.q}], "
        f"risk[{spec.n}][{spec.q}]"
    )
    print(
        f"{spec.num_states} states, {spec.genotype_length} option parameters, "
        f"design space {design_space_size(spec)}"
    )
    print("ok")
    return 0


def validate_model(spec: ProblemSpec, genotype: ControllerGenotype) -> list[str]:
    from .ctmc import validate

    ctmc = build_ctmc(spec, genotype)
    return validate(ctmc, build_reward_structures(spec))


def cmd_check(args: argparse.Namespace) -> int:
    spec, _ = _load_spec(args)
    genotype = _parse_genotype(spec, args.genotype)
    settings = SolverSettings(epsilon=args.tolerance)
    objectives = evaluate(spec, genotype, settings)
    if args.json:
        print(
            json.dumps(
                {
                    "genotype": str(genotype),
                    "nuisance": objectives.nuisance,
                    "progress": objectives.progress,
                    "risk": objectives.risk,
                    "horizon_seconds": spec.horizon_T,
                    "solver_tolerance": args.tolerance,
                },
                sort_keys=True,
            )
        )
    else:
        print(f"genotype {genotype}")
        for name in OBJECTIVE_NAMES:
            print(f"{name:9} {getattr(objectives, name)!r}")
        print(f"solver tolerance {args.tolerance}")
    return 0


def _ga_settings(args: argparse.Namespace) -> GaSettings:
    return GaSettings(
        population_size=args.population,
        generations=args.generations,
        crossover_probability=args.crossover,
        mutation_probability_per_gene=args.mutation,
        tournament_size=args.tournament_size,
        seed=args.seed,
    )


def _front_artifacts(front: ParetoFront, with_progress: bool) -> dict[str, str]:
    artifacts = {
        "front.csv": front_csv(front),
        "plot_front.py": plot_script("front.csv"),
    }
    if with_progress:
        artifacts["progress.csv"] = progress_csv(front)
    return artifacts


def cmd_synthesize(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    spec, config_sha = _load_spec(args)
    ga = _ga_settings(args)
    solver = SolverSettings(epsilon=args.tolerance)
    front = nsga2(spec, ga, solver, workers=args.workers)
    settings = dict(asdict(ga), tolerance=args.tolerance, workers=args.workers)
    _finish_run(args, config_sha, settings, _front_artifacts(front, True), started)
    print(
        f"front: {len(front.entries)} controllers after "
        f"{front.metadata['evaluations']} evaluations"
    )
    return 0


def cmd_enumerate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    spec, config_sha = _load_spec(args)
    solver = SolverSettings(epsilon=args.tolerance)
    front = exhaustive_pareto(spec, solver, limit=args.limit, workers=args.workers)
    settings = {
        "limit": args.limit,
        "tolerance": args.tolerance,
        "workers": args.workers,
    }
    _finish_run(args, config_sha, settings, _front_artifacts(front, False), started)
    print(
        f"front: {len(front.entries)} of {front.metadata['evaluations']} "
        "genotypes are nondominated"
    )
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    spec, config_sha = _load_spec(args)
    genotype = _parse_genotype(spec, args.genotype)
    ctmc = build_ctmc(spec, genotype)
    rewards = build_reward_structures(spec)
    estimates = estimate_rewards(
        ctmc, rewards, spec.horizon_T, args.runs, args.seed, workers=args.workers
    )
    rows = []
    for name, estimate in zip(OBJECTIVE_NAMES, estimates):
        rows.append(
            f"{name},{estimate.mean!r},{estimate.std_error!r},"
            f"{estimate.runs},{estimate.confidence_99_half_width!r}"
        )
        print(
            f"{name:9} mean {estimate.mean:.6f}  "
            f"+/- {estimate.confidence_99_half_width:.6f} (99% CI, "
            f"{estimate.runs} runs)"
        )
    if args.output is None:
        if args.log:
            raise InputError("--log needs --output to know where to write")
        return 0
    artifacts = {
        "estimates.csv": "objective,mean,std_error,runs,ci99_half_width\n"
        + "\n".join(rows)
        + "\n"
    }
    if args.log:
        trajectory = simulate(ctmc, spec.horizon_T, args.seed)
        log = interpret_trajectory(spec, trajectory)
        artifacts["mape_log.txt"] = "\n".join(mape_log_lines(log)) + "\n"
        artifacts["mape_log.csv"] = mape_log_csv(log)
    settings = {
        "genotype": str(genotype),
        "runs": args.runs,
        "seed": args.seed,
        "workers": args.workers,
        "log": bool(args.log),
    }
    _finish_run(args, config_sha, settings, artifacts, started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attnctrl",
        description="Synthesize and analyse driver-attentiveness controllers.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="problem configuration file (TOML)")
    common.add_argument(
        "--horizon-hours",
        type=float,
        default=None,
        help="override the journey horizon from the config",
    )
    common.add_argument(
        "--tolerance",
        type=float,
        default=1e-6,
        help="solver truncation error budget (default 1e-6)",
    )
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument(
        "--workers",
        type=int,
        default=1,
        help="parallel evaluation threads; results do not depend on this",
    )

    p = sub.add_parser("validate", help="parse a config and report model sizes")
    p.add_argument("config", help="problem configuration file (TOML)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser(
        "check", parents=[common], help="exact objectives of one controller"
    )
    p.add_argument("genotype", help="hyphen-joined option integers, e.g. 0-3-1-2")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser(
        "synthesize", parents=[common], help="search for a Pareto-optimal front"
    )
    p.add_argument("--output", required=True, help="directory for output artifacts")
    p.add_argument("--population", type=int, default=100)
    p.add_argument("--generations", type=int, default=200)
    p.add_argument("--crossover", type=float, default=0.9)
    p.add_argument(
        "--mutation",
        type=float,
        default=None,
        help="per-gene mutation probability (default 1/genotype length)",
    )
    p.add_argument("--tournament-size", type=int, default=2)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser(
        "enumerate", parents=[common], help="exact Pareto front by enumeration"
    )
    p.add_argument("--output", required=True, help="directory for output artifacts")
    p.add_argument(
        "--limit",
        type=int,
        default=DEFAULT_ENUMERATION_LIMIT,
        help=f"refuse design spaces larger than this (default {DEFAULT_ENUMERATION_LIMIT})",
    )
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser(
        "simulate", parents=[common], help="Monte Carlo estimates for one controller"
    )
    p.add_argument("genotype", help="hyphen-joined option integers")
    p.add_argument("--runs", type=int, default=10_000)
    p.add_argument("--output", default=None, help="directory for output artifacts")
    p.add_argument(
        "--log",
        action="store_true",
        help="also write the first trajectory's event log (needs --output)",
    )
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except ConsistencyError as exc:
        print(f"internal consistency error: {exc}", file=sys.stderr)
        return 4
    except Exception:
        traceback.print_exc()
        return 4


if __name__ == "__main__":
    sys.exit(main())
