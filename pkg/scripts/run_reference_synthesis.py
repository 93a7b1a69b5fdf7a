"""Synthesize the controller front for a bundled instance end to end.

Loads a config (the 3-level reference instance by default), runs the
genetic search, writes front.csv / progress.csv / plot_front.py to the
output directory, and prints the extreme controllers of the resulting
front.  The default scale (population 100, 200 generations) takes a
couple of minutes on one core; results are deterministic per seed.
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from attnctrl.config import load_problem_spec
from attnctrl.solver import SolverSettings
from attnctrl.synthesis import GaSettings, front_csv, nsga2, plot_script, progress_csv

REPO_ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--config", type=Path, default=REPO_ROOT / "configs" / "reference.cfg"
    )
    parser.add_argument(
        "--output", type=Path, default=Path("runs") / "reference_synthesis"
    )
    parser.add_argument("--population", type=int, default=100)
    parser.add_argument("--generations", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--tolerance", type=float, default=1e-6)
    parser.add_argument("--report-every", type=int, default=20)
    args = parser.parse_args()

    spec = load_problem_spec(args.config)
    ga = GaSettings(
        population_size=args.population,
        generations=args.generations,
        seed=args.seed,
    )

    def report(entry: dict) -> None:
        generation = entry["generation"]
        if generation % args.report_every and generation != args.generations:
            return
        print(
            f"gen {generation:4d}  archive {entry['archive_size']:5d}  "
            f"evaluations {entry['evaluations']:6d}  "
            f"best nuisance {entry['best_nuisance']:8.3f}  "
            f"best progress {entry['best_progress']:8.2f}  "
            f"best risk {entry['best_risk']:8.3f}"
        )

    started = time.perf_counter()
    front = nsga2(
        spec,
        ga,
        SolverSettings(epsilon=args.tolerance),
        workers=args.workers,
        progress_callback=report,
    )
    elapsed = time.perf_counter() - started

    args.output.mkdir(parents=True, exist_ok=True)
    (args.output / "front.csv").write_text(front_csv(front))
    (args.output / "progress.csv").write_text(progress_csv(front))
    (args.output / "plot_front.py").write_text(plot_script("front.csv"))

    print(
        f"\n{len(front.entries)} nondominated controllers from "
        f"{front.metadata['evaluations']} evaluations in {elapsed:.1f}s"
    )
    extremes = [
        ("least nuisance", lambda pair: (pair[1].nuisance, -pair[1].progress)),
        ("most progress", lambda pair: (-pair[1].progress, pair[1].risk)),
        ("least risk", lambda pair: (pair[1].risk, pair[1].nuisance)),
    ]
    for label, key in extremes:
        genotype, obj = min(front.entries, key=key)
        print(
            f"  {label:14} {genotype}  nuisance {obj.nuisance:8.3f}  "
            f"progress {obj.progress:8.2f}  risk {obj.risk:8.3f}"
        )
    print(f"artifacts written to {args.output}")


if __name__ == "__main__":
    main()
