"""Regenerate the bundled example configs under configs/.

The driver transition rates in these files are illustrative placeholders
chosen so the instances are quick to solve at desk scale; they are not
measured data.  Degradation slows down when alerts are on and speeds up
slightly at reduced speed; improvement does the opposite.  Edit the
formulas here and rerun rather than hand-editing the generated files.
"""

from __future__ import annotations

import argparse
from pathlib import Path


def fmt(x: float) -> str:
    return repr(float(x))


def rate_records(
    n: int,
    num_masks: int,
    q: int,
    base_down: dict[int, float],
    base_up: dict[int, float],
    alert_slow: tuple[float, ...],
    alert_boost: tuple[float, ...],
    slow_speed_down: float,
    slow_speed_up: float,
) -> list[str]:
    """One [[driver_rates]] record per (transition, alerts, speed) cell.

    base_down[l] is the no-alert nominal-speed rate for degradation
    l -> l+1, base_up[l] the one for improvement l -> l-1.  Alerts divide
    the degradation rate by (1 + sum of alert_slow over active alerts)
    and multiply the improvement rate by (1 + sum of alert_boost).
    """
    lines = []
    for a in range(num_masks):
        slowdown = 1.0 + sum(alert_slow[i] for i in range(len(alert_slow)) if a >> i & 1)
        boost = 1.0 + sum(alert_boost[i] for i in range(len(alert_boost)) if a >> i & 1)
        for v in range(q):
            down_speed = slow_speed_down if v > 0 else 1.0
            up_speed = slow_speed_up if v > 0 else 1.0
            for lvl, base in base_down.items():
                lines.append(
                    record(lvl, lvl + 1, base / slowdown * down_speed, a, v)
                )
            for lvl, base in base_up.items():
                lines.append(record(lvl, lvl - 1, base * boost * up_speed, a, v))
    return lines


def record(src: int, dst: int, rate: float, alerts: int, speed: int) -> str:
    return (
        "[[driver_rates]]\n"
        f"from_level = {src}\n"
        f"to_level = {dst}\n"
        f"rate = {fmt(rate)}\n"
        f"alerts = [{alerts}]\n"
        f"speeds = [{speed}]\n"
    )


def header(title: str, n: int, m: int, q: int) -> str:
    return (
        f"# {title}\n"
        "# Driver transition rates below are illustrative placeholders,\n"
        "# not estimates from driving studies.  Regenerate with\n"
        "# scripts/make_example_configs.py.\n"
        "schema_version = 1\n"
        f"n = {n}\n"
        f"m = {m}\n"
        f"q = {q}\n"
    )


def reference_cfg() -> str:
    # Three attentiveness levels, two alerts, two speed levels; the
    # controller acts in 500 ms on average and the reactivation timer
    # fires every 4 s on average.  Four-hour journey.
    parts = [
        header("Reference instance: 3 levels, 2 alerts, 2 speed levels.", 3, 2, 2),
        "controller_action_rate = 2.0\n",
        "timer_rate = 0.25\n",
        "horizon_hours = 4.0\n",
        "mrm_enabled = false\n",
        "mrm_timeout_tau = 15.0\n",
        "risk_mrm = 15.0\n",
        "# Reward rates per hour: nuisance by alert mask (bit 0 = alert 1),\n"
        "# progress (km/h) by speed level, risk by (level, speed).\n",
        "nuisance = [0.0, 6.0, 10.0, 18.0]\n",
        "progress = [100.0, 70.0]\n",
        "risk = [[1.0, 0.6], [8.0, 4.5], [40.0, 22.0]]\n",
    ]
    parts += rate_records(
        n=3,
        num_masks=4,
        q=2,
        base_down={0: 1 / 30, 1: 1 / 40},
        base_up={1: 1 / 25, 2: 1 / 40},
        alert_slow=(0.8, 1.4),
        alert_boost=(1.6, 2.8),
        slow_speed_down=1.15,
        slow_speed_up=1.1,
    )
    return "\n".join(parts)


def tiny_cfg() -> str:
    parts = [
        header("Tiny instance: 2 levels, 1 alert, 1 speed level (4 genotypes).", 2, 1, 1),
        "controller_action_rate = 2.0\n",
        "timer_rate = 0.25\n",
        "horizon_hours = 1.0\n",
        "nuisance = [0.0, 8.0]\n",
        "progress = [100.0]\n",
        "risk = [[1.0], [30.0]]\n",
    ]
    parts += rate_records(
        n=2,
        num_masks=2,
        q=1,
        base_down={0: 1 / 30},
        base_up={1: 1 / 25},
        alert_slow=(0.9,),
        alert_boost=(2.0,),
        slow_speed_down=1.0,
        slow_speed_up=1.0,
    )
    return "\n".join(parts)


def small_cfg() -> str:
    parts = [
        header("Small instance: 2 levels, 2 alerts, 1 speed level (256 genotypes).", 2, 2, 1),
        "controller_action_rate = 2.0\n",
        "timer_rate = 0.25\n",
        "horizon_hours = 1.0\n",
        "nuisance = [0.0, 6.0, 10.0, 18.0]\n",
        "progress = [100.0]\n",
        "risk = [[1.0], [30.0]]\n",
    ]
    parts += rate_records(
        n=2,
        num_masks=4,
        q=1,
        base_down={0: 1 / 30},
        base_up={1: 1 / 25},
        alert_slow=(0.8, 1.4),
        alert_boost=(1.6, 2.8),
        slow_speed_down=1.0,
        slow_speed_up=1.0,
    )
    return "\n".join(parts)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--outdir", type=Path, default=Path(__file__).resolve().parent.parent / "configs"
    )
    args = parser.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    from attnctrl.config import load_problem_spec
    from attnctrl.design_space import design_space_size

    for name, text in [
        ("reference.cfg", reference_cfg()),
        ("tiny.cfg", tiny_cfg()),
        ("small.cfg", small_cfg()),
    ]:
        path = args.outdir / name
        path.write_text(text)
        spec = load_problem_spec(path)
        print(
            f"{path}: {spec.num_states} states, {spec.genotype_length} options, "
            f"design space {design_space_size(spec)}"
        )


if __name__ == "__main__":
    main()
