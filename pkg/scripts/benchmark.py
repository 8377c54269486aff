"""Produce the benchmark artifact consumed by the acceptance tests.

Runs the full scenario battery (8 scenarios x 5 seeds x M1/M2/M3) plus
the answer-noise and comparative-judgment robustness cells, and writes
everything to tests/artifacts/battery.json.  Takes a few hours on one
core; rerun only when the models or the laboratory change.
"""

import json
import time
from dataclasses import asdict
from pathlib import Path

from formchoice.simulation import (
    SimSettings,
    make_scenario,
    run_experiment,
    scenario_grid,
)

OUT = Path(__file__).resolve().parent.parent / "tests" / "artifacts" / "battery.json"


def main() -> None:
    settings = SimSettings()
    runs: list[dict] = []
    t0 = time.time()

    def log(msg: str) -> None:
        print(f"[{time.time() - t0:7.0f}s] {msg}", flush=True)

    def doc() -> dict:
        return {
            "n_respondents": 100,
            "n_questions": 20,
            "holdouts": [100, 100],
            "settings": {
                "hb_iterations": settings.hb_iterations,
                "hb_burn_in": settings.hb_burn_in,
                "hb_thin": settings.hb_thin,
                "ga_first": asdict(settings.ga_first),
                "ga_second": asdict(settings.ga_second),
            },
            "runs": runs,
        }

    def cell(variant, scenario, seed, flip=0.0, margins=(1.0, 2.0),
             tag="battery"):
        r = run_experiment(variant, scenario, seed=seed, flip_prob=flip,
                           margins=margins, settings=settings)
        runs.append({
            "tag": tag,
            "variant": variant,
            "scenario": scenario.name,
            "seed": seed,
            "flip_prob": flip,
            "margins": list(margins),
            "form_hit_rate": r.form_hit_rate,
            "overall_hit_rate": r.overall_hit_rate,
            "form_importance_rmse": r.form_importance_rmse,
        })
        log(f"{tag} {scenario.name} s{seed} {variant}: "
            f"f={r.form_hit_rate:.4f} o={r.overall_hit_rate:.4f} "
            f"rmse={r.form_importance_rmse:.3f} ({r.runtime_s:.0f}s)")
        OUT.parent.mkdir(parents=True, exist_ok=True)
        OUT.with_suffix(".partial.json").write_text(json.dumps(doc()))

    for scenario in scenario_grid():
        for seed in range(5):
            for variant in ("M1", "M2", "M3"):
                cell(variant, scenario, seed)

    hlh = make_scenario("high", "low", "high")
    for flip in (0.1, 0.2):
        for seed in range(5):
            cell("M3", hlh, seed, flip=flip, tag="noise")
    for margins in ((1000.0, 2000.0), (1.0, 10.0)):
        for seed in range(5):
            cell("M3", hlh, seed, margins=margins, tag="cj")

    OUT.write_text(json.dumps(doc(), indent=1) + "\n")
    OUT.with_suffix(".partial.json").unlink(missing_ok=True)
    log(f"wrote {OUT} ({len(runs)} runs)")


if __name__ == "__main__":
    main()
