"""Drive every CLI subcommand end to end in a scratch directory.

Simulates a tiny benchmark twice (artifacts must be byte-identical),
builds a persisted study, re-estimates it from the event log, runs the
post-hoc analysis, and exports a mesh.  Exits non-zero on any failure.
"""

import filecmp
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np


def run(*args):
    cmd = [sys.executable, "-m", "formchoice.cli", *args]
    res = subprocess.run(cmd, capture_output=True, text=True)
    if res.returncode != 0:
        print(res.stdout)
        print(res.stderr, file=sys.stderr)
        raise SystemExit(f"command failed: {' '.join(args)}")
    return res.stdout


def build_event_log(path: Path) -> None:
    from formchoice.config import StudyConfig
    from formchoice.sampler import GAConfig
    from formchoice.simulation import (
        gen_population,
        make_scenario,
        simulate_form_answer,
        simulate_purchase_answer,
    )
    from formchoice.survey import EventStore, Study

    config = StudyConfig(study_id="drive", seed=7, rounds=3,
                         validation_form=1, validation_purchase=1,
                         expected_respondents=3,
                         ga_first=GAConfig(4, 6), ga_second=GAConfig(4, 6))
    study = Study(config, store=EventStore(path))
    population = gen_population(make_scenario("low", "low", "low"), 3,
                                np.random.default_rng(1))
    for i, respondent in enumerate(population):
        rng = np.random.default_rng([2, i])
        sid = study.create_session()["session_id"]
        while True:
            q = study.next_question(sid)
            x1, x2 = (study.design_vector(d) for d in q["form_pair"])
            if q["question_type"] == "form":
                value = simulate_form_answer(respondent, x1, x2, rng)
            else:
                a1, a2 = q["function_profiles"]
                value = simulate_purchase_answer(respondent, x1, x2,
                                                 a1, a2, rng)
            result = study.submit_answer(
                sid, {"type": q["question_type"], "value": value})
            if result["status"] == "finished":
                break


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)

        sim_args = ["simulate", "--scenario", "low/low/low", "--seeds", "1",
                    "--respondents", "3", "--questions", "6",
                    "--holdouts", "10", "--fast"]
        run(*sim_args, "--out", str(tmp / "sim_a"))
        run(*sim_args, "--out", str(tmp / "sim_b"))
        for name in ("hit_rates.csv", "summary.csv", "hit_rates.png",
                     "manifest.json"):
            assert (tmp / "sim_a" / name).exists(), name
            assert filecmp.cmp(tmp / "sim_a" / name, tmp / "sim_b" / name,
                               shallow=False), f"{name} differs across reruns"

        log = tmp / "events.jsonl"
        build_event_log(log)
        run("estimate", str(log), "--out", str(tmp / "models.json"),
            "--hb-iterations", "600", "--hb-burn-in", "300", "--hb-thin", "2")
        models = json.loads((tmp / "models.json").read_text())
        assert len(models["respondents"]) == 3

        run("analyze", str(tmp / "models.json"), "--out", str(tmp / "post"),
            "--clusters", "2", "--resolution", "4", "--fast")
        for name in ("importances.csv", "clusters.csv", "tradeoffs.csv",
                     "wtp.json", "segments.png", "designs.png",
                     "design_cluster0.json", "mesh_cluster0.json"):
            assert (tmp / "post" / name).exists(), name

        run("export-mesh", str(tmp / "post" / "design_cluster1.json"),
            "--resolution", "4", "--out", str(tmp / "mesh.json"))
        mesh = json.loads((tmp / "mesh.json").read_text())
        assert len(mesh["vertices"]) > 0 and len(mesh["faces"]) > 0

    print("CLI DRIVE PASSED")


if __name__ == "__main__":
    main()
