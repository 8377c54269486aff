"""End-to-end drive of the survey service over live HTTP.

Boots uvicorn in a subprocess, runs two respondents through a complete
study (all learning rounds, validation block, mesh fetch), finalizes,
then replays the persisted event log and checks it reproduces the
served form models.  Exits non-zero on any failure.
"""

import json
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import httpx
import numpy as np

PORT = 8731
BASE = f"http://127.0.0.1:{PORT}"


def wait_for_health(client, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        try:
            if client.get(f"{BASE}/health").status_code == 200:
                return
        except httpx.TransportError:
            time.sleep(0.2)
    raise RuntimeError("service never became healthy")


def run_session(client, study_id):
    sid = client.post(f"{BASE}/studies/{study_id}/sessions").json()["session_id"]
    n_questions = 0
    meshed = False
    while True:
        q = client.get(f"{BASE}/sessions/{sid}/next").json()
        n_questions += 1
        if not meshed:
            mesh = client.get(f"{BASE}{q['mesh_urls'][0]}",
                              params={"resolution": 4}).json()
            assert len(mesh["vertices"]) > 0 and len(mesh["faces"]) > 0
            meshed = True
        value = "left_better" if q["question_type"] == "form" else "left"
        r = client.post(f"{BASE}/sessions/{sid}/answer",
                        json={"type": q["question_type"], "value": value})
        r.raise_for_status()
        if r.json()["status"] == "finished":
            return sid, n_questions


def main():
    log_path = Path(tempfile.mkdtemp()) / "study.jsonl"
    config = {
        "study_id": "e2e", "seed": 314, "rounds": 3,
        "validation_form": 2, "validation_purchase": 2,
        "expected_respondents": 2,
        "ga_first": {"pop_size": 8, "generations": 10},
        "ga_second": {"pop_size": 10, "generations": 20},
        "store_path": str(log_path),
    }
    server = subprocess.Popen(
        [sys.executable, "-m", "uvicorn", "--factory",
         "formchoice.survey.api:create_app", "--port", str(PORT),
         "--log-level", "warning"],
    )
    try:
        with httpx.Client(timeout=60.0) as client:
            wait_for_health(client)
            r = client.post(f"{BASE}/studies", json={"config": config})
            assert r.status_code == 201, r.text
            for _ in range(2):
                sid, n = run_session(client, "e2e")
                expected = 2 * 3 + 2 + 2
                assert n == expected, f"{sid}: {n} questions, expected {expected}"
            r = client.post(f"{BASE}/studies/e2e/finalize",
                            params={"hb_iterations": 2000, "hb_burn_in": 1000,
                                    "hb_thin": 2})
            assert r.status_code == 200, r.text
            summary = r.json()
            assert summary["n_respondents"] == 2
            print("finalize:", json.dumps({k: summary[k] for k in
                  ("form_hit_rate", "overall_hit_rate")}))
    finally:
        server.terminate()
        server.wait(timeout=10)

    from formchoice.survey import read_events, replay_form_models
    events = read_events(log_path)
    models = replay_form_models(events)
    assert len(models) == 2, f"replayed {len(models)} models"
    for session_id, model in models.items():
        assert model.n_pairs == 3, (session_id, model.n_pairs)
        assert np.all(np.isfinite(model.alpha))
    print(f"log replay ok: {len(events)} events, {len(models)} models rebuilt")
    print("E2E DRIVE PASSED")


if __name__ == "__main__":
    main()
