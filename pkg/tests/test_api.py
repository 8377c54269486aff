import numpy as np
import pytest
from fastapi.testclient import TestClient

from formchoice.geometry import tessellate
from formchoice.survey import create_app

TINY_STUDY = {
    "study_id": "api",
    "seed": 7,
    "rounds": 2,
    "validation_form": 1,
    "validation_purchase": 1,
    "expected_respondents": 2,
    "ga_first": {"pop_size": 4, "generations": 2},
    "ga_second": {"pop_size": 4, "generations": 2},
}


@pytest.fixture()
def client():
    with TestClient(create_app()) as c:
        yield c


@pytest.fixture()
def session(client):
    client.post("/studies", json={"config": TINY_STUDY})
    created = client.post("/studies/api/sessions")
    return client, created.json()["session_id"]


def answer_until_done(client, session_id):
    while True:
        q = client.get(f"/sessions/{session_id}/next").json()
        value = "left_better" if q["question_type"] == "form" else "left"
        r = client.post(f"/sessions/{session_id}/answer",
                        json={"type": q["question_type"], "value": value})
        assert r.status_code == 200
        if r.json()["status"] == "finished":
            return


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "studies": []}


def test_study_creation_and_conflicts(client):
    r = client.post("/studies", json={"config": TINY_STUDY})
    assert r.status_code == 201
    assert r.json()["study_id"] == "api"
    assert r.json()["config"]["rounds"] == 2
    assert client.get("/health").json()["studies"] == ["api"]

    dup = client.post("/studies", json={"config": TINY_STUDY})
    assert dup.status_code == 409

    bad = client.post("/studies", json={"config": {"study_id": "x", "rounds": 0}})
    assert bad.status_code == 422
    assert "invalid study config" in bad.json()["detail"]


def test_unknown_routes_are_404(client):
    assert client.post("/studies/nope/sessions").status_code == 404
    assert client.get("/sessions/nope/next").status_code == 404
    assert client.post("/sessions/nope/answer",
                       json={"type": "form", "value": "left_better"}).status_code == 404
    assert client.get("/designs/nope/mesh").status_code == 404
    assert client.post("/studies/nope/finalize").status_code == 404


def test_question_answer_loop(session):
    client, sid = session
    q = client.get(f"/sessions/{sid}/next").json()
    assert q["question_type"] == "form"
    assert q["round"] == 1
    assert len(q["form_pair"]) == 2
    assert q["mesh_urls"][0] == f"/designs/{q['form_pair'][0]}/mesh"

    again = client.get(f"/sessions/{sid}/next").json()
    assert again == q

    wrong_type = client.post(f"/sessions/{sid}/answer",
                             json={"type": "purchase", "value": "left"})
    assert wrong_type.status_code == 422

    bad_value = client.post(f"/sessions/{sid}/answer",
                            json={"type": "form", "value": "meh"})
    assert bad_value.status_code == 422

    ok = client.post(f"/sessions/{sid}/answer",
                     json={"type": "form", "value": "left_much_better"})
    assert ok.status_code == 200
    assert ok.json()["recorded"] is True

    no_pending = client.post(f"/sessions/{sid}/answer",
                             json={"type": "form", "value": "left_better"})
    assert no_pending.status_code == 409

    q2 = client.get(f"/sessions/{sid}/next").json()
    assert q2["question_type"] == "purchase"
    assert len(q2["function_profiles"]) == 2
    assert len(q2["profile_labels"]) == 2
    assert q2["profile_labels"][0][0].startswith("$")


def test_mesh_endpoint_matches_library(session):
    client, sid = session
    q = client.get(f"/sessions/{sid}/next").json()
    design_id = q["form_pair"][0]

    r = client.get(f"/designs/{design_id}/mesh", params={"resolution": 3})
    assert r.status_code == 200
    wire = r.json()

    app_studies = client.app.state.studies
    vector = app_studies["api"].design_vector(design_id)
    expected = tessellate(vector, 3).to_wire()
    assert wire["vertices"] == expected["vertices"]
    assert wire["faces"] == expected["faces"]
    assert np.array(wire["vertices"]).shape[1] == 3

    assert client.get(f"/designs/{design_id}/mesh",
                      params={"resolution": 0}).status_code == 422
    assert client.get(f"/designs/{design_id}/mesh",
                      params={"resolution": 9001}).status_code == 422


def test_full_study_over_http(client):
    client.post("/studies", json={"config": TINY_STUDY})
    early = client.post("/studies/api/finalize")
    assert early.status_code == 409  # nothing finished yet

    for _ in range(2):
        sid = client.post("/studies/api/sessions").json()["session_id"]
        answer_until_done(client, sid)

    done = client.get(f"/sessions/{sid}/next")
    assert done.status_code == 409

    r = client.post("/studies/api/finalize",
                    params={"hb_iterations": 400, "hb_burn_in": 200, "hb_thin": 2})
    assert r.status_code == 200
    summary = r.json()
    assert summary["n_respondents"] == 2
    assert 0.0 <= summary["form_hit_rate"] <= 1.0
    assert 0.0 <= summary["overall_hit_rate"] <= 1.0
    assert len(summary["respondents"]) == 2


def test_finalize_blocked_by_open_session(client):
    client.post("/studies", json={"config": TINY_STUDY})
    sid = client.post("/studies/api/sessions").json()["session_id"]
    answer_until_done(client, sid)
    open_sid = client.post("/studies/api/sessions").json()["session_id"]
    r = client.post("/studies/api/finalize")
    assert r.status_code == 409
    assert open_sid in r.json()["detail"]
