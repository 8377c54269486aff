import json
import threading

import numpy as np
import pytest

from formchoice.config import (
    ConfigError,
    StudyConfig,
    config_from_dict,
    load_config,
)
from formchoice.sampler import GAConfig
from formchoice.survey import (
    AnswerError,
    EventStore,
    StateError,
    Study,
    read_events,
    replay_form_models,
    replay_study,
)

TINY_GA = GAConfig(4, 3)


def tiny_config(**overrides):
    base = dict(study_id="t", seed=99, rounds=2, validation_form=1,
                validation_purchase=1, expected_respondents=3,
                ga_first=TINY_GA, ga_second=TINY_GA)
    base.update(overrides)
    return StudyConfig(**base)


def drive_session(study, answers=None):
    """Run one session to completion with scripted or default answers."""
    sid = study.create_session()["session_id"]
    k = 0
    while True:
        q = study.next_question(sid)
        if answers is not None:
            value = answers[k]
            k += 1
        elif q["question_type"] == "form":
            value = "left_better"
        else:
            value = "left"
        result = study.submit_answer(sid, {"type": q["question_type"], "value": value})
        if result["status"] == "finished":
            return sid


class TestConfig:
    def test_defaults_are_valid(self):
        config = config_from_dict({})
        assert config.rounds == 10
        assert config.validation_form == 5
        assert config.ga_second.generations == 500
        assert config.first_pair[0] == (0.35,) * 19

    def test_empty_validation_block_rejected_at_load(self):
        with pytest.raises(ConfigError, match="invalid study config"):
            config_from_dict({"validation_form": 0})

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"round_count": 5})

    def test_eta_order_enforced(self):
        with pytest.raises(ConfigError, match="eta_end"):
            config_from_dict({"eta_start": 0.5, "eta_end": 0.9})

    def test_ga_block_parsed(self):
        config = config_from_dict({"ga_first": {"pop_size": 6, "generations": 9}})
        assert config.ga_first == GAConfig(6, 9)
        assert config.ga_second.pop_size == 50

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "study.json"
        path.write_text(json.dumps({"study_id": "filecfg", "rounds": 3}))
        assert load_config(path).rounds == 3
        path.write_text("{nope")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(path)
        path.write_text('["not", "an", "object"]')
        with pytest.raises(ConfigError, match="JSON object"):
            load_config(path)


class TestSessionLifecycle:
    def test_indices_gapless_and_eta_scheduled(self):
        study = Study(tiny_config())
        infos = [study.create_session() for _ in range(3)]
        assert [i["respondent_index"] for i in infos] == [1, 2, 3]
        assert [i["eta"] for i in infos] == [1.0, 0.85, 0.7]

    def test_concurrent_creation_distinct_indices(self):
        study = Study(tiny_config(expected_respondents=32))
        results = []
        lock = threading.Lock()

        def worker():
            info = study.create_session()
            with lock:
                results.append(info["respondent_index"])

        threads = [threading.Thread(target=worker) for _ in range(16)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(results) == list(range(1, 17))

    def test_round_one_serves_fixed_pair_form_first(self):
        study = Study(tiny_config())
        sid = study.create_session()["session_id"]
        q = study.next_question(sid)
        assert q["round"] == 1
        assert q["order"] == "form_first"
        assert q["question_type"] == "form"
        left, right = (study.design_vector(d) for d in q["form_pair"])
        assert np.allclose(left, 0.35)
        assert np.allclose(right, 0.65)

    def test_round_two_purchase_first(self):
        study = Study(tiny_config())
        sid = study.create_session()["session_id"]
        for _ in range(2):  # complete round 1
            q = study.next_question(sid)
            value = "left_better" if q["question_type"] == "form" else "left"
            study.submit_answer(sid, {"type": q["question_type"], "value": value})
        q = study.next_question(sid)
        assert q["round"] == 2
        assert q["order"] == "purchase_first"
        assert q["question_type"] == "purchase"
        assert len(q["function_profiles"]) == 2

    def test_next_is_idempotent_until_answered(self):
        study = Study(tiny_config())
        sid = study.create_session()["session_id"]
        first = study.next_question(sid)
        second = study.next_question(sid)
        assert first == second
        issued = study.store.of_type("question_issued")
        assert len(issued) == 1

    def test_answer_without_pending_rejected(self):
        study = Study(tiny_config())
        sid = study.create_session()["session_id"]
        with pytest.raises(StateError, match="no question pending"):
            study.submit_answer(sid, {"type": "form", "value": "left_better"})

    def test_type_mismatch_leaves_state_unchanged(self):
        study = Study(tiny_config())
        sid = study.create_session()["session_id"]
        pending = study.next_question(sid)
        before = len(study.store)
        with pytest.raises(AnswerError, match="expected a form answer"):
            study.submit_answer(sid, {"type": "purchase", "value": "left"})
        assert len(study.store) == before
        assert study.next_question(sid) == pending

    def test_bad_value_rejected(self):
        study = Study(tiny_config())
        sid = study.create_session()["session_id"]
        study.next_question(sid)
        with pytest.raises(AnswerError, match="invalid form answer"):
            study.submit_answer(sid, {"type": "form", "value": "left_way_better"})

    def test_finished_session_refuses_questions(self):
        study = Study(tiny_config())
        sid = drive_session(study)
        with pytest.raises(StateError, match="finished"):
            study.next_question(sid)
        with pytest.raises(StateError, match="finished"):
            study.submit_answer(sid, {"type": "form", "value": "left_better"})


class TestCounterbalancedFlow:
    def test_question_counts_and_parity(self):
        config = tiny_config(rounds=4, validation_form=2, validation_purchase=2)
        study = Study(config)
        sid = drive_session(study)
        answered = [e for e in study.store.of_type("answer_recorded")
                    if e["session_id"] == sid]
        learning = [e for e in answered if e["phase"] == "learning"]
        validation = [e for e in answered if e["phase"] == "validation"]
        assert len(learning) == 8
        assert len(validation) == 4
        forms = [e for e in learning if e["question_type"] == "form"]
        purchases = [e for e in learning if e["question_type"] == "purchase"]
        assert len(forms) == len(purchases) == 4

        issued = [e["payload"] for e in study.store.of_type("question_issued")
                  if e["session_id"] == sid and e["payload"]["phase"] == "learning"]
        for payload in issued:
            first_type = "form" if payload["round"] % 2 == 1 else "purchase"
            if payload["question_number"] == 2 * (payload["round"] - 1) + 1:
                assert payload["question_type"] == first_type

    def test_validation_served_after_last_round_and_frozen(self):
        config = tiny_config(rounds=2, validation_form=2, validation_purchase=2)
        study = Study(config)
        sids = []
        blocks = []
        for _ in range(2):
            sid = study.create_session()["session_id"]
            sids.append(sid)
            block = []
            while True:
                q = study.next_question(sid)
                if q["phase"] == "validation":
                    block.append((q["question_type"], tuple(q["form_pair"]),
                                  tuple(map(tuple, q.get("function_profiles", [])))))
                value = "left_better" if q["question_type"] == "form" else "left"
                r = study.submit_answer(sid, {"type": q["question_type"], "value": value})
                if r["status"] == "finished":
                    break
            blocks.append(block)
        assert blocks[0] == blocks[1]
        types = [b[0] for b in blocks[0]]
        assert types == ["form", "form", "purchase", "purchase"]

    def test_validation_not_reachable_early(self):
        study = Study(tiny_config(rounds=3))
        sid = study.create_session()["session_id"]
        seen_rounds = set()
        for _ in range(6):
            q = study.next_question(sid)
            assert q["phase"] == "learning"
            seen_rounds.add(q["round"])
            value = "left_better" if q["question_type"] == "form" else "left"
            study.submit_answer(sid, {"type": q["question_type"], "value": value})
        assert seen_rounds == {1, 2, 3}
        assert study.next_question(sid)["phase"] == "validation"


class TestOnlineLearning:
    def test_first_form_answer_trains_single_pair_model(self):
        study = Study(tiny_config())
        sid = study.create_session()["session_id"]
        q = study.next_question(sid)
        study.submit_answer(sid, {"type": "form", "value": "right_much_better"})
        session = study._sessions[sid]
        model = session.form_model
        assert model.n_pairs == 1
        # margin target honored exactly: chosen scores higher by 2
        sep = model.score(model.pos[0]) - model.score(model.neg[0])
        assert sep == pytest.approx(2.0, abs=1e-6)
        # chosen design is the right-hand one
        right = study._feats(q["form_pair"][1])
        assert np.allclose(model.pos[0], right)

    def test_first_purchase_answer_closed_form(self):
        study = Study(tiny_config())
        sid = study.create_session()["session_id"]
        study.next_question(sid)
        study.submit_answer(sid, {"type": "form", "value": "left_better"})
        study.next_question(sid)
        study.submit_answer(sid, {"type": "purchase", "value": "right"})
        session = study._sessions[sid]
        assert session.w_own is not None
        diffs = study._purchase_diffs(session, study._scorer(session))
        assert diffs.shape == (1, 9)
        assert float(diffs[0] @ session.w_own) == pytest.approx(1.0, abs=1e-6)

    def test_even_round_defers_overall_retrain(self):
        study = Study(tiny_config(rounds=3))
        sid = study.create_session()["session_id"]
        # round 1 complete
        for value in ("left_better", "left"):
            q = study.next_question(sid)
            study.submit_answer(sid, {"type": q["question_type"], "value": value})
        session = study._sessions[sid]
        w_after_round1 = session.w_own.copy()
        # round 2: purchase answered first, no overall retrain yet
        q = study.next_question(sid)
        assert q["question_type"] == "purchase"
        study.submit_answer(sid, {"type": "purchase", "value": "left"})
        assert np.array_equal(session.w_own, w_after_round1)
        # form answer closes round 2; overall retrain waits for round 3 form step
        study.next_question(sid)
        study.submit_answer(sid, {"type": "form", "value": "left_better"})
        assert np.array_equal(session.w_own, w_after_round1)
        q = study.next_question(sid)
        assert q["round"] == 3 and q["question_type"] == "form"
        study.submit_answer(sid, {"type": "form", "value": "left_better"})
        assert not np.array_equal(session.w_own, w_after_round1)


class TestFinalize:
    def test_refuses_while_sessions_open(self):
        study = Study(tiny_config())
        drive_session(study)
        open_sid = study.create_session()["session_id"]
        with pytest.raises(StateError, match=open_sid):
            study.finalize(hb_iterations=200, hb_burn_in=100, hb_thin=2)

    def test_single_respondent_study_completes(self):
        study = Study(tiny_config())
        sid = drive_session(study)
        report = study.finalize(hb_iterations=400, hb_burn_in=200, hb_thin=2)
        assert [r["session_id"] for r in report.respondents] == [sid]
        assert 0.0 <= report.form_hit_rate <= 1.0
        assert 0.0 <= report.overall_hit_rate <= 1.0
        assert report.weights.shape == (1, 9)
        # one validation question each: rate is exactly 0 or 1
        assert report.respondents[0]["form_hit_rate"] in (0.0, 1.0)
        assert report.excluded_sessions == []

    def test_hit_rates_are_exact_fractions(self):
        config = tiny_config(validation_form=2, validation_purchase=2)
        study = Study(config)
        for _ in range(2):
            drive_session(study)
        report = study.finalize(hb_iterations=400, hb_burn_in=200, hb_thin=2)
        for r in report.respondents:
            assert r["form_hit_rate"] * 2 == int(r["form_hit_rate"] * 2)
            assert r["overall_hit_rate"] * 2 == int(r["overall_hit_rate"] * 2)


class TestPersistence:
    def test_event_log_replays_to_identical_models(self, tmp_path):
        config = tiny_config(rounds=3, store_path=str(tmp_path / "log.jsonl"))
        study = Study(config)
        answers = ["left_better", "left", "right", "right_much_better",
                   "left_better", "left", "left_better", "right"]
        sid = drive_session(study, answers=answers)
        study.store.close()
        models = replay_form_models(read_events(tmp_path / "log.jsonl"))
        live = study._sessions[sid].form_model
        assert set(models) == {sid}
        np.testing.assert_allclose(models[sid].alpha, live.alpha, atol=1e-9)
        np.testing.assert_allclose(models[sid].margins, live.margins)

    def test_replay_study_rebuilds_full_state(self):
        study = Study(tiny_config(rounds=2))
        for _ in range(2):
            drive_session(study)
        twin, id_map = replay_study(list(study.store))
        assert len(id_map) == 2
        for old, new in id_map.items():
            live = study._sessions[old]
            rebuilt = twin._sessions[new]
            assert rebuilt.status == "finished"
            np.testing.assert_allclose(rebuilt.form_model.alpha,
                                       live.form_model.alpha, atol=1e-9)
            np.testing.assert_allclose(rebuilt.w_own, live.w_own, atol=1e-9)

    def test_replay_rejects_foreign_log(self):
        study = Study(tiny_config())
        drive_session(study)
        events = [dict(e) for e in study.store]
        for event in events:
            if event["type"] == "question_issued":
                event["payload"] = dict(event["payload"],
                                        question_type="purchase"
                                        if event["payload"]["question_type"] == "form"
                                        else "form")
        with pytest.raises(StateError, match="replay diverged"):
            replay_study(events)

    def test_replay_requires_creation_record(self):
        with pytest.raises(ValueError, match="no study_created record"):
            replay_study([])

    def test_seeded_runs_byte_identical(self, tmp_path):
        logs = []
        for run in range(2):
            path = tmp_path / f"run{run}.jsonl"
            config = tiny_config(store_path=str(path))
            study = Study(config)
            drive_session(study)
            drive_session(study)
            study.store.close()
            logs.append(path.read_bytes())
        assert logs[0] == logs[1]

    def test_snapshots_written_each_round(self):
        study = Study(tiny_config(rounds=2))
        sid = drive_session(study)
        snaps = [e for e in study.store.of_type("model_snapshot")
                 if e["session_id"] == sid]
        assert [s["round"] for s in snaps] == [1, 2]
        assert len(snaps[-1]["form"]["alpha"]) == 2

    def test_store_rejects_unknown_event(self):
        store = EventStore()
        with pytest.raises(ValueError, match="unknown event type"):
            store.append("model_saved")

    def test_read_events_checks_sequence(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"seq": 0, "ts": 0, "type": "study_created"}\n'
                        '{"seq": 5, "ts": 5, "type": "session_created"}\n')
        with pytest.raises(ValueError, match="corrupt"):
            read_events(path)


class TestDesignRegistry:
    def test_unknown_design_rejected(self):
        study = Study(tiny_config())
        with pytest.raises(KeyError, match="unknown design"):
            study.design_vector("t-d9999")

    def test_payload_designs_resolvable(self):
        study = Study(tiny_config())
        sid = study.create_session()["session_id"]
        q = study.next_question(sid)
        for design_id in q["form_pair"]:
            vec = study.design_vector(design_id)
            assert vec.shape == (19,)
            assert vec.min() >= 0 and vec.max() <= 1
