"""Bi-level survey orchestration.

A study owns the event log, the design registry, the pooled query
history, and the population models of finished respondents.  Each
session walks a counterbalanced round loop: odd rounds ask the form
question first and relearn the overall model right after the form
update and again after the purchase answer; even rounds ask the
purchase question first and only relearn the form model.  After the
last round a frozen validation block (form pairs, then purchase pairs)
is served; those answers are never trained on.

Every answer is appended to the store before any model update, so
replaying the log under the same seed reproduces the same models.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..config import (
    MPG_LABELS,
    PRICE_LABELS,
    StudyConfig,
    config_from_dict,
    session_rng,
    study_rng,
)
from ..form_learner import (
    FormModel,
    FormPopulation,
    MixedFormScorer,
    eta_schedule,
    select_eta,
    train_form,
)
from ..geometry import N_VARIABLES, default_normalization, features_batch
from ..hb import fit_hb
from ..overall_learner import profile_vector, shrink_weights, train_overall
from ..sampler import (
    latin_hypercube,
    sample_first_form,
    sample_function_pair,
    sample_second_form,
)
from .store import EventStore

FORM_ANSWER_VALUES = (
    "left_much_better",
    "left_better",
    "right_better",
    "right_much_better",
)
PURCHASE_ANSWER_VALUES = ("left", "right")


class StateError(RuntimeError):
    """Operation does not fit the session's current state."""


class AnswerError(ValueError):
    """Answer payload malformed or mismatched to the pending question."""


@dataclass
class _Round:
    index: int
    design_ids: tuple[str, str]
    scores: tuple[float, float]
    profiles: tuple[tuple[int, int], tuple[int, int]] | None = None
    profile_scores: tuple[float, float] | None = None
    form_answered: bool = False
    purchase_answered: bool = False

    @property
    def complete(self) -> bool:
        return self.form_answered and self.purchase_answered


@dataclass
class Session:
    session_id: str
    respondent_index: int
    eta: float
    rng: np.random.Generator
    status: str = "active"
    rounds: list[_Round] = field(default_factory=list)
    pending: dict | None = None
    form_chosen_ids: list[str] = field(default_factory=list)
    form_unchosen_ids: list[str] = field(default_factory=list)
    form_margins: list[float] = field(default_factory=list)
    purchase_records: list[dict] = field(default_factory=list)
    validation_form_answers: list[str] = field(default_factory=list)
    validation_purchase_answers: list[str] = field(default_factory=list)
    form_model: FormModel = field(default_factory=FormModel)
    w_own: NDArray | None = None
    last_wall_time: float = field(default_factory=time.time)
    last_latency_s: float = 0.0

    @property
    def answered_learning(self) -> int:
        return len(self.form_margins) + len(self.purchase_records)


class Study:
    """One running study: sessions, shared state, persistence."""

    def __init__(self, config: StudyConfig, store: EventStore | None = None):
        self.config = config
        self.store = store if store is not None else EventStore(
            config.store_path, deterministic=config.deterministic
        )
        self._norm = default_normalization()
        self._lock = threading.RLock()
        self._design_vectors: list[NDArray] = []
        self._design_feats: list[NDArray] = []
        self._design_index: dict[str, int] = {}
        self._sessions: dict[str, Session] = {}
        self._respondent_counter = 0
        self._population_models: list[FormModel] = []
        self._population_w: list[NDArray] = []
        self._population_cache: FormPopulation | None = None
        self._history_designs: list[int] = []
        self._history_profiles: list[tuple[int, int]] = []
        self._build_validation_block()
        self.store.append("study_created", study_id=config.study_id,
                          config=config.to_dict(),
                          validation_form_pairs=self._val_form_pairs,
                          validation_purchase_pairs=self._val_purchase_pairs,
                          validation_profiles=self._val_profiles)

    # -- design registry ------------------------------------------------

    def _register_design(self, vector: NDArray) -> str:
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (N_VARIABLES,):
            raise ValueError(f"design must have {N_VARIABLES} variables")
        design_id = f"{self.config.study_id}-d{len(self._design_vectors):06d}"
        self._design_vectors.append(vector)
        self._design_feats.append(
            self._norm.transform(features_batch(vector[None, :]))[0]
        )
        self._design_index[design_id] = len(self._design_vectors) - 1
        return design_id

    def design_vector(self, design_id: str) -> NDArray:
        try:
            return self._design_vectors[self._design_index[design_id]].copy()
        except KeyError:
            raise KeyError(f"unknown design {design_id!r}") from None

    def _feats(self, design_id: str) -> NDArray:
        return self._design_feats[self._design_index[design_id]]

    # -- study setup ----------------------------------------------------

    def _build_validation_block(self) -> None:
        cfg = self.config
        rng = study_rng(cfg.seed)
        n_pairs = cfg.validation_form + cfg.validation_purchase
        designs = latin_hypercube(2 * n_pairs, N_VARIABLES, rng)
        ids = [self._register_design(v) for v in designs]
        pairs = [(ids[2 * k], ids[2 * k + 1]) for k in range(n_pairs)]
        self._val_form_pairs = pairs[: cfg.validation_form]
        self._val_purchase_pairs = pairs[cfg.validation_form:]
        levels = rng.integers(1, 6, size=(cfg.validation_purchase, 2, 2))
        self._val_profiles = [
            ((int(a[0]), int(a[1])), (int(b[0]), int(b[1]))) for a, b in levels
        ]

    # -- shared state ---------------------------------------------------

    def _population(self) -> FormPopulation | None:
        if not self._population_models:
            return None
        if self._population_cache is None:
            self._population_cache = FormPopulation(self._population_models)
        return self._population_cache

    def _scorer(self, session: Session) -> MixedFormScorer:
        population = self._population()
        eta = session.eta if population is not None else 1.0
        return MixedFormScorer(session.form_model, population, eta)

    def _shrunk_w(self, session: Session) -> NDArray:
        own = session.w_own if session.w_own is not None else np.zeros(9)
        if not self._population_w:
            return own
        pop = np.mean(self._population_w, axis=0)
        return shrink_weights(own, pop, session.eta)

    def _pooled_history(self, rng: np.random.Generator) -> NDArray:
        idx = self._history_designs
        if len(idx) > self.config.history_cap:
            chosen = rng.choice(len(idx), size=self.config.history_cap, replace=False)
            idx = [idx[int(i)] for i in chosen]
        if not idx:
            return np.empty((0, N_VARIABLES))
        return np.array([self._design_vectors[i] for i in idx])

    # -- session lifecycle ----------------------------------------------

    def create_session(self) -> dict:
        with self._lock:
            self._respondent_counter += 1
            index = self._respondent_counter
            session = Session(
                session_id=f"{self.config.study_id}-s{index:04d}",
                respondent_index=index,
                eta=eta_schedule(index, self.config.expected_respondents,
                                 self.config.eta_start, self.config.eta_end),
                rng=session_rng(self.config.seed, index),
            )
            self._sessions[session.session_id] = session
            self.store.append("session_created", session_id=session.session_id,
                              respondent_index=index, eta=session.eta)
            return {
                "session_id": session.session_id,
                "respondent_index": index,
                "eta": session.eta,
                "status": session.status,
                "rounds": self.config.rounds,
            }

    def _session(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise KeyError(f"unknown session {session_id!r}") from None

    # -- question construction -------------------------------------------

    def _sample_form_pair(self, session: Session) -> _Round:
        index = len(session.rounds) + 1
        t0 = time.perf_counter()
        if index == 1:
            x1 = np.asarray(self.config.first_pair[0], dtype=float)
            x2 = np.asarray(self.config.first_pair[1], dtype=float)
        else:
            history = self._pooled_history(session.rng)
            x1 = sample_first_form(history, config=self.config.ga_first,
                                   rng=session.rng)
            scorer = self._scorer(session)

            def score_fn(X: NDArray) -> NDArray:
                return scorer.score(self._norm.transform(features_batch(X)))

            x2 = sample_second_form(
                x1, score_fn, history,
                v1=self.config.balance_weight, v2=self.config.explore_weight,
                config=self.config.ga_second, rng=session.rng,
            )
        id1, id2 = self._register_design(x1), self._register_design(x2)
        self._history_designs.extend(
            [self._design_index[id1], self._design_index[id2]]
        )
        scorer = self._scorer(session)
        s1 = float(scorer.score(self._feats(id1)))
        s2 = float(scorer.score(self._feats(id2)))
        session.last_latency_s = time.perf_counter() - t0
        rnd = _Round(index=index, design_ids=(id1, id2), scores=(s1, s2))
        session.rounds.append(rnd)
        return rnd

    def _sample_function_pair(self, session: Session, rnd: _Round) -> None:
        t0 = time.perf_counter()
        scorer = self._scorer(session)
        s1 = float(scorer.score(self._feats(rnd.design_ids[0])))
        s2 = float(scorer.score(self._feats(rnd.design_ids[1])))
        history = np.array(self._history_profiles or np.empty((0, 2)))
        a1, a2 = sample_function_pair(
            self._shrunk_w(session), s1, s2, history,
            v1=self.config.balance_weight, v2=self.config.explore_weight,
        )
        rnd.profiles = ((int(a1[0]), int(a1[1])), (int(a2[0]), int(a2[1])))
        rnd.profile_scores = (s1, s2)
        self._history_profiles.extend(rnd.profiles)
        session.last_latency_s += time.perf_counter() - t0

    def _question_payload(self, session: Session, question_type: str,
                          rnd: _Round | None, phase: str,
                          validation_index: int | None = None) -> dict:
        payload = {
            "session_id": session.session_id,
            "status": session.status,
            "phase": phase,
            "question_type": question_type,
        }
        if phase == "learning":
            assert rnd is not None
            payload["round"] = rnd.index
            payload["order"] = "form_first" if rnd.index % 2 == 1 else "purchase_first"
            payload["form_pair"] = list(rnd.design_ids)
            first_of_round = not (rnd.form_answered or rnd.purchase_answered)
            payload["question_number"] = 2 * (rnd.index - 1) + (1 if first_of_round else 2)
            if question_type == "purchase":
                assert rnd.profiles is not None
                payload["function_profiles"] = [list(p) for p in rnd.profiles]
        else:
            assert validation_index is not None
            payload["round"] = None
            payload["validation_index"] = validation_index
            if question_type == "form":
                pair = self._val_form_pairs[validation_index]
            else:
                pair = self._val_purchase_pairs[validation_index]
                profs = self._val_profiles[validation_index]
                payload["function_profiles"] = [list(p) for p in profs]
            payload["form_pair"] = list(pair)
            payload["question_number"] = (
                2 * self.config.rounds + validation_index + 1
                + (self.config.validation_form if question_type == "purchase" else 0)
            )
        payload["mesh_urls"] = [f"/designs/{d}/mesh" for d in payload["form_pair"]]
        if question_type == "form":
            payload["choices"] = list(FORM_ANSWER_VALUES)
        else:
            payload["choices"] = list(PURCHASE_ANSWER_VALUES)
            payload["profile_labels"] = [
                [PRICE_LABELS[p - 1], MPG_LABELS[m - 1]]
                for p, m in payload.get("function_profiles", [])
            ]
        return payload

    def next_question(self, session_id: str) -> dict:
        with self._lock:
            session = self._session(session_id)
            session.last_wall_time = time.time()
            if session.status == "finished":
                raise StateError(f"session {session_id} is finished")
            if session.pending is not None:
                return session.pending
            if session.status == "active":
                payload = self._next_learning_question(session)
            else:
                payload = self._next_validation_question(session)
            session.pending = payload
            event_payload = _jsonable(payload)
            event_payload["design_vectors"] = [
                [float(v) for v in self.design_vector(d)]
                for d in payload["form_pair"]
            ]
            self.store.append("question_issued", session_id=session_id,
                              payload=event_payload)
            return payload

    def _next_learning_question(self, session: Session) -> dict:
        rnd = session.rounds[-1] if session.rounds else None
        if rnd is None or rnd.complete:
            rnd = self._sample_form_pair(session)
            if rnd.index % 2 == 0:
                # purchase comes first: attach function attributes now
                self._sample_function_pair(session, rnd)
                return self._question_payload(session, "purchase", rnd, "learning")
            return self._question_payload(session, "form", rnd, "learning")
        if rnd.index % 2 == 1:
            # odd round, form already answered: purchase follows
            assert rnd.form_answered and not rnd.purchase_answered
            if rnd.profiles is None:
                self._sample_function_pair(session, rnd)
            return self._question_payload(session, "purchase", rnd, "learning")
        assert rnd.purchase_answered and not rnd.form_answered
        return self._question_payload(session, "form", rnd, "learning")

    def _next_validation_question(self, session: Session) -> dict:
        n_form_done = len(session.validation_form_answers)
        if n_form_done < self.config.validation_form:
            return self._question_payload(session, "form", None, "validation",
                                          validation_index=n_form_done)
        n_purchase_done = len(session.validation_purchase_answers)
        return self._question_payload(session, "purchase", None, "validation",
                                      validation_index=n_purchase_done)

    # -- answers and learning ---------------------------------------------

    def submit_answer(self, session_id: str, answer: dict) -> dict:
        with self._lock:
            session = self._session(session_id)
            session.last_wall_time = time.time()
            if session.status == "finished":
                raise StateError(f"session {session_id} is finished")
            if session.pending is None:
                raise StateError("no question pending; fetch the next question first")
            expected = session.pending["question_type"]
            got = answer.get("type")
            if got != expected:
                raise AnswerError(f"expected a {expected} answer, got {got!r}")
            value = answer.get("value")
            allowed = FORM_ANSWER_VALUES if expected == "form" else PURCHASE_ANSWER_VALUES
            if value not in allowed:
                raise AnswerError(f"invalid {expected} answer value {value!r}")

            pending = session.pending
            self.store.append("answer_recorded", session_id=session_id,
                              question_number=pending["question_number"],
                              phase=pending["phase"],
                              question_type=expected, value=value)
            session.pending = None
            if pending["phase"] == "learning":
                summary = self._learn_from_answer(session, pending, value)
            else:
                summary = self._record_validation(session, pending, value)
            return {"recorded": True, "session_id": session_id,
                    "status": session.status, **summary}

    def _learn_from_answer(self, session: Session, pending: dict, value: str) -> dict:
        rnd = session.rounds[-1]
        odd = rnd.index % 2 == 1
        if pending["question_type"] == "form":
            left_better = value.startswith("left")
            chosen, unchosen = (
                rnd.design_ids if left_better else rnd.design_ids[::-1]
            )
            margin = (self.config.much_better_margin
                      if "much" in value else self.config.better_margin)
            session.form_chosen_ids.append(chosen)
            session.form_unchosen_ids.append(unchosen)
            session.form_margins.append(margin)
            rnd.form_answered = True
            self._retrain_form(session)
            if odd and session.purchase_records:
                self._retrain_overall(session)
            learned = "form"
        else:
            chosen = 0 if value == "left" else 1
            session.purchase_records.append({
                "design_ids": rnd.design_ids,
                "profiles": rnd.profiles,
                "chosen": chosen,
            })
            rnd.purchase_answered = True
            if odd:
                self._retrain_overall(session)
            learned = "purchase"

        summary = {"round": rnd.index, "learned": learned,
                   "form_pairs": len(session.form_margins),
                   "purchase_answers": len(session.purchase_records)}
        if rnd.complete:
            self._snapshot_models(session, rnd.index)
            if rnd.index >= self.config.rounds:
                session.status = "validating"
        return summary

    def _record_validation(self, session: Session, pending: dict, value: str) -> dict:
        if pending["question_type"] == "form":
            session.validation_form_answers.append(value)
        else:
            session.validation_purchase_answers.append(value)
        done_form = len(session.validation_form_answers)
        done_purchase = len(session.validation_purchase_answers)
        if (done_form >= self.config.validation_form
                and done_purchase >= self.config.validation_purchase):
            self._finish_session(session)
        return {"validation_form": done_form,
                "validation_purchase": done_purchase}

    def _retrain_form(self, session: Session) -> None:
        pos = np.array([self._feats(d) for d in session.form_chosen_ids])
        neg = np.array([self._feats(d) for d in session.form_unchosen_ids])
        session.form_model = train_form(
            pos, neg, np.array(session.form_margins),
            cap=self.config.svm_cap, tol=self.config.svm_tol,
        )

    def _purchase_diffs(self, session: Session,
                        scorer: MixedFormScorer) -> NDArray:
        chosen, unchosen = self._purchase_profiles(session, scorer)
        return chosen - unchosen

    def _purchase_profiles(self, session: Session,
                           scorer: MixedFormScorer) -> tuple[NDArray, NDArray]:
        chosen_rows, unchosen_rows = [], []
        for record in session.purchase_records:
            id1, id2 = record["design_ids"]
            a1, a2 = record["profiles"]
            s1 = float(scorer.score(self._feats(id1)))
            s2 = float(scorer.score(self._feats(id2)))
            p1 = profile_vector(s1, np.array(a1))
            p2 = profile_vector(s2, np.array(a2))
            if record["chosen"] == 0:
                chosen_rows.append(p1)
                unchosen_rows.append(p2)
            else:
                chosen_rows.append(p2)
                unchosen_rows.append(p1)
        return np.array(chosen_rows), np.array(unchosen_rows)

    def _retrain_overall(self, session: Session) -> None:
        if not session.purchase_records:
            return
        chosen, unchosen = self._purchase_profiles(session, self._scorer(session))
        model = train_overall(
            chosen, unchosen, margin=self.config.purchase_margin,
            cap=self.config.svm_cap, tol=self.config.svm_tol,
        )
        session.w_own = model.w

    def _snapshot_models(self, session: Session, round_index: int) -> None:
        pairs = list(zip(session.form_chosen_ids, session.form_unchosen_ids))
        self.store.append(
            "model_snapshot", session_id=session.session_id, round=round_index,
            form={
                "pairs": [list(p) for p in pairs],
                "margins": list(map(float, session.form_margins)),
                "alpha": [float(a) for a in session.form_model.alpha],
            },
            overall={
                "w": None if session.w_own is None
                else [float(v) for v in session.w_own]
            },
        )

    def _finish_session(self, session: Session) -> None:
        # fold the last even round's purchase answer into the respondent's
        # own overall weights before they join the population pool
        self._retrain_overall(session)
        session.status = "finished"
        self._population_models.append(session.form_model)
        self._population_cache = None
        if session.w_own is not None:
            self._population_w.append(session.w_own)
        self.store.append("session_finished", session_id=session.session_id,
                          respondent_index=session.respondent_index,
                          form_pairs=len(session.form_margins),
                          purchase_answers=len(session.purchase_records))

    # -- finalize ----------------------------------------------------------

    def finalize(self, hb_iterations: int = 20000, hb_burn_in: int = 10000,
                 hb_thin: int = 10) -> "FinalizeReport":
        with self._lock:
            finished = [s for s in self._sessions.values() if s.status == "finished"]
            stale_cutoff = time.time() - self.config.idle_timeout_hours * 3600.0
            blocking = [
                s.session_id for s in self._sessions.values()
                if s.status != "finished" and s.last_wall_time >= stale_cutoff
            ]
            if blocking:
                raise StateError(
                    "cannot finalize, unfinished sessions: " + ", ".join(sorted(blocking))
                )
            excluded = sorted(
                s.session_id for s in self._sessions.values() if s.status != "finished"
            )
            if not finished:
                raise StateError("no finished sessions to finalize")
            finished.sort(key=lambda s: s.respondent_index)

            scorers: list[MixedFormScorer] = []
            etas: list[float] = []
            for session in finished:
                others = [t.form_model for t in finished if t is not session]
                population = FormPopulation(others) if others else None
                pos = np.array([self._feats(d) for d in session.form_chosen_ids])
                neg = np.array([self._feats(d) for d in session.form_unchosen_ids])
                eta, _ = select_eta(pos, neg, np.array(session.form_margins),
                                    population, fallback=session.eta)
                etas.append(eta)
                scorers.append(MixedFormScorer(session.form_model, population, eta))

            diffs = np.stack([
                self._purchase_diffs(session, scorer)
                for session, scorer in zip(finished, scorers)
            ])
            mask = np.ones(diffs.shape[:2], dtype=bool)
            hb = fit_hb(diffs, mask, iterations=hb_iterations, burn_in=hb_burn_in,
                        thin=hb_thin,
                        seed=None if self.config.seed is None
                        else [self.config.seed, 2])
            weights = hb.posterior_mean()

            respondents = []
            for i, (session, scorer) in enumerate(zip(finished, scorers)):
                form_hits = 0
                for k, (id1, id2) in enumerate(self._val_form_pairs):
                    delta = float(scorer.score(self._feats(id1))
                                  - scorer.score(self._feats(id2)))
                    predicted = "left" if delta >= 0 else "right"
                    observed = ("left" if session.validation_form_answers[k]
                                .startswith("left") else "right")
                    form_hits += predicted == observed
                overall_hits = 0
                for k, (id1, id2) in enumerate(self._val_purchase_pairs):
                    a1, a2 = self._val_profiles[k]
                    s1 = float(scorer.score(self._feats(id1)))
                    s2 = float(scorer.score(self._feats(id2)))
                    u1 = float(weights[i] @ profile_vector(s1, np.array(a1)))
                    u2 = float(weights[i] @ profile_vector(s2, np.array(a2)))
                    predicted = "left" if u1 >= u2 else "right"
                    overall_hits += predicted == session.validation_purchase_answers[k]
                respondents.append({
                    "session_id": session.session_id,
                    "respondent_index": session.respondent_index,
                    "eta": etas[i],
                    "form_hit_rate": form_hits / self.config.validation_form,
                    "overall_hit_rate": overall_hits / self.config.validation_purchase,
                })

            report = FinalizeReport(
                study_id=self.config.study_id,
                respondents=respondents,
                excluded_sessions=excluded,
                form_hit_rate=float(np.mean([r["form_hit_rate"] for r in respondents])),
                overall_hit_rate=float(np.mean([r["overall_hit_rate"] for r in respondents])),
                weights=weights,
                etas=etas,
                scorers=scorers,
                hb=hb,
            )
            self.store.append("study_finalized", study_id=self.config.study_id,
                              n_respondents=len(respondents),
                              excluded_sessions=excluded,
                              form_hit_rate=report.form_hit_rate,
                              overall_hit_rate=report.overall_hit_rate)
            return report


@dataclass
class FinalizeReport:
    study_id: str
    respondents: list[dict]
    excluded_sessions: list[str]
    form_hit_rate: float
    overall_hit_rate: float
    weights: NDArray
    etas: list[float]
    scorers: list[MixedFormScorer]
    hb: object

    def summary(self) -> dict:
        return {
            "study_id": self.study_id,
            "n_respondents": len(self.respondents),
            "excluded_sessions": self.excluded_sessions,
            "form_hit_rate": self.form_hit_rate,
            "overall_hit_rate": self.overall_hit_rate,
            "respondents": self.respondents,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def replay_form_models(events: list[dict]) -> dict[str, FormModel]:
    """Rebuild every session's final form model from a persisted log.

    Returns {session_id: FormModel}.  Uses only recorded designs and
    answers, so it checks that the log alone determines the models.
    """
    norm = default_normalization()
    config = None
    design_vectors: dict[str, list[float]] = {}
    pending_by_session: dict[str, dict] = {}
    answers: dict[str, list[tuple[str, str, float]]] = {}
    for event in events:
        if event["type"] == "study_created":
            config = event["config"]
        elif event["type"] == "question_issued":
            payload = event["payload"]
            pending_by_session[event["session_id"]] = payload
            for design_id, vector in zip(payload["form_pair"],
                                         payload.get("design_vectors", [])):
                design_vectors[design_id] = vector
        elif event["type"] == "answer_recorded":
            if event["phase"] != "learning" or event["question_type"] != "form":
                continue
            payload = pending_by_session[event["session_id"]]
            left, right = payload["form_pair"]
            value = event["value"]
            chosen, unchosen = (left, right) if value.startswith("left") else (right, left)
            margin = (config["much_better_margin"] if "much" in value
                      else config.get("better_margin", 1.0))
            answers.setdefault(event["session_id"], []).append((chosen, unchosen, margin))

    models = {}
    feats_cache: dict[str, NDArray] = {}

    def feats(design_id: str) -> NDArray:
        if design_id not in feats_cache:
            vec = np.array(design_vectors[design_id], dtype=float)
            feats_cache[design_id] = norm.transform(features_batch(vec[None, :]))[0]
        return feats_cache[design_id]

    for session_id, triples in answers.items():
        pos = np.array([feats(c) for c, _, _ in triples])
        neg = np.array([feats(u) for _, u, _ in triples])
        margins = np.array([m for _, _, m in triples])
        models[session_id] = train_form(pos, neg, margins,
                                        cap=config["svm_cap"], tol=config["svm_tol"])
    return models


def replay_study(events: list[dict], store: EventStore | None = None) -> tuple["Study", dict[str, str]]:
    """Re-run a recorded study from its event log, answer by answer.

    The engine derives every question deterministically from the study
    seed and the answers received, so feeding the recorded answers back
    in recorded order rebuilds the full study state (models, population,
    histories) ready for ``finalize``.  Each re-issued question is
    checked against the recorded one; a mismatch means the log was not
    produced by this configuration and raises StateError.

    Returns the rebuilt study and the old-to-new session id mapping.
    """
    created = [e for e in events if e["type"] == "study_created"]
    if not created:
        raise ValueError("event log has no study_created record")
    config = config_from_dict(created[0]["config"])
    study = Study(config, store=store if store is not None else EventStore(None))
    id_map: dict[str, str] = {}
    for event in events:
        kind = event["type"]
        if kind == "session_created":
            id_map[event["session_id"]] = study.create_session()["session_id"]
        elif kind == "question_issued":
            recorded = event["payload"]
            issued = study.next_question(id_map[event["session_id"]])
            for key in ("question_number", "question_type", "phase"):
                if issued[key] != recorded[key]:
                    raise StateError(
                        f"replay diverged at question {recorded['question_number']}"
                        f" of session {event['session_id']}: re-issued {key}"
                        f" {issued[key]!r} does not match recorded {recorded[key]!r}"
                    )
        elif kind == "answer_recorded":
            study.submit_answer(id_map[event["session_id"]],
                                {"type": event["question_type"],
                                 "value": event["value"]})
    return study, id_map
