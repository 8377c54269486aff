"""Head-to-head questioning strategies on synthetic populations.

Four estimation pipelines answer the same holdout questions:

* M1        - one linear choice model over all 27 raw columns (19 design
              variables + 8 level dummies), fixed space-filling
              questionnaires, purchase questions only.
* M1a_field - like M1 but the model sees only the 8 level dummies.
* M2        - two-level split (kernel scorer for form, linear model on
              top) with fixed space-filling questionnaires.
* M3        - the full adaptive engine: same two-level split, queries
              generated in real time by the live study server.

Every variant is scored against the respondent's noiseless true
orderings on a shared holdout set, so hit-rate differences isolate the
questioning strategy.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..config import StudyConfig
from ..form_learner import (
    FormModel,
    FormPopulation,
    MixedFormScorer,
    select_eta,
    train_form,
)
from ..geometry import N_VARIABLES, default_normalization, features_batch
from ..hb import fit_hb
from ..overall_learner import profile_vector
from ..sampler import GAConfig, latin_hypercube
from ..survey import Study
from .truth import (
    Scenario,
    TrueRespondent,
    gen_population,
    simulate_form_answer,
    simulate_purchase_answer,
)

VARIANTS = ("M1", "M1a_field", "M2", "M3")

N_LEVELS = 5
ALL_PROFILES = np.array([(p, m) for p in range(1, 6) for m in range(1, 6)])


@dataclass(frozen=True)
class SimSettings:
    """Compute budgets for the laboratory (smaller than the live
    survey defaults; hit rates are insensitive well before these)."""

    hb_iterations: int = 6000
    hb_burn_in: int = 3000
    hb_thin: int = 3
    ga_first: GAConfig = GAConfig(16, 60)
    ga_second: GAConfig = GAConfig(30, 150)
    svm_cap: float = 1e6
    svm_tol: float = 1e-5


@dataclass
class HoldoutSet:
    form_pairs: NDArray      # (Hf, 2, 19)
    purchase_pairs: NDArray  # (Hp, 2, 19)
    purchase_levels: NDArray # (Hp, 2, 2) ints in 1..5

    @property
    def counts(self) -> tuple[int, int]:
        return len(self.form_pairs), len(self.purchase_pairs)


@dataclass
class HitRateReport:
    variant: str
    scenario: str
    seed: int
    n_respondents: int
    n_questions: int
    holdout_counts: tuple[int, int]
    form_hit_rate: float
    overall_hit_rate: float
    per_respondent_form: NDArray
    per_respondent_overall: NDArray
    form_importance_rmse: float
    importance_true: NDArray
    importance_est: NDArray
    runtime_s: float

    def row(self) -> dict:
        return {
            "variant": self.variant,
            "scenario": self.scenario,
            "seed": self.seed,
            "n_respondents": self.n_respondents,
            "n_questions": self.n_questions,
            "form_hit_rate": self.form_hit_rate,
            "overall_hit_rate": self.overall_hit_rate,
            "form_importance_rmse": self.form_importance_rmse,
            "runtime_s": round(self.runtime_s, 2),
        }


def lhs_design(n: int, dims: int, levels: int | None = None, rng=None) -> NDArray:
    """Space-filling battery: stratified columns, one draw per stratum.

    Continuous when ``levels`` is None (values in [0,1]); otherwise each
    column is a shuffled near-even split over 1..levels.
    """
    rng = np.random.default_rng(rng)
    if levels is None:
        return latin_hypercube(n, dims, rng)
    base = np.tile(np.arange(1, levels + 1), (n + levels - 1) // levels)[:n]
    return np.column_stack([rng.permutation(base) for _ in range(dims)])


def make_holdouts(n_form: int, n_purchase: int, rng) -> HoldoutSet:
    rng = np.random.default_rng(rng)
    return HoldoutSet(
        form_pairs=rng.random((n_form, 2, N_VARIABLES)),
        purchase_pairs=rng.random((n_purchase, 2, N_VARIABLES)),
        purchase_levels=rng.integers(1, N_LEVELS + 1, size=(n_purchase, 2, 2)),
    )


def _dummy_columns(levels: NDArray) -> NDArray:
    """(n,2) level pairs -> (n,8) dummy rows (levels 2..5 per attribute)."""
    levels = np.atleast_2d(levels)
    out = np.zeros((len(levels), 8))
    for a in range(2):
        for lvl in range(2, 6):
            out[levels[:, a] == lvl, 4 * a + lvl - 2] = 1.0
    return out


_DUMMY_RANGE_BASIS = _dummy_columns(ALL_PROFILES)


def _importance(form_values: NDArray, function_values: NDArray) -> float:
    """Ratio of the form-utility range to the function-utility range."""
    span = np.ptp(function_values)
    if span == 0.0:
        return 0.0
    return float(np.ptp(form_values) / span)


@dataclass
class _Estimates:
    """Per-respondent predictions on the holdout set."""

    form_delta: NDArray     # (N, Hf) estimated form-score differences
    overall_delta: NDArray  # (N, Hp) estimated utility differences
    importance: NDArray     # (N,)


def _true_labels(population: list[TrueRespondent], holdout: HoldoutSet):
    form = np.array([r.form_score(holdout.form_pairs[:, 0])
                     - r.form_score(holdout.form_pairs[:, 1])
                     for r in population])
    overall = np.array([r.utility(holdout.purchase_pairs[:, 0],
                                  holdout.purchase_levels[:, 0])
                        - r.utility(holdout.purchase_pairs[:, 1],
                                    holdout.purchase_levels[:, 1])
                        for r in population])
    importance = np.array([
        _importance(r.lam * r.form_score(holdout.form_pairs.reshape(-1, N_VARIABLES)),
                    r.function_part(ALL_PROFILES))
        for r in population
    ])
    return form, overall, importance


def _single_level_questionnaire(n_questions: int, rng):
    designs = lhs_design(2 * n_questions, N_VARIABLES, rng=rng)
    levels = lhs_design(2 * n_questions, 2, levels=N_LEVELS, rng=rng)
    return (designs.reshape(n_questions, 2, N_VARIABLES),
            levels.reshape(n_questions, 2, 2))


def _run_single_level(population, holdout, *, dummies_only: bool,
                      n_questions: int, seed: int, noiseless: bool,
                      settings: SimSettings) -> _Estimates:
    """M1 and M1a_field: purchase questions only, one linear model."""
    n = len(population)
    diffs = []
    for i, respondent in enumerate(population):
        rng = np.random.default_rng([seed, 4, i])
        pairs, levels = _single_level_questionnaire(n_questions, rng)
        row = []
        for q in range(n_questions):
            x1, x2 = pairs[q]
            a1, a2 = levels[q]
            answer = simulate_purchase_answer(respondent, x1, x2, a1, a2, rng,
                                              noiseless=noiseless)
            sgn = 1.0 if answer == "left" else -1.0
            design_diff = sgn * (x1 - x2)
            dummy_diff = sgn * (_dummy_columns(a1[None])[0]
                                - _dummy_columns(a2[None])[0])
            if dummies_only:
                row.append(dummy_diff)
            else:
                row.append(np.concatenate([design_diff, dummy_diff]))
        diffs.append(row)
    diffs = np.array(diffs)
    mask = np.ones(diffs.shape[:2], dtype=bool)
    hb = fit_hb(diffs, mask, iterations=settings.hb_iterations,
                burn_in=settings.hb_burn_in, thin=settings.hb_thin,
                seed=[seed, 5])
    weights = hb.posterior_mean()

    hf = holdout.form_pairs
    hp, hl = holdout.purchase_pairs, holdout.purchase_levels
    form_delta = np.zeros((n, len(hf)))
    overall_delta = np.zeros((n, len(hp)))
    importance = np.zeros(n)
    dummy_diff_hold = _dummy_columns(hl[:, 0]) - _dummy_columns(hl[:, 1])
    for i in range(n):
        w = weights[i]
        if dummies_only:
            overall_delta[i] = dummy_diff_hold @ w
            importance[i] = 0.0
        else:
            w_design, w_dummy = w[:N_VARIABLES], w[N_VARIABLES:]
            form_delta[i] = (hf[:, 0] - hf[:, 1]) @ w_design
            overall_delta[i] = ((hp[:, 0] - hp[:, 1]) @ w_design
                                + dummy_diff_hold @ w_dummy)
            importance[i] = _importance(
                hf.reshape(-1, N_VARIABLES) @ w_design,
                _DUMMY_RANGE_BASIS @ w_dummy)
    return _Estimates(form_delta, overall_delta, importance)


def _bilevel_predictions(population, holdout, models, scorers, weights,
                         feats_of) -> _Estimates:
    n = len(population)
    hf_feats = [feats_of(holdout.form_pairs[:, s]) for s in (0, 1)]
    hp_feats = [feats_of(holdout.purchase_pairs[:, s]) for s in (0, 1)]
    dummy_diff_hold = (_dummy_columns(holdout.purchase_levels[:, 0])
                       - _dummy_columns(holdout.purchase_levels[:, 1]))
    form_delta = np.zeros((n, len(holdout.form_pairs)))
    overall_delta = np.zeros((n, len(holdout.purchase_pairs)))
    importance = np.zeros(n)
    for i in range(n):
        scorer = scorers[i]
        w = weights[i]
        s_left, s_right = scorer.score(hf_feats[0]), scorer.score(hf_feats[1])
        form_delta[i] = s_left - s_right
        sp = scorer.score(hp_feats[0]) - scorer.score(hp_feats[1])
        overall_delta[i] = w[0] * sp + dummy_diff_hold @ w[1:]
        importance[i] = _importance(
            w[0] * np.concatenate([s_left, s_right]),
            _DUMMY_RANGE_BASIS @ w[1:])
    return _Estimates(form_delta, overall_delta, importance)


def _run_fixed_bilevel(population, holdout, *, n_questions: int, seed: int,
                       flip_prob: float, noiseless: bool,
                       margins: tuple[float, float],
                       settings: SimSettings) -> _Estimates:
    """M2: space-filling form and purchase batteries, offline estimation."""
    n = len(population)
    n_form = n_questions // 2
    n_purchase = n_questions - n_form
    norm = default_normalization()
    feats_of = lambda X: norm.transform(features_batch(np.atleast_2d(X)))

    models, train_sets, purchase_sets = [], [], []
    for i, respondent in enumerate(population):
        rng = np.random.default_rng([seed, 5, i])
        form_pairs = lhs_design(2 * n_form, N_VARIABLES,
                                rng=rng).reshape(n_form, 2, N_VARIABLES)
        purchase_pairs = lhs_design(2 * n_purchase, N_VARIABLES,
                                    rng=rng).reshape(n_purchase, 2, N_VARIABLES)
        purchase_levels = lhs_design(2 * n_purchase, 2, levels=N_LEVELS,
                                     rng=rng).reshape(n_purchase, 2, 2)
        pos, neg, margin_list = [], [], []
        for q in range(n_form):
            x1, x2 = form_pairs[q]
            value = simulate_form_answer(respondent, x1, x2, rng,
                                         flip_prob=flip_prob,
                                         noiseless=noiseless)
            chosen, unchosen = (x1, x2) if value.startswith("left") else (x2, x1)
            pos.append(chosen)
            neg.append(unchosen)
            margin_list.append(margins[1] if "much" in value else margins[0])
        pos_f, neg_f = feats_of(np.array(pos)), feats_of(np.array(neg))
        margin_arr = np.array(margin_list)
        models.append(train_form(pos_f, neg_f, margin_arr,
                                 cap=settings.svm_cap, tol=settings.svm_tol))
        train_sets.append((pos_f, neg_f, margin_arr))

        records = []
        for q in range(n_purchase):
            x1, x2 = purchase_pairs[q]
            a1, a2 = purchase_levels[q]
            answer = simulate_purchase_answer(respondent, x1, x2, a1, a2, rng,
                                              noiseless=noiseless)
            records.append((feats_of(x1)[0], feats_of(x2)[0], a1, a2,
                            0 if answer == "left" else 1))
        purchase_sets.append(records)

    scorers = []
    for i in range(n):
        other_models = [m for j, m in enumerate(models) if j != i]
        others = FormPopulation(other_models) if other_models else None
        pos_f, neg_f, margin_arr = train_sets[i]
        eta, _ = select_eta(pos_f, neg_f, margin_arr, others, fallback=1.0)
        scorers.append(MixedFormScorer(models[i], others, eta))

    diffs = np.zeros((n, n_purchase, 9))
    for i, records in enumerate(purchase_sets):
        for q, (f1, f2, a1, a2, chose) in enumerate(records):
            s1, s2 = float(scorers[i].score(f1)), float(scorers[i].score(f2))
            p1, p2 = profile_vector(s1, a1), profile_vector(s2, a2)
            diffs[i, q] = p1 - p2 if chose == 0 else p2 - p1
    hb = fit_hb(diffs, np.ones(diffs.shape[:2], dtype=bool),
                iterations=settings.hb_iterations,
                burn_in=settings.hb_burn_in, thin=settings.hb_thin,
                seed=[seed, 6])
    return _bilevel_predictions(population, holdout, models, scorers,
                                hb.posterior_mean(), feats_of)


def _run_adaptive_bilevel(population, holdout, *, n_questions: int, seed: int,
                          flip_prob: float, noiseless: bool,
                          margins: tuple[float, float],
                          settings: SimSettings) -> _Estimates:
    """M3: the live engine queried round by round."""
    n = len(population)
    rounds = n_questions // 2
    norm = default_normalization()
    feats_of = lambda X: norm.transform(features_batch(np.atleast_2d(X)))
    if rounds == 0:
        # no learning questions: empty scorer, prior-mean weights
        empty = FormModel()
        scorers = [MixedFormScorer(empty, None, 1.0)] * n
        weights = np.zeros((n, 9))
        return _bilevel_predictions(population, holdout, [empty] * n,
                                    scorers, weights, feats_of)

    config = StudyConfig(
        study_id=f"sim{seed}", seed=seed, rounds=rounds,
        validation_form=1, validation_purchase=1,
        expected_respondents=n, ga_first=settings.ga_first,
        ga_second=settings.ga_second, better_margin=margins[0],
        much_better_margin=margins[1], svm_cap=settings.svm_cap,
        svm_tol=settings.svm_tol,
    )
    study = Study(config)
    for i, respondent in enumerate(population):
        rng = np.random.default_rng([seed, 6, i])
        sid = study.create_session()["session_id"]
        while True:
            q = study.next_question(sid)
            x1, x2 = (study.design_vector(d) for d in q["form_pair"])
            if q["question_type"] == "form":
                value = simulate_form_answer(respondent, x1, x2, rng,
                                             flip_prob=flip_prob,
                                             noiseless=noiseless)
            else:
                a1, a2 = q["function_profiles"]
                value = simulate_purchase_answer(respondent, x1, x2, a1, a2,
                                                 rng, noiseless=noiseless)
            result = study.submit_answer(sid, {"type": q["question_type"],
                                               "value": value})
            if result["status"] == "finished":
                break
    report = study.finalize(hb_iterations=settings.hb_iterations,
                            hb_burn_in=settings.hb_burn_in,
                            hb_thin=settings.hb_thin)
    models = [study._sessions[r["session_id"]].form_model
              for r in report.respondents]
    return _bilevel_predictions(population, holdout, models, report.scorers,
                                report.weights, feats_of)


def run_experiment(variant: str, scenario: Scenario, n_respondents: int = 100,
                   n_questions: int = 20, holdouts: tuple[int, int] = (100, 100),
                   seed: int = 0, flip_prob: float = 0.0,
                   noiseless: bool = False,
                   margins: tuple[float, float] = (1.0, 2.0),
                   settings: SimSettings | None = None) -> HitRateReport:
    """Run one (variant, scenario, seed) cell and score it on holdouts."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown model variant {variant!r}; "
                         f"expected one of {', '.join(VARIANTS)}")
    settings = settings or SimSettings()
    t0 = time.perf_counter()
    population = gen_population(scenario, n_respondents,
                                np.random.default_rng([seed, 2]))
    holdout = make_holdouts(*holdouts, np.random.default_rng([seed, 3]))
    true_form, true_overall, true_importance = _true_labels(population, holdout)

    if variant in ("M1", "M1a_field"):
        est = _run_single_level(population, holdout,
                                dummies_only=variant == "M1a_field",
                                n_questions=n_questions, seed=seed,
                                noiseless=noiseless, settings=settings)
    elif variant == "M2":
        est = _run_fixed_bilevel(population, holdout, n_questions=n_questions,
                                 seed=seed, flip_prob=flip_prob,
                                 noiseless=noiseless, margins=margins,
                                 settings=settings)
    else:
        est = _run_adaptive_bilevel(population, holdout,
                                    n_questions=n_questions, seed=seed,
                                    flip_prob=flip_prob, noiseless=noiseless,
                                    margins=margins, settings=settings)

    form_hits = (est.form_delta >= 0) == (true_form >= 0)
    overall_hits = (est.overall_delta >= 0) == (true_overall >= 0)
    rmse = float(np.sqrt(np.mean((est.importance - true_importance) ** 2)))
    return HitRateReport(
        variant=variant,
        scenario=scenario.name,
        seed=seed,
        n_respondents=n_respondents,
        n_questions=n_questions,
        holdout_counts=holdout.counts,
        form_hit_rate=float(form_hits.sum()) / form_hits.size,
        overall_hit_rate=float(overall_hits.sum()) / overall_hits.size,
        per_respondent_form=form_hits.mean(axis=1),
        per_respondent_overall=overall_hits.mean(axis=1),
        form_importance_rmse=rmse,
        importance_true=true_importance,
        importance_est=est.importance,
        runtime_s=time.perf_counter() - t0,
    )


def run_battery(scenarios: list[Scenario], seeds=range(5),
                variants: tuple[str, ...] = VARIANTS,
                progress=None, **kwargs) -> list[HitRateReport]:
    """Every (scenario, seed, variant) cell, sequentially."""
    reports = []
    for scenario in scenarios:
        for seed in seeds:
            for variant in variants:
                report = run_experiment(variant, scenario, seed=seed, **kwargs)
                reports.append(report)
                if progress is not None:
                    progress(report)
    return reports


def summarize_battery(reports: list[HitRateReport]) -> dict:
    """Mean hit rates per (scenario, variant) across seeds."""
    cells: dict = {}
    for r in reports:
        cells.setdefault((r.scenario, r.variant), []).append(r)
    return {
        key: {
            "form_hit_rate": float(np.mean([r.form_hit_rate for r in rs])),
            "overall_hit_rate": float(np.mean([r.overall_hit_rate for r in rs])),
            "form_importance_rmse": float(np.mean([r.form_importance_rmse
                                                   for r in rs])),
            "n_seeds": len(rs),
        }
        for key, rs in cells.items()
    }


SWEEP_KINDS = ("questions", "noise", "cj_scale", "cj_ratio")


def robustness_sweep(kind: str, scenario: Scenario, seeds=range(3),
                     variants: tuple[str, ...] = ("M3",),
                     **kwargs) -> dict:
    """Grid of hit-rate runs along one stress axis."""
    if kind == "questions":
        grid = [("n_questions", q) for q in range(10, 61, 10)]
        variants = kwargs.pop("sweep_variants", ("M1", "M3"))
    elif kind == "noise":
        grid = [("flip_prob", p) for p in (0.0, 0.1, 0.2)]
    elif kind == "cj_scale":
        grid = [("margins", (k, 2.0 * k)) for k in (0.1, 1.0, 10.0, 1000.0)]
    elif kind == "cj_ratio":
        grid = [("margins", (1.0, r)) for r in (2.0, 5.0, 10.0)]
    else:
        raise ValueError(f"unsupported sweep kind {kind!r}; "
                         f"supported: {', '.join(SWEEP_KINDS)}")
    out = {}
    for name, value in grid:
        runs = [run_experiment(v, scenario, seed=s, **{name: value}, **kwargs)
                for v in variants for s in seeds]
        out[(name, value if not isinstance(value, tuple) else tuple(value))] = {
            "form_hit_rate": float(np.mean([r.form_hit_rate for r in runs])),
            "overall_hit_rate": float(np.mean([r.overall_hit_rate for r in runs])),
            "runs": runs,
        }
    return out
