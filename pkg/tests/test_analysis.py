"""Importances, segmentation, best designs, and trade-off arithmetic."""

import numpy as np
import pytest

from formchoice.analysis import (
    ImportanceTriple,
    aggregate_wtt,
    cluster,
    group_scorer,
    importances,
    is_interior_maximum,
    optimal_design,
    partworth_table,
    per_kilodollar_utility,
    per_mpg_utility,
    sensitivities,
    wtp_mpg,
    wtp_mpg_summary,
    wtt,
)
from formchoice.form_learner import MixedFormScorer, train_form
from formchoice.geometry import default_normalization, features_batch
from formchoice.sampler import GAConfig

# Published partworth means for the two function attributes: the five
# price levels then the five fuel-economy levels.
REFERENCE_PW = np.array([
    [1.06, 0.42, 0.21, -0.83, -0.86],
    [-0.95, -0.50, 0.13, 0.64, 0.68],
])


def weights_for(pw_price, pw_mpg, form=1.0):
    """Build a 9-weight row whose implied partworths match the inputs."""
    w = np.zeros(9)
    w[0] = form
    w[1:5] = np.asarray(pw_price[1:]) - pw_price[0]
    w[5:9] = np.asarray(pw_mpg[1:]) - pw_mpg[0]
    return w


class TestImportances:
    def test_reference_partworth_spreads(self):
        w = weights_for(REFERENCE_PW[0], REFERENCE_PW[1], form=4.45)
        t, = importances(w[None, :])
        assert t.form == pytest.approx(4.45)
        assert t.price == pytest.approx(1.06 - (-0.86), abs=1e-12)
        assert t.mpg == pytest.approx(0.68 - (-0.95), abs=1e-12)

    def test_zero_posterior(self):
        t, = importances(np.zeros((1, 9)))
        assert (t.form, t.price, t.mpg) == (0.0, 0.0, 0.0)

    def test_single_draw_chain_equals_that_draw(self):
        draw = np.zeros((1, 2, 9))
        draw[0, :, 0] = (2.0, 3.0)
        draw[0, 0, 1] = 1.5
        triples = importances(draw)
        assert triples[0].form == 2.0 and triples[1].form == 3.0
        assert triples[0].price == pytest.approx(1.5)

    def test_draw_stack_averaged_before_spreads(self):
        draws = np.zeros((2, 1, 9))
        draws[0, 0, 1], draws[1, 0, 1] = 2.0, -2.0
        t, = importances(draws)
        assert t.price == 0.0  # mean weight is flat, even though draws are not

    def test_negative_spread_rejected(self):
        with pytest.raises(ValueError, match="cannot be negative"):
            ImportanceTriple(form=1.0, price=-0.1, mpg=0.0)

    def test_partworths_zero_mean_and_difference_preserving(self):
        w = weights_for(REFERENCE_PW[0], REFERENCE_PW[1])
        pw = partworth_table(w[None, :])[0]
        assert pw.mean(axis=1) == pytest.approx([0.0, 0.0], abs=1e-12)
        ref_diffs = np.diff(REFERENCE_PW, axis=1)
        assert np.allclose(np.diff(pw, axis=1), ref_diffs)


class TestCluster:
    def test_recovers_separated_blobs(self):
        rng = np.random.default_rng(4)
        centers = np.array([[0, 0, 0], [10, 0, 0], [0, 10, 0], [0, 0, 10]], float)
        truth = np.repeat(np.arange(4), 25)
        X = centers[truth] + 0.1 * rng.standard_normal((100, 3))
        result = cluster(X, k=4)
        # same partition, cluster numbering free
        for c in range(4):
            members = result.labels[truth == c]
            assert len(set(members.tolist())) == 1
        assert len(set(result.labels[::25].tolist())) == 4

    def test_single_cluster_centroid_is_mean(self):
        X = np.arange(15, dtype=float).reshape(5, 3)
        result = cluster(X, k=1)
        assert np.all(result.labels == 0)
        assert result.centroids[0] == pytest.approx(X.mean(axis=0))

    def test_standardized_centroids_wash_out(self):
        rng = np.random.default_rng(5)
        X = rng.random((40, 3)) * [1, 10, 100]
        result = cluster(X, k=3)
        weighted = (result.centroids_std * result.sizes[:, None]).sum(axis=0) / 40
        assert weighted == pytest.approx(np.zeros(3), abs=1e-10)

    def test_invariant_to_affine_rescaling(self):
        rng = np.random.default_rng(6)
        X = rng.random((30, 3))
        a = cluster(X, k=3).labels
        Y = X.copy()
        Y[:, 1] = Y[:, 1] * 50.0 - 7.0
        b = cluster(Y, k=3).labels
        assert np.array_equal(a, b)

    def test_accepts_triples(self):
        triples = [ImportanceTriple(float(i), float(i), float(i)) for i in range(6)]
        result = cluster(triples, k=2)
        assert result.labels.shape == (6,)

    def test_k_out_of_range(self):
        X = np.random.default_rng(0).random((4, 3))
        with pytest.raises(ValueError, match="k must lie"):
            cluster(X, k=5)

    def test_deterministic(self):
        X = np.random.default_rng(7).random((25, 3))
        assert np.array_equal(cluster(X, k=4).labels, cluster(X, k=4).labels)


def quadratic_scorer(a):
    a = np.asarray(a, dtype=float)
    return lambda X: -np.sum(a * (np.atleast_2d(X) - 0.5) ** 2, axis=1)


class TestOptimalDesign:
    def test_quadratic_peak_found(self):
        score = quadratic_scorer(np.linspace(1, 3, 19))
        result = optimal_design(score, config=GAConfig(12, 40), restarts=2)
        assert not result.degenerate
        assert result.design == pytest.approx(np.full(19, 0.5), abs=1e-3)

    def test_beats_training_designs(self):
        norm = default_normalization()
        feats = lambda X: norm.transform(features_batch(np.atleast_2d(X)))
        rng = np.random.default_rng(11)
        liked, disliked = rng.random(19), rng.random(19)
        model = train_form(feats(liked), feats(disliked), np.array([1.0]))
        scorer = group_scorer([MixedFormScorer(model, None, 1.0)])
        result = optimal_design(scorer, config=GAConfig(10, 30), restarts=2)
        assert result.score >= float(scorer(liked[None, :])[0]) - 1e-9
        assert result.score >= float(scorer(disliked[None, :])[0])

    def test_constant_scorer_flagged(self):
        result = optimal_design(lambda X: np.zeros(len(np.atleast_2d(X))),
                                config=GAConfig(6, 5), restarts=1)
        assert result.degenerate

    def test_seeded_determinism(self):
        score = quadratic_scorer(np.ones(19))
        a = optimal_design(score, config=GAConfig(8, 10), restarts=2, seed=3)
        b = optimal_design(score, config=GAConfig(8, 10), restarts=2, seed=3)
        assert np.array_equal(a.design, b.design)


class TestSensitivities:
    def test_quadratic_hessian_within_one_percent(self):
        a = np.linspace(0.5, 4.0, 19)
        sens = sensitivities(quadratic_scorer(a), lam=1.0,
                             x_star=np.full(19, 0.5))
        assert np.allclose(sens.hessian_diag, -2.0 * a, rtol=0.01)
        assert sens.gradient == pytest.approx(np.zeros(19), abs=1e-8)
        assert is_interior_maximum(sens)

    def test_linear_scorer_flat_curvature(self):
        w = np.arange(1.0, 20.0)
        sens = sensitivities(lambda X: np.atleast_2d(X) @ w, lam=2.0,
                             x_star=np.full(19, 0.5))
        assert sens.hessian_diag == pytest.approx(np.zeros(19), abs=1e-6)
        assert sens.gradient == pytest.approx(2.0 * w)
        assert not is_interior_maximum(sens)

    def test_lambda_scales_everything(self):
        a = np.ones(19)
        s1 = sensitivities(quadratic_scorer(a), 1.0, np.full(19, 0.5))
        s3 = sensitivities(quadratic_scorer(a), 3.0, np.full(19, 0.5))
        assert s3.hessian_diag == pytest.approx(3.0 * s1.hessian_diag)


class TestTradeoffs:
    PW = np.array([[12.5, 6.25, 0.0, -6.25, -12.5],      # 25/4 per level step
                   [-2.0, -1.0, 0.0, 1.0, 2.0]])          # 1 per level step

    def test_quadratic_stub_closed_form(self):
        # per-$1000 utility = (6.25+6.25)/4 = 3.125; per-mpg = (1+1)/2 = 1
        a = np.linspace(1.0, 2.0, 19)
        lam = 0.7
        rows = wtt(quadratic_scorer(a), lam, self.PW, np.full(19, 0.5))
        for k, row in enumerate(rows):
            drop = lam * a[k] * 0.01**2  # -h^2/2 * (-2 a lam)
            assert row.wttp == pytest.approx(100 * drop / 3.125, rel=1e-6)
            assert row.wttm == pytest.approx(100 * drop / 1.0, rel=1e-6)
            assert row.usable

    def test_zero_lambda_zeroes_the_table(self):
        rows = wtt(quadratic_scorer(np.ones(19)), 0.0, self.PW, np.full(19, 0.5))
        assert all(r.wttp == 0.0 and r.wttm == 0.0 for r in rows)

    def test_linear_in_lambda_and_shift_invariant(self):
        a = np.linspace(1.0, 2.0, 19)
        base = wtt(quadratic_scorer(a), 1.0, self.PW, np.full(19, 0.45))
        double = wtt(quadratic_scorer(a), 2.0, self.PW, np.full(19, 0.45))
        shifted_fn = lambda X: quadratic_scorer(a)(X) + 123.0
        shifted = wtt(shifted_fn, 1.0, self.PW, np.full(19, 0.45))
        for b, d, s in zip(base, double, shifted):
            assert d.wttp == pytest.approx(2.0 * b.wttp, rel=1e-9)
            assert s.wttp == pytest.approx(b.wttp, rel=1e-6, abs=1e-9)

    def test_wrong_way_partworths_flagged(self):
        backwards = self.PW[::-1].copy()  # price rises with level, mpg falls
        rows = wtt(quadratic_scorer(np.ones(19)), 1.0, backwards[[1, 0]] * -1,
                   np.full(19, 0.5))
        assert all(not r.usable and np.isnan(r.wttp) for r in rows)

    def test_aggregate_medians_per_group(self):
        a = np.ones(19)
        rows = [wtt(quadratic_scorer(a), lam, self.PW, np.full(19, 0.5))
                for lam in (1.0, 2.0, 3.0, 4.0)]
        table = aggregate_wtt(rows, labels=np.array([0, 0, 1, 1]))
        first = table[0]
        all_wttp = [r[0].wttp for r in rows]
        assert first["wttp_median"] == pytest.approx(np.median(all_wttp))
        assert first["wttp_group0"] == pytest.approx(np.median(all_wttp[:2]))
        assert first["wttp_group1"] == pytest.approx(np.median(all_wttp[2:]))
        assert len(table) == 19

    def test_aggregate_rejects_empty(self):
        with pytest.raises(ValueError, match="no trade-off rows"):
            aggregate_wtt([])


class TestWtpMpg:
    def test_reference_arithmetic(self):
        # quartile levels: (0.42 - (-0.83))/4 per $1000, (0.64 - (-0.50))/2
        # per mpg; their ratio, in dollars
        expected = ((0.64 + 0.50) / 2.0) / ((0.42 + 0.83) / 4.0) * 1000.0
        assert expected == pytest.approx(1824.0)
        assert wtp_mpg(REFERENCE_PW) == pytest.approx(1824.0, abs=1.0)

    def test_unit_rate_respondent(self):
        # one dollar of utility per $1000, two per mpg
        prices = np.array([23.0, 25.0, 26.0, 29.0, 31.0])
        city = np.array([23.0, 23.0, 24.0, 25.0, 26.0])
        pw = np.vstack([-prices, 2.0 * city])
        assert wtp_mpg(pw) == pytest.approx(2000.0)

    def test_flat_price_partworths_rejected(self):
        pw = np.vstack([np.zeros(5), REFERENCE_PW[1]])
        with pytest.raises(ValueError, match="flat"):
            wtp_mpg(pw)

    def test_summary_median_and_flags(self):
        good = REFERENCE_PW
        flat = np.vstack([np.zeros(5), REFERENCE_PW[1]])
        out = wtp_mpg_summary(np.array([good, good, flat]))
        assert out["n_used"] == 2 and out["n_flagged"] == 1
        assert out["median"] == pytest.approx(1824.0, abs=1.0)

    def test_per_unit_helpers(self):
        assert per_kilodollar_utility(REFERENCE_PW) == pytest.approx(1.25 / 4)
        assert per_mpg_utility(REFERENCE_PW) == pytest.approx(1.14 / 2)
