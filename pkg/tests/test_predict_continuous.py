import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from simscore.measures import aligned_candidate
from simscore.predict_continuous import (
    EmbeddingConfig,
    PredictionError,
    Predictions,
    blend_weight,
    conditional_predict,
    cross_predict,
    d_cross_continuous,
    d_cross_from_entropies,
    embed,
    error_stats,
    gaussian_entropy,
    mse,
    nid_continuous,
    nid_from_entropies,
    nmse,
    nmse_cross,
    self_predict,
)
from simscore.synth import SyntheticSpec, base_sequence, make_cover

CFG = EmbeddingConfig()


def rand_seq(n, seed):
    return np.random.default_rng(seed).random((n, 12))


def brute_neighbors(X, Y, cfg, exclude=None):
    """O(N*M) scan with np.corrcoef, ties to the smallest index."""
    def vec(S, r):
        return np.concatenate([S[r - j * cfg.tau] for j in range(cfg.d)])

    def corr(a, b):
        if np.ptp(a) == 0 or np.ptp(b) == 0:
            return 0.0
        return np.corrcoef(a, b)[0, 1]

    span = (cfg.d - 1) * cfg.tau
    out = []
    for t in range(span, len(X) - cfg.h):
        best, best_k = -np.inf, None
        for k in range(span, len(Y) - cfg.h):
            if exclude is not None and abs(k - t) <= exclude:
                continue
            c = corr(vec(X, t), vec(Y, k))
            if c > best + 1e-12:
                best, best_k = c, k
        out.append(best_k)
    return np.array(out)


class TestEmbed:
    def test_d1_is_identity_for_any_tau(self):
        s = rand_seq(10, 0)
        for tau in (1, 3, 7):
            np.testing.assert_array_equal(embed(s, EmbeddingConfig(d=1, tau=tau)), s)

    def test_d2_unrolled(self):
        a, b, c = np.eye(12)[:3]
        v = embed(np.array([a, b, c]), EmbeddingConfig(d=2, tau=1))
        np.testing.assert_array_equal(v, [np.r_[b, a], np.r_[c, b]])

    def test_too_short(self):
        with pytest.raises(PredictionError, match="insufficient length for embedding"):
            embed(rand_seq(18, 0), EmbeddingConfig(d=4, tau=6))
        assert len(embed(rand_seq(19, 0), EmbeddingConfig(d=4, tau=6))) == 1

    @pytest.mark.parametrize("d,tau", [(1, 1), (2, 2), (4, 1), (4, 6)])
    def test_blocks_recover_rows(self, d, tau):
        s = rand_seq(40, 1)
        cfg = EmbeddingConfig(d=d, tau=tau)
        v = embed(s, cfg)
        assert len(v) == 40 - cfg.span
        for i, r in enumerate(range(cfg.span, 40)):
            for j in range(d):
                np.testing.assert_array_equal(v[i, 12 * j : 12 * (j + 1)], s[r - j * tau])


class TestCrossPredict:
    def test_identical_sequences_match_themselves(self):
        x = rand_seq(30, 0)
        p = cross_predict(x, x, CFG)
        np.testing.assert_array_equal(p.neighbors, p.targets)
        np.testing.assert_array_equal(p.values, x[p.targets + 1])

    @pytest.mark.parametrize("seed", range(3))
    def test_shifted_copy_matches_brute_force(self, seed):
        base = rand_seq(70, seed)
        x, y = base[:64], base[6:70]
        p = cross_predict(x, y, CFG)
        np.testing.assert_array_equal(p.neighbors, brute_neighbors(x, y, CFG))
        np.testing.assert_array_equal(p.values, y[p.neighbors + 1])

    @pytest.mark.parametrize("cfg", [EmbeddingConfig(d=2, tau=2, h=4), EmbeddingConfig(d=1, h=1)])
    def test_random_matches_brute_force(self, cfg):
        x, y = rand_seq(40, 5), rand_seq(33, 6)
        np.testing.assert_array_equal(cross_predict(x, y, cfg).neighbors, brute_neighbors(x, y, cfg))

    def test_constant_candidates_tie_to_first(self):
        p = cross_predict(rand_seq(20, 0), np.ones((20, 12)), CFG)
        assert (p.neighbors == CFG.span).all()

    def test_candidate_too_short(self):
        with pytest.raises(PredictionError):
            cross_predict(rand_seq(20, 0), rand_seq(4, 1), CFG)


class TestSelfPredict:
    def test_periodic_recovered_exactly(self):
        period = rand_seq(10, 3)
        x = np.tile(period, (6, 1))
        p = self_predict(x, CFG)
        np.testing.assert_array_equal(p.values, x[p.successors])
        assert (np.abs(p.neighbors - p.targets) >= 10).all()

    def test_matches_brute_force_with_exclusion(self):
        x = rand_seq(50, 4)
        cfg = EmbeddingConfig(d=2, tau=1, R=8)
        np.testing.assert_array_equal(self_predict(x, cfg).neighbors, brute_neighbors(x, x, cfg, exclude=8))

    def test_radius_exhausts(self):
        with pytest.raises(PredictionError, match="exclusion radius exhausts candidates"):
            self_predict(rand_seq(12, 0), EmbeddingConfig(R=40))

    def test_radius_zero_excludes_only_self(self):
        x = rand_seq(30, 2)
        p = self_predict(x, EmbeddingConfig(R=0))
        assert (p.neighbors != p.targets).all()
        np.testing.assert_array_equal(p.neighbors, brute_neighbors(x, x, EmbeddingConfig(R=0), exclude=0))


class TestConditional:
    def test_perfect_self_prediction_gives_self(self):
        x = np.tile(rand_seq(10, 0), (6, 1))
        y = rand_seq(60, 1)
        cond = conditional_predict(x, y, CFG)
        np.testing.assert_array_equal(cond.values, self_predict(x, CFG).values)

    def test_blend_weight(self):
        assert blend_weight(0.0, 3.0) == 0.0
        assert blend_weight(2.0, 2.0) == 0.5
        assert blend_weight(0.0, 0.0) == 0.5

    def test_equals_hand_combination(self):
        x, y = rand_seq(50, 2), rand_seq(45, 3)
        cross, own = cross_predict(x, y, CFG), self_predict(x, CFG)
        ms, mc = mse(x, own), mse(x, cross)
        alpha = ms / (ms + mc)
        expected = alpha * cross.values + (1 - alpha) * own.values
        np.testing.assert_allclose(conditional_predict(x, y, CFG).values, expected, rtol=0, atol=1e-15)


class TestErrorStats:
    def test_perfect_predictions(self):
        x = rand_seq(20, 0)
        p = Predictions(np.arange(3, 19), np.arange(4, 20), x[4:20], np.zeros(16, int))
        stats = error_stats(x, p)
        assert not stats.errors.any()
        np.testing.assert_array_equal(stats.covariance, 0)

    def test_unbiased_covariance_oracle(self):
        # component 0 has population variance 1 and residuals (1, -1)
        x = np.zeros((3, 12))
        x[:, 0] = [0.0, math.sqrt(1.5), -math.sqrt(1.5)]
        x[:, 0] -= x[:, 0].mean()
        x[:, 0] /= x[:, 0].std()
        values = x[[1, 2]].copy()
        values[:, 0] += [1.0, -1.0]
        stats = error_stats(x, Predictions(np.array([0, 1]), np.array([1, 2]), values, np.zeros(2, int)))
        # mean 0, sum of squares 2, n - 1 = 1
        assert stats.covariance[0, 0] == pytest.approx(2.0, abs=1e-12)

    def test_constant_component_floored(self):
        x = rand_seq(20, 0)
        x[:, 5] = 0.3
        p = cross_predict(x, rand_seq(20, 1), CFG)
        stats = error_stats(x, p)
        assert stats.scale[5] == 1e-12
        assert np.isfinite(gaussian_entropy(stats.covariance))

    def test_too_few_rows(self):
        x = rand_seq(5, 0)
        with pytest.raises(PredictionError):
            error_stats(x, Predictions(np.array([0]), np.array([1]), x[[1]], np.zeros(1, int)))


class TestGaussianEntropy:
    def test_unit_variance(self):
        assert gaussian_entropy([[1.0]]) == pytest.approx(2.0471, abs=1e-4)

    def test_two_dimensional(self):
        assert gaussian_entropy(np.diag([1.0, 4.0])) == pytest.approx(5.0942, abs=1e-4)

    def test_zero_matrix_finite(self):
        h = gaussian_entropy(np.zeros((12, 12)))
        assert h == pytest.approx(6 * math.log2(2 * math.pi * math.e * 1e-9), rel=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_rotation_invariance(self, seed):
        e = np.random.default_rng(seed).standard_normal((200, 12))
        q = special_ortho_group.rvs(12, random_state=seed)
        h1 = gaussian_entropy(np.cov(e, rowvar=False))
        h2 = gaussian_entropy(np.cov(e @ q.T, rowvar=False))
        assert abs(h1 - h2) < 1e-6


class TestDistances:
    def test_nid_stub(self):
        assert nid_from_entropies(2, 3, 4, 5) == pytest.approx(0.6)

    def test_d_cross_stub(self):
        assert d_cross_from_entropies(3, 5, 2, 2) == 2.0

    def test_degenerate_denominator(self):
        with pytest.raises(PredictionError):
            d_cross_from_entropies(1, 1, 0.0, 0.0)
        with pytest.raises(PredictionError):
            nid_from_entropies(1, 1, 0.0, -1.0)

    def test_nid_self_below_noise(self):
        rng = np.random.default_rng(0)
        x = base_sequence(rng, 120)
        noise = rng.random((120, 12))
        assert nid_continuous(x, x, CFG) < nid_continuous(x, noise, CFG)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        x, y = base_sequence(rng, 100), base_sequence(rng, 90)
        assert nid_continuous(x, y, CFG) == nid_continuous(y, x, CFG)
        assert d_cross_continuous(x, y, CFG) == pytest.approx(d_cross_continuous(y, x, CFG), rel=1e-15)
        assert nmse_cross(x, y, CFG) == pytest.approx(nmse_cross(y, x, CFG), rel=1e-15)

    @pytest.mark.slow
    def test_synthetic_separation(self):
        spec = SyntheticSpec()
        wins = 0
        for trial in range(100):
            rng = np.random.default_rng([7, trial])
            base, other = base_sequence(rng, spec.length), base_sequence(rng, spec.length)
            x = make_cover(rng, base, spec)
            cover = aligned_candidate(x, make_cover(rng, base, spec))
            stranger = aligned_candidate(x, make_cover(rng, other, spec))
            wins += d_cross_continuous(x, cover, CFG) < d_cross_continuous(x, stranger, CFG)
        assert wins >= 90


class TestNMSE:
    def test_perfect(self):
        x = np.tile(rand_seq(10, 0), (6, 1))
        assert nmse_cross(x, x, CFG) == 0.0

    def test_mean_prediction_is_one(self):
        actual = np.array([[1.0], [3.0], [2.0], [6.0]]) * np.ones((1, 12))
        actual[:, 1] = [0.0, 1.0, 0.0, 1.0]
        predicted = np.tile(actual.mean(axis=0), (4, 1))
        assert nmse(actual, predicted) == pytest.approx(1.0, abs=1e-12)

    def test_constant_component_floor(self):
        actual = rand_seq(8, 0)
        actual[:, 2] = 0.5
        assert np.isfinite(nmse(actual, actual + 0.0))

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.01, 100))
    def test_whole_sequence_scaling(self, c):
        x, y = rand_seq(40, 1), rand_seq(40, 2)
        p = cross_predict(x, y, CFG)
        q = cross_predict(c * x, c * y, CFG)
        np.testing.assert_array_equal(p.neighbors, q.neighbors)
        assert nmse_cross(c * x, c * y, CFG) == pytest.approx(nmse_cross(x, y, CFG), abs=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 11), st.floats(0.01, 100))
    def test_single_component_scaling_fixed_predictions(self, i, c):
        actual, predicted = rand_seq(30, 3), rand_seq(30, 4)
        scale = np.ones(12)
        scale[i] = c
        assert nmse(actual * scale, predicted * scale) == pytest.approx(nmse(actual, predicted), abs=1e-9)
