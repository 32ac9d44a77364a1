import numpy as np
import pytest

import oracles
from sparse_nb.bernoulli import (
    BernoulliModel,
    bernoulli_log_likelihood,
    fit_bernoulli_mle,
    fit_sparse_bernoulli,
    predict_bernoulli,
    sbnb_score,
)
from sparse_nb.data import ClassSummary, DataError, SparseCountMatrix


def random_summary(rng, m, n_max=20):
    return ClassSummary(*oracles.random_binary_summary(rng, m, n_max))


class TestMle:
    def test_plain_rate(self):
        model = fit_bernoulli_mle(ClassSummary([1.0], [0.0], 2, 2))
        np.testing.assert_allclose(model.theta_plus, [0.5])

    def test_laplace(self):
        model = fit_bernoulli_mle(ClassSummary([0.0], [0.0], 2, 2), gamma=1.0)
        np.testing.assert_allclose(model.theta_plus, [0.25])

    def test_selected_is_everything(self):
        model = fit_bernoulli_mle(ClassSummary([1.0, 2.0, 0.0], [1.0, 0.0, 1.0], 3, 2))
        np.testing.assert_array_equal(model.selected, [0, 1, 2])

    def test_non_binary(self):
        with pytest.raises(DataError, match="non-binary summary"):
            fit_bernoulli_mle(ClassSummary([3.0], [0.0], 2, 2))

    def test_grid_oracle(self):
        rng = np.random.default_rng(2)
        grid = np.linspace(0, 1, 1001)
        for _ in range(5):
            s = random_summary(rng, 3)
            model = fit_bernoulli_mle(s)
            best = bernoulli_log_likelihood(s, model.theta_plus, model.theta_minus)
            for j in range(s.m):
                for f, n in ((s.f_plus[j], s.n_plus), (s.f_minus[j], s.n_minus)):
                    with np.errstate(divide="ignore", invalid="ignore"):
                        ll = np.nan_to_num(
                            f * np.log(grid) + (n - f) * np.log(1 - grid), nan=-np.inf
                        )
                    mle = f / n
                    own = oracles.xlog(f, mle) + oracles.xlog(n - f, 1 - mle)
                    assert ll.max() <= own + 1e-12
            assert np.isfinite(best)

    def test_rule_matches_formula(self):
        model = BernoulliModel([0.2, 0.7], [0.4, 0.7], 0.1, [0, 1])
        w0 = np.log(0.2 * 0.6 / (0.4 * 0.8))
        np.testing.assert_allclose(model.weights, [w0, 0.0])
        assert model.bias == pytest.approx(0.1 + np.log(0.8 / 0.6))


class TestScore:
    def test_diff_nonnegative(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            s = random_summary(rng, int(rng.integers(1, 20)), n_max=50)
            assert sbnb_score(s).diff.min() >= -1e-9

    def test_symmetric_classes_zero_diff(self):
        s = ClassSummary([1.0, 3.0, 0.0], [1.0, 3.0, 0.0], 4, 4)
        np.testing.assert_allclose(sbnb_score(s).diff, 0, atol=1e-12)


class TestSparseFit:
    def test_exhaustive_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            m = int(rng.integers(1, 9))
            fp, fm, n_plus, n_minus = oracles.random_binary_summary(rng, m)
            s = ClassSummary(fp, fm, n_plus, n_minus)
            for k in range(m + 1):
                model, _, objective = fit_sparse_bernoulli(s, k)
                best = oracles.bernoulli_bruteforce(fp, fm, n_plus, n_minus, k)
                assert objective == pytest.approx(best, rel=1e-9, abs=1e-12)
                achieved = oracles.bernoulli_loglik(
                    fp, fm, n_plus, n_minus, model.theta_plus, model.theta_minus
                )
                assert achieved == pytest.approx(best, rel=1e-9, abs=1e-12)

    def test_k_equals_m_is_mle(self):
        rng = np.random.default_rng(11)
        s = random_summary(rng, 7)
        model, _, objective = fit_sparse_bernoulli(s, 7)
        mle = fit_bernoulli_mle(s)
        np.testing.assert_allclose(model.theta_plus, mle.theta_plus)
        np.testing.assert_allclose(model.theta_minus, mle.theta_minus)
        ll = bernoulli_log_likelihood(s, mle.theta_plus, mle.theta_minus)
        assert objective == pytest.approx(ll, rel=1e-9)

    def test_symmetric_classes(self):
        s = ClassSummary([2.0, 1.0, 4.0], [2.0, 1.0, 4.0], 5, 5)
        values = {fit_sparse_bernoulli(s, k)[2] for k in range(4)}
        assert max(values) - min(values) < 1e-12
        model, _, _ = fit_sparse_bernoulli(s, 1)
        np.testing.assert_allclose(model.theta_plus, model.theta_minus)
        np.testing.assert_allclose(model.theta_plus, np.array([4.0, 2.0, 8.0]) / 10)

    def test_pooled_weights_exactly_zero(self):
        rng = np.random.default_rng(12)
        s = random_summary(rng, 12, n_max=40)
        for k in range(13):
            model, _, _ = fit_sparse_bernoulli(s, k, gamma=0.5)
            off = np.setdiff1d(np.arange(12), model.selected)
            assert np.all(model.weights[off] == 0.0)
            assert np.count_nonzero(model.weights) <= k
            assert len(model.selected) == k

    def test_objective_nondecreasing(self):
        rng = np.random.default_rng(13)
        s = random_summary(rng, 15, n_max=40)
        values = [fit_sparse_bernoulli(s, k)[2] for k in range(16)]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_k_zero_fully_pooled(self):
        rng = np.random.default_rng(14)
        model, _, _ = fit_sparse_bernoulli(random_summary(rng, 5), 0)
        np.testing.assert_array_equal(model.theta_plus, model.theta_minus)
        assert np.all(model.weights == 0)

    def test_smoothing_applied_before_scoring(self):
        s = ClassSummary([0.0, 3.0], [2.0, 1.0], 3, 3)
        model, score, objective = fit_sparse_bernoulli(s, 2, gamma=1.0)
        np.testing.assert_allclose(model.theta_plus, [1 / 5, 4 / 5])
        smoothed = ClassSummary([1.0, 4.0], [3.0, 2.0], 5, 5)
        ll = bernoulli_log_likelihood(smoothed, model.theta_plus, model.theta_minus)
        assert objective == pytest.approx(ll)

    @pytest.mark.parametrize("k", [-1, 4])
    def test_k_out_of_range(self, k):
        with pytest.raises(ValueError):
            fit_sparse_bernoulli(ClassSummary([1.0, 0, 1], [0.0, 1, 1], 2, 2), k)


class TestPredict:
    def test_zero_weights_positive_bias(self):
        model = BernoulliModel([0.3, 0.3], [0.3, 0.3], 0.3, [])
        x = SparseCountMatrix.from_dense([[1, 0], [0, 1], [0, 0]])
        np.testing.assert_array_equal(predict_bernoulli(model, x), [1, 1, 1])

    def test_single_feature(self):
        model = BernoulliModel([0.9], [0.1], 0.0, [0])
        assert predict_bernoulli(model, SparseCountMatrix.from_dense([[1]]))[0] == 1
        assert predict_bernoulli(model, SparseCountMatrix.from_dense([[0]]))[0] == -1

    def test_direct_posterior(self):
        rng = np.random.default_rng(15)
        for _ in range(10):
            m = 12
            tp = rng.uniform(0.05, 0.95, m)
            tm = rng.uniform(0.05, 0.95, m)
            tm[:3] = tp[:3]
            prior = float(rng.normal())
            model = BernoulliModel(tp, tm, prior, np.arange(m))
            dense = (rng.uniform(size=(40, m)) < 0.4).astype(float)
            expected = oracles.posterior_labels(0, tp, tm, prior, dense, "bernoulli")
            got = predict_bernoulli(model, SparseCountMatrix.from_dense(dense))
            np.testing.assert_array_equal(got, expected)

    def test_dimension_mismatch(self):
        model = BernoulliModel([0.9], [0.1], 0.0, [0])
        with pytest.raises(DataError, match="dimension"):
            predict_bernoulli(model, SparseCountMatrix.from_dense([[1, 0]]))

    def test_requires_binary(self):
        model = BernoulliModel([0.9], [0.1], 0.0, [0])
        with pytest.raises(DataError, match="binary"):
            predict_bernoulli(model, SparseCountMatrix.from_dense([[2]]))
