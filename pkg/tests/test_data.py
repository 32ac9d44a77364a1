import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sparse_nb.data import (
    ClassSummary,
    DataError,
    LabeledDataset,
    SparseCountMatrix,
    binarize,
    summarize,
)


def dense_dataset(dense, y):
    return LabeledDataset(SparseCountMatrix.from_dense(dense), np.asarray(y))


def dense_class_sums(dense, y):
    """Double-loop reference for the per-class column sums."""
    n, m = dense.shape
    fp, fm = [0.0] * m, [0.0] * m
    for i in range(n):
        for j in range(m):
            if y[i] == 1:
                fp[j] += dense[i, j]
            else:
                fm[j] += dense[i, j]
    return np.array(fp), np.array(fm)


labelled_matrices = st.integers(2, 12).flatmap(
    lambda n: st.tuples(
        hnp.arrays(np.int64, (n, 6), elements=st.integers(0, 5)),
        hnp.arrays(np.int64, n, elements=st.sampled_from([-1, 1])).filter(
            lambda y: (y == 1).any() and (y == -1).any()
        ),
    )
)


class TestSparseCountMatrix:
    def test_dense_round_trip(self):
        dense = np.array([[0, 1.5, 0], [2, 0, 3], [0, 0, 0]])
        x = SparseCountMatrix.from_dense(dense)
        assert x.shape == (3, 3)
        assert x.nnz == 3
        np.testing.assert_array_equal(x.to_dense(), dense)
        np.testing.assert_array_equal(x.row_ptr, [0, 1, 3, 3])

    def test_rejects_duplicate_columns(self):
        with pytest.raises(DataError, match="strictly increasing"):
            SparseCountMatrix(1, 3, [0, 2], [1, 1], [1.0, 2.0])

    def test_rejects_decreasing_columns(self):
        with pytest.raises(DataError, match="strictly increasing"):
            SparseCountMatrix(1, 3, [0, 2], [2, 0], [1.0, 2.0])

    def test_row_boundary_may_restart_columns(self):
        x = SparseCountMatrix(2, 3, [0, 2, 4], [1, 2, 0, 1], [1, 1, 1, 1])
        assert x.nnz == 4

    def test_rejects_negative_values(self):
        with pytest.raises(DataError, match="non-negative"):
            SparseCountMatrix(1, 2, [0, 1], [0], [-1.0])

    def test_rejects_bad_row_ptr(self):
        with pytest.raises(DataError):
            SparseCountMatrix(2, 2, [0, 2, 1], [0, 1], [1.0, 1.0])
        with pytest.raises(DataError):
            SparseCountMatrix(1, 2, [1, 1], [], [])
        with pytest.raises(DataError):
            SparseCountMatrix(2, 2, [0, 1], [0], [1.0])

    def test_rejects_out_of_range_column(self):
        with pytest.raises(DataError, match="out of range"):
            SparseCountMatrix(1, 2, [0, 1], [2], [1.0])

    def test_immutable(self):
        x = SparseCountMatrix.from_dense([[1, 2]])
        with pytest.raises(ValueError):
            x.values[0] = 5

    def test_dot_dimension_mismatch(self):
        x = SparseCountMatrix.from_dense([[1, 2]])
        with pytest.raises(DataError):
            x.dot(np.ones(3))

    def test_dot_matches_dense(self):
        rng = np.random.default_rng(0)
        dense = rng.poisson(0.7, size=(15, 9)).astype(float)
        w = rng.normal(size=9)
        np.testing.assert_allclose(SparseCountMatrix.from_dense(dense).dot(w), dense @ w)

    def test_select_columns(self):
        dense = np.arange(12.0).reshape(3, 4)
        x = SparseCountMatrix.from_dense(dense).select_columns([3, 1])
        np.testing.assert_array_equal(x.to_dense(), dense[:, [3, 1]])


class TestLabeledDataset:
    def test_rejects_other_labels(self):
        with pytest.raises(DataError, match="labels"):
            dense_dataset([[1], [2]], [1, 0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(DataError):
            dense_dataset([[1], [2]], [1])


class TestSummarize:
    def test_small_example(self):
        s = summarize(dense_dataset([[1, 0], [0, 2]], [1, -1]))
        np.testing.assert_array_equal(s.f_plus, [1, 0])
        np.testing.assert_array_equal(s.f_minus, [0, 2])
        assert (s.n_plus, s.n_minus) == (1, 1)

    def test_degenerate_labels(self):
        with pytest.raises(DataError, match="degenerate labels"):
            summarize(dense_dataset([[1, 0], [0, 2]], [1, 1]))

    def test_matches_dense_double_loop(self):
        rng = np.random.default_rng(5)
        dense = rng.integers(0, 4, size=(20, 8)).astype(float)
        y = np.where(rng.uniform(size=20) < 0.5, 1, -1)
        y[:2] = [1, -1]
        s = summarize(dense_dataset(dense, y))
        fp, fm = dense_class_sums(dense, y)
        np.testing.assert_array_equal(s.f_plus, fp)
        np.testing.assert_array_equal(s.f_minus, fm)
        assert s.n_plus + s.n_minus == 20

    @settings(max_examples=60, deadline=None)
    @given(labelled_matrices)
    def test_conservation(self, data):
        dense, y = data
        s = summarize(dense_dataset(dense, y))
        np.testing.assert_array_equal(s.f_plus + s.f_minus, dense.sum(axis=0))

    @settings(max_examples=60, deadline=None)
    @given(labelled_matrices, st.randoms(use_true_random=False))
    def test_row_permutation_invariance(self, data, rnd):
        dense, y = data
        perm = list(range(len(y)))
        rnd.shuffle(perm)
        a = summarize(dense_dataset(dense, y))
        b = summarize(dense_dataset(dense[perm], y[perm]))
        np.testing.assert_array_equal(a.f_plus, b.f_plus)
        np.testing.assert_array_equal(a.f_minus, b.f_minus)

    def test_real_valued_weights(self):
        s = summarize(dense_dataset([[0.25, 0], [0.5, 1.5], [0, 2]], [1, 1, -1]))
        np.testing.assert_allclose(s.f_plus, [0.75, 1.5])
        np.testing.assert_allclose(s.f_minus, [0, 2])


class TestClassSummary:
    def test_rejects_negative_sums(self):
        with pytest.raises(DataError):
            ClassSummary([-1.0], [1.0], 1, 1)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DataError):
            ClassSummary([1.0, 2.0], [1.0], 1, 1)

    def test_swapped(self):
        s = ClassSummary([1.0, 2.0], [3.0, 4.0], 2, 5).swapped()
        np.testing.assert_array_equal(s.f_plus, [3, 4])
        assert (s.n_plus, s.n_minus) == (5, 2)
        assert s.log_prior_ratio == pytest.approx(np.log(5 / 2))


class TestBinarize:
    def test_values(self):
        x = binarize(SparseCountMatrix.from_dense([[3.5, 1, 0.2]]))
        np.testing.assert_array_equal(x.values, [1, 1, 1])

    def test_empty(self):
        x = binarize(SparseCountMatrix(0, 0, [0], [], []))
        assert x.shape == (0, 0)
        assert x.nnz == 0

    def test_random_pattern_unchanged(self):
        rng = np.random.default_rng(1)
        dense = rng.poisson(0.5, size=(30, 10)) * rng.uniform(0.1, 3, size=(30, 10))
        x = SparseCountMatrix.from_dense(dense)
        b = binarize(x)
        assert np.all(b.values == 1)
        np.testing.assert_array_equal(b.row_ptr, x.row_ptr)
        np.testing.assert_array_equal(b.col_idx, x.col_idx)
