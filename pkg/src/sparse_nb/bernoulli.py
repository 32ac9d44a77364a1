"""Bernoulli naive Bayes, classical and cardinality-constrained.

The sparse fit is exact: pooling feature ``j`` (forcing equal class
probabilities) costs ``w_j - v_j`` in log-likelihood, where ``v_j`` is the
pooled Bernoulli log-likelihood and ``w_j`` the per-class one.  Keeping the
``k`` features with the largest cost as free coordinates therefore solves
the constrained maximum-likelihood problem in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .data import ClassSummary, DataError, SparseCountMatrix
from .topk import topk_indices, topk_sum

_BINARY_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class BernoulliModel:
    theta_plus: np.ndarray
    theta_minus: np.ndarray
    log_prior_ratio: float
    selected: np.ndarray
    gamma: float = 0.0
    bias: float = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        tp = np.asarray(self.theta_plus, dtype=np.float64)
        tm = np.asarray(self.theta_minus, dtype=np.float64)
        object.__setattr__(self, "theta_plus", tp)
        object.__setattr__(self, "theta_minus", tm)
        object.__setattr__(self, "selected", np.asarray(self.selected, dtype=np.int64))
        bias, weights = bernoulli_rule(tp, tm, self.log_prior_ratio)
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "weights", weights)

    @property
    def m(self) -> int:
        return len(self.theta_plus)


@dataclass(frozen=True, eq=False)
class SbnbScore:
    """Pooled (``v``) and split (``w``) per-feature log-likelihoods."""

    v: np.ndarray
    w: np.ndarray

    @property
    def diff(self) -> np.ndarray:
        return self.w - self.v


def bernoulli_rule(theta_plus, theta_minus, log_prior_ratio):
    """Bias and weights of the linear decision rule.

    Coordinates with ``theta_plus == theta_minus`` get weight exactly zero
    and contribute nothing to the bias, even when the shared value is 0 or 1.
    """
    differ = theta_plus != theta_minus
    tp, tm = theta_plus[differ], theta_minus[differ]
    weights = np.zeros(len(theta_plus))
    with np.errstate(divide="ignore", invalid="ignore"):
        weights[differ] = np.log(tp) + np.log1p(-tm) - np.log(tm) - np.log1p(-tp)
        bias = float(log_prior_ratio + np.sum(np.log1p(-tp) - np.log1p(-tm)))
    return bias, weights


def _check_binary(s: ClassSummary):
    if np.any(s.f_plus > s.n_plus + _BINARY_SLACK) or np.any(
        s.f_minus > s.n_minus + _BINARY_SLACK
    ):
        raise DataError("non-binary summary: a class sum exceeds the class size")


def smooth_bernoulli(s: ClassSummary, gamma: float) -> ClassSummary:
    """Laplace smoothing: ``gamma`` pseudo-occurrences and non-occurrences."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if gamma == 0:
        return s
    return ClassSummary(
        s.f_plus + gamma, s.f_minus + gamma, s.n_plus + 2 * gamma, s.n_minus + 2 * gamma
    )


def bernoulli_log_likelihood(s: ClassSummary, theta_plus, theta_minus) -> float:
    """Training log-likelihood of a Bernoulli model, with 0 log 0 = 0."""
    tp = np.asarray(theta_plus, dtype=np.float64)
    tm = np.asarray(theta_minus, dtype=np.float64)
    total = (
        xlogy(s.f_plus, tp)
        + xlogy(s.n_plus - s.f_plus, 1.0 - tp)
        + xlogy(s.f_minus, tm)
        + xlogy(s.n_minus - s.f_minus, 1.0 - tm)
    )
    return float(total.sum())


def fit_bernoulli_mle(s: ClassSummary, gamma: float = 0.0) -> BernoulliModel:
    _check_binary(s)
    prior = s.log_prior_ratio
    ss = smooth_bernoulli(s, gamma)
    return BernoulliModel(
        ss.f_plus / ss.n_plus,
        ss.f_minus / ss.n_minus,
        prior,
        np.arange(s.m),
        gamma,
    )


def sbnb_score(s: ClassSummary) -> SbnbScore:
    """Per-feature pooled and split maximum log-likelihoods."""
    n = s.n_plus + s.n_minus
    g = s.total
    v = xlogy(g, g / n) + xlogy(n - g, (n - g) / n)
    w = np.zeros(s.m)
    for f, nc in ((s.f_plus, s.n_plus), (s.f_minus, s.n_minus)):
        w += xlogy(f, f / nc) + xlogy(nc - f, (nc - f) / nc)
    return SbnbScore(v, w)


def fit_sparse_bernoulli(s: ClassSummary, k: int, gamma: float = 0.0):
    """Exact maximum-likelihood Bernoulli model with at most ``k`` features
    where the class probabilities differ.

    Returns
    -------
    (model, score, objective)
        ``objective`` is the optimal log-likelihood (of the smoothed summary
        when ``gamma > 0``).
    """
    if not 0 <= k <= s.m:
        raise ValueError(f"k={k} out of range [0, {s.m}]")
    _check_binary(s)
    prior = s.log_prior_ratio
    ss = smooth_bernoulli(s, gamma)
    score = sbnb_score(ss)
    diff = score.diff
    free = topk_indices(diff, k)
    objective = float(score.v.sum()) + topk_sum(diff, k)

    pooled = ss.total / (ss.n_plus + ss.n_minus)
    theta_plus = pooled.copy()
    theta_minus = pooled.copy()
    theta_plus[free] = ss.f_plus[free] / ss.n_plus
    theta_minus[free] = ss.f_minus[free] / ss.n_minus
    model = BernoulliModel(theta_plus, theta_minus, prior, free, gamma)
    return model, score, objective


def _decision(bias, weights, x: SparseCountMatrix) -> np.ndarray:
    if x.n_cols != len(weights):
        raise DataError(f"dimension mismatch: data has {x.n_cols} columns, model {len(weights)}")
    if not (np.isfinite(bias) and np.all(np.isfinite(weights))):
        raise DataError("model rule is not finite; refit with smoothing gamma > 0")
    scores = bias + x.dot(weights)
    return np.where(scores >= 0, 1, -1)


def predict_bernoulli(model: BernoulliModel, x: SparseCountMatrix) -> np.ndarray:
    """Labels in {-1, +1}; a zero score maps to +1."""
    if np.any((x.values != 0) & (x.values != 1)):
        raise DataError("Bernoulli prediction requires binary data (see binarize)")
    return _decision(model.bias, model.weights, x)
