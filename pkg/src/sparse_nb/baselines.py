"""Fast feature-ranking baselines: thresholded MNB and the odds ratio."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bernoulli import _check_binary
from .data import ClassSummary, DataError
from .multinomial import MultinomialModel


@dataclass(frozen=True, eq=False)
class FeatureRanking:
    scores: np.ndarray
    order: np.ndarray


def rank_scores(scores) -> FeatureRanking:
    """Descending order; equal scores keep ascending index order."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise DataError("ranking scores must be finite")
    order = np.argsort(-scores, kind="stable")
    return FeatureRanking(scores, order)


def tmnb_rank(model: MultinomialModel) -> FeatureRanking:
    """Rank by the magnitude of the multinomial rule weights."""
    tp, tm = model.theta_plus, model.theta_minus
    if np.any(tp <= 0) or np.any(tm <= 0):
        raise DataError("non-finite weights: TMNB needs strictly positive probabilities")
    return rank_scores(np.abs(np.log(tp) - np.log(tm)))


def odds_ratio_rank(s: ClassSummary, gamma: float) -> FeatureRanking:
    """Rank by the absolute log odds ratio of smoothed occurrence rates.

    ``s`` must summarize binarized data (``f <= n`` per class).
    """
    if gamma <= 0:
        raise ValueError("odds ratio needs gamma > 0")
    _check_binary(s)
    p_plus = (s.f_plus + gamma) / (s.n_plus + 2 * gamma)
    p_minus = (s.f_minus + gamma) / (s.n_minus + 2 * gamma)
    log_odds = (np.log(p_plus) - np.log1p(-p_plus)) - (np.log(p_minus) - np.log1p(-p_minus))
    return rank_scores(np.abs(log_odds))


def select_top(r: FeatureRanking, k: int) -> np.ndarray:
    """The first ``k`` features of the ranking, as a sorted index array."""
    if not 0 <= k <= len(r.order):
        raise ValueError(f"k={k} out of range [0, {len(r.order)}]")
    return np.sort(r.order[:k])
