"""Desk-scale experiment drivers: duality gap, selection pipeline, scaling."""

from __future__ import annotations

import contextlib
import ctypes
import gc
import statistics
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baselines import odds_ratio_rank, select_top, tmnb_rank
from .data import ClassSummary, DataError, LabeledDataset, SparseCountMatrix, binarize, summarize
from .multinomial import (
    SmnbDual,
    fit_multinomial_mle,
    predict_multinomial,
    reconstruct_primal,
    smnb_bound,
    smooth_multinomial,
)
from .topk import topk_indices

# glibc mallopt parameters and their defaults
_M_TRIM_THRESHOLD, _M_MMAP_THRESHOLD = -1, -3
_DEFAULT_THRESHOLD = 128 * 1024
_STEADY_THRESHOLD = 1 << 30

METHODS = ("smnb", "tmnb", "odds")


@dataclass(frozen=True)
class GapRow:
    k: int
    psi_k: float
    psi_km4: Optional[float]
    primal_value: float
    a_posteriori_gap: float
    delta: Optional[float]


@dataclass(frozen=True)
class GapCurve:
    m: int
    seed: Optional[int]
    rows: list = field(default_factory=list)

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)


@dataclass(frozen=True)
class PipelineReport:
    method: str
    k: int
    sparsity_pct: float
    selected: np.ndarray
    stage2_accuracy: float
    fit_seconds: float


@dataclass(frozen=True)
class ScalingPoint:
    m: int
    k: int
    seconds: float


@dataclass(frozen=True)
class ScalingReport:
    points: list
    ratio_bound_ok: bool


def synthetic_summary(m: int, seed: int) -> ClassSummary:
    """Uniform ``f_plus``, ``f_minus`` on [0, 1]^m, each scaled to sum 1."""
    rng = np.random.default_rng(seed)
    f_plus = rng.uniform(size=m)
    f_minus = rng.uniform(size=m)
    return ClassSummary(f_plus / f_plus.sum(), f_minus / f_minus.sum(), 1, 1)


def gap_curve(s: ClassSummary, gamma: float = 0.0, seed: Optional[int] = None, tol: float = 1e-10):
    """Relaxation value, its k-4 shift and the primalized value for 4 <= k <= m."""
    ss = smooth_multinomial(s, gamma)
    dual = SmnbDual(ss)
    m = s.m
    psi = np.empty(m + 1)
    rows = []
    for k in range(m + 1):
        alpha, psi[k] = dual.minimize(k, tol)
        if k < 4:
            continue
        _, primal = reconstruct_primal(ss, topk_indices(dual.h(alpha), k))
        rows.append(
            GapRow(
                k=k,
                psi_k=float(psi[k]),
                psi_km4=float(psi[k - 4]),
                primal_value=primal,
                a_posteriori_gap=float(psi[k] - primal),
                delta=float(psi[k] - psi[k - 4]),
            )
        )
    return GapCurve(m, seed, rows)


def run_gap_experiment(m: int, seed: int, gamma: float = 0.0) -> GapCurve:
    if m < 8:
        raise ValueError("gap experiment needs m >= 8")
    return gap_curve(synthetic_summary(m, seed), gamma=gamma, seed=seed)


def select_features(s: ClassSummary, method: str, k: int, gamma: float) -> np.ndarray:
    """Indices of ``k`` features chosen by ``method`` from training sums.

    ``s`` summarizes the raw training data; the odds ratio needs a binarized
    summary and is therefore handled by :func:`select_from_dataset`.
    """
    if method == "smnb":
        relax = smnb_bound(s, k, gamma=gamma if gamma > 0 else None, certify=False)
        return relax.top_k
    if method == "tmnb":
        return select_top(tmnb_rank(fit_multinomial_mle(s, gamma)), k)
    raise ValueError(f"unknown method {method!r}")


def select_from_dataset(train: LabeledDataset, method: str, k: int, gamma: float) -> np.ndarray:
    """Feature selection by name, binarizing the data for the odds ratio."""
    if method == "odds":
        occurrence = LabeledDataset(binarize(train.x), train.y)
        return select_top(odds_ratio_rank(summarize(occurrence), gamma), k)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return select_features(summarize(train), method, k, gamma)


def accuracy(pred, y) -> float:
    return float(np.mean(np.asarray(pred) == np.asarray(y)))


def run_pipeline(
    train: LabeledDataset, test: LabeledDataset, method: str, k: int, gamma: float = 1.0
) -> PipelineReport:
    """Select ``k`` features on ``train``, fit MNB on them, score on ``test``."""
    m = train.n_features
    if test.n_features != m:
        raise DataError(f"dimension mismatch: train has {m} features, test {test.n_features}")
    if not 0 <= k <= m:
        raise ValueError(f"k={k} out of range [0, {m}]")
    start = time.perf_counter()
    selected = np.sort(np.asarray(select_from_dataset(train, method, k, gamma), dtype=np.int64))
    elapsed = time.perf_counter() - start

    model = fit_multinomial_mle(
        summarize(LabeledDataset(train.x.select_columns(selected), train.y)), gamma
    )
    pred = predict_multinomial(model, test.x.select_columns(selected))
    return PipelineReport(
        method=method,
        k=k,
        sparsity_pct=100.0 * k / m if m else 0.0,
        selected=selected,
        stage2_accuracy=accuracy(pred, test.y),
        fit_seconds=elapsed,
    )


def planted_dataset(
    n_train: int = 2000,
    n_test: int = 1000,
    m: int = 1000,
    n_informative: int = 10,
    seed: int = 0,
    rate_high: float = 1.0,
    rate_low: float = 0.1,
    rate_noise: float = 0.3,
):
    """Poisson bag-of-words data where only a few features carry signal.

    Informative features have rate ``rate_high`` in one class and
    ``rate_low`` in the other (half favour each class); every other feature
    has the same rate in both classes.

    Returns ``(train, test, informative_indices)``.
    """
    rng = np.random.default_rng(seed)
    informative = np.sort(rng.choice(m, size=n_informative, replace=False))
    rates = {1: np.full(m, rate_noise), -1: np.full(m, rate_noise)}
    half = n_informative // 2
    rates[1][informative[:half]] = rate_high
    rates[-1][informative[:half]] = rate_low
    rates[1][informative[half:]] = rate_low
    rates[-1][informative[half:]] = rate_high

    def draw(n):
        y = np.where(np.arange(n) % 2 == 0, 1, -1)
        rng.shuffle(y)
        lam = np.where((y == 1)[:, None], rates[1][None, :], rates[-1][None, :])
        x = rng.poisson(lam).astype(np.float64)
        return LabeledDataset(SparseCountMatrix.from_dense(x), y)

    train = draw(n_train)
    test = draw(n_test)
    return train, test, informative


@contextlib.contextmanager
def _steady_allocator():
    """Keep large temporaries on the heap while timing.

    With glibc's adaptive thresholds, arrays of a few hundred KB alternate
    between fresh mmaps and heap trims, so each call pays page faults that
    grow faster than ``m``.  A no-op where ``mallopt`` is unavailable.
    """
    try:
        mallopt = ctypes.CDLL(None).mallopt
    except (OSError, AttributeError):
        yield
        return
    mallopt(_M_MMAP_THRESHOLD, _STEADY_THRESHOLD)
    mallopt(_M_TRIM_THRESHOLD, _STEADY_THRESHOLD)
    try:
        yield
    finally:
        mallopt(_M_MMAP_THRESHOLD, _DEFAULT_THRESHOLD)
        mallopt(_M_TRIM_THRESHOLD, _DEFAULT_THRESHOLD)


def run_scaling(
    base_m: int,
    factors: Sequence[float],
    k_ratio: float = 0.05,
    seed: int = 0,
    repeats: int = 5,
) -> ScalingReport:
    """Median wall time of ``smnb_bound`` as ``m`` grows with fixed ``k/m``.

    ``ratio_bound_ok`` holds when every step's time ratio stays within
    1.25 times its size ratio (2.5x per doubling).
    """
    factors = list(factors)
    if any(b < a for a, b in zip(factors, factors[1:])):
        raise ValueError("factors must be nondecreasing")
    sizes = [int(round(base_m * factor)) for factor in factors]
    cases = [(m, int(round(k_ratio * m))) for m in sizes]
    summaries = [synthetic_summary(m, seed) for m in sizes]
    times = [[] for _ in cases]
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        with _steady_allocator():
            for s, (_, k) in zip(summaries, cases):
                smnb_bound(s, k, certify=False)  # warm-up
            # round-robin so a transient slowdown hits every size alike
            for _ in range(repeats):
                for s, (_, k), bucket in zip(summaries, cases, times):
                    start = time.perf_counter()
                    smnb_bound(s, k, certify=False)
                    bucket.append(time.perf_counter() - start)
    finally:
        if gc_was_enabled:
            gc.enable()
    points = [ScalingPoint(m, k, statistics.median(b)) for (m, k), b in zip(cases, times)]
    ok = all(
        b.seconds / a.seconds <= 1.25 * (b.m / a.m) for a, b in zip(points, points[1:])
    )
    return ScalingReport(points, ok)
