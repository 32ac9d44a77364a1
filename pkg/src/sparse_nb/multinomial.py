"""Multinomial naive Bayes and its cardinality-constrained relaxation.

The sparse multinomial problem (at most ``k`` features with different class
probabilities) is combinatorial.  Its Lagrangian dual collapses to a convex
one-dimensional problem

    psi(k) = C + min_{alpha in (0, 1)} s_k(h(alpha)),

where ``s_k`` sums the ``k`` largest entries and ``h(alpha)`` measures, per
feature, the likelihood gain from splitting it across classes.  ``psi(k)``
upper-bounds the sparse optimum ``phi(k)`` and is sandwiched as
``psi(k-4) <= phi(k) <= psi(k) <= phi(k+4)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import xlogy

from .bernoulli import _decision
from .data import ClassSummary, DataError, SparseCountMatrix
from .topk import topk_indices, topk_sum

__all__ = [
    "MultinomialModel",
    "SmnbRelaxation",
    "GapCertificate",
    "SmnbDual",
    "fit_multinomial_mle",
    "multinomial_log_likelihood",
    "smooth_multinomial",
    "topk_sum",
    "h_vector",
    "golden_section",
    "smnb_bound",
    "reconstruct_primal",
    "gap_certificate",
    "predict_multinomial",
]

ALPHA_EPS = 1e-12
DEFAULT_TOL = 1e-10
MAX_ITER = 300
AUTO_GAMMA = 1e-10
BRACKET_STEP = 0.01
REFRESH_EVERY = 6

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class MultinomialModel:
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
        differ = tp != tm
        weights = np.zeros(len(tp))
        with np.errstate(divide="ignore", invalid="ignore"):
            weights[differ] = np.log(tp[differ]) - np.log(tm[differ])
        object.__setattr__(self, "bias", float(self.log_prior_ratio))
        object.__setattr__(self, "weights", weights)

    @property
    def m(self) -> int:
        return len(self.theta_plus)


@dataclass(frozen=True)
class GapCertificate:
    psi_km4: Optional[float]
    psi_k: float
    delta: Optional[float]


@dataclass(frozen=True, eq=False)
class SmnbRelaxation:
    k: int
    alpha_star: float
    h_at_star: np.ndarray
    top_k: np.ndarray
    C: float
    S: float
    psi: float
    primal_value: float
    primal_model: MultinomialModel
    gamma: float
    gap: GapCertificate

    @property
    def a_posteriori_gap(self) -> float:
        return self.psi - self.primal_value


def smooth_multinomial(s: ClassSummary, gamma: float) -> ClassSummary:
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if gamma == 0:
        return s
    return ClassSummary(s.f_plus + gamma, s.f_minus + gamma, s.n_plus, s.n_minus)


def _xlogy_sum(f, theta) -> float:
    if np.all(f > 0):
        return float(np.dot(f, np.log(theta)))
    return float(xlogy(f, theta).sum())


def multinomial_log_likelihood(s: ClassSummary, theta_plus, theta_minus) -> float:
    """``f_plus . log(theta_plus) + f_minus . log(theta_minus)``, 0 log 0 = 0."""
    return _xlogy_sum(s.f_plus, theta_plus) + _xlogy_sum(s.f_minus, theta_minus)


def fit_multinomial_mle(s: ClassSummary, gamma: float = 0.0) -> MultinomialModel:
    ss = smooth_multinomial(s, gamma)
    mass_plus, mass_minus = ss.f_plus.sum(), ss.f_minus.sum()
    if mass_plus <= 0 or mass_minus <= 0:
        raise DataError("zero total mass in a class; use gamma > 0")
    return MultinomialModel(
        ss.f_plus / mass_plus, ss.f_minus / mass_minus, s.log_prior_ratio, np.arange(s.m), gamma
    )


def _split_gain_base(s: ClassSummary) -> np.ndarray:
    return xlogy(s.f_plus, s.f_plus) + xlogy(s.f_minus, s.f_minus) - xlogy(s.total, s.total)


def h_vector(s: ClassSummary, alpha: float) -> np.ndarray:
    """Per-feature split gain at dual mixing weight ``alpha`` (0 log 0 = 0)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} must lie in (0, 1)")
    return _split_gain_base(s) - s.f_plus * math.log(alpha) - s.f_minus * math.log1p(-alpha)


def golden_section(
    func,
    lo: float,
    hi: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
    refresh=None,
    refresh_every: int = 8,
):
    """Minimize a unimodal scalar function on ``[lo, hi]``.

    ``refresh(a, b)``, if given, is called every ``refresh_every`` iterations
    and must return a function equal to ``func`` on the current bracket
    ``[a, b]`` (typically a cheaper, restricted evaluation).

    Returns ``(x, fx, iterations)`` for the best point evaluated once the
    bracket is narrower than ``tol`` (or ``max_iter`` is hit).
    """
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = func(c), func(d)
    best_x, best_f = (c, fc) if fc <= fd else (d, fd)
    it = 0
    while b - a > tol and it < max_iter:
        it += 1
        if refresh is not None and it % refresh_every == 0:
            func = refresh(a, b)
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = func(c)
            x_new, f_new = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = func(d)
            x_new, f_new = d, fd
        if f_new < best_f:
            best_x, best_f = x_new, f_new
    return best_x, best_f, it


class _TopkObjective:
    """``alpha -> s_k(h(alpha))`` over a subset of features.

    ``fixed`` holds the summed ``(base, f_plus, f_minus)`` of features known
    to sit in the top k everywhere on the current bracket.
    """

    def __init__(self, base, f_plus, f_minus, k, fixed=(0.0, 0.0, 0.0), buffers=None):
        self.base, self.f_plus, self.f_minus = base, f_plus, f_minus
        self.k = k
        self.fixed = fixed
        if buffers is None:
            buffers = tuple(np.empty(len(base)) for _ in range(3))
        self._buf, self._tmp, self._scratch = buffers

    def __call__(self, alpha: float) -> float:
        la, lb = math.log(alpha), math.log1p(-alpha)
        fb, fp, fm = self.fixed
        value = fb - fp * la - fm * lb
        k, m = self.k, len(self.base)
        if k == 0:
            return value
        # in-place buffers: this is the hot loop of every sweep
        buf, tmp = self._buf, self._tmp
        np.multiply(self.f_plus, -la, out=buf)
        np.multiply(self.f_minus, -lb, out=tmp)
        buf += tmp
        buf += self.base
        if k < m:
            buf.partition(m - k)
        return value + float(buf[m - k:].sum())

    def narrowed(self, a: float, b: float) -> "_TopkObjective":
        """Equivalent objective on ``[a, b]`` with fewer live features.

        Over the bracket each ``h_i`` lies in ``[low_i, high_i]``.  Features
        whose ``high`` is below the k-th largest ``low`` never reach the top
        k and are dropped; features whose ``low`` exceeds the (k+1)-th largest
        ``high`` are always in it and move into ``fixed``.
        """
        k, m = self.k, len(self.base)
        if k == 0 or k == m:
            return self
        fp, fm, base = self.f_plus, self.f_minus, self.base
        # the evaluation buffers double as scratch space here
        low, high, scratch = self._buf, self._tmp, self._scratch
        np.multiply(fm, -math.log1p(-a), out=scratch)
        np.multiply(fp, -math.log(b), out=low)
        low += base
        low += scratch
        np.multiply(fm, -math.log1p(-b), out=scratch)
        np.multiply(fp, -math.log(a), out=high)
        high += base
        high += scratch
        np.copyto(scratch, low)
        scratch.partition(m - k)
        low_kth = scratch[m - k]
        np.copyto(scratch, high)
        scratch.partition(m - k - 1)
        high_k1 = scratch[m - k - 1]
        always = np.flatnonzero(low > high_k1)
        maybe = high >= low_kth
        maybe[always] = False
        keep = np.flatnonzero(maybe)
        fb0, fp0, fm0 = self.fixed
        fixed = (
            fb0 + float(base[always].sum()),
            fp0 + float(fp[always].sum()),
            fm0 + float(fm[always].sum()),
        )
        return _TopkObjective(base[keep], fp[keep], fm[keep], k - len(always), fixed)


def _convex_bracket(func, x0: float, step: float, lo: float, hi: float):
    """Interval ``[a, b]`` around ``x0`` holding a minimizer of a convex ``func``.

    Steps outward, doubling, until the value rises on both sides.
    """
    f0 = func(x0)
    a = max(lo, x0 - step)
    b = min(hi, x0 + step)
    fa, fb = func(a), func(b)
    while fa < f0 and a > lo:
        step *= 2.0
        b, x0, f0 = x0, a, fa
        a = max(lo, x0 - step)
        fa = func(a)
    while fb < f0 and b < hi:
        step *= 2.0
        a, x0, f0 = x0, b, fb
        b = min(hi, x0 + step)
        fb = func(b)
    return a, b


class SmnbDual:
    """The one-dimensional dual for a fixed, strictly positive summary.

    Caches everything independent of ``alpha`` and ``k`` so that sweeps
    over many ``k`` values cost one golden-section search each.
    """

    def __init__(self, s: ClassSummary):
        if np.any(s.f_plus <= 0) or np.any(s.f_minus <= 0):
            raise DataError("non-finite h: zero class count without smoothing (use gamma > 0)")
        self.summary = s
        fp = self.f_plus = np.asarray(s.f_plus)
        fm = self.f_minus = np.asarray(s.f_minus)
        # scratch arrays shared by every objective built from this dual;
        # reusing them avoids allocator churn on large m
        self._buffers = tuple(np.empty(len(fp)) for _ in range(3))
        work = self._buffers[0]
        g = self.g = fp + fm
        base = self.base = np.log(fp)
        base *= fp
        np.log(fm, out=work)
        work *= fm
        base += work
        np.log(g, out=work)
        work *= g
        base -= work
        self.S = float(g.sum())
        self.C = float(work.sum() - self.S * math.log(self.S))

    @property
    def m(self) -> int:
        return len(self.base)

    def h(self, alpha: float) -> np.ndarray:
        out = self.f_plus * -math.log(alpha)
        work = self._buffers[0]
        np.multiply(self.f_minus, -math.log1p(-alpha), out=work)
        out += work
        out += self.base
        return out

    def _objective(self, k: int) -> _TopkObjective:
        return _TopkObjective(self.base, self.f_plus, self.f_minus, k, buffers=self._buffers)

    def _check_k(self, k):
        if not 0 <= k <= self.m:
            raise ValueError(f"k={k} out of range [0, {self.m}]")

    def objective(self, alpha: float, k: int) -> float:
        """``s_k(h(alpha))``."""
        self._check_k(k)
        return self._objective(k)(alpha)

    def minimize(self, k: int, tol: float = DEFAULT_TOL):
        """Return ``(alpha_star, psi_k)``."""
        self._check_k(k)
        if k == 0:
            # s_0 is identically zero; report the pooled class ratio
            return float(self.f_plus.sum() / self.S), self.C
        lo, hi = ALPHA_EPS, 1.0 - ALPHA_EPS
        full = self._objective(k)
        # start from the pooled class ratio, the minimizer when k = m
        start = min(max(float(self.f_plus.sum()) / self.S, lo), hi)
        a, b = _convex_bracket(full, start, BRACKET_STEP, lo, hi)
        state = {"f": full.narrowed(a, b)}

        def refresh(a, b):
            state["f"] = state["f"].narrowed(a, b)
            return state["f"]

        alpha, val, _ = golden_section(
            state["f"], a, b, tol, refresh=refresh, refresh_every=REFRESH_EVERY
        )
        return alpha, self.C + val


def _resolve_gamma(s: ClassSummary, gamma: Optional[float]) -> float:
    if gamma is not None:
        return gamma
    has_zero = np.any(s.f_plus <= 0) or np.any(s.f_minus <= 0)
    return AUTO_GAMMA if has_zero else 0.0


def reconstruct_primal(s: ClassSummary, top_k, gamma: float = 0.0):
    """Feasible sparse model whose free coordinates are ``top_k``.

    All other coordinates share one probability across classes.  Within that
    pattern the returned parameters are the exact maximum-likelihood ones.

    Returns
    -------
    (model, value)
        ``value`` is the exact log-likelihood of ``s`` at the model.  If a
        class has no mass on ``top_k`` the fully pooled model is returned.
    """
    g = s.total
    S = float(g.sum())
    if S <= 0:
        raise DataError("empty summary: no mass in either class")
    C = float(xlogy(g, g).sum() - S * math.log(S))
    return _primal(s, top_k, gamma, g, S, C)


def _primal(s: ClassSummary, top_k, gamma, g, S, C):
    """``reconstruct_primal`` given ``g = f+ + f-``, ``S = sum(g)`` and the
    pooled log-likelihood ``C``; only the free block is touched beyond the
    pooled vectors."""
    free = np.unique(np.asarray(top_k, dtype=np.int64))
    if len(free) and (free[0] < 0 or free[-1] >= s.m):
        raise ValueError("top_k index out of range")
    theta_plus = g / S
    theta_minus = theta_plus.copy()
    fp, fm, gf = s.f_plus[free], s.f_minus[free], g[free]
    b_plus, b_minus = fp.sum(), fm.sum()
    value = C
    if len(free) and b_plus > 0 and b_minus > 0:
        b = b_plus + b_minus
        tp = (b / b_plus) * fp / S
        tm = (b / b_minus) * fm / S
        theta_plus[free] = tp
        theta_minus[free] = tm
        # swap the block's pooled terms for its split terms
        value += float(xlogy(fp, tp).sum() + xlogy(fm, tm).sum() - xlogy(gf, gf / S).sum())
    else:
        free = np.empty(0, dtype=np.int64)
    model = MultinomialModel(theta_plus, theta_minus, s.log_prior_ratio, free, gamma)
    return model, value


def smnb_bound(
    s: ClassSummary,
    k: int,
    gamma: Optional[float] = None,
    tol: float = DEFAULT_TOL,
    certify: bool = True,
) -> SmnbRelaxation:
    """Solve the convex relaxation ``psi(k)`` and primalize its top-k set.

    Parameters
    ----------
    s : ClassSummary
        Raw class sums; smoothing is applied here.
    k : int
        Cardinality bound, ``0 <= k <= m``.
    gamma : float, optional
        Additive smoothing.  ``None`` picks 0 for strictly positive sums and
        a tiny ``1e-10`` otherwise.
    tol : float
        Final bracket width for ``alpha``.
    certify : bool
        Also compute ``psi(k-4)`` and ``Delta(k)`` when ``k >= 4``.
    """
    if not 0 <= k <= s.m:
        raise ValueError(f"k={k} out of range [0, {s.m}]")
    gamma = _resolve_gamma(s, gamma)
    ss = smooth_multinomial(s, gamma)
    dual = SmnbDual(ss)
    alpha, psi = dual.minimize(k, tol)
    h_star = dual.h(alpha)
    top = topk_indices(h_star, k)
    model, value = _primal(ss, top, gamma, dual.g, dual.S, dual.C)

    psi_km4 = delta = None
    if certify and k >= 4:
        psi_km4 = dual.minimize(k - 4, tol)[1]
        delta = psi - psi_km4
    return SmnbRelaxation(
        k=k,
        alpha_star=alpha,
        h_at_star=h_star,
        top_k=top,
        C=dual.C,
        S=dual.S,
        psi=psi,
        primal_value=value,
        primal_model=model,
        gamma=gamma,
        gap=GapCertificate(psi_km4, psi, delta),
    )


def gap_certificate(
    s: ClassSummary, k: int, gamma: Optional[float] = None, tol: float = DEFAULT_TOL
) -> GapCertificate:
    """``psi(k-4)``, ``psi(k)`` and their difference, bracketing ``phi(k)``."""
    if k < 4:
        raise ValueError("gap certificate needs k >= 4")
    if k > s.m:
        raise ValueError(f"k={k} out of range [0, {s.m}]")
    dual = SmnbDual(smooth_multinomial(s, _resolve_gamma(s, gamma)))
    psi_k = dual.minimize(k, tol)[1]
    psi_km4 = dual.minimize(k - 4, tol)[1]
    return GapCertificate(psi_km4, psi_k, psi_k - psi_km4)


def predict_multinomial(model: MultinomialModel, x: SparseCountMatrix) -> np.ndarray:
    """Labels in {-1, +1}; a zero score maps to +1."""
    return _decision(model.bias, model.weights, x)
