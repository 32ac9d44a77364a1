"""Dual certificates for ``s_k`` and LP post-processing of the relaxation.

The relaxation's optimal face is a polytope with only a handful of general
constraints, so a vertex of it has at most that many fractional support
indicators.  ``lp_postprocess`` finds such a vertex with a random linear
objective, then rounds the fractional indicators up to obtain a feasible
sparse model with cardinality at most ``k + 4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import xlogy

from .data import ClassSummary
from .multinomial import SmnbRelaxation, reconstruct_primal, smooth_multinomial
from .topk import topk_indices

FRACTIONAL_TOL = 1e-7
_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-9


class LpError(RuntimeError):
    """LP stage failed in a way that indicates inconsistent input."""


@dataclass(frozen=True, eq=False)
class SkCertificate:
    """Dual pair for ``s_k(c) = min_{lam >= 0} lam*k + sum(max(0, c - lam))``."""

    lam: float
    x: np.ndarray
    z: np.ndarray


@dataclass(frozen=True, eq=False)
class LpSolution:
    x: np.ndarray
    objective: float
    fractional: np.ndarray
    status: str  # "optimal" or "infeasible"
    iterations: int = 0


def sk_certificate(c, k: int) -> SkCertificate:
    c = np.asarray(c, dtype=np.float64)
    m = len(c)
    if np.any(c < 0):
        raise ValueError("sk_certificate needs a non-negative vector")
    if not 0 <= k <= m:
        raise ValueError(f"k={k} out of range [0, {m}]")
    x = np.zeros(m)
    x[topk_indices(c, k)] = 1.0
    if k == m:
        lam = 0.0
    elif k == 0:
        lam = float(c.max()) if m else 0.0
    else:
        lam = float(np.partition(c, m - k)[m - k])
    return SkCertificate(lam, x, 1.0 - x)


def fractional_indices(x, lo=0.0, hi=1.0, tol: float = FRACTIONAL_TOL) -> np.ndarray:
    x = np.asarray(x)
    return np.flatnonzero((x - lo > tol) & (hi - x > tol))


class _BoundedSimplex:
    """Revised primal simplex over ``A v = b, lo <= v <= hi`` with Bland's rule.

    The row count is tiny, so the basis is refactorized densely at every
    iteration; this also keeps the basic values free of drift.
    """

    def __init__(self, A, b, lo, hi, basis, values):
        self.A = A
        self.b = b
        self.lo = lo
        self.hi = hi
        self.basis = list(basis)
        self.v = values
        self.iterations = 0

    def _refresh(self):
        B = self.A[:, self.basis]
        v = self.v.copy()
        v[self.basis] = 0.0
        self.v[self.basis] = np.linalg.solve(B, self.b - self.A @ v)
        return B

    def run(self, cost, max_iter):
        A, lo, hi = self.A, self.lo, self.hi
        nvar = A.shape[1]
        for _ in range(max_iter):
            B = self._refresh()
            y = np.linalg.solve(B.T, cost[self.basis])
            d = cost - A.T @ y
            nonbasic = np.ones(nvar, dtype=bool)
            nonbasic[self.basis] = False
            at_lo = self.v <= lo
            can_up = nonbasic & (d < -_PIVOT_TOL) & (self.v < hi) & at_lo
            can_down = nonbasic & (d > _PIVOT_TOL) & (self.v > lo)
            candidates = np.flatnonzero(can_up | can_down)
            if len(candidates) == 0:
                return "optimal"
            j = int(candidates[0])
            direction = 1.0 if can_up[j] else -1.0
            col = np.linalg.solve(B, A[:, j])
            rate = direction * col  # basic values move by -t * rate

            best_t = hi[j] - lo[j]
            leave_pos, leave_var, leave_bound = None, j, None
            for pos, var in enumerate(self.basis):
                r = rate[pos]
                if r > _PIVOT_TOL:
                    t, bound = (self.v[var] - lo[var]) / r, lo[var]
                elif r < -_PIVOT_TOL and np.isfinite(hi[var]):
                    t, bound = (hi[var] - self.v[var]) / (-r), hi[var]
                else:
                    continue
                t = max(t, 0.0)
                if t < best_t or (t == best_t and var < leave_var):
                    best_t, leave_pos, leave_var, leave_bound = t, pos, var, bound
            if not np.isfinite(best_t):
                raise LpError("LP unbounded despite box bounds")

            self.iterations += 1
            basic_vars = np.array(self.basis)
            self.v[basic_vars] -= best_t * rate
            if leave_pos is None:
                # bound flip of the entering variable
                self.v[j] = hi[j] if direction > 0 else lo[j]
            else:
                self.v[j] += direction * best_t
                self.v[leave_var] = leave_bound
                self.basis[leave_pos] = j
        raise LpError("simplex iteration limit reached")


def solve_boxed_lp(
    costs,
    rows: Sequence[tuple],
    bounds=(0.0, 1.0),
    sense: str = "min",
    max_iter: int = 100_000,
) -> LpSolution:
    """Vertex optimum of a small LP with box-bounded variables.

    Parameters
    ----------
    costs : array_like, shape (n,)
    rows : sequence of ``(coeffs, relation, rhs)``
        ``relation`` is ``"<="``, ``"="`` or ``">="``.
    bounds : ``(lo, hi)``, scalars or arrays, both finite.
    sense : ``"min"`` or ``"max"``.
    """
    c = np.asarray(costs, dtype=np.float64)
    n = len(c)
    lo = np.broadcast_to(np.asarray(bounds[0], dtype=np.float64), (n,)).copy()
    hi = np.broadcast_to(np.asarray(bounds[1], dtype=np.float64), (n,)).copy()
    if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)) or np.any(lo > hi):
        raise ValueError("bounds must be finite with lo <= hi")
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")

    coeffs, rhs, is_ineq = [], [], []
    for a, rel, b in rows:
        a = np.asarray(a, dtype=np.float64)
        if a.shape != (n,):
            raise ValueError("row length does not match number of variables")
        if rel == ">=":
            a, b, rel = -a, -b, "<="
        if rel not in ("<=", "="):
            raise ValueError(f"unknown relation {rel!r}")
        coeffs.append(a)
        rhs.append(float(b))
        is_ineq.append(rel == "<=")
    nrow = len(coeffs)
    if nrow == 0:
        x = np.where(c < 0, hi, lo) if sense == "min" else np.where(c > 0, hi, lo)
        return LpSolution(x, float(c @ x), fractional_indices(x, lo, hi), "optimal")

    A_x = np.vstack(coeffs)
    b = np.array(rhs)
    is_ineq = np.array(is_ineq)
    n_slack = int(is_ineq.sum())
    slack_cols = np.zeros((nrow, n_slack))
    slack_cols[np.flatnonzero(is_ineq), np.arange(n_slack)] = 1.0

    # start with every structural at its lower bound; cover the residual
    residual = b - A_x @ lo
    slack_of_row = np.full(nrow, -1)
    slack_of_row[np.flatnonzero(is_ineq)] = n + np.arange(n_slack)
    need_art = ~(is_ineq & (residual >= 0))
    art_rows = np.flatnonzero(need_art)
    art_cols = np.zeros((nrow, len(art_rows)))
    art_cols[art_rows, np.arange(len(art_rows))] = np.where(residual[art_rows] >= 0, 1.0, -1.0)

    A = np.hstack([A_x, slack_cols, art_cols])
    nvar = A.shape[1]
    first_art = n + n_slack
    lo_all = np.concatenate([lo, np.zeros(n_slack + len(art_rows))])
    hi_all = np.concatenate([hi, np.full(n_slack + len(art_rows), np.inf)])
    values = np.concatenate([lo, np.zeros(n_slack + len(art_rows))])
    basis = []
    for i in range(nrow):
        if need_art[i]:
            col = first_art + int(np.searchsorted(art_rows, i))
            values[col] = abs(residual[i])
        else:
            col = slack_of_row[i]
            values[col] = residual[i]
        basis.append(col)

    solver = _BoundedSimplex(A, b, lo_all, hi_all, basis, values)
    if len(art_rows):
        phase1 = np.zeros(nvar)
        phase1[first_art:] = 1.0
        solver.run(phase1, max_iter)
        infeas = float(solver.v[first_art:].sum())
        if infeas > _FEAS_TOL * (1.0 + np.abs(b).max()):
            x = solver.v[:n].copy()
            return LpSolution(x, math.nan, np.empty(0, dtype=np.int64), "infeasible", solver.iterations)
        solver.v[first_art:] = np.minimum(solver.v[first_art:], 0.0)
        solver.hi[first_art:] = 0.0

    phase2 = np.zeros(nvar)
    phase2[:n] = c if sense == "min" else -c
    solver.run(phase2, max_iter)
    solver._refresh()
    x = np.clip(solver.v[:n], lo, hi)
    return LpSolution(x, float(c @ x), fractional_indices(x, lo, hi), "optimal", solver.iterations)


@dataclass(frozen=True, eq=False)
class _EpigraphData:
    pooled_const: float
    gain: np.ndarray
    mass_plus: np.ndarray
    mass_minus: np.ndarray
    rhs_plus: float
    rhs_minus: float


def _epigraph_data(s: ClassSummary, alpha: float) -> _EpigraphData:
    g = s.total
    S = g.sum()
    theta = g / S
    theta_p = s.f_plus / (S * alpha)
    theta_m = s.f_minus / (S * (1.0 - alpha))
    pooled = xlogy(g, theta)
    split = xlogy(s.f_plus, theta_p) + xlogy(s.f_minus, theta_m)
    base_mass = theta.sum()
    return _EpigraphData(
        pooled_const=float(pooled.sum()),
        gain=split - pooled,
        mass_plus=theta_p - theta,
        mass_minus=theta_m - theta,
        rhs_plus=1.0 - base_mass,
        rhs_minus=1.0 - base_mass,
    )


def _base_rows(ep: _EpigraphData, k: int):
    return [
        (ep.mass_plus, "<=", ep.rhs_plus),
        (ep.mass_minus, "<=", ep.rhs_minus),
        (np.ones(len(ep.gain)), "<=", float(k)),
    ]


def epigraph_value(s: ClassSummary, relax: SmnbRelaxation):
    """Best convexified objective ``r*`` at the relaxation's ``alpha``.

    ``s`` is the raw summary; ``relax.gamma`` is reapplied.  Returns
    ``(r_star, LpSolution)``.
    """
    ss = smooth_multinomial(s, relax.gamma)
    ep = _epigraph_data(ss, relax.alpha_star)
    sol = solve_boxed_lp(ep.gain, _base_rows(ep, relax.k), sense="max")
    if sol.status != "optimal":
        raise LpError("epigraph LP infeasible")
    return ep.pooled_const + sol.objective, sol


def lp_postprocess(s: ClassSummary, relax: SmnbRelaxation, seed: int = 0):
    """Random-cost vertex of the relaxation's optimal face, then rounding.

    Returns
    -------
    (lp, refined, value)
        ``lp.fractional`` lists indicators strictly inside (0, 1) (at most
        four).  ``refined`` frees every coordinate whose indicator is
        nonzero, so it has at most ``k + len(lp.fractional)`` split
        coordinates; ``value`` is its exact log-likelihood.
    """
    ss = smooth_multinomial(s, relax.gamma)
    ep = _epigraph_data(ss, relax.alpha_star)
    r_star, _ = epigraph_value(s, relax)
    target = r_star - ep.pooled_const
    band = 1e-7 * (1.0 + abs(r_star))
    rows = [
        (ep.gain, "<=", target + band),
        (ep.gain, ">=", target - band),
    ] + _base_rows(ep, relax.k)
    cost = np.random.default_rng(seed).standard_normal(ss.m)
    sol = solve_boxed_lp(cost, rows, sense="min")
    if sol.status != "optimal":
        raise LpError("post-processing LP infeasible: r* bookkeeping inconsistent")
    support = np.flatnonzero(sol.x > FRACTIONAL_TOL)
    refined, value = reconstruct_primal(ss, support, relax.gamma)
    return sol, refined, value


__all__ = [
    "SkCertificate",
    "LpSolution",
    "LpError",
    "sk_certificate",
    "solve_boxed_lp",
    "epigraph_value",
    "lp_postprocess",
    "fractional_indices",
]
