"""Dense two-phase simplex for box-constrained LPs in equality form.

Solves  min c'x  s.t.  A x = b,  l <= x <= u  with every l finite (u may be
+inf).  Nonbasic variables rest at a bound; phase 1 minimizes the sum of
artificials.  Pricing is Dantzig with a permanent switch to Bland's rule once
the objective stalls, which rules out cycling.  The tableau is dense and
updated with one rank-1 numpy operation per pivot; state is refreshed from
scratch periodically to keep drift in check.  This is the right trade for the
small dense subproblems this package generates; larger instances are routed
to a different engine by the caller.
"""

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
RC_TOL = 1e-9
FEAS_TOL = 1e-8
STALL_LIMIT = 200          # non-improving pivots before switching to Bland's rule
REFRESH_EVERY = 512        # pivots between full recomputations of xB and rc


@dataclass
class LpResult:
    status: str              # optimal | infeasible | unbounded | iter_limit
    x: np.ndarray | None
    value: float


class _Tableau:
    def __init__(self, A, b, lower, upper):
        self.m, self.n = A.shape
        self.lower = lower
        self.upper = upper
        self.T = A.astype(float).copy()
        self.b = b.astype(float).copy()
        self.basis = np.full(self.m, -1, int)
        self.at_upper = np.zeros(self.n, bool)
        self.xB = np.zeros(self.m)

    def full_solution(self):
        x = np.where(self.at_upper, self.upper, self.lower).astype(float)
        x[self.basis] = self.xB
        return x

    def reset_xB(self):
        x_n = np.where(self.at_upper, self.upper, self.lower).astype(float)
        x_n[self.basis] = 0.0
        self.xB = self.b - self.T @ x_n

    def pivot(self, row, col):
        T = self.T
        piv = T[row, col]
        T[row] *= 1.0 / piv
        self.b[row] /= piv
        colvals = T[:, col].copy()
        colvals[row] = 0.0
        T -= colvals[:, None] * T[row]
        self.b -= colvals * self.b[row]
        self.basis[row] = col


def _price(rc, basic_mask, at_upper, bland):
    """Entering column, or -1 when optimal: increase a lower-resting column
    with rc < -tol, or decrease an upper-resting column with rc > tol."""
    eligible = np.nonzero((~basic_mask)
                          & (((~at_upper) & (rc < -RC_TOL)) | (at_upper & (rc > RC_TOL))))[0]
    if len(eligible) == 0:
        return -1
    if bland:
        return int(eligible[0])
    return int(eligible[np.argmax(np.abs(rc[eligible]))])


def _simplex_loop(tab: _Tableau, c, max_iter):
    m, n = tab.m, tab.n
    rc = c - c[tab.basis] @ tab.T
    basic_mask = np.zeros(n, bool)
    basic_mask[tab.basis] = True
    rc[tab.basis] = 0.0
    bland = False
    stall = 0
    pivots = 0
    obj = float(c @ tab.full_solution())

    for _ in range(max_iter):
        j = _price(rc, basic_mask, tab.at_upper, bland)
        if j < 0:
            return "optimal"
        sigma = -1.0 if tab.at_upper[j] else 1.0
        d = sigma * tab.T[:, j]

        # ratio limits from basic variables hitting their bounds
        lim = np.full(m, np.inf)
        dec = d > PIVOT_TOL
        inc = d < -PIVOT_TOL
        lim[dec] = (tab.xB[dec] - tab.lower[tab.basis[dec]]) / d[dec]
        lim[inc] = (tab.upper[tab.basis[inc]] - tab.xB[inc]) / (-d[inc])
        lim = np.maximum(lim, 0.0)
        flip_t = tab.upper[j] - tab.lower[j]

        r_best = int(np.argmin(lim)) if m else -1
        basic_t = lim[r_best] if m else np.inf
        if basic_t <= flip_t:
            ties = np.nonzero(lim <= basic_t + PIVOT_TOL)[0]
            if bland:
                leave = int(ties[np.argmin(tab.basis[ties])])
            else:
                leave = int(ties[np.argmax(np.abs(d[ties]))])
            t = lim[leave]
        else:
            leave = -1
            t = flip_t
        if not np.isfinite(t):
            return "unbounded"

        new_obj = obj + rc[j] * sigma * t
        stall = stall + 1 if new_obj >= obj - 1e-12 else 0
        if stall > STALL_LIMIT:
            bland = True
        obj = new_obj

        if leave < 0:
            tab.at_upper[j] = not tab.at_upper[j]
            tab.xB -= d * t
        else:
            out = tab.basis[leave]
            tab.xB -= d * t
            enter_val = (tab.upper[j] - t) if sigma < 0 else (tab.lower[j] + t)
            tab.at_upper[out] = d[leave] < 0      # rose to its upper bound
            tab.pivot(leave, j)
            basic_mask[out] = False
            basic_mask[j] = True
            tab.xB[leave] = enter_val
            rc = rc - rc[j] * tab.T[leave]
            rc[tab.basis] = 0.0

        pivots += 1
        if pivots % REFRESH_EVERY == 0:
            tab.reset_xB()
            rc = c - c[tab.basis] @ tab.T
            rc[tab.basis] = 0.0
    return "iter_limit"


def solve_lp(c, A, b, lower, upper, max_iter=200_000) -> LpResult:
    """Two-phase bounded-variable simplex. All arrays dense, lower finite."""
    c = np.asarray(c, float)
    A = np.asarray(A, float) if A is not None else np.zeros((0, len(c)))
    if A.ndim != 2:
        A = A.reshape(-1, len(c))
    b = np.asarray(b, float)
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    m, n = A.shape

    if np.any(lower > upper + 1e-12):
        return LpResult("infeasible", None, np.inf)
    if m == 0:
        x = np.where(c >= 0, lower, upper)
        if np.any(~np.isfinite(x)):
            return LpResult("unbounded", None, -np.inf)
        return LpResult("optimal", x, float(c @ x))

    # phase 1: rows flipped so the identity-column artificials start nonnegative
    resid = b - A @ lower
    sign = np.where(resid >= 0, 1.0, -1.0)
    A1 = np.hstack([A * sign[:, None], np.eye(m)])
    lo1 = np.concatenate([lower, np.zeros(m)])
    hi1 = np.concatenate([upper, np.full(m, np.inf)])
    tab = _Tableau(A1, b * sign, lo1, hi1)
    tab.basis = np.arange(n, n + m)
    tab.reset_xB()

    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    status = _simplex_loop(tab, c1, max_iter)
    if status == "iter_limit":
        return LpResult("iter_limit", None, np.nan)
    if float(c1 @ tab.full_solution()) > FEAS_TOL * (1.0 + float(np.abs(b).sum())):
        return LpResult("infeasible", None, np.inf)

    # pivot out basic artificials where possible; leftover rows are redundant
    basic_set = set(tab.basis.tolist())
    for r in range(m):
        if tab.basis[r] >= n:
            row = tab.T[r, :n]
            cand = [int(j) for j in np.nonzero(np.abs(row) > 1e-7)[0] if j not in basic_set]
            if cand:
                basic_set.discard(int(tab.basis[r]))
                tab.pivot(r, cand[0])
                basic_set.add(cand[0])
    # artificials may no longer move
    tab.lower[n:] = 0.0
    tab.upper[n:] = 0.0
    tab.at_upper[n:] = False
    tab.reset_xB()

    c2 = np.concatenate([c, np.zeros(m)])
    status = _simplex_loop(tab, c2, max_iter)
    if status == "unbounded":
        return LpResult("unbounded", None, -np.inf)
    if status == "iter_limit":
        return LpResult("iter_limit", None, np.nan)
    x = tab.full_solution()[:n]
    x = np.clip(x, lower, upper)
    return LpResult("optimal", x, float(c @ x))
