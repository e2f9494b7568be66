"""Brute-force reference oracles.

Everything here is built from integer-lattice enumeration plus plain LP
solves on the continuous remainder, deliberately sharing no code with the
decomposition algorithms it is used to check.  Size guards are hard errors
so a test can never silently compare against a truncated oracle.
"""

import itertools

import numpy as np

from . import denselp
from .model import TwoBlockMilp

Z_LATTICE_GUARD = 10_000          # max surviving z points
Z_RAW_GUARD = 1 << 22             # max raw z lattice scanned with eq filtering
BLOCK_LATTICE_GUARD = 1_000_000   # max integer combinations inside one block


class SizeGuardError(RuntimeError):
    pass


class OracleInfeasible(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# lattice machinery

def _combo_chunks(widths, chunk=65_536):
    """Yield integer-offset combinations (rows in {0..width_i}) in mixed-radix
    order, lowest index fastest, as arrays of shape (k, len(widths))."""
    widths = np.asarray(widths, int)
    total = int(np.prod(widths + 1, dtype=object))
    radix = widths + 1
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=object)
        out = np.empty((len(idx), len(widths)), float)
        rem = idx
        for j in range(len(widths)):
            out[:, j] = (rem % int(radix[j])).astype(float)
            rem = rem // int(radix[j])
        yield out


def lattice_points(mil_set, guard=Z_LATTICE_GUARD, tol=1e-7):
    """All points of a fully-integer MIL set, enumerated over the box and
    filtered by the equality rows."""
    if not bool(np.all(mil_set.integrality)):
        raise SizeGuardError("lattice enumeration requires a fully integer set")
    lo, hi = mil_set.rounded_bounds()
    if np.any(lo > hi):
        return np.zeros((0, mil_set.dim))
    widths = (hi - lo).astype(int)
    total = int(np.prod(widths + 1, dtype=object))
    if total > Z_RAW_GUARD:
        raise SizeGuardError(f"z lattice has {total} raw points (> {Z_RAW_GUARD})")
    E, f = mil_set.eq_matrix, mil_set.eq_rhs
    keep = []
    for block in _combo_chunks(widths):
        pts = block + lo
        if E.shape[0]:
            ok = np.abs(pts @ E.T - f).max(axis=1) <= tol * (1.0 + np.abs(f).max(initial=0.0))
            pts = pts[ok]
        if len(pts):
            keep.append(pts)
        if sum(len(k) for k in keep) > guard:
            raise SizeGuardError(f"more than {guard} feasible z lattice points")
    return np.vstack(keep) if keep else np.zeros((0, mil_set.dim))


class _BlockData:
    """Slices of one x block, precomputed for repeated enumeration."""

    def __init__(self, problem: TwoBlockMilp, cols, rows):
        X = problem.X
        self.cols = cols
        self.rows = rows
        self.c = problem.c[cols]
        self.A = problem.A[np.ix_(rows, cols)]
        self.B_rows = problem.B[rows]
        eq_rows = []
        if X.eq_matrix.shape[0]:
            touched = np.abs(X.eq_matrix[:, cols]).sum(axis=1) > 0
            eq_rows = np.nonzero(touched)[0]
        self.E = X.eq_matrix[np.ix_(eq_rows, cols)] if len(eq_rows) else np.zeros((0, len(cols)))
        self.f = X.eq_rhs[eq_rows] if len(eq_rows) else np.zeros(0)
        lo, hi = X.rounded_bounds()
        self.lower, self.upper = lo[cols], hi[cols]
        self.int_mask = X.integrality[cols]
        self.int_cols = np.nonzero(self.int_mask)[0]
        self.cont_cols = np.nonzero(~self.int_mask)[0]
        widths = (self.upper[self.int_cols] - self.lower[self.int_cols]).astype(int)
        self.widths = widths
        self.combos = int(np.prod(widths + 1, dtype=object)) if len(widths) else 1


def _blocks_of(problem: TwoBlockMilp):
    if problem.blocks is None:
        cols = np.arange(problem.n)
        rows = np.arange(problem.m)
        return [_BlockData(problem, cols, rows)]
    return [_BlockData(problem, problem.blocks.x_partition[p], problem.blocks.row_partition[p])
            for p in range(problem.blocks.n_blocks)]


def _block_min(bd: _BlockData, c_eff, l1_weight, l1_offset, pin_rows, pin_rhs, tol=1e-7):
    """Minimize c_eff'x (+ l1_weight * ||A_p x + l1_offset||_1 when weight is
    not None) over the block, with optional extra equalities pin_rows x =
    pin_rhs.  Integer columns are enumerated, the continuous remainder is an
    LP.  Returns (value, x) with value = +inf when the block is infeasible."""
    if bd.combos > BLOCK_LATTICE_GUARD:
        raise SizeGuardError(f"block lattice has {bd.combos} combinations")
    nb = len(bd.c)
    E = bd.E if pin_rows is None else np.vstack([bd.E, pin_rows])
    f = bd.f if pin_rows is None else np.concatenate([bd.f, pin_rhs])
    l1_rows = bd.A if l1_weight is not None else np.zeros((0, nb))
    l1_off = l1_offset if l1_weight is not None else np.zeros(0)
    w = 0.0 if l1_weight is None else float(l1_weight)

    ic, cc = bd.int_cols, bd.cont_cols
    # rows only touching integer columns filter combinations vectorially
    int_only = (np.abs(E[:, cc]).sum(axis=1) <= 0) if E.shape[0] else np.zeros(0, bool)
    E_io, f_io = E[int_only], f[int_only]
    E_rest, f_rest = E[~int_only], f[~int_only]

    best_val, best_x = np.inf, None
    pure_int = len(cc) == 0
    # square continuous system with no l1 term: solve directly, batched
    square = (not pure_int and l1_rows.shape[0] == 0
              and E_rest.shape[0] == len(cc))
    if square:
        M = E_rest[:, cc]
        if abs(np.linalg.det(M)) < 1e-10:
            square = False
    n_lp = len(cc) + 2 * l1_rows.shape[0]
    if not pure_int and not square:
        A_lp = np.vstack([
            np.hstack([E_rest[:, cc], np.zeros((E_rest.shape[0], 2 * l1_rows.shape[0]))]),
            np.hstack([l1_rows[:, cc], -np.eye(l1_rows.shape[0]), np.eye(l1_rows.shape[0])]),
        ]) if (E_rest.shape[0] or l1_rows.shape[0]) else np.zeros((0, n_lp))
        c_lp = np.concatenate([np.asarray(c_eff)[cc], np.full(2 * l1_rows.shape[0], w)])
        lo_lp = np.concatenate([bd.lower[cc], np.zeros(2 * l1_rows.shape[0])])
        hi_lp = np.concatenate([bd.upper[cc], np.full(2 * l1_rows.shape[0], np.inf)])

    for chunk in _combo_chunks(bd.widths) if len(ic) else iter([np.zeros((1, 0))]):
        xi = chunk + bd.lower[ic]
        if E_io.shape[0]:
            ok = np.abs(xi @ E_io[:, ic].T - f_io).max(axis=1) <= tol * (1.0 + np.abs(f_io).max(initial=0.0))
            xi = xi[ok]
        if not len(xi):
            continue
        if pure_int:
            if E_rest.shape[0]:
                ok = np.abs(xi @ E_rest[:, ic].T - f_rest).max(axis=1) <= tol
                xi = xi[ok]
                if not len(xi):
                    continue
            vals = xi @ np.asarray(c_eff)[ic]
            if l1_rows.shape[0]:
                vals = vals + w * np.abs(xi @ l1_rows[:, ic].T + l1_off).sum(axis=1)
            k = int(np.argmin(vals))
            if vals[k] < best_val:
                best_val = float(vals[k])
                best_x = np.zeros(nb)
                best_x[ic] = xi[k]
        elif square:
            rhs = f_rest[None, :] - xi @ E_rest[:, ic].T
            xc = np.linalg.solve(E_rest[:, cc], rhs.T).T
            feas = ((xc >= bd.lower[cc] - tol) & (xc <= bd.upper[cc] + tol)).all(axis=1)
            if not feas.any():
                continue
            vals = xi @ np.asarray(c_eff)[ic] + xc @ np.asarray(c_eff)[cc]
            vals = np.where(feas, vals, np.inf)
            k = int(np.argmin(vals))
            if vals[k] < best_val - 1e-12:
                best_val = float(vals[k])
                best_x = np.zeros(nb)
                best_x[ic] = xi[k]
                best_x[cc] = np.clip(xc[k], bd.lower[cc], bd.upper[cc])
        else:
            base_vals = xi @ np.asarray(c_eff)[ic]
            for row, bv in zip(xi, base_vals):
                b_lp = np.concatenate([
                    f_rest - E_rest[:, ic] @ row,
                    -(l1_rows[:, ic] @ row + l1_off),
                ])
                res = denselp.solve_lp(c_lp, A_lp, b_lp, lo_lp, hi_lp)
                if res.status != "optimal":
                    continue
                v = float(bv + res.value)
                if v < best_val - 1e-12:
                    best_val = v
                    best_x = np.zeros(nb)
                    best_x[ic] = row
                    best_x[cc] = res.x[: len(cc)]
    return best_val, best_x


# ---------------------------------------------------------------------------
# oracle operations

def partial_min(problem: TwoBlockMilp, z, multipliers, weight):
    """min over x in X of  (c + A'v)'x + weight * ||A x + B z||_1.
    This is the value function R(z; lam, rho) when called with (lam, rho)."""
    z = np.asarray(z, float)
    v = np.asarray(multipliers, float)
    total = 0.0
    xs = np.zeros(problem.n)
    for bd in _blocks_of(problem):
        c_eff = bd.c + bd.A.T @ v[bd.rows]
        off = bd.B_rows @ z
        val, x = _block_min(bd, c_eff, weight, off, None, None)
        if x is None:
            raise OracleInfeasible(f"x block over columns {bd.cols[:4]}... is infeasible")
        total += val
        xs[bd.cols] = x
    return total, xs


def value_function(problem, z, lam, rho):
    """R(z; lam, rho) by enumeration."""
    return partial_min(problem, z, lam, rho)[0]


def penalty_value_function(problem, z, rho):
    """R_rho(z) by enumeration."""
    return partial_min(problem, z, np.zeros(problem.m), rho)[0]


def al_relaxation_value(problem, z, mu, beta):
    """P(z, mu, beta) = min_x c'x + <mu, Ax+Bz> + beta ||Ax+Bz||_1."""
    mu = np.asarray(mu, float)
    val, x = partial_min(problem, z, mu, beta)
    return val + float(mu @ (problem.B @ np.asarray(z, float))), x


def enum_dual(problem: TwoBlockMilp, lam, rho) -> float:
    """d(lam, rho) = min over the z lattice of (g + B'lam)'z + R(z; lam, rho)."""
    lam = np.asarray(lam, float)
    pts = lattice_points(problem.Z)
    if not len(pts):
        raise OracleInfeasible("Z has no lattice points")
    f_lin = problem.g + problem.B.T @ lam
    best = np.inf
    for z in pts:
        best = min(best, float(f_lin @ z) + value_function(problem, z, lam, rho))
    return best


def lattice_extensive(problem: TwoBlockMilp):
    """Exact extensive-form optimum by enumerating the z lattice and solving
    every block with its coupling rows pinned.  Ground truth for all tests."""
    pts = lattice_points(problem.Z)
    blocks = _blocks_of(problem)
    best = (np.inf, None, None)
    for z in pts:
        obj = float(problem.g @ z)
        xs = np.zeros(problem.n)
        ok = True
        for bd in blocks:
            rhs = -(bd.B_rows @ z)
            val, x = _block_min(bd, bd.c, None, None, bd.A, rhs)
            if x is None:
                ok = False
                break
            obj += val
            xs[bd.cols] = x
        if ok and obj < best[0] - 1e-12:
            best = (obj, xs, z.copy())
    if best[1] is None:
        raise OracleInfeasible("no feasible (x, z) on the lattice")
    return best


def enum_perturbation(problem: TwoBlockMilp, u):
    """p(u) = min c'x + g'z  s.t.  Ax + Bz + u = 0; +inf when infeasible."""
    u = np.asarray(u, float)
    pts = lattice_points(problem.Z)
    blocks = _blocks_of(problem)
    best = np.inf
    for z in pts:
        obj = float(problem.g @ z)
        ok = True
        for bd in blocks:
            rhs = -(bd.B_rows @ z) - u[bd.rows]
            val, x = _block_min(bd, bd.c, None, None, bd.A, rhs)
            if x is None:
                ok = False
                break
            obj += val
        if ok:
            best = min(best, obj)
    return best


def extensive_solve(problem: TwoBlockMilp, node_limit=500_000):
    """Extensive-form optimum via the bundled branch and bound on the
    monolithic formulation.  Guarded: raises instead of returning an
    unproven value."""
    from . import subsolver

    n, d, m = problem.n, problem.d, problem.m
    if n + d > 2000 or int(problem.X.integrality.sum() + problem.Z.integrality.sum()) > 300:
        raise SizeGuardError("monolithic instance too large for the bundled solver")
    X, Z = problem.X, problem.Z
    eq = np.vstack([
        np.hstack([X.eq_matrix, np.zeros((X.eq_matrix.shape[0], d))]),
        np.hstack([np.zeros((Z.eq_matrix.shape[0], n)), Z.eq_matrix]),
        np.hstack([problem.A, problem.B]),
    ])
    rhs = np.concatenate([X.eq_rhs, Z.eq_rhs, np.zeros(m)])
    inst = subsolver.MilpInstance.make(
        objective=np.concatenate([problem.c, problem.g]),
        lower=np.concatenate([X.lower, Z.lower]),
        upper=np.concatenate([X.upper, Z.upper]),
        integrality=np.concatenate([X.integrality, Z.integrality]),
        eq_matrix=eq, eq_rhs=rhs,
    )
    res = subsolver.solve(inst, subsolver.SolveOptions(rel_gap=1e-9, node_limit=node_limit))
    if res.status == subsolver.Status.INFEASIBLE:
        raise OracleInfeasible("extensive form infeasible")
    if res.status != subsolver.Status.OPTIMAL:
        raise SizeGuardError(f"bundled solver stopped with {res.status.value}")
    return res.value, res.point[:n], res.point[n:]
