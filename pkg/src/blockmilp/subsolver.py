"""MILP subproblem oracle.

A bundled branch-and-bound solver (best-bound node selection, branching on
the most-fractional integer variable with lowest-index tie-breaks) over LP
relaxations, plus the two encodings every algorithm in this package relies
on: the split-variable l1 objective and the big-M epigraph of nonconvex cuts.
Small dense relaxations go through the bundled two-phase simplex; large
cut-laden ones are routed to scipy's HiGHS LP under the same contract.

An external MILP executable can be plugged in through BLOCKMILP_SOLVER_CMD;
see lpformat for the interchange grammar.
"""

import heapq
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .denselp import solve_lp


class Status(Enum):
    OPTIMAL = "optimal"
    GAP_REACHED = "gap_reached"
    INFEASIBLE = "infeasible"
    ITER_LIMIT = "iter_limit"


@dataclass
class MilpInstance:
    objective: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integrality: np.ndarray          # bool
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    ineq_matrix: np.ndarray          # rows a'x <= b
    ineq_rhs: np.ndarray

    @staticmethod
    def make(objective, lower, upper, integrality=None,
             eq_matrix=None, eq_rhs=None, ineq_matrix=None, ineq_rhs=None):
        objective = np.asarray(objective, float)
        n = len(objective)
        def m2(M):
            return np.zeros((0, n)) if M is None else np.asarray(M, float).reshape(-1, n)
        def v(r, M):
            return np.zeros(M.shape[0]) if r is None else np.asarray(r, float)
        eq = m2(eq_matrix)
        ineq = m2(ineq_matrix)
        return MilpInstance(
            objective=objective,
            lower=np.asarray(lower, float),
            upper=np.asarray(upper, float),
            integrality=(np.zeros(n, bool) if integrality is None
                         else np.asarray(integrality, bool)),
            eq_matrix=eq, eq_rhs=v(eq_rhs, eq),
            ineq_matrix=ineq, ineq_rhs=v(ineq_rhs, ineq),
        )

    @property
    def n(self):
        return len(self.objective)

    def check(self):
        n = self.n
        if not (len(self.lower) == len(self.upper) == len(self.integrality) == n):
            raise ValueError("inconsistent variable dimensions")
        if self.eq_matrix.shape[1] != n or self.ineq_matrix.shape[1] != n:
            raise ValueError("constraint matrix column count mismatch")
        if len(self.eq_rhs) != self.eq_matrix.shape[0] or len(self.ineq_rhs) != self.ineq_matrix.shape[0]:
            raise ValueError("rhs length mismatch")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("variable boxes must be finite")


@dataclass
class SubSolveResult:
    status: Status
    point: np.ndarray | None
    value: float
    bound: float
    gap: float
    nodes: int = 0


@dataclass
class SolveOptions:
    rel_gap: float = 1e-4
    feas_tol: float = 1e-7
    int_tol: float = 1e-6
    node_limit: int = 500_000
    cutoff: float | None = None      # caller-certified upper bound on the optimum
    lp_engine: str = "auto"          # auto | dense | highs
    dense_limit: int = 2_000         # tableau cells above which auto picks highs


DEFAULT_OPTIONS = SolveOptions()


class _Relaxation:
    """LP relaxation of a MILP instance; per-node only variable bounds move."""

    def __init__(self, inst: MilpInstance, engine: str, dense_limit: int):
        self.inst = inst
        n = inst.n
        n_eq, n_le = inst.eq_matrix.shape[0], inst.ineq_matrix.shape[0]
        if engine == "auto":
            cells = (n_eq + n_le) * (n + n_le + n_eq)
            engine = "dense" if cells <= dense_limit else "highs"
        self.engine = engine
        if engine == "dense":
            top = np.hstack([inst.eq_matrix, np.zeros((n_eq, n_le))])
            bot = np.hstack([inst.ineq_matrix, np.eye(n_le)])
            self.A = np.vstack([top, bot])
            self.b = np.concatenate([inst.eq_rhs, inst.ineq_rhs])
            self.c = np.concatenate([inst.objective, np.zeros(n_le)])
            self.slack_lo = np.zeros(n_le)
            self.slack_hi = np.full(n_le, np.inf)
        else:
            self.A_eq = sp.csr_matrix(inst.eq_matrix) if n_eq else None
            self.A_ub = sp.csr_matrix(inst.ineq_matrix) if n_le else None

    def solve(self, lower, upper):
        inst = self.inst
        if self.engine == "dense":
            lo = np.concatenate([lower, self.slack_lo])
            hi = np.concatenate([upper, self.slack_hi])
            res = solve_lp(self.c, self.A, self.b, lo, hi)
            if res.status == "optimal":
                return "optimal", res.x[: inst.n], res.value
            if res.status == "infeasible":
                return "infeasible", None, np.inf
            raise RuntimeError(f"LP relaxation failed: {res.status}")
        res = linprog(inst.objective, A_ub=self.A_ub,
                      b_ub=inst.ineq_rhs if self.A_ub is not None else None,
                      A_eq=self.A_eq,
                      b_eq=inst.eq_rhs if self.A_eq is not None else None,
                      bounds=np.column_stack([lower, upper]), method="highs")
        if res.status == 0:
            return "optimal", np.asarray(res.x), float(res.fun)
        if res.status == 2:
            return "infeasible", None, np.inf
        raise RuntimeError(f"HiGHS LP failed with status {res.status}: {res.message}")


def solve(instance: MilpInstance, opts: SolveOptions = DEFAULT_OPTIONS) -> SubSolveResult:
    """Branch and bound. Deterministic for a fixed instance and options."""
    instance.check()
    cmd = os.environ.get("BLOCKMILP_SOLVER_CMD")
    if cmd:
        from .lpformat import solve_external
        return solve_external(instance, opts, cmd)
    return _solve_bundled(instance, opts)


def _solve_bundled(instance: MilpInstance, opts: SolveOptions) -> SubSolveResult:
    relax = _Relaxation(instance, opts.lp_engine, opts.dense_limit)
    int_idx = np.nonzero(instance.integrality)[0]

    # round integer boxes inward before starting
    lo0 = instance.lower.astype(float).copy()
    hi0 = instance.upper.astype(float).copy()
    lo0[int_idx] = np.ceil(lo0[int_idx] - 1e-9)
    hi0[int_idx] = np.floor(hi0[int_idx] + 1e-9)
    if np.any(lo0 > hi0 + 1e-12):
        return SubSolveResult(Status.INFEASIBLE, None, np.inf, np.inf, 0.0)

    inc_val = np.inf
    inc_x = None
    seq = 0
    heap = [(-np.inf, 0, lo0, hi0)]
    nodes = 0
    hit_limit = False

    def prune_threshold():
        thr = np.inf
        if inc_x is not None:
            gap_abs = max(opts.rel_gap * max(1.0, abs(inc_val)), 1e-9)
            thr = inc_val - gap_abs
        if opts.cutoff is not None:
            thr = min(thr, opts.cutoff + 1e-9 * (1.0 + abs(opts.cutoff)))
        return thr

    while heap:
        if nodes >= opts.node_limit:
            hit_limit = True
            break
        parent_bound, _, lo, hi = heapq.heappop(heap)
        if parent_bound > prune_threshold():
            continue
        nodes += 1
        status, x, val = relax.solve(lo, hi)
        if status == "infeasible" or val > prune_threshold():
            continue
        frac = np.abs(x[int_idx] - np.round(x[int_idx])) if len(int_idx) else np.zeros(0)
        if not len(int_idx) or frac.max() <= opts.int_tol:
            x = x.copy()
            x[int_idx] = np.round(x[int_idx])
            v = float(instance.objective @ x)
            if v < inc_val:
                inc_val, inc_x = v, x
            continue
        k = int(np.argmax(frac))              # most fractional, lowest index on ties
        j = int(int_idx[k])
        xj = x[j]
        seq += 1
        lo_up = lo.copy()
        lo_up[j] = np.floor(xj) + 1.0
        hi_dn = hi.copy()
        hi_dn[j] = np.floor(xj)
        # down child first, up child popped first among equal bounds
        if hi_dn[j] >= lo[j] - 1e-12:
            heapq.heappush(heap, (val, -(2 * seq), lo, hi_dn))
        if lo_up[j] <= hi[j] + 1e-12:
            heapq.heappush(heap, (val, -(2 * seq + 1), lo_up, hi))

    open_bounds = [h[0] for h in heap]
    if inc_x is None:
        if hit_limit:
            return SubSolveResult(Status.ITER_LIMIT, None, np.inf,
                                  min(open_bounds, default=np.inf), np.inf, nodes)
        return SubSolveResult(Status.INFEASIBLE, None, np.inf, np.inf, 0.0, nodes)
    bound = min(min(open_bounds, default=inc_val), inc_val)
    gap = (inc_val - bound) / max(1.0, abs(inc_val))
    if hit_limit:
        st = Status.ITER_LIMIT
    elif open_bounds:
        st = Status.GAP_REACHED
    else:
        st = Status.OPTIMAL
        gap = 0.0
        bound = inc_val
    return SubSolveResult(st, inc_x, inc_val, bound, gap, nodes)


# ---------------------------------------------------------------------------
# interval helpers

def interval_of_rows(W, offset, lower, upper):
    """Componentwise range of W v + offset over the box [lower, upper]."""
    W = np.asarray(W, float)
    lo = np.minimum(W * lower, W * upper).sum(axis=1) + offset
    hi = np.maximum(W * lower, W * upper).sum(axis=1) + offset
    return lo, hi


# ---------------------------------------------------------------------------
# l1 objective encoding

def encode_l1_objective(base: MilpInstance, rows_matrix, rows_offset, weight: float) -> MilpInstance:
    """Add weight * || W x + offset ||_1 to the objective through paired
    nonnegative splits s+ - s- = W x + offset.  Minimization makes the split
    exact for weight >= 0, so no binaries are needed."""
    if weight < 0:
        raise ValueError("l1 weight must be nonnegative")
    W = np.asarray(rows_matrix, float).reshape(-1, base.n)
    o = np.asarray(rows_offset, float)
    if len(o) != W.shape[0]:
        raise ValueError("offset length does not match row count")
    r = W.shape[0]
    lo, hi = interval_of_rows(W, o, base.lower, base.upper)
    sp_ub = np.maximum(0.0, hi)
    sm_ub = np.maximum(0.0, -lo)

    n = base.n
    pad = lambda M: np.hstack([M, np.zeros((M.shape[0], 2 * r))])
    eq_new = np.hstack([W, -np.eye(r), np.eye(r)])
    return MilpInstance.make(
        objective=np.concatenate([base.objective, np.full(r, weight), np.full(r, weight)]),
        lower=np.concatenate([base.lower, np.zeros(2 * r)]),
        upper=np.concatenate([base.upper, sp_ub, sm_ub]),
        integrality=np.concatenate([base.integrality, np.zeros(2 * r, bool)]),
        eq_matrix=np.vstack([pad(base.eq_matrix), eq_new]),
        eq_rhs=np.concatenate([base.eq_rhs, -o]),
        ineq_matrix=pad(base.ineq_matrix),
        ineq_rhs=base.ineq_rhs,
    )


# ---------------------------------------------------------------------------
# cut epigraph encoding

def encode_cut_epigraph(z_set, g, cuts, t_lower=None, t_upper=None) -> MilpInstance:
    """MILP over (z, t) minimizing g'z + t subject to t >= cut_j(z) for every
    cut.  Each cut's absolute-value terms are linearized with split pairs and
    one binary per split; big-M values come from interval arithmetic over the
    z box.  Identical absolute-value rows inside one cut are merged with a
    multiplicity weight, which preserves exactness (their values coincide at
    every z).  Variable layout: z = vars[:d], t = vars[d], splits after.

    t carries a finite box so the cut-free problem stays bounded; pinning
    t_upper = t_lower with zero cuts is exactly the pre-solve problem.
    """
    d = z_set.dim
    g = np.asarray(g, float)
    zlo, zhi = z_set.rounded_bounds()

    pieces = []          # per cut: (v_eff, lin_row, lin_off, groups)
    for cut in cuts:
        if cut.modulus < 0:
            raise ValueError("cut modulus must be nonnegative")
        W = np.eye(d) if cut.abs_matrix is None else np.asarray(cut.abs_matrix, float)
        offs = -(W @ cut.anchor)
        if cut.linear is None:
            lin_row = np.zeros(d)
            lin_off = 0.0
        else:
            mu = np.asarray(cut.linear, float)
            lin_row = W.T @ mu
            lin_off = -float(mu @ (W @ cut.anchor))
        groups = {}
        for i in range(W.shape[0]):
            key = (W[i].tobytes(), float(offs[i]).hex())
            if key in groups:
                groups[key][2] += 1
            else:
                groups[key] = [W[i], float(offs[i]), 1]
        v_eff = float(cut.constant)
        kept = []
        for row, off, mult in groups.values():
            if not np.any(row):
                v_eff -= cut.modulus * mult * abs(off)   # constant |w| term
            else:
                kept.append((row, off, mult))
        pieces.append((v_eff, lin_row, lin_off, cut.modulus, kept))

    if t_lower is None:
        if not pieces:
            raise ValueError("t_lower is required when there are no cuts")
        vals = []
        for v_eff, lin_row, lin_off, K, kept in pieces:
            llo, _ = interval_of_rows(lin_row.reshape(1, -1), np.array([lin_off]), zlo, zhi)
            drop = 0.0
            for row, off, mult in kept:
                wlo, whi = interval_of_rows(row.reshape(1, -1), np.array([off]), zlo, zhi)
                drop += mult * max(abs(wlo[0]), abs(whi[0]))
            vals.append(v_eff + llo[0] - K * drop)
        t_lower = min(vals)
    if t_upper is None:
        if not pieces:
            t_upper = t_lower
        else:
            highs = []
            for v_eff, lin_row, lin_off, K, kept in pieces:
                _, lhi = interval_of_rows(lin_row.reshape(1, -1), np.array([lin_off]), zlo, zhi)
                highs.append(v_eff + lhi[0])
            t_upper = max(t_lower, max(highs))

    cols = [("z", d), ("t", 1)]
    obj = [g, np.array([1.0])]
    lo = [zlo, np.array([float(t_lower)])]
    hi = [zhi, np.array([float(t_upper)])]
    integ = [z_set.integrality, np.array([False])]
    eq_rows, eq_rhs, le_rows, le_rhs = [], [], [], []

    def add_var(objv, l, u, is_int):
        cols.append(("s", 1))
        obj.append(np.array([objv]))
        lo.append(np.array([float(l)]))
        hi.append(np.array([float(u)]))
        integ.append(np.array([is_int]))
        return sum(k for _, k in cols) - 1

    total_vars = lambda: sum(k for _, k in cols)

    row_specs = []      # (dict col->coef, rhs, kind)
    for v_eff, lin_row, lin_off, K, kept in pieces:
        cut_coefs = {jz: lin_row[jz] for jz in range(d) if lin_row[jz]}
        cut_coefs[d] = -1.0            # -t
        for row, off, mult in kept:
            wlo, whi = interval_of_rows(row.reshape(1, -1), np.array([off]), zlo, zhi)
            wlo, whi = float(wlo[0]), float(whi[0])
            p_ub, q_ub = max(0.0, whi), max(0.0, -wlo)
            ip = add_var(0.0, 0.0, p_ub, False)
            iq = add_var(0.0, 0.0, q_ub, False)
            split = {jz: row[jz] for jz in range(d) if row[jz]}
            split[ip] = -1.0
            split[iq] = 1.0
            row_specs.append((split, -off, "eq"))
            if p_ub > 0.0 and q_ub > 0.0:
                iy = add_var(0.0, 0.0, 1.0, True)
                row_specs.append(({ip: 1.0, iy: -p_ub}, 0.0, "le"))
                row_specs.append(({iq: 1.0, iy: q_ub}, q_ub, "le"))
            cut_coefs[ip] = cut_coefs.get(ip, 0.0) - K * mult
            cut_coefs[iq] = cut_coefs.get(iq, 0.0) - K * mult
        row_specs.append((cut_coefs, -v_eff - lin_off, "le"))

    n = total_vars()
    def expand(spec):
        r = np.zeros(n)
        for k, v in spec.items():
            r[k] = v
        return r

    for spec, rhs, kind in row_specs:
        r = expand(spec)
        if kind == "eq":
            eq_rows.append(r)
            eq_rhs.append(rhs)
        else:
            le_rows.append(r)
            le_rhs.append(rhs)

    ZE = z_set.eq_matrix
    if ZE.shape[0]:
        eq_rows = [np.hstack([ZE, np.zeros((ZE.shape[0], n - d))])[i] for i in range(ZE.shape[0])] + eq_rows
        eq_rhs = list(z_set.eq_rhs) + eq_rhs

    return MilpInstance.make(
        objective=np.concatenate(obj),
        lower=np.concatenate(lo),
        upper=np.concatenate(hi),
        integrality=np.concatenate(integ),
        eq_matrix=np.array(eq_rows) if eq_rows else None,
        eq_rhs=np.array(eq_rhs) if eq_rows else None,
        ineq_matrix=np.array(le_rows) if le_rows else None,
        ineq_rhs=np.array(le_rhs) if le_rows else None,
    )


# ---------------------------------------------------------------------------
# unary cut epigraph encoding

UNARY_RANGE_CAP = 64


def unary_encodable(z_set, cuts) -> bool:
    """The one-hot reformulation applies when z is fully integer with small
    ranges and every absolute-value row of every cut touches one z column."""
    if not bool(np.all(z_set.integrality)):
        return False
    zlo, zhi = z_set.rounded_bounds()
    if np.any(zhi - zlo > UNARY_RANGE_CAP):
        return False
    for cut in cuts:
        if cut.abs_matrix is not None:
            if np.any((np.abs(cut.abs_matrix) > 0).sum(axis=1) > 1):
                return False
    return True


def encode_cut_epigraph_unary(z_set, g, cuts, t_lower=None, t_upper=None) -> MilpInstance:
    """Exact reformulation of the cut epigraph for integer z whose cut rows
    each involve a single z component: every z_i is expanded into one-hot
    indicators over its value range, which turns each |a z_i + b| into a
    linear form.  Equivalent to encode_cut_epigraph with a far tighter LP
    relaxation and a binary count independent of the number of cuts.
    Layout matches the big-M encoder: z = vars[:d], t = vars[d].
    """
    d = z_set.dim
    g = np.asarray(g, float)
    zlo, zhi = z_set.rounded_bounds()
    if not unary_encodable(z_set, cuts):
        raise ValueError("instance is not unary-encodable")

    ranges = [np.arange(zlo[i], zhi[i] + 0.5) for i in range(d)]
    offsets = np.zeros(d, int)
    pos = d + 1
    for i in range(d):
        offsets[i] = pos
        pos += len(ranges[i])
    n = pos

    cut_rows, cut_rhs = [], []
    t_lo_candidates, t_hi_candidates = [], []
    for cut in cuts:
        if cut.modulus < 0:
            raise ValueError("cut modulus must be nonnegative")
        W = np.eye(d) if cut.abs_matrix is None else np.asarray(cut.abs_matrix, float)
        offs = -(W @ cut.anchor)
        if cut.linear is None:
            lin_row = np.zeros(d)
            lin_off = 0.0
        else:
            mu = np.asarray(cut.linear, float)
            lin_row = W.T @ mu
            lin_off = -float(mu @ (W @ cut.anchor))
        row = np.zeros(n)
        row[:d] = lin_row
        row[d] = -1.0
        const = float(cut.constant)
        for r in range(W.shape[0]):
            nz = np.nonzero(W[r])[0]
            if len(nz) == 0:
                const -= cut.modulus * abs(offs[r])
                continue
            i = int(nz[0])
            vals = np.abs(W[r, i] * ranges[i] + offs[r])
            row[offsets[i] : offsets[i] + len(ranges[i])] -= cut.modulus * vals
        cut_rows.append(row)
        cut_rhs.append(-const - lin_off)
        drop = sum(
            cut.modulus * max(abs(v) for v in (W[r] @ zlo + offs[r], W[r] @ zhi + offs[r]))
            for r in range(W.shape[0]))
        llo, lhi = interval_of_rows(lin_row.reshape(1, -1), np.array([lin_off]), zlo, zhi)
        t_lo_candidates.append(const + llo[0] - drop)
        t_hi_candidates.append(float(cut.constant) + lhi[0])

    if t_lower is None:
        if not cuts:
            raise ValueError("t_lower is required when there are no cuts")
        t_lower = min(t_lo_candidates)
    if t_upper is None:
        t_upper = max(t_hi_candidates, default=t_lower)
        t_upper = max(t_upper, t_lower)

    eq_rows, eq_rhs = [], []
    ZE = z_set.eq_matrix
    for r in range(ZE.shape[0]):
        row = np.zeros(n)
        row[:d] = ZE[r]
        eq_rows.append(row)
        eq_rhs.append(z_set.eq_rhs[r])
    for i in range(d):
        link = np.zeros(n)
        link[i] = 1.0
        link[offsets[i] : offsets[i] + len(ranges[i])] = -ranges[i]
        eq_rows.append(link)
        eq_rhs.append(0.0)
        one = np.zeros(n)
        one[offsets[i] : offsets[i] + len(ranges[i])] = 1.0
        eq_rows.append(one)
        eq_rhs.append(1.0)

    obj = np.zeros(n)
    obj[:d] = g
    obj[d] = 1.0
    lower = np.zeros(n)
    upper = np.ones(n)
    lower[:d], upper[:d] = zlo, zhi
    lower[d], upper[d] = float(t_lower), float(t_upper)
    integrality = np.zeros(n, bool)
    integrality[:d] = True
    integrality[d + 1 :] = True
    return MilpInstance.make(
        objective=obj, lower=lower, upper=upper, integrality=integrality,
        eq_matrix=np.array(eq_rows), eq_rhs=np.array(eq_rhs),
        ineq_matrix=np.array(cut_rows) if cut_rows else None,
        ineq_rhs=np.array(cut_rhs) if cut_rows else None,
    )


def build_epigraph(z_set, g, cuts, t_lower=None, t_upper=None, encoder="auto") -> MilpInstance:
    """Dispatch between the big-M split encoder and the unary reformulation."""
    if encoder == "split":
        return encode_cut_epigraph(z_set, g, cuts, t_lower, t_upper)
    if encoder == "unary" or (encoder == "auto" and unary_encodable(z_set, cuts)):
        return encode_cut_epigraph_unary(z_set, g, cuts, t_lower, t_upper)
    if encoder not in ("auto", "unary", "split"):
        raise ValueError(f"unknown encoder {encoder!r}")
    return encode_cut_epigraph(z_set, g, cuts, t_lower, t_upper)
