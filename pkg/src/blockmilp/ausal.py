"""Alternating x/z minimization of the sharp augmented Lagrangian.

For a fixed dual pair (lam, rho) the relaxation  min L(x, z, lam, rho)
splits into an outer Lipschitz minimization over z with inner value oracle
R(z) = min_x <c + A'lam, x> + rho ||Ax + Bz||_1.  R evaluations decompose
over the block structure into independent subproblem MILPs, fanned out to a
worker pool with an ordered reduction so results never depend on the worker
count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import lipmin, subsolver
from .cuts import CutPool
from .model import TwoBlockMilp, derived_constants


@dataclass
class ValueEval:
    z: np.ndarray
    value: float
    argmin_x: np.ndarray
    per_block_values: list | None = None


@dataclass
class AusalResult:
    x: np.ndarray
    z: np.ndarray
    al_value: float              # L(x, z, lam, rho)
    lower_bound: float           # final epigraph value, <= d(lam, rho)
    report: lipmin.LipMinReport
    evaluations: dict            # z-bytes -> ValueEval, every R evaluation made


class _BlockSlices:
    def __init__(self, problem: TwoBlockMilp):
        if problem.blocks is None:
            self.parts = [(np.arange(problem.n), np.arange(problem.m))]
        else:
            self.parts = list(zip(problem.blocks.x_partition, problem.blocks.row_partition))
        self.problem = problem
        X = problem.X
        self.block_eq = []
        for cols, rows in self.parts:
            if X.eq_matrix.shape[0]:
                touched = np.nonzero(np.abs(X.eq_matrix[:, cols]).sum(axis=1) > 0)[0]
            else:
                touched = np.zeros(0, int)
            self.block_eq.append((X.eq_matrix[np.ix_(touched, cols)], X.eq_rhs[touched]))

    def base_instance(self, p, dual_vec):
        """Block MILP data with objective (c + A'v) restricted to the block."""
        cols, rows = self.parts[p]
        pr = self.problem
        E, f = self.block_eq[p]
        obj = pr.c[cols] + pr.A[:, cols].T @ dual_vec
        return subsolver.MilpInstance.make(
            objective=obj,
            lower=pr.X.lower[cols], upper=pr.X.upper[cols],
            integrality=pr.X.integrality[cols],
            eq_matrix=E, eq_rhs=f,
        ), cols, rows


_X_OPTS = subsolver.SolveOptions(rel_gap=1e-9)


def _solve_block(slices: _BlockSlices, p, dual_vec, weight, offset_rows):
    """min (c + A'v)'x_p + weight ||A_p x_p + offset||_1 for one block."""
    base, cols, rows = slices.base_instance(p, dual_vec)
    pr = slices.problem
    inst = subsolver.encode_l1_objective(base, pr.A[np.ix_(rows, cols)],
                                         offset_rows, weight)
    res = subsolver.solve(inst, _X_OPTS)
    if res.status != subsolver.Status.OPTIMAL:
        raise RuntimeError(f"x subproblem for block {p} ended with {res.status.value}")
    return float(res.value), res.point[: len(cols)]


def eval_R(problem: TwoBlockMilp, z, lam, rho, *, workers: int = 1,
           slices: _BlockSlices | None = None) -> ValueEval:
    """R(z; lam, rho) with its minimizer; per-block values sum to the total."""
    z = np.asarray(z, float)
    lam = np.asarray(lam, float)
    slices = slices or _BlockSlices(problem)
    bz = problem.B @ z
    jobs = [(p, lam, rho, bz[rows]) for p, (cols, rows) in enumerate(slices.parts)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_solve_block, slices, *j) for j in jobs]
            results = [f.result() for f in futs]     # block order
    else:
        results = [_solve_block(slices, *j) for j in jobs]
    x = np.zeros(problem.n)
    per_block = []
    for (p, *_), (val, xp) in zip(jobs, results):
        per_block.append(val)
        x[slices.parts[p][0]] = xp
    return ValueEval(z, float(sum(per_block)), x, per_block)


def block_relax_bound(problem: TwoBlockMilp, dual_vec, weight, *,
                      slices: _BlockSlices | None = None) -> float:
    """Valid lower bound on R(.; v, weight) over all z: each block minimizes
    with its own copy of z relaxed to the continuous Z box.  Much tighter
    than interval arithmetic, and cheap (one small MILP per block)."""
    slices = slices or _BlockSlices(problem)
    dual_vec = np.asarray(dual_vec, float)
    zlo, zhi = problem.Z.lower, problem.Z.upper
    total = 0.0
    opts = subsolver.SolveOptions(rel_gap=1e-6)
    for p, (cols, rows) in enumerate(slices.parts):
        base, cols, rows = slices.base_instance(p, dual_vec)
        zb_cols = np.nonzero(np.abs(problem.B[rows]).sum(axis=0) > 0)[0]
        nx = len(cols)
        ext = subsolver.MilpInstance.make(
            objective=np.concatenate([base.objective, np.zeros(len(zb_cols))]),
            lower=np.concatenate([base.lower, zlo[zb_cols]]),
            upper=np.concatenate([base.upper, zhi[zb_cols]]),
            integrality=np.concatenate([base.integrality, np.zeros(len(zb_cols), bool)]),
            eq_matrix=np.hstack([base.eq_matrix, np.zeros((base.eq_matrix.shape[0], len(zb_cols)))]),
            eq_rhs=base.eq_rhs,
        )
        rows_l1 = np.hstack([problem.A[np.ix_(rows, cols)], problem.B[np.ix_(rows, zb_cols)]])
        inst = subsolver.encode_l1_objective(ext, rows_l1, np.zeros(len(rows)), weight)
        res = subsolver.solve(inst, opts)
        if res.status == subsolver.Status.INFEASIBLE:
            raise RuntimeError(f"x block {p} infeasible")
        total += float(res.bound)
    return total


def ausal(problem: TwoBlockMilp, lam, rho, eps, *, eps_rel: float = 0.0,
          max_iter: int = 10_000, workers: int = 1, pool: CutPool | None = None,
          z0=None, consts: dict | None = None,
          slices: _BlockSlices | None = None) -> AusalResult:
    """Solve the augmented Lagrangian relaxation at (lam, rho) to gap eps.

    Runs the reverse-norm-cut minimization with f = <g + B'lam, .>,
    Q = R(.; lam, rho) and modulus rho ||B||_1, then re-solves the value
    function at the returned z so the caller gets a matching x.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    lam = np.asarray(lam, float)
    consts = consts or derived_constants(problem)
    slices = slices or _BlockSlices(problem)
    K = rho * consts["K_base"]
    f_lin = problem.g + problem.B.T @ lam
    t_lower = block_relax_bound(problem, lam, rho, slices=slices)

    evaluations: dict = {}

    def Q(z):
        ev = eval_R(problem, z, lam, rho, workers=workers, slices=slices)
        evaluations[np.asarray(z, float).tobytes()] = ev
        return ev.value

    cfg = lipmin.LipMinConfig(K=max(K, 1e-12), eps=eps, eps_rel=eps_rel,
                              max_iter=max_iter, z0=None if z0 is None else np.asarray(z0, float))
    born = (lam.copy(), float(rho))
    from .cuts import reverse_norm_cut
    factory = lambda z, q: reverse_norm_cut(z, q, cfg.K, born_dual=born)
    z_best, q_best, rep = lipmin.minimize(f_lin, Q, problem.Z, cfg, pool=pool,
                                          cut_factory=factory, t_lower=t_lower)
    ev = evaluations[z_best.tobytes()]
    al_value = float(f_lin @ z_best) + q_best
    lower = rep.lb_history[-1] if rep.lb_history else -np.inf
    return AusalResult(ev.argmin_x, z_best, al_value, lower, rep, evaluations)
