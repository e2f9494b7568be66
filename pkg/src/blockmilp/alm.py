"""Outer methods built on the alternating x/z subroutine.

Four ways to drive the dual pair (lam, rho): a one-shot penalty whose rho
formula guarantees an approximate solution, two subgradient schemes (one
with an objective-gap iteration estimate, one with finite convergence to a
feasible approximate solution), and the practical scheme used for the
experiment tables, which grows rho geometrically, takes damped multiplier
steps, and keeps the whole cut pool alive by revalidating it after every
dual update.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import ausal as ausal_mod
from .cuts import CutPool, revalidate
from .model import Iterate, TwoBlockMilp, derived_constants

SQRT2 = math.sqrt(2.0)


@dataclass
class AlmParams:
    variant: str = "practical"        # penalty | gap | finite | practical
    rho0: float = 1.0
    gamma: float = 1.1                # penalty growth (practical)
    inner_alm: int = 100              # z-solve budget per inner call
    alm_step: float = 200.0           # practical multiplier step scale
    inner_gap: float = 1e-4           # relative gap ending an inner call
    gap_tol: float = 1e-4             # relative gap declaring optimality
    eps_p: float = 1e-6               # primal tolerance (inner eps / feasibility)
    eps_d: float = 1e-4               # dual tolerance (gap variant)
    tau0: float = 1.0                 # gap variant: tau_k = tau0 / sqrt(k)
    tau: float = 1.0                  # finite variant: constant step scale
    outer_limit: int = 60
    workers: int = 1
    cut_window: int | None = None
    encoder: str = "auto"


@dataclass
class AlmReport:
    outer: list = field(default_factory=list)         # per outer phase summary
    dual_history: list = field(default_factory=list)  # d(lam, rho) lower estimates
    residual_history: list = field(default_factory=list)
    lower_bound: float = -np.inf
    upper_bound: float = np.inf
    incumbent: Iterate | None = None
    z_solves: int = 0
    status: str = "iter_limit"
    cuts: list = field(default_factory=list)          # final pool, serialized

    @property
    def gap(self) -> float:
        return (self.upper_bound - self.lower_bound) / max(1.0, abs(self.upper_bound))


def _scan_incumbents(problem, evaluations, feas_tol, report: AlmReport):
    """Fold every value-function evaluation into the feasible incumbent."""
    for ev in evaluations.values():
        it = Iterate.of(problem, ev.argmin_x, ev.z)
        if it.residual_l1 <= feas_tol and it.primal_obj < report.upper_bound - 1e-12:
            report.upper_bound = it.primal_obj
            report.incumbent = it


def _run_ausal(problem, lam, rho, params: AlmParams, *, eps, eps_rel, pool, consts, slices):
    return ausal_mod.ausal(problem, lam, rho, eps, eps_rel=eps_rel,
                           max_iter=params.inner_alm, workers=params.workers,
                           pool=pool, consts=consts, slices=slices)


def penalty_solve(problem: TwoBlockMilp, lam, eps: float, params: AlmParams | None = None):
    """One inner call at the penalty that provably yields an eps-solution:
    rho = (||c||_1 Dinf(X) + ||g||_1 Dinf(Z)) / eps + ||lam||_inf + 1."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    params = params or AlmParams()
    lam = np.asarray(lam, float)
    consts = derived_constants(problem)
    rho = penalty_rho(problem, lam, eps, consts)
    slices = ausal_mod._BlockSlices(problem)
    res = _run_ausal(problem, lam, rho, params, eps=eps, eps_rel=0.0,
                     pool=None, consts=consts, slices=slices)
    report = AlmReport(z_solves=res.report.n_epigraph_solves, status="converged")
    report.lower_bound = res.lower_bound
    _scan_incumbents(problem, res.evaluations, np.inf, report)  # best pair regardless
    return res.x, res.z, report


def penalty_rho(problem, lam, eps, consts=None) -> float:
    consts = consts or derived_constants(problem)
    lam = np.asarray(lam, float)
    lam_inf = float(np.abs(lam).max(initial=0.0))
    c1 = float(np.abs(problem.c).sum())
    g1 = float(np.abs(problem.g).sum())
    return (c1 * consts["x_diam_inf"] + g1 * consts["z_diam_inf"]) / eps + lam_inf + 1.0


def practical_step(step: float, k: int, r_incumbent: float) -> float:
    """Damped multiplier step size of the practical scheme."""
    return step / (k * SQRT2 * max(1.0, r_incumbent))


def inflated_penalty(lam, rho: float, slack: float) -> float:
    """Penalty that restores exactness near a dual optimum within `slack`."""
    return max(float(np.abs(np.asarray(lam, float)).max(initial=0.0)),
               rho + 2.0 * slack + 1.0)


def subgrad_gap(problem: TwoBlockMilp, params: AlmParams) -> AlmReport:
    """Dual ascent with steps tau_k / (sqrt(2) ||r^k||_1); tau_k = tau0/sqrt(k)
    satisfies the divergent-but-vanishing step conditions.  Produces dual
    estimates; primal recovery needs post-processing."""
    consts = derived_constants(problem)
    slices = ausal_mod._BlockSlices(problem)
    lam = np.zeros(problem.m)
    rho = params.rho0
    report = AlmReport()
    for k in range(1, params.outer_limit + 1):
        res = _run_ausal(problem, lam, rho, params, eps=params.eps_p, eps_rel=0.0,
                         pool=None, consts=consts, slices=slices)
        report.z_solves += res.report.n_epigraph_solves
        _scan_incumbents(problem, res.evaluations, params.eps_p, report)
        report.dual_history.append(res.lower_bound)
        report.lower_bound = max(report.lower_bound, res.lower_bound)
        r_vec = problem.residual(res.x, res.z)
        r = float(np.abs(r_vec).sum())
        report.residual_history.append(r)
        report.outer.append({"lam": lam.copy(), "rho": rho, "residual": r,
                             "dual_estimate": res.lower_bound})
        if r <= 1e-12:
            report.status = "converged"      # the pair is already eps_p-optimal
            report.incumbent = Iterate.of(problem, res.x, res.z)
            report.upper_bound = min(report.upper_bound, report.incumbent.primal_obj)
            break
        alpha = (params.tau0 / math.sqrt(k)) / (SQRT2 * r)
        lam = lam + alpha * r_vec
        rho = rho + alpha * r
    return report


def subgrad_finite(problem: TwoBlockMilp, params: AlmParams):
    """Constant-tau dual ascent that stops at the first iterate with
    ||Ax + Bz||_1 <= eps_p; that pair is an eps_p-solution since the penalty
    dominates the multipliers throughout."""
    if not params.eps_p > 0:
        raise ValueError("eps_p must be positive")
    if not params.tau > 0:
        raise ValueError("tau must be positive")
    consts = derived_constants(problem)
    slices = ausal_mod._BlockSlices(problem)
    lam = np.zeros(problem.m)
    rho = params.rho0
    if rho < float(np.abs(lam).max(initial=0.0)):
        raise ValueError("rho0 must dominate ||lam0||_inf")
    report = AlmReport()
    pair = None
    for k in range(1, params.outer_limit + 1):
        res = _run_ausal(problem, lam, rho, params, eps=params.eps_p, eps_rel=0.0,
                         pool=None, consts=consts, slices=slices)
        report.z_solves += res.report.n_epigraph_solves
        _scan_incumbents(problem, res.evaluations, params.eps_p, report)
        report.dual_history.append(res.lower_bound)
        report.lower_bound = max(report.lower_bound, res.lower_bound)
        r_vec = problem.residual(res.x, res.z)
        r = float(np.abs(r_vec).sum())
        report.residual_history.append(r)
        report.outer.append({"lam": lam.copy(), "rho": rho, "residual": r,
                             "dual_estimate": res.lower_bound})
        if r <= params.eps_p:
            report.status = "converged"
            pair = (res.x, res.z)
            report.incumbent = Iterate.of(problem, res.x, res.z)
            report.upper_bound = min(report.upper_bound, report.incumbent.primal_obj)
            break
        alpha = params.tau / r
        lam = lam + alpha * r_vec
        rho = max(float(np.abs(lam).max(initial=0.0)), rho + alpha * r)
    if pair is None:
        return None, None, report
    return pair[0], pair[1], report


def practical_alm(problem: TwoBlockMilp, params: AlmParams) -> AlmReport:
    """Experiment-table scheme: run the inner solver until its relative gap
    passes inner_gap or the z-solve budget runs out, then rho <- gamma rho,
    lam <- lam + alpha_k r^k with alpha_k = alm_step / (k sqrt(2) max(1, r^k))
    over the number of inner calls k and the incumbent residual r^k, and
    revalidate every pooled cut for the new dual pair.  Iterations are
    counted as cumulative z-subproblem solves."""
    consts = derived_constants(problem)
    slices = ausal_mod._BlockSlices(problem)
    lam = np.zeros(problem.m)
    rho = params.rho0
    pool = CutPool(params.cut_window)
    report = AlmReport()
    for k in range(1, params.outer_limit + 1):
        res = _run_ausal(problem, lam, rho, params, eps=0.0, eps_rel=params.inner_gap,
                         pool=pool, consts=consts, slices=slices)
        report.z_solves += res.report.n_epigraph_solves
        _scan_incumbents(problem, res.evaluations, params.eps_p, report)
        report.dual_history.append(res.lower_bound)
        report.lower_bound = max(report.lower_bound, res.lower_bound)
        r_vec = problem.residual(res.x, res.z)
        report.residual_history.append(float(np.abs(r_vec).sum()))
        report.outer.append({"lam": lam.copy(), "rho": rho,
                             "residual": report.residual_history[-1],
                             "dual_estimate": res.lower_bound,
                             "inner_solves": res.report.n_epigraph_solves})
        if report.gap <= params.gap_tol and report.incumbent is not None:
            report.status = "optimal"
            break
        r_inc = (report.incumbent.residual_l1 if report.incumbent is not None
                 else report.residual_history[-1])
        alpha = practical_step(params.alm_step, k, r_inc)
        lam_new = lam + alpha * r_vec
        rho_new = params.gamma * rho
        pool.replace_all(revalidate(c, (lam_new, rho_new), consts["ax_norm_bound"],
                                    consts["K_base"]) for c in pool)
        lam, rho = lam_new, rho_new
    report.cuts = [c.to_json() for c in pool]
    return report


def postprocess_exact_penalty(problem: TwoBlockMilp, lam, rho, slack: float,
                              eps: float, params: AlmParams | None = None):
    """One inner call at the inflated penalty max(||lam||_inf, rho + 2 slack + 1);
    recovers an eps-solution when the dual pair is within `slack` of an
    optimal one in the sup norm."""
    if slack < 0:
        raise ValueError("slack must be nonnegative")
    params = params or AlmParams()
    lam = np.asarray(lam, float)
    rho_new = inflated_penalty(lam, rho, slack)
    consts = derived_constants(problem)
    slices = ausal_mod._BlockSlices(problem)
    res = _run_ausal(problem, lam, rho_new, params, eps=eps, eps_rel=0.0,
                     pool=None, consts=consts, slices=slices)
    return res.x, res.z
