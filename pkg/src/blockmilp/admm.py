"""Single-loop method driven by augmented Lagrangian cuts.

Iteration k solves one x-relaxation at the previous z (block-parallel),
turns it into an AL cut, re-solves the z-side epigraph over all cuts so far,
and moves the dual pair.  The epigraph objective g'z + t is a monotone lower
bound on the optimum as long as the cuts stay inside the valid multiplier
region, and every x-step whose residual vanishes yields an upper bound, so
the loop carries a bracket the whole way.
"""

from dataclasses import dataclass, field

import numpy as np

from . import lipmin, subsolver
from .ausal import _BlockSlices, block_relax_bound, eval_R
from .cuts import CutPool, al_cut
from .model import Iterate, TwoBlockMilp, derived_constants


@dataclass
class AdmmParams:
    beta0: float = 1.0
    gamma: float = 1.1
    inner_admm: int = 50               # iterations between penalty bumps
    admm_step: float = 200.0           # practical multiplier step scale
    beta_cap: float | None = None      # projected scheme's beta ceiling
    mu_lo: float | np.ndarray | None = None    # projection box (projected scheme)
    mu_hi: float | np.ndarray | None = None
    eps: float = 1e-4                  # relative gap target
    feas_tol: float = 1e-6
    iter_limit: int = 10_000
    dual_scheme: str = "practical"     # practical | projected
    # which residual feeds the dual step: the x-step's own pair (x^k, z^{k-1})
    # or the cross pair (x^k, z^k).  None picks x_step for the practical
    # scheme (matching the experiment tables) and updated_z for the projected
    # one (the literal conceptual update).
    residual_pairing: str | None = None
    workers: int = 1
    cut_window: int | None = None
    encoder: str = "auto"


@dataclass
class AdmmReport:
    iterations: list = field(default_factory=list)   # per-iteration records
    lb_history: list = field(default_factory=list)
    ub_history: list = field(default_factory=list)
    incumbent: Iterate | None = None
    lower_bound: float = -np.inf
    upper_bound: float = np.inf
    status: str = "iter_limit"
    n_iterations: int = 0
    cuts: list = field(default_factory=list)          # final pool, serialized

    @property
    def gap(self) -> float:
        return (self.upper_bound - self.lower_bound) / max(1.0, abs(self.upper_bound))


def dual_update_projected(mu, beta, residual, params: AdmmParams):
    """Clamped multiplier step with capped geometric penalty growth."""
    mu_new = np.asarray(mu, float) + beta * np.asarray(residual, float)
    lo = -np.inf if params.mu_lo is None else params.mu_lo
    hi = np.inf if params.mu_hi is None else params.mu_hi
    mu_new = np.clip(mu_new, lo, hi)
    beta_new = beta * params.gamma
    if params.beta_cap is not None:
        beta_new = min(params.beta_cap, beta_new)
    return mu_new, beta_new


def dual_update_practical(mu, beta, residual, k, params: AdmmParams):
    """Unprojected step mu += step * beta * residual; beta bumps by gamma
    every inner_admm iterations."""
    mu_new = np.asarray(mu, float) + params.admm_step * beta * np.asarray(residual, float)
    beta_new = beta * params.gamma if k % params.inner_admm == 0 else beta
    return mu_new, beta_new


_EXACT = subsolver.SolveOptions(rel_gap=1e-9)


def admm_solve(problem: TwoBlockMilp, params: AdmmParams, z0=None):
    """Returns (incumbent Iterate or None, AdmmReport)."""
    consts = derived_constants(problem)
    slices = _BlockSlices(problem)
    mu = np.zeros(problem.m)
    beta = float(params.beta0)
    if not beta > 0:
        raise ValueError("beta0 must be positive")
    pool = CutPool(params.cut_window)
    t_lower = block_relax_bound(problem, mu, beta, slices=slices)
    if z0 is None:
        z_prev = lipmin.presolve_start(problem.g, problem.Z, t_lower,
                                       encoder=params.encoder)
    else:
        z_prev = np.asarray(z0, float)
    report = AdmmReport()

    for k in range(1, params.iter_limit + 1):
        # x-step against the previous z; its value is P(z_prev, mu, beta)
        ev = eval_R(problem, z_prev, mu, beta, workers=params.workers, slices=slices)
        p_val = ev.value + float(mu @ (problem.B @ z_prev))
        it = Iterate.of(problem, ev.argmin_x, z_prev)
        if it.residual_l1 <= params.feas_tol and it.primal_obj < report.upper_bound - 1e-12:
            report.upper_bound = it.primal_obj
            report.incumbent = it
        pool.add(al_cut(z_prev, p_val, mu, beta, problem.B, born_dual=(mu.copy(), beta)))

        inst = subsolver.build_epigraph(problem.Z, problem.g, list(pool),
                                        t_lower=t_lower, encoder=params.encoder)
        cutoff = report.upper_bound if np.isfinite(report.upper_bound) else None
        res = subsolver.solve(inst, subsolver.SolveOptions(
            rel_gap=1e-9, cutoff=cutoff))
        if res.point is None:
            raise RuntimeError(f"z subproblem failed: {res.status.value}")
        zk = res.point[: problem.d]
        tk = float(res.point[problem.d])
        lb = float(problem.g @ zk) + tk
        report.lower_bound = max(report.lower_bound, lb)
        report.lb_history.append(lb)
        report.ub_history.append(report.upper_bound)
        report.iterations.append({
            "z": zk.copy(), "t": tk, "beta": beta,
            "mu_inf": float(np.abs(mu).max(initial=0.0)),
            "beta_minus_mu": beta - float(np.abs(mu).max(initial=0.0)),
            "x_residual": it.residual_l1,
        })
        report.n_iterations = k
        if report.gap <= params.eps and report.incumbent is not None:
            report.status = "optimal"
            break

        pairing = params.residual_pairing or (
            "updated_z" if params.dual_scheme == "projected" else "x_step")
        residual = it.residual if pairing == "x_step" else problem.residual(ev.argmin_x, zk)
        if params.dual_scheme == "projected":
            mu, beta = dual_update_projected(mu, beta, residual, params)
        else:
            mu, beta = dual_update_practical(mu, beta, residual, k, params)
        z_prev = zk
    report.cuts = [c.to_json() for c in pool]
    return report.incumbent, report


def admm_postprocess(problem: TwoBlockMilp, z_final, rho_lower: float, workers: int = 1):
    """One x-side solve at the caller's penalty estimate; the pair
    (x_hat, z_final) is the candidate approximate solution."""
    ev = eval_R(problem, z_final, np.zeros(problem.m), rho_lower, workers=workers)
    return ev.argmin_x, np.asarray(z_final, float)
