"""Global minimization of f(z) + Q(z) over a MIL set by reverse norm cuts.

Q is any K-Lipschitz (l1) function available through a zero-order oracle.
Each iteration minimizes f(z) + t over the epigraph of the current cut
collection, evaluates Q at the argmin, and adds a cut there; the epigraph
value f(z^k) + t^k is a monotone lower bound and the best evaluated point a
monotone upper bound.
"""

from dataclasses import dataclass, field

import numpy as np

from . import subsolver
from .cuts import CutPool, reverse_norm_cut


@dataclass
class LipMinConfig:
    K: float
    eps: float = 0.0            # absolute gap tolerance
    eps_rel: float = 0.0        # relative tolerance on max(1, |UB|); the larger rule wins
    max_iter: int = 10_000
    z0: np.ndarray | None = None
    alt_stop: bool = False      # additionally stop once Q(z^k) - t^k is small
    encoder: str = "auto"       # cut epigraph formulation: auto | split | unary

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError("Lipschitz over-estimate must be positive")
        if self.eps < 0 or self.eps_rel < 0:
            raise ValueError("tolerances must be nonnegative")


@dataclass
class LipMinReport:
    iterates: list = field(default_factory=list)     # z^k per epigraph solve
    t_values: list = field(default_factory=list)
    lb_history: list = field(default_factory=list)   # f(z^k) + t^k
    ub_history: list = field(default_factory=list)
    q_values: list = field(default_factory=list)
    reason: str = "iter_limit"
    gap: float = np.inf
    n_epigraph_solves: int = 0


def presolve_start(f_lin, z_set, t_lower, solve_opts=None, encoder="auto"):
    """Cut-free epigraph solve with t pinned to a finite lower bound on Q;
    returns the minimizer of f(z) + t over Z."""
    inst = subsolver.build_epigraph(z_set, f_lin, [], t_lower=t_lower,
                                    t_upper=t_lower, encoder=encoder)
    res = subsolver.solve(inst, solve_opts or _EXACT)
    if res.status == subsolver.Status.INFEASIBLE:
        raise ValueError("Z is infeasible")
    if res.point is None:
        raise RuntimeError(f"presolve failed: {res.status.value}")
    return res.point[: z_set.dim]


_EXACT = subsolver.SolveOptions(rel_gap=1e-9)


def minimize(f_lin, Q, z_set, cfg: LipMinConfig, *, pool: CutPool | None = None,
             cut_factory=None, t_lower=None, solve_opts=None):
    """Returns (z_best, Q(z_best), report).  `pool` may carry cuts from a
    previous call (they must minorize the current Q); new cuts are appended
    through `cut_factory(z, q)`, reverse-norm with modulus cfg.K by default.
    """
    f_lin = np.asarray(f_lin, float)
    d = z_set.dim
    pool = pool if pool is not None else CutPool()
    if cut_factory is None:
        cut_factory = lambda z, q: reverse_norm_cut(z, q, cfg.K)
    opts = solve_opts or _EXACT
    rep = LipMinReport()
    q_cache = {}

    def evaluate(z):
        key = z.tobytes()
        if key not in q_cache:
            q_cache[key] = float(Q(z))
        return q_cache[key]

    ub = np.inf
    best = None
    seen = set()

    if len(pool) == 0:
        if cfg.z0 is not None:
            z0 = np.asarray(cfg.z0, float)
        else:
            if t_lower is None:
                raise ValueError("presolve needs a finite lower bound on Q")
            z0 = presolve_start(f_lin, z_set, t_lower, opts, cfg.encoder)
            rep.n_epigraph_solves += 1
        q0 = evaluate(z0)
        ub = float(f_lin @ z0) + q0
        best = z0
        pool.add(cut_factory(z0, q0))
        seen.add(z0.tobytes())
        rep.ub_history.append(ub)
        rep.q_values.append(q0)

    for _ in range(cfg.max_iter):
        inst = subsolver.build_epigraph(z_set, f_lin, list(pool), t_lower=t_lower,
                                        encoder=cfg.encoder)
        cutoff = ub if np.isfinite(ub) else None
        node_opts = subsolver.SolveOptions(
            rel_gap=opts.rel_gap, feas_tol=opts.feas_tol, int_tol=opts.int_tol,
            node_limit=opts.node_limit, cutoff=cutoff,
            lp_engine=opts.lp_engine, dense_limit=opts.dense_limit)
        res = subsolver.solve(inst, node_opts)
        if res.point is None:
            raise RuntimeError(f"epigraph subproblem failed: {res.status.value}")
        rep.n_epigraph_solves += 1
        zk = res.point[:d]
        tk = float(res.point[d])
        lb = float(f_lin @ zk) + tk
        qk = evaluate(zk)
        val = float(f_lin @ zk) + qk
        if val < ub:
            ub = val
            best = zk
        rep.iterates.append(zk)
        rep.t_values.append(tk)
        rep.lb_history.append(lb)
        rep.ub_history.append(ub)
        rep.q_values.append(qk)
        tol = max(cfg.eps, cfg.eps_rel * max(1.0, abs(ub)))
        rep.gap = ub - lb
        if ub - lb <= tol + 1e-12:
            rep.reason = "converged"
            break
        if cfg.alt_stop and qk - tk <= tol + 1e-12:
            rep.reason = "alt_converged"
            break
        key = zk.tobytes()
        if cfg.eps == 0.0 and cfg.eps_rel == 0.0 and key in seen:
            rep.reason = "repeat"        # finite-termination rule for eps = 0
            break
        seen.add(key)
        pool.add(cut_factory(zk, qk))
    return best, q_cache[best.tobytes()], rep
