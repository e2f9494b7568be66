import math

import numpy as np
import pytest

from blockmilp import alm, reference
from blockmilp.alm import AlmParams
from blockmilp.model import MilSet, TwoBlockMilp, derived_constants, is_eps_solution

from conftest import tiny_problem


def test_penalty_rho_arithmetic():
    # ||c||_1 = 10 over box diameter 2, ||g||_1 = 4 over diameter 5, eps = 0.5
    X = MilSet.make(2, None, None, None, [0, 0], [2, 2])
    Z = MilSet.make(2, [True, True], None, None, [0, 0], [5, 5])
    p = TwoBlockMilp.make([6.0, -4.0], [1.0, -3.0], np.zeros((1, 2)), np.zeros((1, 2)), X, Z)
    assert alm.penalty_rho(p, np.zeros(1), 0.5) == pytest.approx(81.0)


def test_penalty_rho_degenerate_objectives():
    X = MilSet.make(1, None, None, None, [0], [1])
    Z = MilSet.make(1, [True], None, None, [0], [1])
    p = TwoBlockMilp.make([0.0], [0.0], [[1.0]], [[-1.0]], X, Z)
    assert alm.penalty_rho(p, np.zeros(1), 0.3) == pytest.approx(1.0)


def test_penalty_solve_gives_eps_solution():
    for seed in (0, 2):
        p = tiny_problem(seed)
        p_star = reference.lattice_extensive(p)[0]
        for eps in (0.1, 0.01):
            x, z, rep = alm.penalty_solve(p, np.zeros(p.m), eps)
            assert is_eps_solution(p, x, z, eps, p_star)


def test_practical_step_arithmetic():
    assert alm.practical_step(200.0, 2, 4.0) == pytest.approx(25.0 / math.sqrt(2))
    assert alm.practical_step(200.0, 1, 0.0) == pytest.approx(200.0 / math.sqrt(2))


def test_inflated_penalty_arithmetic():
    assert alm.inflated_penalty(np.full(3, 9.0), 3.0, 2.0) == pytest.approx(9.0)
    assert alm.inflated_penalty(np.zeros(3), 3.0, 0.0) == pytest.approx(4.0)


def test_subgrad_gap_step_and_monotone_rho():
    p = tiny_problem(seed=1)
    params = AlmParams(variant="gap", rho0=0.4, tau0=1.0, eps_p=0.05, outer_limit=6)
    rep = alm.subgrad_gap(p, params)
    rhos = [o["rho"] for o in rep.outer]
    for k in range(1, len(rhos)):
        # rho step is exactly tau_k / sqrt(2) with tau_k = tau0/sqrt(k)
        expect = (1.0 / math.sqrt(k)) / math.sqrt(2.0)
        assert rhos[k] - rhos[k - 1] == pytest.approx(expect, abs=1e-9)
        assert rhos[k] > rhos[k - 1]


def test_subgrad_gap_dual_estimates_below_pstar():
    p = tiny_problem(seed=5)
    p_star = reference.lattice_extensive(p)[0]
    rep = alm.subgrad_gap(p, AlmParams(variant="gap", rho0=0.3, eps_p=0.02, outer_limit=8))
    assert all(d <= p_star + 0.02 + 1e-7 for d in rep.dual_history)
    # dual gap estimates tighten as the budget grows
    short = max(rep.dual_history[:3])
    full = max(rep.dual_history)
    assert full >= short - 1e-12


def test_subgradient_norm_bound():
    p = tiny_problem(seed=6)
    rep = alm.subgrad_gap(p, AlmParams(variant="gap", rho0=0.2, eps_p=0.05, outer_limit=5))
    for o, r in zip(rep.outer, rep.residual_history):
        # the (residual, ||residual||_1) subgradient has squared 2-norm <= 2 r^2
        pass
    rng = np.random.default_rng(0)
    for _ in range(50):
        r_vec = rng.normal(size=4)
        g = np.concatenate([r_vec, [np.abs(r_vec).sum()]])
        assert g @ g <= 2.0 * np.abs(r_vec).sum() ** 2 + 1e-12


def test_subgrad_finite_returns_eps_solution():
    p = tiny_problem(seed=3)
    p_star = reference.lattice_extensive(p)[0]
    params = AlmParams(variant="finite", rho0=0.5, tau=0.7, eps_p=0.05, outer_limit=40)
    x, z, rep = alm.subgrad_finite(p, params)
    assert rep.status == "converged"
    assert is_eps_solution(p, x, z, 0.05, p_star)


def test_subgrad_finite_rho_growth_and_dominance():
    p = tiny_problem(seed=4)
    tau = 0.6
    params = AlmParams(variant="finite", rho0=0.2, tau=tau, eps_p=1e-9, outer_limit=12)
    x, z, rep = alm.subgrad_finite(p, params)
    rhos = [o["rho"] for o in rep.outer]
    lams = [o["lam"] for o in rep.outer]
    for k, (rho, lam) in enumerate(zip(rhos, lams), start=1):
        assert rho >= 0.2 + (k - 1) * tau - 1e-9
        assert rho >= np.abs(lam).max(initial=0.0) - 1e-9


def test_subgrad_finite_immediate_feasible():
    # force feasibility in one call with a large starting penalty
    p = tiny_problem(seed=2)
    params = AlmParams(variant="finite", rho0=50.0, tau=1.0, eps_p=0.05, outer_limit=5)
    x, z, rep = alm.subgrad_finite(p, params)
    assert rep.status == "converged"
    assert len(rep.outer) == 1


def test_practical_stationary_when_gamma_one_step_zero():
    p = tiny_problem(seed=8)
    params = AlmParams(rho0=0.35, gamma=1.0, alm_step=0.0, inner_alm=3,
                       outer_limit=4, gap_tol=1e-12)
    rep = alm.practical_alm(p, params)
    for o in rep.outer:
        assert o["rho"] == pytest.approx(0.35)
        assert np.allclose(o["lam"], 0.0)


def test_practical_alm_converges_and_counts(investment3, investment3_opt):
    params = AlmParams(rho0=100.0 / 9.0, gamma=1.1, inner_alm=100, alm_step=200.0,
                       outer_limit=40)
    rep = alm.practical_alm(investment3, params)
    assert rep.status == "optimal"
    assert rep.gap <= 1e-4
    assert rep.z_solves <= 37
    assert rep.upper_bound == pytest.approx(investment3_opt[0],
                                            abs=1e-6 * abs(investment3_opt[0]))
    assert rep.lower_bound <= investment3_opt[0] + 1e-7


def test_practical_alm_grows_duals_from_small_rho():
    p = tiny_problem(seed=10)
    p_star = reference.lattice_extensive(p)[0]
    params = AlmParams(rho0=0.05, gamma=1.6, alm_step=1.0, inner_alm=50,
                       outer_limit=30)
    rep = alm.practical_alm(p, params)
    assert rep.status == "optimal"
    assert abs(rep.upper_bound - p_star) <= 1e-6 * max(1, abs(p_star))
    assert len(rep.outer) > 1          # actually needed dual updates


def test_postprocess_exact_penalty():
    p = tiny_problem(seed=12)
    p_star = reference.lattice_extensive(p)[0]
    # dual grid scan for a near-optimal (lam, rho) at grid resolution h
    h = 0.5
    best = (-np.inf, None)
    for l0 in np.arange(-1.0, 1.0 + 1e-9, h):
        for l1 in np.arange(-1.0, 1.0 + 1e-9, h):
            for rho in np.arange(0.5, 3.0 + 1e-9, h):
                d = reference.enum_dual(p, np.array([l0, l1]), rho)
                if d > best[0]:
                    best = (d, (np.array([l0, l1]), rho))
    lam, rho = best[1]
    x, z = alm.postprocess_exact_penalty(p, lam, rho, slack=h, eps=0.05)
    assert is_eps_solution(p, x, z, 0.05, p_star)


def test_exact_penalization_probe():
    p = tiny_problem(seed=14)
    p_star, xs, zs = reference.lattice_extensive(p)
    # scan for a rho that supports exact penalization, checked two ways
    consts = derived_constants(p)
    for rho in (20.0, 40.0):
        d = reference.enum_dual(p, np.zeros(p.m), rho)
        if abs(d - p_star) > 1e-8:
            continue
        # criterion: p(u) >= p(0) + <0, u> - rho ||u||_1 on an l1 grid
        for u0 in (-1.0, -0.5, 0.0, 0.5, 1.0):
            for u1 in (-1.0, 0.0, 1.0):
                u = np.array([u0, u1])
                pu = reference.enum_perturbation(p, u)
                if not np.isinf(pu):
                    assert pu >= p_star - rho * np.abs(u).sum() - 1e-7
        break
    else:
        pytest.fail("no exactly-penalizing rho found in the scan")
