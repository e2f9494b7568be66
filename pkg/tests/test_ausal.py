import numpy as np
import pytest

from blockmilp import ausal, reference
from blockmilp.model import (BlockStructure, MilSet, TwoBlockMilp,
                             derived_constants)

from conftest import single_scenario_investment, tiny_problem


def test_eval_r_decoupled_when_a_zero():
    p = tiny_problem(seed=1)
    q = TwoBlockMilp.make(p.c, p.g, np.zeros_like(p.A), p.B, p.X, p.Z, p.blocks)
    lam = np.zeros(q.m)
    rng = np.random.default_rng(0)
    vals = []
    for _ in range(4):
        z = rng.integers(0, 3, q.d).astype(float)
        ev = ausal.eval_R(q, z, lam, 2.0)
        vals.append(ev.value - 2.0 * np.abs(q.B @ z).sum())
    # after removing the rho ||Bz||_1 part, the x-part is independent of z
    assert max(vals) - min(vals) <= 1e-8


def test_eval_r_single_scenario_frozen_value():
    p = single_scenario_investment()
    ev = ausal.eval_R(p, np.zeros(2), np.zeros(2), 10.0)
    assert ev.value == pytest.approx(-28.0, abs=1e-8)   # best recourse, no slack cost
    assert reference.value_function(p, np.zeros(2), np.zeros(2), 10.0) == \
        pytest.approx(ev.value, abs=1e-8)


def test_eval_r_matches_enumeration_on_tiny():
    p = tiny_problem(seed=3)
    rng = np.random.default_rng(5)
    for _ in range(10):
        z = rng.integers(0, 3, p.d).astype(float)
        lam = rng.normal(size=p.m) * 0.4
        rho = float(rng.uniform(0.2, 4.0))
        ev = ausal.eval_R(p, z, lam, rho)
        ref = reference.value_function(p, z, lam, rho)
        assert ev.value == pytest.approx(ref, abs=1e-7)
        assert ev.value == pytest.approx(sum(ev.per_block_values), abs=1e-8)


def test_eval_r_lipschitz_bound():
    p = tiny_problem(seed=4)
    consts = derived_constants(p)
    rho = 1.7
    K = rho * consts["K_base"]
    rng = np.random.default_rng(6)
    lam = rng.normal(size=p.m) * 0.3
    pts = [rng.integers(0, 3, p.d).astype(float) for _ in range(40)]
    vals = [ausal.eval_R(p, z, lam, rho).value for z in pts]
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            dist = np.abs(pts[i] - pts[j]).sum()
            assert abs(vals[i] - vals[j]) <= K * dist + 1e-7


def test_blocked_and_unblocked_agree():
    p = tiny_problem(seed=7)
    q = TwoBlockMilp.make(p.c, p.g, p.A, p.B, p.X, p.Z, blocks=None)
    rng = np.random.default_rng(7)
    for _ in range(20):
        z = rng.integers(0, 3, p.d).astype(float)
        lam = rng.normal(size=p.m) * 0.5
        rho = float(rng.uniform(0.1, 3.0))
        vb = ausal.eval_R(p, z, lam, rho).value
        vu = ausal.eval_R(q, z, lam, rho).value
        assert vb == pytest.approx(vu, abs=1e-7)


def test_worker_counts_identical():
    p = tiny_problem(seed=8, n_blocks=4)
    z = np.array([1.0, 0.0, 2.0, 1.0])
    lam = np.full(p.m, 0.25)
    e1 = ausal.eval_R(p, z, lam, 1.3, workers=1)
    e4 = ausal.eval_R(p, z, lam, 1.3, workers=4)
    assert e1.value == e4.value
    assert np.array_equal(e1.argmin_x, e4.argmin_x)
    r1 = ausal.ausal(p, lam, 1.3, eps=0.0, workers=1)
    r4 = ausal.ausal(p, lam, 1.3, eps=0.0, workers=4)
    assert r1.al_value == r4.al_value
    assert np.array_equal(r1.z, r4.z)
    assert r1.report.n_epigraph_solves == r4.report.n_epigraph_solves


def test_ausal_singleton_z():
    p = tiny_problem(seed=9)
    Zs = MilSet.make(p.d, p.Z.integrality, None, None, [1, 2], [1, 2])
    q = TwoBlockMilp.make(p.c, p.g, p.A, p.B, p.X, Zs, p.blocks)
    res = ausal.ausal(q, np.zeros(q.m), 1.0, eps=0.0)
    assert np.allclose(res.z, [1, 2])
    assert len(res.evaluations) == 1


def test_ausal_exact_matches_enum_dual():
    for seed in range(4):
        p = tiny_problem(seed=seed)
        rng = np.random.default_rng(seed)
        lam = rng.normal(size=p.m) * 0.4
        rho = float(rng.uniform(0.5, 3.0))
        res = ausal.ausal(p, lam, rho, eps=0.0)
        d = reference.enum_dual(p, lam, rho)
        assert res.al_value == pytest.approx(d, abs=1e-7)
        assert res.lower_bound <= d + 1e-7


def test_ausal_weak_duality_along_the_run(investment3, investment3_opt):
    res = ausal.ausal(investment3, np.zeros(investment3.m), 1.0, eps=0.0, eps_rel=1e-4)
    p_star = investment3_opt[0]
    for lb in res.report.lb_history:
        assert lb <= p_star + 1e-7


def test_ausal_iteration_cap():
    p = tiny_problem(seed=11)
    consts = derived_constants(p)
    rho = 1.0
    eps = 0.5
    res = ausal.ausal(p, np.zeros(p.m), rho, eps=eps)
    cap = (1 + 4 * rho * consts["K_base"] * consts["z_radius_l1"] / eps) ** p.d
    assert res.report.n_epigraph_solves <= cap + 1


def test_ausal_returns_matching_x():
    p = tiny_problem(seed=12)
    res = ausal.ausal(p, np.zeros(p.m), 2.0, eps=0.0)
    ev = ausal.eval_R(p, res.z, np.zeros(p.m), 2.0)
    assert ev.value == pytest.approx(
        res.al_value - float((p.g + p.B.T @ np.zeros(p.m)) @ res.z), abs=1e-7)
    assert np.array_equal(res.x, ev.argmin_x)


def test_block_relax_bound_is_valid():
    p = tiny_problem(seed=13)
    rng = np.random.default_rng(13)
    lam = rng.normal(size=p.m) * 0.3
    rho = 1.4
    bound = ausal.block_relax_bound(p, lam, rho)
    for _ in range(20):
        z = rng.integers(0, 3, p.d).astype(float)
        assert bound <= reference.value_function(p, z, lam, rho) + 1e-7
