import numpy as np
import pytest

from blockmilp import cuts, reference
from blockmilp.cuts import CutPool, al_cut, reverse_norm_cut, revalidate
from blockmilp.model import derived_constants

from conftest import tiny_problem


def test_reverse_norm_formula():
    cut = reverse_norm_cut(np.zeros(2), 5.0, 2.0)
    assert cut(np.array([1.0, 0.0])) == pytest.approx(3.0)
    assert cut(np.zeros(2)) == pytest.approx(5.0)


def test_reverse_norm_rejects_negative_modulus():
    with pytest.raises(ValueError):
        reverse_norm_cut(np.zeros(1), 0.0, -0.1)
    with pytest.raises(ValueError):
        al_cut(np.zeros(1), 0.0, np.zeros(1), -0.1, np.eye(1))


def _sample_z(problem, rng, count):
    lo, hi = problem.Z.rounded_bounds()
    return lo + rng.integers(0, (hi - lo + 1).astype(int), size=(count, problem.d))


def test_reverse_norm_cut_minorizes_value_function():
    p = tiny_problem(seed=2)
    rng = np.random.default_rng(0)
    lam = rng.normal(size=p.m) * 0.5
    rho = 2.0
    consts = derived_constants(p)
    K = rho * consts["K_base"]
    anchors = _sample_z(p, rng, 5)
    pool = [reverse_norm_cut(a.astype(float),
                             reference.value_function(p, a, lam, rho), K)
            for a in anchors]
    for z in _sample_z(p, rng, 50):
        r_true = reference.value_function(p, z, lam, rho)
        for cut in pool:
            assert cut(z) <= r_true + 1e-6


def test_reverse_norm_tight_at_anchor():
    p = tiny_problem(seed=6)
    lam = np.zeros(p.m)
    rho = 1.5
    K = rho * derived_constants(p)["K_base"]
    for a in _sample_z(p, np.random.default_rng(1), 10):
        q = reference.value_function(p, a, lam, rho)
        cut = reverse_norm_cut(a.astype(float), q, K)
        assert abs(cut(a) - q) <= 1e-9


def test_al_cut_zero_mu_is_reverse_norm_on_bz():
    B = np.array([[1.0, 2.0], [0.0, -1.0]])
    anchor = np.array([1.0, 1.0])
    c = al_cut(anchor, 4.0, np.zeros(2), 0.8, B)
    rn_like = lambda z: 4.0 - 0.8 * np.abs(B @ (z - anchor)).sum()
    rng = np.random.default_rng(2)
    for _ in range(20):
        z = rng.uniform(-2, 3, 2)
        assert c(z) == pytest.approx(rn_like(z))
    assert c(anchor) == pytest.approx(4.0)


def test_al_cut_minorizes_penalty_value_function():
    p = tiny_problem(seed=5)
    rng = np.random.default_rng(3)
    rho = 3.0
    for _ in range(6):
        beta = float(rng.uniform(0.0, rho))
        mu = rng.uniform(-1, 1, p.m)
        mu *= (rho - beta) / max(np.abs(mu).max(), 1e-9) * rng.random()
        assert beta + np.abs(mu).max() <= rho + 1e-9
        anchor = _sample_z(p, rng, 1)[0].astype(float)
        p_val, _ = reference.partial_min(p, anchor, mu, beta)
        p_val += float(mu @ (p.B @ anchor))
        cut = al_cut(anchor, p_val, mu, beta, p.B)
        for z in _sample_z(p, rng, 40):
            r_rho = reference.penalty_value_function(p, z, rho)
            assert cut(z) <= r_rho + 1e-6


def test_revalidate_identity_and_shift():
    cut = reverse_norm_cut(np.zeros(2), 5.0, 2.0, born_dual=(np.zeros(3), 1.0))
    same = revalidate(cut, (np.zeros(3), 1.0), ax_norm_bound=10.0, b_norm=2.0)
    assert same.constant == pytest.approx(5.0)
    assert same.modulus == pytest.approx(2.0)
    moved = revalidate(cut, (np.full(3, 0.5), 1.0), ax_norm_bound=10.0, b_norm=2.0)
    assert moved.constant == pytest.approx(0.0)        # drop by 0.5 * 10


def test_revalidate_rejects_penalty_decrease():
    cut = reverse_norm_cut(np.zeros(2), 5.0, 2.0, born_dual=(np.zeros(3), 2.0))
    with pytest.raises(ValueError):
        revalidate(cut, (np.zeros(3), 1.0), 10.0, 1.0)
    alc = al_cut(np.zeros(2), 1.0, np.zeros(2), 1.0, np.eye(2))
    with pytest.raises(ValueError):
        revalidate(alc, (np.zeros(2), 2.0), 10.0, 1.0)


def test_revalidated_cut_stays_valid():
    p = tiny_problem(seed=7)
    rng = np.random.default_rng(4)
    consts = derived_constants(p)
    lam = np.zeros(p.m)
    rho = 1.0
    K = rho * consts["K_base"]
    anchors = _sample_z(p, rng, 4)
    pool = [reverse_norm_cut(a.astype(float),
                             reference.value_function(p, a, lam, rho), K,
                             born_dual=(lam, rho))
            for a in anchors]
    lam_new = rng.normal(size=p.m) * 0.4
    rho_new = 1.7
    moved = [revalidate(c, (lam_new, rho_new), consts["ax_norm_bound"], consts["K_base"])
             for c in pool]
    for z in _sample_z(p, rng, 40):
        r_new = reference.value_function(p, z, lam_new, rho_new)
        for cut in moved:
            assert cut(z) <= r_new + 1e-6


def test_pool_eviction_order():
    pool = CutPool(capacity=3)
    cs = [reverse_norm_cut(np.array([float(i)]), float(i), 1.0) for i in range(4)]
    for c in cs:
        pool.add(c)
    assert len(pool) == 3
    assert [c.constant for c in pool] == [1.0, 2.0, 3.0]


def test_pool_unlimited_by_default():
    pool = CutPool()
    for i in range(250):
        pool.add(reverse_norm_cut(np.zeros(1), float(i), 1.0))
    assert len(pool) == 250
