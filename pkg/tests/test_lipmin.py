import numpy as np
import pytest

from blockmilp import lipmin, subsolver
from blockmilp.lipmin import LipMinConfig, minimize, presolve_start
from blockmilp.model import MilSet


def _lattice(z_set):
    lo, hi = z_set.rounded_bounds()
    if z_set.dim == 1:
        return [np.array([v]) for v in np.arange(lo[0], hi[0] + 0.5)]
    grids = np.meshgrid(*[np.arange(l, h + 0.5) for l, h in zip(lo, hi)])
    return [np.array(p) for p in zip(*[g.ravel() for g in grids])]


def _pw_linear_lipschitz(rng, d, K, n_pieces=4):
    """Min of affine pieces with l1-bounded slopes is K-Lipschitz in l1."""
    slopes = rng.uniform(-1, 1, (n_pieces, d))
    slopes *= K / np.maximum(np.abs(slopes).max(axis=1, keepdims=True), 1e-9)
    offs = rng.uniform(-3, 3, n_pieces)
    return lambda z: float(np.min(slopes @ z + offs))


def test_singleton_set_terminates_immediately():
    Z = MilSet.make(2, [True, True], None, None, [2, 3], [2, 3])
    z, q, rep = minimize(np.zeros(2), lambda z: 7.5, Z,
                         LipMinConfig(K=1.0, eps=0.0), t_lower=-10.0)
    assert np.allclose(z, [2, 3])
    assert q == 7.5
    assert rep.reason in ("converged", "repeat")
    assert rep.gap <= 1e-9
    assert rep.n_epigraph_solves <= 2


def test_absolute_value_on_small_lattice():
    Z = MilSet.make(1, [True], None, None, [-2], [2])
    evals = []
    def Q(z):
        evals.append(z.copy())
        return float(abs(z[0]))
    z, q, rep = minimize(np.zeros(1), Q, Z, LipMinConfig(K=1.0, eps=0.0), t_lower=0.0)
    assert z[0] == pytest.approx(0.0)
    assert q == pytest.approx(0.0)
    assert rep.n_epigraph_solves <= 5


def test_covering_bound_and_eps_optimality():
    rng = np.random.default_rng(10)
    Z = MilSet.make(2, [True, True], None, None, [0, 0], [4, 4])
    R = 0.5 * (4 + 4)            # z inside the l1 ball around the box center
    for trial in range(50):
        K = float(rng.uniform(0.5, 2.0))
        eps = float(rng.uniform(0.2, 1.0))
        Q = _pw_linear_lipschitz(rng, 2, K)
        f = rng.uniform(-1, 1, 2)
        z, q, rep = minimize(f, Q, Z, LipMinConfig(K=K, eps=eps),
                             t_lower=float(-3 - K * 8))
        v_star = min(float(f @ p) + Q(p) for p in _lattice(Z))
        assert float(f @ z) + q <= v_star + eps + 1e-9
        cap = (1 + 4 * K * R / eps) ** 2
        assert rep.n_epigraph_solves <= cap + 1


def test_lower_bound_monotone_and_valid():
    rng = np.random.default_rng(11)
    Z = MilSet.make(2, [True, True], None, None, [0, 0], [3, 3])
    for trial in range(10):
        K = 1.5
        Q = _pw_linear_lipschitz(rng, 2, K)
        f = rng.uniform(-1, 1, 2)
        z, q, rep = minimize(f, Q, Z, LipMinConfig(K=K, eps=0.0), t_lower=-20.0)
        lbs = rep.lb_history
        assert all(lbs[i] <= lbs[i + 1] + 1e-9 for i in range(len(lbs) - 1))
        v_star = min(float(f @ p) + Q(p) for p in _lattice(Z))
        assert all(lb <= v_star + 1e-8 for lb in lbs)
        assert float(f @ z) + q == pytest.approx(v_star, abs=1e-8)


def test_alternative_stop_rule():
    rng = np.random.default_rng(12)
    Z = MilSet.make(2, [True, True], None, None, [0, 0], [3, 3])
    Q = _pw_linear_lipschitz(rng, 2, 1.0)
    z, q, rep = minimize(np.zeros(2), Q, Z,
                         LipMinConfig(K=1.0, eps=0.5, alt_stop=True), t_lower=-10.0)
    assert rep.reason in ("converged", "alt_converged")
    if rep.reason == "alt_converged":
        assert rep.q_values[-1] - rep.t_values[-1] <= 0.5 + 1e-9


def test_repeat_rule_for_exact_tolerance():
    # Q with a strict minimum; eps = 0 must still terminate finitely
    Z = MilSet.make(1, [True], None, None, [0], [3])
    Q = lambda z: float((z[0] - 2) ** 2) * 0.4
    z, q, rep = minimize(np.zeros(1), Q, Z, LipMinConfig(K=3.0, eps=0.0), t_lower=0.0)
    assert z[0] == pytest.approx(2.0)
    assert rep.reason in ("converged", "repeat")


def test_presolve_zero_objective_deterministic():
    Z = MilSet.make(2, [True, True], None, None, [0, 0], [3, 3])
    z1 = presolve_start(np.zeros(2), Z, t_lower=0.0)
    z2 = presolve_start(np.zeros(2), Z, t_lower=0.0)
    assert np.array_equal(z1, z2)


def test_presolve_box_corner():
    Z = MilSet.make(2, [True, True], None, None, [0, 0], [3, 3])
    z = presolve_start(np.array([1.0, -1.0]), Z, t_lower=0.0)
    assert np.allclose(z, [0, 3])


def test_presolve_investment_first_stage():
    Z = MilSet.make(2, [True, True], None, None, [0, 0], [5, 5])
    z = presolve_start(np.array([-1.5, -4.0]), Z, t_lower=-86.0)
    assert np.allclose(z, [5, 5])


def test_presolve_infeasible_set():
    Z = MilSet.make(1, [True], None, None, [0], [1],)
    bad = MilSet.make(1, [True], np.array([[1.0]]), np.array([5.0]), [0], [1])
    with pytest.raises(ValueError):
        presolve_start(np.zeros(1), bad, t_lower=0.0)


def test_config_validation():
    with pytest.raises(ValueError):
        LipMinConfig(K=0.0)
    with pytest.raises(ValueError):
        LipMinConfig(K=1.0, eps=-1.0)
