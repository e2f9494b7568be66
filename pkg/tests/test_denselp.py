import numpy as np
import pytest
from scipy.optimize import linprog

from blockmilp.denselp import solve_lp


def _random_lp(rng):
    m = rng.integers(0, 8)
    n = rng.integers(1, 12)
    c = rng.normal(size=n).round(3)
    A = rng.normal(size=(m, n)).round(3)
    if rng.random() < 0.3 and m and n > 2:
        A[:, : n // 2] = np.round(A[:, : n // 2])
    lo = rng.uniform(-3, 0, n).round(3)
    hi = lo + rng.uniform(0, 4, n).round(3)
    if rng.random() < 0.15:
        hi = np.where(rng.random(n) < 0.5, np.inf, hi)
    if rng.random() < 0.7:
        x0 = lo + np.where(np.isfinite(hi), hi - lo, 1.0) * rng.random(n)
        b = A @ x0
    else:
        b = rng.normal(size=m)
    return c, A, b, lo, hi


def test_matches_scipy_on_random_lps():
    rng = np.random.default_rng(7)
    for _ in range(400):
        c, A, b, lo, hi = _random_lp(rng)
        m = A.shape[0]
        res = solve_lp(c, A, b, lo, hi)
        ref = linprog(c, A_eq=A if m else None, b_eq=b if m else None,
                      bounds=[(l, None if not np.isfinite(u) else u)
                              for l, u in zip(lo, hi)],
                      method="highs")
        if ref.status == 0:
            assert res.status == "optimal"
            assert res.value == pytest.approx(ref.fun, abs=1e-6 * (1 + abs(ref.fun)))
            if m:
                assert np.abs(A @ res.x - b).max() < 1e-6
            assert np.all(res.x >= lo - 1e-8)
            assert np.all(res.x <= np.where(np.isfinite(hi), hi, np.inf) + 1e-8)
        elif ref.status == 2:
            assert res.status == "infeasible"
        elif ref.status == 3:
            assert res.status == "unbounded"


def test_no_rows_picks_bounds():
    res = solve_lp(np.array([1.0, -2.0]), None, np.zeros(0),
                   np.array([0.0, 0.0]), np.array([3.0, 4.0]))
    assert res.status == "optimal"
    assert np.allclose(res.x, [0.0, 4.0])


def test_unbounded_detected():
    res = solve_lp(np.array([-1.0]), np.zeros((0, 1)).reshape(0, 1), np.zeros(0),
                   np.array([0.0]), np.array([np.inf]))
    assert res.status == "unbounded"


def test_infeasible_equality():
    # x1 + x2 = -1 with x >= 0
    res = solve_lp(np.zeros(2), np.ones((1, 2)), np.array([-1.0]),
                   np.zeros(2), np.ones(2))
    assert res.status == "infeasible"


def test_degenerate_equalities():
    # duplicated rows force redundant-row handling in phase 1
    A = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, -1.0]])
    b = np.array([1.0, 1.0, 0.0])
    res = solve_lp(np.array([1.0, 2.0]), A, b, np.zeros(2), np.ones(2))
    assert res.status == "optimal"
    assert np.allclose(res.x, [0.5, 0.5])
