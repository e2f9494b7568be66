import numpy as np
import pytest

from blockmilp import instances
from blockmilp.model import BlockStructure, MilSet, TwoBlockMilp


def tiny_problem(seed=0, n_blocks=2, z_width=2):
    """Small block-angular problem with copy-style coupling, used wherever a
    brute-force oracle has to stay cheap.  Block p has an integer variable
    a_p in [0, z_width], a continuous b_p in [0, 2], and a slack s_p with
    a_p + b_p + s_p = z_width; coupling reads a_p - z_p = 0 with z integer in
    [0, z_width]^P."""
    rng = np.random.default_rng(seed)
    nb = 3
    n = n_blocks * nb
    c = np.zeros(n)
    A = np.zeros((n_blocks, n))
    B = -np.eye(n_blocks)
    E = np.zeros((n_blocks, n))
    f = np.full(n_blocks, float(z_width))
    lower = np.zeros(n)
    upper = np.zeros(n)
    integrality = np.zeros(n, bool)
    xp, rp = [], []
    for p in range(n_blocks):
        o = p * nb
        c[o : o + 3] = np.round(rng.normal(size=3) * 2, 2)
        upper[o] = z_width
        upper[o + 1] = 2.0
        upper[o + 2] = z_width + 2.0
        integrality[o] = True
        E[p, o : o + 3] = 1.0
        A[p, o] = 1.0
        xp.append(np.arange(o, o + nb))
        rp.append(np.array([p]))
    g = np.round(rng.normal(size=n_blocks) * 2, 2)
    X = MilSet.make(n, integrality, E, f, lower, upper)
    Z = MilSet.make(n_blocks, np.ones(n_blocks, bool), None, None,
                    np.zeros(n_blocks), np.full(n_blocks, float(z_width)))
    return TwoBlockMilp.make(c, g, A, B, X, Z, BlockStructure.make(xp, rp))


def single_scenario_investment(h=(5.0, 5.0), t_choice="I", z_upper=5, rho_weight=1.0):
    """One recourse block of the investment family, convenient for frozen
    hand-checked values."""
    T = instances.T_MATRICES[t_choice]
    E = np.zeros((2, 8))
    E[:, :4] = instances.INVESTMENT_RECOURSE_ROWS
    E[:, 4:6] = T
    E[:, 6:8] = np.eye(2)
    A = np.zeros((2, 8))
    A[:, 4:6] = np.eye(2)
    X = MilSet.make(
        8,
        integrality=[True] * 4 + [False] * 4,
        eq_matrix=E, eq_rhs=np.asarray(h, float),
        lower=np.zeros(8),
        upper=np.array([1.0] * 4 + [float(z_upper)] * 2 + [15.0] * 2),
    )
    Z = MilSet.make(2, [True, True], None, None, [0.0, 0.0],
                    [float(z_upper)] * 2)
    c = np.concatenate([rho_weight * instances.INVESTMENT_RECOURSE_OBJ, np.zeros(4)])
    return TwoBlockMilp.make(c, instances.INVESTMENT_FIRST_STAGE, A, -np.eye(2), X, Z,
                             BlockStructure.make([np.arange(8)], [np.arange(2)]))


@pytest.fixture(scope="session")
def investment3():
    return instances.gen_investment(3, "I", 5)


@pytest.fixture(scope="session")
def investment3_opt(investment3):
    from blockmilp import reference
    return reference.lattice_extensive(investment3)
