"""Deterministic generators for the three experiment families.

All randomness flows through the package's splitmix64 generator with a
documented draw order, so a (family, seed, sizes) triple pins the instance
bit for bit.  Inequalities are folded into the equality-form MIL sets with
nonnegative slack columns, and every coupling is written homogeneously by
giving each scenario its own copy of the first-stage variables.
"""

import numpy as np

from .model import BlockStructure, MilSet, TwoBlockMilp
from .rng import SplitMix64

INVESTMENT_RECOURSE_OBJ = np.array([-16.0, -19.0, -23.0, -28.0])
INVESTMENT_RECOURSE_ROWS = np.array([[2.0, 3.0, 4.0, 5.0],
                                     [6.0, 1.0, 3.0, 1.0]])
INVESTMENT_FIRST_STAGE = np.array([-1.5, -4.0])
T_MATRICES = {
    "I": np.eye(2),
    "T": np.array([[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]]),
}


def gen_investment(S: int, t_choice: str = "I", z_upper: int = 5) -> TwoBlockMilp:
    """Two-stage investment planning with an S x S scenario grid.

    First stage: z integer in [0, z_upper]^2 with objective (-1.5, -4).
    Scenario (s1, s2) has demand h = (5 + 10(s1-1)/(S-1), 5 + 10(s2-1)/(S-1))
    and recourse  min (-16,-19,-23,-28)'x / S^2  over binary x with
    W x <= h - T y, where y is the scenario's copy of z.  Copies couple
    through y - z = 0, so A is block-diagonal and B stacks -I per scenario.
    Block variable order: x (4 binary), y (2 continuous), s (2 slack).
    """
    if S < 2:
        raise ValueError("S must be at least 2")
    T = T_MATRICES[t_choice]
    P = S * S
    prob = 1.0 / P
    nb = 8                      # per-block variable count
    n = P * nb
    m = 2 * P

    h_max = 15.0
    c = np.zeros(n)
    A = np.zeros((m, n))
    B = np.zeros((m, 2))
    E = np.zeros((2 * P, n))
    f = np.zeros(2 * P)
    lower = np.zeros(n)
    upper = np.zeros(n)
    integrality = np.zeros(n, bool)
    x_part, row_part = [], []

    for s1 in range(S):
        for s2 in range(S):
            p = s1 * S + s2
            h = np.array([5.0 + 10.0 * s1 / (S - 1), 5.0 + 10.0 * s2 / (S - 1)])
            o = p * nb
            cols = np.arange(o, o + nb)
            rows = np.arange(2 * p, 2 * p + 2)
            c[o : o + 4] = prob * INVESTMENT_RECOURSE_OBJ
            lower[cols] = 0.0
            upper[o : o + 4] = 1.0
            upper[o + 4 : o + 6] = float(z_upper)
            upper[o + 6 : o + 8] = h_max
            integrality[o : o + 4] = True
            # W x + T y + s = h inside the block
            E[rows[0], o : o + 4] = INVESTMENT_RECOURSE_ROWS[0]
            E[rows[1], o : o + 4] = INVESTMENT_RECOURSE_ROWS[1]
            E[np.ix_(rows, cols[4:6])] = T
            E[np.ix_(rows, cols[6:8])] = np.eye(2)
            f[rows] = h
            # coupling y - z = 0
            A[np.ix_(rows, cols[4:6])] = np.eye(2)
            B[rows] = -np.eye(2)
            x_part.append(cols)
            row_part.append(rows)

    X = MilSet.make(n, integrality, E, f, lower, upper)
    Z = MilSet.make(2, [True, True], None, None, [0.0, 0.0],
                    [float(z_upper), float(z_upper)])
    return TwoBlockMilp.make(c, INVESTMENT_FIRST_STAGE, A, B, X, Z,
                             BlockStructure.make(x_part, row_part))


def gen_sslp(m_sites: int, n_clients: int, P: int, seed: int,
             revenue: str = "demand") -> TwoBlockMilp:
    """Server location: place servers (first stage, binary z per site), then
    serve the clients that show up in each scenario.

    Draw order (one splitmix64 stream seeded with `seed`): c_j for each site,
    then d_ij for i in clients, j in sites (i-major), then h^p_i per scenario
    per client (p-major).  c_j ~ U{40..80}, d_ij ~ U{0..25},
    h^p_i ~ Bernoulli(1/2); u = sum(d) / m_sites, overflow penalty 1000,
    revenue q_ij = d_ij (standard benchmark convention) unless
    revenue="zero".  Per-scenario block variables: x (n*m binary, i-major),
    s (m shortage), y (m copies of z), w (m capacity slacks).
    """
    rng = SplitMix64(seed)
    cost = np.array([rng.randint(40, 80) for _ in range(m_sites)], float)
    d = np.array([[rng.randint(0, 25) for _ in range(m_sites)]
                  for _ in range(n_clients)], float)
    h = np.array([[rng.randint(0, 1) for _ in range(n_clients)]
                  for _ in range(P)], float)
    u = d.sum() / m_sites
    q0 = 1000.0
    q = d.copy() if revenue == "demand" else np.zeros_like(d)
    prob = 1.0 / P

    nb = n_clients * m_sites + 3 * m_sites
    n = P * nb
    m_coup = P * m_sites
    c = np.zeros(n)
    A = np.zeros((m_coup, n))
    B = np.zeros((m_coup, m_sites))
    eq_rows, eq_rhs = [], []
    lower = np.zeros(n)
    upper = np.zeros(n)
    integrality = np.zeros(n, bool)
    x_part, row_part = [], []

    for p in range(P):
        o = p * nb
        ox, osh, oy, ow = o, o + n_clients * m_sites, o + n_clients * m_sites + m_sites, \
            o + n_clients * m_sites + 2 * m_sites
        cols = np.arange(o, o + nb)
        rows = np.arange(p * m_sites, (p + 1) * m_sites)
        upper[ox : ox + n_clients * m_sites] = 1.0
        integrality[ox : ox + n_clients * m_sites] = True
        upper[osh : osh + m_sites] = d.sum(axis=0)            # shortage cap
        upper[oy : oy + m_sites] = 1.0
        upper[ow : ow + m_sites] = u + d.sum(axis=0)          # capacity slack cap
        for j in range(m_sites):
            c[osh + j] = prob * q0
            for i in range(n_clients):
                c[ox + i * m_sites + j] = -prob * q[i, j]
        # capacity: sum_i d_ij x_ij - u y_j - s_j + w_j = 0
        for j in range(m_sites):
            row = np.zeros(n)
            for i in range(n_clients):
                row[ox + i * m_sites + j] = d[i, j]
            row[oy + j] = -u
            row[osh + j] = -1.0
            row[ow + j] = 1.0
            eq_rows.append(row)
            eq_rhs.append(0.0)
        # assignment: sum_j x_ij = h^p_i
        for i in range(n_clients):
            row = np.zeros(n)
            row[ox + i * m_sites : ox + (i + 1) * m_sites] = 1.0
            eq_rows.append(row)
            eq_rhs.append(h[p, i])
        # coupling y - z = 0
        for j in range(m_sites):
            A[rows[j], oy + j] = 1.0
            B[rows[j], j] = -1.0
        x_part.append(cols)
        row_part.append(rows)

    X = MilSet.make(n, integrality, np.array(eq_rows), np.array(eq_rhs), lower, upper)
    Z = MilSet.make(m_sites, np.ones(m_sites, bool), None, None,
                    np.zeros(m_sites), np.ones(m_sites))
    return TwoBlockMilp.make(np.array(c), cost, A, B, X, Z,
                             BlockStructure.make(x_part, row_part))


def gen_random_structured(P: int, per_block_dim: int = 50, int_count: int = 30,
                          eq_rows: int = 30, copies: int = 3, seed: int = 0,
                          g_slack: int = 50) -> TwoBlockMilp:
    """Random block-angular MILP with a planted feasible point.

    Per block p, the draw order is: E_p entries (row-major), c_p entries,
    planted point coordinates (integer coordinates first, copied ones from
    {0,1}, the rest from {0,1,2}, then continuous coordinates uniform on
    [0,2]).  After all blocks, G entries (row-major).  Then f_p = E_p xbar_p
    and h = G zbar with zbar the copied coordinates, so (xbar, zbar) is
    feasible by construction.  Coupling rows read -x_pi + z_pi = 0 for each
    copied coordinate; the z objective is zero.
    """
    if copies > int_count:
        raise ValueError("copied coordinates must be integer coordinates")
    if eq_rows >= per_block_dim:
        raise ValueError("eq_rows must leave continuous freedom")
    dz = copies * P
    if dz < g_slack:
        raise ValueError("copies * P must cover g_slack")
    rng = SplitMix64(seed)
    E_all, c_all, xbar_all = [], [], []
    for _ in range(P):
        E = np.array([[rng.normal() for _ in range(per_block_dim)] for _ in range(eq_rows)])
        cb = np.array([rng.normal() for _ in range(per_block_dim)])
        xb = np.zeros(per_block_dim)
        for i in range(int_count):
            xb[i] = rng.randint(0, 1) if i < copies else rng.randint(0, 2)
        for i in range(int_count, per_block_dim):
            xb[i] = 2.0 * rng.uniform()
        E_all.append(E)
        c_all.append(cb)
        xbar_all.append(xb)
    G = np.array([[rng.normal() for _ in range(dz)] for _ in range(dz - g_slack)])

    n = P * per_block_dim
    m = dz
    c = np.concatenate(c_all)
    A = np.zeros((m, n))
    B = np.zeros((m, dz))
    E = np.zeros((P * eq_rows, n))
    f = np.zeros(P * eq_rows)
    lower = np.zeros(n)
    upper = np.full(n, 2.0)
    integrality = np.zeros(n, bool)
    zbar = np.zeros(dz)
    x_part, row_part = [], []
    for p in range(P):
        o = p * per_block_dim
        cols = np.arange(o, o + per_block_dim)
        integrality[o : o + int_count] = True
        E[p * eq_rows : (p + 1) * eq_rows, cols] = E_all[p]
        f[p * eq_rows : (p + 1) * eq_rows] = E_all[p] @ xbar_all[p]
        rows = np.arange(p * copies, (p + 1) * copies)
        for i in range(copies):
            A[rows[i], o + i] = -1.0
            B[rows[i], p * copies + i] = 1.0
            zbar[p * copies + i] = xbar_all[p][i]
        x_part.append(cols)
        row_part.append(rows)

    X = MilSet.make(n, integrality, E, f, lower, upper)
    Z = MilSet.make(dz, np.ones(dz, bool), G, G @ zbar, np.zeros(dz), np.ones(dz))
    problem = TwoBlockMilp.make(c, np.zeros(dz), A, B, X, Z,
                                BlockStructure.make(x_part, row_part))
    return problem


def planted_point(problem_seed_args: tuple) -> tuple:
    """Recompute the planted (xbar, zbar) of gen_random_structured by replaying
    the draw order; used by tests."""
    P, per_block_dim, int_count, eq_rows, copies, seed, g_slack = problem_seed_args
    rng = SplitMix64(seed)
    xbar_all = []
    for _ in range(P):
        for _ in range(eq_rows * per_block_dim + per_block_dim):
            rng.normal()
        xb = np.zeros(per_block_dim)
        for i in range(int_count):
            xb[i] = rng.randint(0, 1) if i < copies else rng.randint(0, 2)
        for i in range(int_count, per_block_dim):
            xb[i] = 2.0 * rng.uniform()
        xbar_all.append(xb)
    xbar = np.concatenate(xbar_all)
    zbar = np.concatenate([xb[:copies] for xb in xbar_all])
    return xbar, zbar
