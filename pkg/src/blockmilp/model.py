"""Problem data for two-block MILPs.

A problem is  min c'x + g'z  s.t.  Ax + Bz = 0,  x in X,  z in Z,  where X and
Z are compact mixed-integer-linear sets in equality form over a finite box.
An optional block structure marks A as block-diagonal so the x side separates
into independent per-block subproblems.
"""

import json
from dataclasses import dataclass, field

import numpy as np

FORMAT_TAG = "blockmilp-v1"


def _arr(v, dtype=float) -> np.ndarray:
    a = np.asarray(v, dtype=dtype)
    a.setflags(write=False)
    return a


def _mat(v, ncols: int) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.size == 0:
        a = np.zeros((0, ncols))
    a = a.reshape(-1, ncols) if a.ndim <= 2 else a
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MilSet:
    """Compact mixed-integer-linear set {v in box : E v = f, v_i integral for flagged i}."""

    dim: int
    integrality: np.ndarray      # bool, per variable
    eq_matrix: np.ndarray        # (rows, dim)
    eq_rhs: np.ndarray           # (rows,)
    lower: np.ndarray
    upper: np.ndarray

    @staticmethod
    def make(dim, integrality=None, eq_matrix=None, eq_rhs=None, lower=None, upper=None):
        integrality = np.zeros(dim, bool) if integrality is None else np.asarray(integrality, bool)
        eq_matrix = np.zeros((0, dim)) if eq_matrix is None else np.asarray(eq_matrix, float)
        eq_rhs = np.zeros(0) if eq_rhs is None else np.asarray(eq_rhs, float)
        lower = np.zeros(dim) if lower is None else np.asarray(lower, float)
        upper = np.ones(dim) if upper is None else np.asarray(upper, float)
        s = MilSet(dim, _arr(integrality, bool), _mat(eq_matrix, dim), _arr(eq_rhs),
                   _arr(lower), _arr(upper))
        return s

    def violations(self, name: str) -> list:
        out = []
        for attr, length in (("integrality", self.dim), ("lower", self.dim), ("upper", self.dim)):
            if len(getattr(self, attr)) != length:
                out.append(f"{name}.{attr} has length {len(getattr(self, attr))}, expected {length}")
        if self.eq_matrix.shape[1] != self.dim:
            out.append(f"{name}.eq_matrix has {self.eq_matrix.shape[1]} columns, expected {self.dim}")
        if len(self.eq_rhs) != self.eq_matrix.shape[0]:
            out.append(f"{name}.eq_rhs has length {len(self.eq_rhs)}, "
                       f"expected {self.eq_matrix.shape[0]}")
        for i in range(min(self.dim, len(self.lower), len(self.upper))):
            lo, hi = self.lower[i], self.upper[i]
            if not (np.isfinite(lo) and np.isfinite(hi)):
                out.append(f"unbounded box at {name}[{i}]")
                continue
            if lo > hi:
                out.append(f"empty box at {name}[{i}]: [{lo}, {hi}]")
                continue
            if self.integrality[i] and np.ceil(lo - 1e-9) > np.floor(hi + 1e-9):
                out.append(f"no integer point in box at {name}[{i}]: [{lo}, {hi}]")
        return out

    def rounded_bounds(self):
        """Box with integer bounds pulled inward for integer variables."""
        lo = self.lower.copy()
        hi = self.upper.copy()
        mask = self.integrality
        lo[mask] = np.ceil(lo[mask] - 1e-9)
        hi[mask] = np.floor(hi[mask] + 1e-9)
        return lo, hi


@dataclass(frozen=True)
class BlockStructure:
    """Partition of x columns and coupling rows certifying block-diagonal A."""

    x_partition: tuple      # tuple of index arrays over x columns
    row_partition: tuple    # tuple of index arrays over coupling rows

    @staticmethod
    def make(x_partition, row_partition):
        xp = tuple(_arr(p, int) for p in x_partition)
        rp = tuple(_arr(p, int) for p in row_partition)
        return BlockStructure(xp, rp)

    @property
    def n_blocks(self) -> int:
        return len(self.x_partition)


@dataclass(frozen=True)
class TwoBlockMilp:
    c: np.ndarray
    g: np.ndarray
    A: np.ndarray            # (m, n)
    B: np.ndarray            # (m, d)
    X: MilSet
    Z: MilSet
    blocks: BlockStructure | None = None

    @staticmethod
    def make(c, g, A, B, X, Z, blocks=None):
        c = _arr(c)
        g = _arr(g)
        return TwoBlockMilp(c, g, _mat(A, len(c)), _mat(B, len(g)), X, Z, blocks)

    @property
    def n(self) -> int:
        return len(self.c)

    @property
    def d(self) -> int:
        return len(self.g)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def residual(self, x, z) -> np.ndarray:
        return self.A @ np.asarray(x, float) + self.B @ np.asarray(z, float)

    def objective(self, x, z) -> float:
        return float(self.c @ np.asarray(x, float) + self.g @ np.asarray(z, float))

    def x_eq_rows_of_block(self, p: int) -> np.ndarray:
        """Indices of X.eq_matrix rows supported on block p's columns."""
        cols = self.blocks.x_partition[p]
        E = self.X.eq_matrix
        if E.shape[0] == 0:
            return np.zeros(0, int)
        touched = np.abs(E[:, cols]).sum(axis=1) > 0
        return np.nonzero(touched)[0]


@dataclass
class DualState:
    """Dual pair: (lambda, rho) on the ALM side, (mu, beta) on the ADMM side."""

    multipliers: np.ndarray
    penalty: float
    iteration: int = 0

    def __post_init__(self):
        self.multipliers = np.asarray(self.multipliers, float)
        if not self.penalty > 0:
            raise ValueError("penalty must be positive")


@dataclass
class Iterate:
    x: np.ndarray
    z: np.ndarray
    residual: np.ndarray
    residual_l1: float
    primal_obj: float

    @staticmethod
    def of(problem: TwoBlockMilp, x, z) -> "Iterate":
        x = np.asarray(x, float)
        z = np.asarray(z, float)
        r = problem.residual(x, z)
        return Iterate(x, z, r, float(np.abs(r).sum()), problem.objective(x, z))


# ---------------------------------------------------------------------------
# validation

def validate(problem: TwoBlockMilp) -> list:
    """Return every invariant violation (empty list means the problem is valid)."""
    out = []
    n, d = problem.n, problem.d
    if problem.X.dim != n:
        out.append(f"X.dim {problem.X.dim} != |c| {n}")
    if problem.Z.dim != d:
        out.append(f"Z.dim {problem.Z.dim} != |g| {d}")
    m = problem.A.shape[0]
    if problem.A.shape != (m, n):
        out.append(f"A is {problem.A.shape}, expected ({m}, {n})")
    if problem.B.shape != (m, d):
        out.append(f"B is {problem.B.shape}, expected ({m}, {d})")
    out += problem.X.violations("x")
    out += problem.Z.violations("z")
    if problem.blocks is not None:
        out += _validate_blocks(problem)
    return out


def _validate_blocks(problem: TwoBlockMilp) -> list:
    out = []
    bs = problem.blocks
    n, m = problem.n, problem.A.shape[0]
    if len(bs.x_partition) != len(bs.row_partition):
        out.append("x_partition and row_partition have different block counts")
        return out

    seen = np.zeros(n, int)
    for p, cols in enumerate(bs.x_partition):
        if len(cols) and (cols.min() < 0 or cols.max() >= n):
            out.append(f"x_partition[{p}] has out-of-range column index")
            return out
        seen[cols] += 1
    for j in np.nonzero(seen == 0)[0]:
        out.append(f"uncovered x column {j}")
    for j in np.nonzero(seen > 1)[0]:
        out.append(f"x column {j} assigned to multiple blocks")

    seen_r = np.zeros(m, int)
    for p, rows in enumerate(bs.row_partition):
        if len(rows) and (rows.min() < 0 or rows.max() >= m):
            out.append(f"row_partition[{p}] has out-of-range row index")
            return out
        seen_r[rows] += 1
    for i in np.nonzero(seen_r == 0)[0]:
        out.append(f"uncovered coupling row {i}")
    for i in np.nonzero(seen_r > 1)[0]:
        out.append(f"coupling row {i} assigned to multiple blocks")
    if out:
        return out

    # A must be block-diagonal with respect to the partitions
    col_block = np.empty(n, int)
    for p, cols in enumerate(bs.x_partition):
        col_block[cols] = p
    for p, rows in enumerate(bs.row_partition):
        sub = problem.A[rows]
        bad = np.nonzero(np.abs(sub).sum(axis=0) > 0)[0]
        for j in bad:
            if col_block[j] != p:
                out.append(f"A row block {p} has nonzero in column {j} of block {col_block[j]}")

    # no X equality row may link two distinct x blocks
    E = problem.X.eq_matrix
    for i in range(E.shape[0]):
        touched = {int(col_block[j]) for j in np.nonzero(np.abs(E[i]) > 0)[0]}
        if len(touched) > 1:
            out.append(f"X equality row {i} links x blocks {sorted(touched)}")
    return out


# ---------------------------------------------------------------------------
# derived constants

def derived_constants(problem: TwoBlockMilp) -> dict:
    """Norm and diameter constants used by penalty formulas and cut revalidation.

    K_base is the exact l1-induced norm of B (max absolute column sum).
    ax_norm_bound over-estimates max_{x in box(X)} ||Ax||_1 by interval
    arithmetic; any over-estimate keeps revalidated cuts valid.
    """
    bad = validate(problem)
    if bad:
        raise ValueError("invalid problem: " + "; ".join(bad))
    k_base = float(np.abs(problem.B).sum(axis=0).max()) if problem.B.size else 0.0
    lo, hi = problem.X.lower, problem.X.upper
    row_lo = np.minimum(problem.A * lo, problem.A * hi).sum(axis=1)
    row_hi = np.maximum(problem.A * lo, problem.A * hi).sum(axis=1)
    ax_bound = float(np.maximum(np.abs(row_lo), np.abs(row_hi)).sum()) if problem.A.size else 0.0
    zlo, zhi = problem.Z.lower, problem.Z.upper
    return {
        "K_base": k_base,
        "ax_norm_bound": ax_bound,
        "x_diam_inf": float((hi - lo).max()) if problem.n else 0.0,
        "z_diam_inf": float((zhi - zlo).max()) if problem.d else 0.0,
        "z_radius_l1": float(0.5 * (zhi - zlo).sum()),
        "z_center": 0.5 * (zlo + zhi),
    }


def is_eps_solution(problem: TwoBlockMilp, x, z, eps: float, p_star: float,
                    set_tol: float = 1e-6) -> bool:
    """Check the approximate-solution criterion against a known optimal value:
    membership in X and Z, objective within eps of p_star, l1 residual within eps."""
    x = np.asarray(x, float)
    z = np.asarray(z, float)
    for v, s in ((x, problem.X), (z, problem.Z)):
        if np.any(v < s.lower - set_tol) or np.any(v > s.upper + set_tol):
            return False
        if s.eq_matrix.shape[0] and np.abs(s.eq_matrix @ v - s.eq_rhs).max() > set_tol:
            return False
        if np.any(np.abs(v[s.integrality] - np.round(v[s.integrality])) > set_tol):
            return False
    it = Iterate.of(problem, x, z)
    return it.primal_obj <= p_star + eps + 1e-9 and it.residual_l1 <= eps + 1e-9


# ---------------------------------------------------------------------------
# JSON interchange (schema documented in docs/problem-format.md)

def _set_to_json(s: MilSet) -> dict:
    return {
        "dim": s.dim,
        "integrality": [int(v) for v in s.integrality],
        "E": [list(map(float, row)) for row in s.eq_matrix],
        "f": list(map(float, s.eq_rhs)),
        "lower": list(map(float, s.lower)),
        "upper": list(map(float, s.upper)),
    }


def _set_from_json(obj: dict) -> MilSet:
    return MilSet.make(
        dim=int(obj["dim"]),
        integrality=obj["integrality"],
        eq_matrix=obj["E"],
        eq_rhs=obj["f"],
        lower=obj["lower"],
        upper=obj["upper"],
    )


def to_json(problem: TwoBlockMilp) -> str:
    doc = {
        "format": FORMAT_TAG,
        "c": list(map(float, problem.c)),
        "g": list(map(float, problem.g)),
        "A": [list(map(float, row)) for row in problem.A],
        "B": [list(map(float, row)) for row in problem.B],
        "X": _set_to_json(problem.X),
        "Z": _set_to_json(problem.Z),
    }
    if problem.blocks is not None:
        doc["blocks"] = {
            "x_partition": [list(map(int, p)) for p in problem.blocks.x_partition],
            "row_partition": [list(map(int, p)) for p in problem.blocks.row_partition],
        }
    return json.dumps(doc, indent=1)


def from_json(text: str) -> TwoBlockMilp:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_TAG:
        raise ValueError(f"unsupported problem format: {doc.get('format')!r}")
    blocks = None
    if "blocks" in doc:
        blocks = BlockStructure.make(doc["blocks"]["x_partition"],
                                     doc["blocks"]["row_partition"])
    problem = TwoBlockMilp.make(
        c=doc["c"], g=doc["g"], A=doc["A"], B=doc["B"],
        X=_set_from_json(doc["X"]), Z=_set_from_json(doc["Z"]), blocks=blocks,
    )
    if "b" in doc and np.any(np.asarray(doc["b"], float) != 0):
        problem = homogenize(problem, np.asarray(doc["b"], float))
    return problem


def homogenize(problem: TwoBlockMilp, b: np.ndarray) -> TwoBlockMilp:
    """Fold a nonzero coupling right-hand side Ax + Bz = b into the homogeneous
    form by appending a z component pinned to -1 with column b in B."""
    if len(b) != problem.m:
        raise ValueError("rhs length mismatch")
    Z = problem.Z
    Znew = MilSet.make(
        dim=Z.dim + 1,
        integrality=np.concatenate([Z.integrality, [False]]),
        eq_matrix=np.hstack([Z.eq_matrix, np.zeros((Z.eq_matrix.shape[0], 1))]),
        eq_rhs=Z.eq_rhs,
        lower=np.concatenate([Z.lower, [-1.0]]),
        upper=np.concatenate([Z.upper, [-1.0]]),
    )
    return TwoBlockMilp.make(
        c=problem.c,
        g=np.concatenate([problem.g, [0.0]]),
        A=problem.A,
        B=np.hstack([problem.B, b.reshape(-1, 1)]),
        X=problem.X,
        Z=Znew,
        blocks=problem.blocks,
    )
