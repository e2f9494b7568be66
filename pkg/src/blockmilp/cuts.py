"""Nonconvex minorants of the x-side value function.

Two families: reverse-norm cuts  v - K ||z - anchor||_1  and augmented-
Lagrangian cuts  v + mu'B(z - anchor) - beta ||B(z - anchor)||_1.  Both are
exact at their anchor in the degenerate mu = 0 case; AL cuts trade anchor
tightness for a rotation term.  Cuts remember the dual state they were born
under so the outer loop can shift them to stay valid after a dual update.
"""

from dataclasses import dataclass, replace

import numpy as np

REVERSE_NORM = "reverse_norm"
AUG_LAG = "aug_lag"


@dataclass(frozen=True)
class Cut:
    kind: str
    anchor: np.ndarray            # z-point the cut was generated at
    constant: float               # value at the anchor (before the linear term)
    modulus: float                # K for reverse-norm, beta for AL
    linear: np.ndarray | None     # mu for AL cuts, None for reverse-norm
    born_dual: tuple              # (multipliers, penalty) at generation time
    abs_dim: int                  # d for reverse-norm, m for AL
    abs_matrix: np.ndarray | None = None   # matrix applied to z - anchor; None = identity

    def __call__(self, z) -> float:
        z = np.asarray(z, float)
        w = z - self.anchor
        if self.abs_matrix is not None:
            w = self.abs_matrix @ w
        val = self.constant - self.modulus * float(np.abs(w).sum())
        if self.linear is not None:
            val += float(self.linear @ w)
        return val

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "anchor": list(map(float, self.anchor)),
            "constant": float(self.constant),
            "modulus": float(self.modulus),
            "linear": None if self.linear is None else list(map(float, self.linear)),
        }


def reverse_norm_cut(anchor, q_value: float, k: float, born_dual=None) -> Cut:
    """Minorant q_value - k ||z - anchor||_1 of any k-Lipschitz function that
    takes value q_value at the anchor; tight there by construction."""
    if k < 0:
        raise ValueError("Lipschitz modulus must be nonnegative")
    anchor = np.asarray(anchor, float)
    return Cut(REVERSE_NORM, anchor, float(q_value), float(k), None,
               born_dual if born_dual is not None else (np.zeros(0), 0.0),
               abs_dim=len(anchor), abs_matrix=None)


def al_cut(anchor, p_value: float, mu, beta: float, B, born_dual=None) -> Cut:
    """Minorant p_value + mu'B(z-anchor) - beta ||B(z-anchor)||_1, valid for
    the penalty value function at level rho whenever beta + ||mu||_inf <= rho."""
    if beta < 0:
        raise ValueError("AL cut weight must be nonnegative")
    anchor = np.asarray(anchor, float)
    mu = np.asarray(mu, float)
    B = np.asarray(B, float)
    return Cut(AUG_LAG, anchor, float(p_value), float(beta), mu,
               born_dual if born_dual is not None else (mu, beta),
               abs_dim=B.shape[0], abs_matrix=B)


def revalidate(cut: Cut, new_dual, ax_norm_bound: float, b_norm: float) -> Cut:
    """Shift a reverse-norm cut so it stays a valid minorant after the dual
    moves from its birth pair (lam, rho) to (lam_new, rho_new):  the constant
    drops by ||lam_new - lam||_inf * max_X ||Ax||_1 and the modulus becomes
    rho_new * ||B||_1.  Only derived for nondecreasing penalties."""
    if cut.kind != REVERSE_NORM:
        raise ValueError("only reverse-norm cuts are revalidated")
    lam_new, rho_new = new_dual
    lam_old, rho_old = cut.born_dual
    if rho_new < rho_old - 1e-12:
        raise ValueError("revalidation requires a nondecreasing penalty")
    lam_new = np.asarray(lam_new, float)
    lam_old = np.asarray(lam_old, float)
    shift = float(np.abs(lam_new - lam_old).max(initial=0.0)) * ax_norm_bound
    return replace(cut,
                   constant=cut.constant - shift,
                   modulus=rho_new * b_norm,
                   born_dual=(lam_new, rho_new))


class CutPool:
    """Insertion-ordered pool with optional capacity; eviction drops oldest first."""

    def __init__(self, capacity: int | None = None):
        if capacity is not None and capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._cuts: list[Cut] = []

    def add(self, cut: Cut):
        self._cuts.append(cut)
        if self.capacity is not None and len(self._cuts) > self.capacity:
            del self._cuts[: len(self._cuts) - self.capacity]

    def replace_all(self, cuts):
        self._cuts = list(cuts)

    def __iter__(self):
        return iter(self._cuts)

    def __len__(self):
        return len(self._cuts)

    def __getitem__(self, i):
        return self._cuts[i]
