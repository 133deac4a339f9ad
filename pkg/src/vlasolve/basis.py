"""Multi-index bookkeeping for truncated Hermite expansions.

A distribution is represented by coefficients on the index set
{alpha in N^D : |alpha| <= M}, stored as a flat contiguous vector in
graded lexicographic order (total degree first, then lexicographic on
the component tuple).  ``MomentBasis`` precomputes the index table plus
the shift maps alpha -> alpha +/- e_d that every kernel needs, so the
hot loops are pure gathers.
"""

from __future__ import annotations

from functools import cached_property, lru_cache
from itertools import product

import numpy as np

__all__ = ["MomentBasis", "get_basis", "index_set"]


def _enumerate(M: int, D: int) -> list[tuple[int, ...]]:
    idx = [alpha for alpha in product(range(M + 1), repeat=D) if sum(alpha) <= M]
    idx.sort(key=lambda a: (sum(a), a))
    return idx


class MomentBasis:
    """Index set and shift tables for expansion degree M in D dimensions.

    Attributes
    ----------
    M, D : int
        Truncation degree (>= 3) and velocity dimension (1, 2 or 3).
    size : int
        Number of retained coefficients, binom(M + D, D).
    indices : (size, D) int ndarray
        Multi-indices in storage order.
    orders : (size,) int ndarray
        Total degree |alpha| per slot.
    down, up : (D, size) int ndarrays
        Position of alpha - e_d respectively alpha + e_d, or -1 when the
        shifted index leaves the set.
    """

    def __init__(self, M: int, D: int):
        if not isinstance(M, (int, np.integer)) or M < 3:
            raise ValueError(f"expansion degree must be an integer >= 3, got {M!r}")
        if D not in (1, 2, 3):
            raise ValueError(f"velocity dimension must be 1, 2 or 3, got {D!r}")
        self.M = int(M)
        self.D = int(D)
        idx = _enumerate(self.M, self.D)
        self.size = len(idx)
        self.indices = np.array(idx, dtype=np.int64)
        self.orders = self.indices.sum(axis=1)
        self._pos = {alpha: p for p, alpha in enumerate(idx)}
        self.down = np.full((self.D, self.size), -1, dtype=np.int64)
        self.up = np.full((self.D, self.size), -1, dtype=np.int64)
        for p, alpha in enumerate(idx):
            for d in range(self.D):
                a = list(alpha)
                a[d] -= 1
                if a[d] >= 0:
                    self.down[d, p] = self._pos[tuple(a)]
                a[d] += 2
                if sum(a) <= self.M:
                    self.up[d, p] = self._pos[tuple(a)]
        self.top_mask = self.orders == self.M

    def position(self, alpha) -> int:
        """Storage slot of a multi-index (KeyError if outside the set)."""
        return self._pos[tuple(int(a) for a in alpha)]

    def unit(self, d: int) -> int:
        """Slot of e_d."""
        return self._pos[tuple(1 if i == d else 0 for i in range(self.D))]

    @cached_property
    def reg_maps(self) -> tuple[np.ndarray, np.ndarray]:
        """Index maps alpha -> alpha - e_d + e_1 and alpha -> alpha - 2 e_d + e_1.

        Shape (D, size) each, -1 where the source index has a negative
        component.  Used by the top-order regularization stencil.
        """
        m1 = np.full((self.D, self.size), -1, dtype=np.int64)
        m2 = np.full((self.D, self.size), -1, dtype=np.int64)
        # built from the final index, not by composing single shifts: for
        # d along the x-axis the net index alpha - e_d + e_1 equals alpha
        # and must stay valid even when alpha_d = 0
        for i, alpha in enumerate(self.indices):
            for d in range(self.D):
                for hops, m in ((1, m1), (2, m2)):
                    tgt = list(alpha)
                    tgt[d] -= hops
                    tgt[0] += 1
                    if tgt[d] >= 0 and sum(tgt) <= self.M:
                        m[d, i] = self._pos[tuple(tgt)]
        return m1, m2

    def __repr__(self) -> str:  # pragma: no cover
        return f"MomentBasis(M={self.M}, D={self.D}, size={self.size})"


@lru_cache(maxsize=None)
def get_basis(M: int, D: int) -> MomentBasis:
    """Shared MomentBasis instances; construction is O(size * D)."""
    return MomentBasis(M, D)


def index_set(M: int, D: int) -> list[tuple[int, ...]]:
    """Graded lexicographic enumeration of {|alpha| <= M} in N^D."""
    return [tuple(int(a) for a in row) for row in get_basis(M, D).indices]


def take_shift(coeffs: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Gather coefficients along the last axis through a shift map.

    Slots where idx < 0 read as zero (the "coefficients vanish outside
    the index set" convention).
    """
    gap = idx < 0
    out = coeffs[..., np.where(gap, 0, idx)]
    if gap.any():
        out[..., gap] = 0.0
    return out
