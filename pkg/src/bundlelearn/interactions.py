"""Pairwise-interaction designs and collinearity repair.

Bundles can be augmented with one regressor per unordered pair of goods,
entry x_i * x_j, so complementarity or substitution between goods i and j
shows up as the sign of the pair coefficient. Histories made only of
singletons and two-good dummies give the augmented covariance a guaranteed
sparsity pattern: a pair's estimate is entangled with its own two goods and
no other primitive. Perfectly collinear design columns (entities that always
co-occur) are replaced by equal-weight composites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import DegenerateInteraction, SignViolation, SingularAugmentedZ
from .estimator import RANK_RTOL, _readonly, _symmetrized, as_bundle

# Sparsity threshold on covariance entries pairing (i,j) with h outside {i,j}.
SPARSITY_TOL = 1e-9
# Relative tolerance for rank-revealing column filtering.
COLLINEARITY_RTOL = 1e-10


@dataclass(frozen=True)
class AugmentedIndex:
    """Column layout of the augmented design: m primitives then all pairs i < j."""

    m: int
    pairs: tuple[tuple[int, int], ...]
    total: int

    @classmethod
    def for_m(cls, m: int) -> "AugmentedIndex":
        if m < 1:
            raise ValueError("m must be positive")
        pairs = tuple((i, j) for i in range(m) for j in range(i + 1, m))
        return cls(m=m, pairs=pairs, total=m + len(pairs))

    def slot(self, i: int, j: int) -> int:
        """Column index of pair (i, j), i < j, in lexicographic order."""
        if not 0 <= i < j < self.m:
            raise ValueError(f"need 0 <= i < j < {self.m}, got ({i}, {j})")
        offset = i * self.m - i * (i + 1) // 2 + (j - i - 1)
        return self.m + offset


def augment_bundle(x_primitive) -> NDArray[np.float64]:
    """Extend a primitive bundle with products x_i * x_j for every pair i < j."""
    xv = as_bundle(x_primitive)
    m = xv.size
    index = AugmentedIndex.for_m(m)
    out = np.empty(index.total)
    out[:m] = xv
    if m > 1:
        rows, cols = np.triu_indices(m, k=1)
        out[m:] = xv[rows] * xv[cols]
    return out


def orthogonal_quadratic(delta_i: float, delta_j: float, delta_ij: float) -> float:
    """Two-good no-learning share x_i under an interaction coefficient.

    Solves h(x) = delta_i x + delta_j (1 - x) + delta_ij x (1 - x) = 0 for
    the unique root in (0, 1); the companion share is 1 - x. Existence and
    uniqueness follow from h(0) = delta_j < 0 < delta_i = h(1). Requires
    delta_i > 0, delta_j < 0; a zero interaction must use the plain two-good
    ratio instead (DegenerateInteraction).
    """
    if not (delta_i > 0 and delta_j < 0):
        raise SignViolation(
            f"need delta_i > 0 and delta_j < 0, got ({delta_i}, {delta_j})"
        )
    if delta_ij == 0:
        raise DegenerateInteraction("delta_ij = 0: use the interaction-free ratio")

    def h(x: float) -> float:
        return delta_i * x + delta_j * (1.0 - x) + delta_ij * x * (1.0 - x)

    a = -float(delta_ij)
    b = float(delta_i) - float(delta_j) + float(delta_ij)
    c = float(delta_j)
    disc = b * b - 4.0 * a * c
    if disc >= 0.0:
        # Stable closed form: q avoids cancellation between -b and the radical.
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        candidates = [r for r in (q / a, c / q) if 0.0 < r < 1.0]
        if len(candidates) == 1:
            return candidates[0]
    # Floating-point corner: fall back to bisection on the sign change.
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PairHistorySpec:
    """Counts describing a singleton-plus-pairs history.

    ``singles[i]`` is how often good i was consumed alone; ``pair_counts``
    is symmetric with zero diagonal, entry (i, j) counting two-good dummy
    observations of {i, j}. The induced augmented information matrix is
    invertible only when every pair count is at least one.
    """

    singles: NDArray[np.int64]
    pair_counts: NDArray[np.int64]

    def __post_init__(self) -> None:
        s = np.asarray(self.singles, dtype=np.int64).ravel()
        C = np.asarray(self.pair_counts, dtype=np.int64)
        if C.shape != (s.size, s.size):
            raise ValueError("pair_counts must be m x m for m singles")
        if np.any(s < 0) or np.any(C < 0):
            raise ValueError("counts must be nonnegative")
        if np.any(C != C.T):
            raise ValueError("pair_counts must be symmetric")
        if np.any(np.diag(C) != 0):
            raise ValueError("pair_counts diagonal must be zero")
        object.__setattr__(self, "singles", _readonly(s).astype(np.int64))
        object.__setattr__(self, "pair_counts", C.copy())
        self.pair_counts.setflags(write=False)

    @property
    def m(self) -> int:
        return self.singles.size


def singleton_pair_info(spec: PairHistorySpec) -> NDArray[np.float64]:
    """Augmented information matrix of a singleton-plus-pairs history.

    Top-left block: diagonal s_i + sum_j c_ij, off-diagonal c_ij.
    Bottom-right block: diagonal c_ij per pair slot. Cross entries: c_ij in
    the rows/columns of goods i and j only.
    """
    m = spec.m
    index = AugmentedIndex.for_m(m)
    s = spec.singles.astype(float)
    C = spec.pair_counts.astype(float)
    Z = np.zeros((index.total, index.total))
    Z[:m, :m] = C + np.diag(s + C.sum(axis=1))
    for slot, (i, j) in enumerate(index.pairs, start=m):
        c = C[i, j]
        Z[slot, slot] = c
        Z[slot, i] = Z[i, slot] = c
        Z[slot, j] = Z[j, slot] = c
    return Z


def w_sparsity_holds(z_augmented, m: int) -> tuple[bool, float]:
    """Check the pair-to-outside-primitive zeros of W = Z^-1 directly.

    Returns (all such entries below tolerance, worst magnitude found). The
    layout must be the AugmentedIndex one: m primitives then all pairs i < j.
    """
    Z = _symmetrized(np.asarray(z_augmented, dtype=float))
    index = AugmentedIndex.for_m(m)
    if Z.shape != (index.total, index.total):
        raise ValueError(
            f"matrix is {Z.shape}, expected {(index.total, index.total)} for m={m}"
        )
    eigs = np.linalg.eigvalsh(Z)
    if eigs[0] <= RANK_RTOL * max(float(eigs[-1]), 0.0):
        raise SingularAugmentedZ("augmented information matrix is singular")
    W = np.linalg.inv(Z)
    worst = 0.0
    for slot, (i, j) in enumerate(index.pairs, start=m):
        outside = [h for h in range(m) if h != i and h != j]
        if outside:
            worst = max(worst, float(np.max(np.abs(W[slot, outside]))))
    return worst < SPARSITY_TOL, worst


def verify_w_sparsity(spec: PairHistorySpec) -> tuple[bool, float]:
    """Guaranteed-sparsity check for a singleton-plus-pairs history."""
    return w_sparsity_holds(singleton_pair_info(spec), spec.m)


@dataclass(frozen=True)
class CollinearityReduction:
    """How a rank-deficient design was repaired.

    ``kept`` lists original indices carried over unchanged, ``composites``
    the merged classes as (member indices, shared weight 1/len(members)),
    ``dropped`` columns removed as zero or linearly dependent, and ``map``
    the n_original x n_reduced mixing matrix A with X_reduced = X @ A.
    Reduced columns are ordered by the smallest original index they contain.
    """

    kept: tuple[int, ...]
    composites: tuple[tuple[tuple[int, ...], float], ...]
    dropped: tuple[int, ...]
    map: NDArray[np.float64]


def reduce_collinearity(X) -> tuple[NDArray[np.float64], CollinearityReduction]:
    """Replace duplicate-column classes by composites and drop dependent columns.

    Columns equal up to scale (relative tolerance 1e-10) form a class and are
    replaced by their equal-weight average; remaining columns are filtered
    greedily in index order so the reduced design has full column rank.
    """
    Xm = np.atleast_2d(np.asarray(X, dtype=float))
    t, n = Xm.shape
    norms = np.linalg.norm(Xm, axis=0)
    scale = float(norms.max()) if n else 0.0

    classes: list[list[int]] = []
    reps: list[NDArray[np.float64]] = []
    zero_cols: list[int] = []
    for col in range(n):
        if norms[col] <= COLLINEARITY_RTOL * max(1.0, scale):
            zero_cols.append(col)
            continue
        unit = Xm[:, col] / norms[col]
        lead = int(np.argmax(np.abs(unit)))
        if unit[lead] < 0:
            unit = -unit
        for k, rep in enumerate(reps):
            if float(np.max(np.abs(unit - rep))) <= COLLINEARITY_RTOL:
                classes[k].append(col)
                break
        else:
            classes.append([col])
            reps.append(unit)

    # Greedy rank filter over class candidates, lowest original index first.
    kept: list[int] = []
    composites: list[tuple[tuple[int, ...], float]] = []
    dropped: list[int] = list(zero_cols)
    columns: list[NDArray[np.float64]] = []
    basis: list[NDArray[np.float64]] = []
    for members in classes:
        weight = 1.0 / len(members)
        cand = Xm[:, members].mean(axis=1)
        resid = cand.copy()
        for b in basis:
            resid -= (b @ resid) * b
        if float(np.linalg.norm(resid)) <= COLLINEARITY_RTOL * float(
            np.linalg.norm(cand)
        ):
            dropped.extend(members)
            continue
        basis.append(resid / float(np.linalg.norm(resid)))
        col = np.zeros(n)
        col[members] = weight
        columns.append(col)
        if len(members) == 1:
            kept.append(members[0])
        else:
            composites.append((tuple(members), weight))

    mapping = np.column_stack(columns) if columns else np.zeros((n, 0))
    reduced = Xm @ mapping
    return reduced, CollinearityReduction(
        kept=tuple(kept),
        composites=tuple(composites),
        dropped=tuple(sorted(dropped)),
        map=_readonly(mapping),
    )
