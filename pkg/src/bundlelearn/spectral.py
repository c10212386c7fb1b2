"""Eigen-analysis of the co-occurrence information matrix.

The matrix Z = X'X accumulated over consumption doubles as a weighted
adjacency structure on goods. Its leading eigenvector is the popularity
direction (eigenvector centrality of the co-consumption graph), its trailing
eigenvector the correlation direction whose sign pattern splits the goods into
the two maximally anti-correlated groups, and the eigenvalue ratio
kappa = lambda_max / lambda_min measures how lopsided accumulated information
is. Absorbing a unit eigenvector shifts exactly its own eigenvalue by +1 and
leaves every eigenvector unchanged, which yields closed-form one-step kappa
forecasts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np
from numpy.typing import NDArray

from .errors import NotPositiveDefinite, NotSymmetric
from .estimator import RANK_RTOL, _readonly, _symmetrized

# Matrices must be symmetric to this absolute tolerance.
SYMMETRY_ATOL = 1e-9
# Eigenvalues closer than this (relative to lambda_1) form a degenerate cluster.
DEGENERACY_RTOL = 1e-9
# Eigenvector entries below this magnitude count as zero in sign partitions.
PARTITION_ZERO_TOL = 1e-9

AbsorbKind = Literal["popularity_biased", "correlation_breaking"]


@dataclass(frozen=True)
class SpectralSummary:
    """Full eigensystem of an SPD information matrix.

    ``eigenvalues`` are sorted descending and ``eigenvectors[:, i]`` pairs
    with ``eigenvalues[i]``. ``vN`` is the leading (popularity) direction and
    ``vC`` the trailing (correlation) direction, both unit l2 and
    sign-normalized so the largest-magnitude entry is positive (ties resolved
    toward the lowest index). Within a degenerate eigenvalue cluster the
    reported basis is the deterministic one obtained by orthonormalizing the
    projections of the identity columns in index order, and vN/vC are the
    first basis vector of their cluster.
    """

    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64]
    kappa: float
    vN: NDArray[np.float64]
    vC: NDArray[np.float64]

    @property
    def n(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class CorrelationPartition:
    """Spectral bipartition of goods by the sign of their vC entry."""

    side_positive: frozenset[int]
    side_negative: frozenset[int]
    zero_entries: frozenset[int]


class KappaForecast(NamedTuple):
    kappa_next: float
    new_min: float
    new_max: float


def _sign_normalized(v: NDArray[np.float64]) -> NDArray[np.float64]:
    # argmax on |v| returns the first maximal index, which is the tie rule.
    idx = int(np.argmax(np.abs(v)))
    return -v if v[idx] < 0 else v.copy()


def _canonical_subspace_basis(vecs: NDArray[np.float64]) -> NDArray[np.float64]:
    """Deterministic orthonormal basis of span(vecs).

    Gram-Schmidt over the projections of identity columns in index order;
    the projector is basis-invariant, so the output does not depend on the
    arbitrary basis the eigensolver happened to return.
    """
    n, r = vecs.shape
    proj = vecs @ vecs.T
    basis: list[NDArray[np.float64]] = []
    for k in range(n):
        cand = proj[:, k].copy()
        for b in basis:
            cand -= (b @ cand) * b
        norm = float(np.linalg.norm(cand))
        if norm > 1e-8:
            basis.append(cand / norm)
            if len(basis) == r:
                break
    if len(basis) < r:
        # Pathological conditioning; keep the solver's basis (still orthonormal).
        return vecs
    return np.column_stack(basis)


def _clusters(values_desc: NDArray[np.float64]) -> list[tuple[int, int]]:
    """Maximal runs [start, stop) of eigenvalues within the degeneracy tolerance."""
    tol = DEGENERACY_RTOL * max(float(values_desc[0]), 0.0)
    spans: list[tuple[int, int]] = []
    start = 0
    for i in range(1, values_desc.size):
        if values_desc[i - 1] - values_desc[i] >= tol:
            spans.append((start, i))
            start = i
    spans.append((start, values_desc.size))
    return spans


def decompose(info) -> SpectralSummary:
    """Eigendecomposition of a symmetric positive definite matrix.

    Parameters
    ----------
    info : array-like
        Symmetric within 1e-9 (absolute) and positive definite relative to
        the rank tolerance.

    Raises
    ------
    NotSymmetric
        On a non-square or asymmetric input.
    NotPositiveDefinite
        When the smallest eigenvalue is at or below tolerance.
    """
    Z = np.asarray(info, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {Z.shape}")
    if float(np.max(np.abs(Z - Z.T))) > SYMMETRY_ATOL:
        raise NotSymmetric("matrix is not symmetric within 1e-9")
    S = _symmetrized(Z)
    vals_asc, vecs_asc = np.linalg.eigh(S)
    vals = vals_asc[::-1].copy()
    vecs = vecs_asc[:, ::-1].copy()
    tol = RANK_RTOL * max(float(vals[0]), 0.0)
    if vals[-1] <= tol:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {vals[-1]:.3e} at or below tolerance {tol:.3e}"
        )
    for start, stop in _clusters(vals):
        if stop - start > 1:
            vecs[:, start:stop] = _canonical_subspace_basis(vecs[:, start:stop])
    for i in range(vals.size):
        vecs[:, i] = _sign_normalized(vecs[:, i])
    spans = _clusters(vals)
    lead_start = spans[0][0]
    trail_start = spans[-1][0]
    vN = _sign_normalized(vecs[:, lead_start])
    vC = _sign_normalized(vecs[:, trail_start])
    return SpectralSummary(
        eigenvalues=_readonly(vals),
        eigenvectors=_readonly(vecs),
        kappa=float(vals[0] / vals[-1]),
        vN=_readonly(vN),
        vC=_readonly(vC),
    )


def condition_number(info) -> float:
    """lambda_max / lambda_min of an SPD matrix (>= 1)."""
    return decompose(info).kappa


def predict_kappa_after(summary: SpectralSummary, which: AbsorbKind) -> KappaForecast:
    """Closed-form extreme eigenvalues after absorbing vN or vC once.

    Absorbing a unit eigenvector adds exactly one to its own eigenvalue and
    leaves the rest untouched, so popularity-biased absorption lifts
    lambda_max to lambda_max + 1 while correlation-breaking lifts lambda_min,
    capped by the second-smallest eigenvalue (the minimum cannot overtake it).
    With a single good both cases shift the sole eigenvalue and kappa stays 1.
    """
    lam = summary.eigenvalues
    lmax = float(lam[0])
    lmin = float(lam[-1])
    if summary.n == 1:
        bumped = lmax + 1.0
        return KappaForecast(1.0, bumped, bumped)
    if which == "popularity_biased":
        return KappaForecast((lmax + 1.0) / lmin, lmin, lmax + 1.0)
    if which == "correlation_breaking":
        new_min = min(lmin + 1.0, float(lam[-2]))
        return KappaForecast(lmax / new_min, new_min, lmax)
    raise ValueError(f"unknown absorption kind: {which!r}")


def partition_by_correlation(summary: SpectralSummary) -> CorrelationPartition:
    """Split goods by the sign of their vC entry (|entry| < 1e-9 counts as zero)."""
    vc = summary.vC
    pos = frozenset(int(i) for i in np.flatnonzero(vc > PARTITION_ZERO_TOL))
    neg = frozenset(int(i) for i in np.flatnonzero(vc < -PARTITION_ZERO_TOL))
    zero = frozenset(range(summary.n)) - pos - neg
    return CorrelationPartition(pos, neg, zero)


class CentralityRow(NamedTuple):
    good: int
    vn_entry: float
    vc_entry: float


def centrality_report(info) -> list[CentralityRow]:
    """Goods ranked by popularity centrality, descending; ties by index."""
    summary = decompose(info)
    order = np.lexsort((np.arange(summary.n), -summary.vN))
    return [
        CentralityRow(int(i), float(summary.vN[i]), float(summary.vC[i]))
        for i in order
    ]
