"""Bundle construction against a known estimation error.

Given the current error delta = beta_hat - beta, bundles orthogonal to delta
generate zero expected surprise and freeze learning; two-good bundles mixing
an over- and an under-estimated good can even push both estimates up at once
when their mixing ratio falls inside a covariance-determined window. With a
misspecified intercept the no-learning set is the same hyperplane shifted off
the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from .errors import AnchorParallel, SignViolation, ZeroBias
from .estimator import as_bundle

Norm = Literal["l2", "sum"]

# Absolute scale for treating a bias vector as zero.
ZERO_TOL = 1e-12


@dataclass(frozen=True)
class JointIncreaseRegion:
    """Open interval of ratios x_j / x_i under which both estimates rise.

    When the two goods are positively correlated in W the region is the
    sentinel (0, inf): any positive mix works.
    """

    lower: float
    upper: float
    nonempty: bool


def _sign_normalized(v: NDArray[np.float64]) -> NDArray[np.float64]:
    idx = int(np.argmax(np.abs(v)))
    return -v if v[idx] < 0 else v


def _scaled(x: NDArray[np.float64], norm: Norm) -> NDArray[np.float64]:
    if norm == "l2":
        return x / float(np.linalg.norm(x))
    if norm == "sum":
        total = float(np.sum(x))
        if abs(total) < ZERO_TOL * max(1.0, float(np.linalg.norm(x))):
            raise ValueError("entries sum to zero; sum normalization undefined")
        return x / total
    raise ValueError(f"unknown norm: {norm!r}")


def orthogonal_bundle(delta, anchor=None, norm: Norm = "l2") -> NDArray[np.float64]:
    """A bundle orthogonal to the estimation error (zero expected surprise).

    With ``anchor`` given, returns the normalized projection of the anchor
    onto the orthogonal complement of ``delta``, keeping the anchor's
    orientation. Otherwise uses the canonical sparse choice: swap and negate
    the two largest-magnitude entries of delta (ties to the lowest index),
    zero the rest, then sign-normalize. Output is unit l2 by default;
    norm="sum" rescales entries to sum to one instead.

    Raises ZeroBias when delta is the zero vector (every bundle is trivially
    orthogonal, so there is nothing to design) and AnchorParallel when the
    anchor has no component off delta's line. Needs n >= 2: in one dimension
    no nonzero orthogonal bundle exists.
    """
    d = as_bundle(delta)
    if float(np.max(np.abs(d))) <= ZERO_TOL:
        raise ZeroBias("estimation error is zero; orthogonality is vacuous")
    n = d.size
    if n < 2:
        raise ValueError("no nonzero orthogonal bundle exists in one dimension")
    if anchor is not None:
        a = as_bundle(anchor, n)
        x = a - (float(a @ d) / float(d @ d)) * d
        if float(np.linalg.norm(x)) <= 1e-12 * max(1.0, float(np.linalg.norm(a))):
            raise AnchorParallel("anchor is parallel to the estimation error")
        return _scaled(x, norm)
    order = np.argsort(-np.abs(d), kind="stable")
    i, j = sorted((int(order[0]), int(order[1])))
    x = np.zeros(n)
    x[i] = d[j]
    x[j] = -d[i]
    return _scaled(_sign_normalized(x), norm)


def two_good_orthogonal(delta_i: float, delta_j: float) -> float:
    """No-learning mixing ratio x_j / x_i for one over- and one under-estimated good.

    Requires delta_i > 0 and delta_j < 0; the positive ratio -delta_i/delta_j
    makes (x_i, ratio * x_i) exactly orthogonal to (delta_i, delta_j).
    """
    if not (delta_i > 0 and delta_j < 0):
        raise SignViolation(
            f"need delta_i > 0 and delta_j < 0, got ({delta_i}, {delta_j})"
        )
    return -float(delta_i) / float(delta_j)


def joint_increase_region(cov, i: int, j: int) -> JointIncreaseRegion:
    """Ratio window |w_ij|/w_jj < x_j/x_i < w_ii/|w_ij| for a joint increase.

    Inside it, a positive two-good bundle with positive expected surprise
    raises both estimates. Nonnegative w_ij yields the sentinel (0, inf).
    Always nonempty for a positive definite covariance.
    """
    W = np.asarray(cov, dtype=float)
    if i == j:
        raise ValueError("need two distinct goods")
    w_ij = float(W[i, j])
    if w_ij >= 0.0:
        return JointIncreaseRegion(0.0, math.inf, True)
    lower = abs(w_ij) / float(W[j, j])
    upper = float(W[i, i]) / abs(w_ij)
    return JointIncreaseRegion(lower, upper, lower < upper)


def companion_good(
    cov, delta, target: int, objective: Literal["raise", "lower"] = "raise"
) -> int:
    """Best single good to consume in order to move the target's estimate.

    Offering good j alone drifts the target's estimate by
    -w_{j,target} * delta_j / (1 + w_jj) in expectation, so raising the
    target means minimizing the score w_{j,target} * delta_j / (1 + w_jj)
    over j (the target itself included), and lowering means maximizing it.
    Ties resolve to the lowest index.
    """
    W = np.asarray(cov, dtype=float)
    d = as_bundle(delta, W.shape[0])
    scores = W[:, target] / (1.0 + np.diag(W)) * d
    if objective == "raise":
        return int(np.argmin(scores))
    if objective == "lower":
        return int(np.argmax(scores))
    raise ValueError(f"unknown objective: {objective!r}")


def shifted_orthogonal(delta, intercept_gap: float, z) -> NDArray[np.float64]:
    """No-learning bundle when the learner's intercept is off by ``intercept_gap``.

    With gap = alpha_hat - alpha, expected surprise at bundle x is
    -gap - x'delta, so the no-learning set is the hyperplane shifted to
    x = -(gap / ||delta||^2) delta + z with z orthogonal to delta. The output
    is not renormalized: scaling would leave the shifted hyperplane.

    Raises ZeroBias when delta = 0 and gap != 0 (the surprise is then the
    constant -gap and no bundle can silence it). When both are zero any
    bundle works and ``z`` is returned unchanged.
    """
    d = as_bundle(delta)
    zv = as_bundle(z, d.size)
    nd2 = float(d @ d)
    if nd2 <= ZERO_TOL * ZERO_TOL:
        if intercept_gap != 0.0:
            raise ZeroBias(
                "zero estimation error with a nonzero intercept gap: "
                "expected surprise is constant and cannot be designed away"
            )
        return zv.copy()
    tol = 1e-10 * max(1.0, float(np.linalg.norm(zv)) * float(np.linalg.norm(d)))
    if abs(float(zv @ d)) > tol:
        raise ValueError("z must be orthogonal to delta")
    return -(float(intercept_gap) / nd2) * d + zv
