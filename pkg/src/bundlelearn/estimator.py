"""Least-squares preference estimation over consumption histories.

A consumer experiences bundles x_t, observes utilities u_t = alpha + x_t'beta
+ eps_t, and estimates beta by ordinary least squares. The estimator state is
the pair (Z_t, W_t) of information and covariance matrices plus the current
estimate; it can be produced in one shot from a history (``batch_ols``) or
folded forward one observation at a time (``recursive_update``) via a rank-one
update of W, with both routes agreeing to floating-point accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionMismatch, RankDeficient, StateNotFullRank

# Default prior variance scale for ridge initialization.
DEFAULT_RIDGE = 1e8
# Relative eigenvalue threshold below which Z counts as rank deficient.
RANK_RTOL = 1e-10
# Covariance is re-inverted from Z whenever count hits a multiple of this,
# bounding drift of the rank-one update chain over long horizons.
REINVERT_EVERY = 256

Bundle = NDArray[np.float64]


def as_bundle(x, n: int | None = None) -> Bundle:
    """Validate and coerce ``x`` to a finite 1-D float vector.

    Raises DimensionMismatch when ``n`` is given and does not match, and
    ValueError on NaN or infinite entries.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        arr = arr.ravel()
    if arr.size == 0:
        raise DimensionMismatch("bundle must have at least one entry")
    if n is not None and arr.size != n:
        raise DimensionMismatch(f"bundle has {arr.size} entries, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("bundle entries must be finite")
    return arr


def _readonly(arr: NDArray[np.float64]) -> NDArray[np.float64]:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def _symmetrized(mat: NDArray[np.float64]) -> NDArray[np.float64]:
    return 0.5 * (mat + mat.T)


@dataclass(frozen=True)
class History:
    """An ordered consumption record: t bundles, t utilities, known baseline.

    ``bundles`` is the t x n design matrix with one bundle per row;
    ``baseline`` is the known intercept alpha in utility units.
    """

    bundles: NDArray[np.float64]
    utilities: NDArray[np.float64]
    baseline: float = 0.0

    def __post_init__(self) -> None:
        X = np.atleast_2d(np.asarray(self.bundles, dtype=float))
        u = np.asarray(self.utilities, dtype=float).ravel()
        if X.shape[0] != u.shape[0]:
            raise DimensionMismatch(
                f"{X.shape[0]} bundles but {u.shape[0]} utilities"
            )
        if X.shape[0] == 0:
            raise DimensionMismatch("history must contain at least one observation")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(u))):
            raise ValueError("history entries must be finite")
        object.__setattr__(self, "bundles", _readonly(X))
        object.__setattr__(self, "utilities", _readonly(u))

    @property
    def t(self) -> int:
        return self.bundles.shape[0]

    @property
    def n(self) -> int:
        return self.bundles.shape[1]

    def extended(self, x, u: float) -> "History":
        """A new history with one observation appended."""
        row = as_bundle(x, self.n)
        return History(
            np.vstack([self.bundles, row]),
            np.append(self.utilities, float(u)),
            self.baseline,
        )


@dataclass(frozen=True)
class PrecisionState:
    """The learner's entire memory after ``count`` observations.

    ``info`` is Z = X'X (plus the ridge seed when initialized diffusely);
    ``cov`` is W = Z^-1 and is only meaningful when ``full_rank``. ``ridge``
    records the prior variance scale rho used at initialization, 0.0 for
    exact least-squares states. Instances are value objects: operations return
    new states and never mutate.
    """

    info: NDArray[np.float64]
    cov: NDArray[np.float64] | None
    estimate: NDArray[np.float64]
    count: int
    full_rank: bool
    ridge: float = 0.0

    def __post_init__(self) -> None:
        info = np.asarray(self.info, dtype=float)
        est = np.asarray(self.estimate, dtype=float).ravel()
        if info.shape != (est.size, est.size):
            raise DimensionMismatch(
                f"info is {info.shape}, estimate has {est.size} entries"
            )
        object.__setattr__(self, "info", _readonly(info))
        object.__setattr__(self, "estimate", _readonly(est))
        if self.cov is not None:
            cov = np.asarray(self.cov, dtype=float)
            if cov.shape != info.shape:
                raise DimensionMismatch("cov and info shapes differ")
            object.__setattr__(self, "cov", _readonly(cov))

    @property
    def n(self) -> int:
        return self.estimate.size


@dataclass(frozen=True)
class UpdateResult:
    """One recursive step: surprise, gain vector, predicted variance, new state."""

    surprise: float
    gain: NDArray[np.float64]
    predicted_variance: float
    new_state: PrecisionState


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian utility noise eps ~ N(0, sigma2), drawn from a seeded PCG64 stream.

    sigma2 = 0 bypasses sampling entirely, so noiseless runs are exactly
    deterministic and consume no random numbers.
    """

    sigma2: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")


def numerical_rank(info: NDArray[np.float64]) -> tuple[int, float]:
    """Numerical rank of a symmetric PSD matrix and the tolerance used.

    Rank counts eigenvalues above RANK_RTOL times the largest eigenvalue.
    """
    eigs = np.linalg.eigvalsh(_symmetrized(np.asarray(info, dtype=float)))
    tol = RANK_RTOL * max(float(eigs[-1]), 0.0)
    return int(np.count_nonzero(eigs > tol)), tol


def batch_ols(history: History) -> PrecisionState:
    """Ordinary least squares on a full history with known intercept.

    Parameters
    ----------
    history : History
        Nonempty record whose design matrix X must satisfy the rank
        tolerance (smallest eigenvalue of X'X above RANK_RTOL times the
        largest).

    Returns
    -------
    PrecisionState
        estimate = (X'X)^-1 X'(u - alpha), cov = (X'X)^-1, full_rank True.

    Raises
    ------
    RankDeficient
        When X'X fails the rank tolerance; carries the numerical rank so the
        caller can fall back to collinearity reduction or ridge init.
    """
    X = history.bundles
    t, n = X.shape
    info = _symmetrized(X.T @ X)
    rank, _ = numerical_rank(info)
    if rank < n:
        raise RankDeficient(rank, n)
    cov = _symmetrized(np.linalg.inv(info))
    estimate = cov @ (X.T @ (history.utilities - history.baseline))
    return PrecisionState(
        info=info, cov=cov, estimate=estimate, count=t, full_rank=True, ridge=0.0
    )


def batch_ols_free_intercept(history: History) -> tuple[PrecisionState, float]:
    """Least squares with the intercept estimated rather than known.

    Demeans bundles and utilities (the projection M = I - 11'/t), regresses
    the demeaned utilities on the demeaned design, and recovers the intercept
    as alpha_hat = mean(u) - mean(x)'beta_hat. ``history.baseline`` is
    ignored. The returned state's ``info`` is the demeaned matrix X'MX, whose
    full rank additionally requires t >= n + 1.
    """
    X = history.bundles
    u = history.utilities
    t, n = X.shape
    xbar = X.mean(axis=0)
    ubar = float(u.mean())
    Xc = X - xbar
    info = _symmetrized(Xc.T @ Xc)
    rank, _ = numerical_rank(info)
    if rank < n:
        raise RankDeficient(rank, n)
    cov = _symmetrized(np.linalg.inv(info))
    estimate = cov @ (Xc.T @ (u - ubar))
    alpha_hat = ubar - float(xbar @ estimate)
    state = PrecisionState(
        info=info, cov=cov, estimate=estimate, count=t, full_rank=True, ridge=0.0
    )
    return state, alpha_hat


def recursive_update(
    state: PrecisionState,
    x,
    u: float,
    alpha: float = 0.0,
    sigma2: float = 1.0,
) -> UpdateResult:
    """Fold one observation into a full-rank state.

    Implements the rank-one recursion: with W the pre-update covariance and
    surprise du = u - (alpha + x'beta_hat),

        gain  = W x / (1 + x'W x)
        beta' = beta_hat + gain * du
        Z'    = Z + x x'
        W'    = W - (W x)(W x)' / (1 + x'W x)

    The covariance is refreshed by direct inversion of Z' every
    REINVERT_EVERY observations to bound drift of the update chain.

    Parameters
    ----------
    state : PrecisionState
        Must be full rank.
    x : array-like
        The consumed bundle.
    u : float
        Realized utility.
    alpha : float
        The intercept the learner believes in (the true one unless modelling
        a misspecified intercept).
    sigma2 : float
        Noise variance used only to report predicted_variance = sigma2 * x'Wx.

    Raises
    ------
    StateNotFullRank
        When the state has no valid covariance.
    """
    if not state.full_rank or state.cov is None:
        raise StateNotFullRank("recursive_update needs a full-rank state")
    xv = as_bundle(x, state.n)
    W = state.cov
    Wx = W @ xv
    quad = float(xv @ Wx)
    denom = 1.0 + quad
    gain = Wx / denom
    surprise = float(u) - (alpha + float(xv @ state.estimate))
    estimate = state.estimate + gain * surprise
    info = _symmetrized(state.info + np.outer(xv, xv))
    count = state.count + 1
    if count % REINVERT_EVERY == 0:
        cov = np.linalg.inv(info)
    else:
        cov = W - np.outer(Wx, Wx) / denom
    cov = _symmetrized(cov)
    new_state = PrecisionState(
        info=info,
        cov=cov,
        estimate=estimate,
        count=count,
        full_rank=True,
        ridge=state.ridge,
    )
    return UpdateResult(
        surprise=surprise,
        gain=_readonly(gain),
        predicted_variance=float(sigma2) * max(quad, 0.0),
        new_state=new_state,
    )


def predict_utility(
    state: PrecisionState, x, alpha: float = 0.0, sigma2: float = 1.0
) -> tuple[float, float]:
    """Predicted utility mean alpha + x'beta_hat and variance sigma2 * x'Wx."""
    if not state.full_rank or state.cov is None:
        raise StateNotFullRank("predict_utility needs a full-rank state")
    xv = as_bundle(x, state.n)
    mean = alpha + float(xv @ state.estimate)
    variance = float(sigma2) * max(float(xv @ state.cov @ xv), 0.0)
    return mean, variance


def estimation_error(
    state: PrecisionState, beta_true
) -> tuple[NDArray[np.float64], float]:
    """Estimation error delta = beta_hat - beta and its squared l2 norm."""
    beta = np.asarray(beta_true, dtype=float).ravel()
    if beta.size != state.n:
        raise DimensionMismatch(
            f"beta_true has {beta.size} entries, state has {state.n}"
        )
    delta = state.estimate - beta
    return delta, float(delta @ delta)


def mse_lower_bound(t: int, n: int, sigma2: float) -> float:
    """The floor sigma2 * n^2 / t on expected MSE for unit-l2 designs.

    Attained exactly by equal-frequency unit singletons (Z = (t/n) I).
    Meaningful once identification is possible, hence requires t >= n.
    """
    if t < n:
        raise ValueError(f"bound needs t >= n, got t={t}, n={n}")
    if n < 1:
        raise ValueError("n must be positive")
    return float(sigma2) * n * n / t


def init_ridge(n: int, rho: float = DEFAULT_RIDGE, beta0=None) -> PrecisionState:
    """Diffuse-start state: info = (1/rho) I, cov = rho I, estimate = beta0.

    A finite-rho stand-in for the flat initialization; estimates converge to
    batch OLS as rho grows once t >= n informative observations are absorbed.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if n < 1:
        raise ValueError("n must be positive")
    if beta0 is None:
        beta0 = np.zeros(n)
    est = as_bundle(beta0, n)
    eye = np.eye(n)
    return PrecisionState(
        info=eye / rho,
        cov=eye * rho,
        estimate=est,
        count=0,
        full_rank=True,
        ridge=float(rho),
    )
