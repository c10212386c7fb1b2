"""Consumer-provider simulation loop.

Each step the provider's strategy emits a bundle, the environment draws a
utility from the true model, and the consumer folds the observation into her
least-squares state. Robust strategies see only the learner's state and are
structurally denied the truth: the oracle object holding beta_true is simply
never handed to them, and every read it does serve is counted on the
trajectory.

Randomness: all noise flows from one numpy PCG64 generator seeded by the
scenario, drawn in step order (warmup first); sigma2 = 0 skips sampling
entirely, so noiseless runs consume no random numbers at all.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Literal, NamedTuple

import numpy as np
from numpy.typing import NDArray

from . import design
from .errors import AnchorParallel, StateNotFullRank, StrategyInfeasible
from .estimator import (
    DEFAULT_RIDGE,
    History,
    NoiseModel,
    PrecisionState,
    _readonly,
    as_bundle,
    batch_ols,
    init_ridge,
    recursive_update,
)
from .spectral import decompose

# Estimate drift below this counts as stasis for trajectory reporting.
DRIFT_TOL = 1e-12


@dataclass(frozen=True)
class RidgeInit:
    """Start from a diffuse ridge state with estimate beta0."""

    beta0: NDArray[np.float64]
    rho: float = DEFAULT_RIDGE


@dataclass(frozen=True)
class WarmupInit:
    """Start by consuming each good once alone (utilities drawn from the true model)."""


InitSpec = "RidgeInit | WarmupInit | PrecisionState"


@dataclass(frozen=True)
class Scenario:
    """Ground truth plus learner initialization for one simulated run.

    ``alpha_hat`` is the intercept the learner believes in; leave None for
    the correctly specified case. ``init`` seeds the estimator: a WarmupInit
    (default, one singleton pass), a RidgeInit, or an explicit full-rank
    PrecisionState.
    """

    beta_true: NDArray[np.float64]
    alpha: float = 0.0
    alpha_hat: float | None = None
    noise: NoiseModel = field(default_factory=NoiseModel)
    horizon: int = 100
    norm: Literal["l1", "l2"] = "l2"
    init: "RidgeInit | WarmupInit | PrecisionState" = field(
        default_factory=WarmupInit
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta_true", _readonly(as_bundle(self.beta_true)))
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.norm not in ("l1", "l2"):
            raise ValueError(f"unknown norm: {self.norm!r}")

    @property
    def n(self) -> int:
        return self.beta_true.size


class StrategyKind(enum.Enum):
    SINGLE_ROUND_ROBIN = "single_round_robin"
    POPULARITY_BIASED = "popularity_biased"
    CORRELATION_BREAKING = "correlation_breaking"
    ORTHOGONAL_TO_ERROR = "orthogonal_to_error"
    FIXED_BUNDLE = "fixed_bundle"
    TWO_GOOD_TARGETED = "two_good_targeted"


# Strategies that may read the truth oracle; the rest run blind.
COMPLETE_INFO_KINDS = frozenset(
    {StrategyKind.ORTHOGONAL_TO_ERROR, StrategyKind.TWO_GOOD_TARGETED}
)


@dataclass(frozen=True)
class Strategy:
    """Provider behavior: a kind plus its payload.

    ``recompute`` controls whether direction-based strategies (spectral and
    error-orthogonal) refresh their direction every step or freeze the one
    computed at the first step. FixedBundle needs ``bundle``;
    TwoGoodTargeted needs goods ``i`` and ``j`` and optionally a fixed
    ``ratio`` (None recomputes the no-learning ratio from the current error
    each step, which reads the oracle).
    """

    kind: StrategyKind
    recompute: bool = True
    bundle: NDArray[np.float64] | None = None
    i: int | None = None
    j: int | None = None
    ratio: float | None = None


@dataclass(frozen=True)
class Trajectory:
    """Per-step learning record of one run; arrays indexed by step."""

    scenario: Scenario
    strategy: Strategy
    bundles: NDArray[np.float64]
    utilities: NDArray[np.float64]
    surprises: NDArray[np.float64]
    estimates: NDArray[np.float64]
    mse: NDArray[np.float64]
    kappa: NDArray[np.float64]
    lambda_min: NDArray[np.float64]
    final_state: PrecisionState
    infeasible_steps: tuple[int, ...]
    oracle_reads: int
    first_stasis: int | None

    def __len__(self) -> int:
        return self.utilities.size


class TruthOracle:
    """Counted access to beta_true for complete-information strategies."""

    def __init__(self, beta_true: NDArray[np.float64]) -> None:
        self._beta = beta_true
        self.reads = 0

    @property
    def beta(self) -> NDArray[np.float64]:
        self.reads += 1
        return self._beta

    def delta(self, estimate: NDArray[np.float64]) -> NDArray[np.float64]:
        self.reads += 1
        return estimate - self._beta


def _normalized(x: NDArray[np.float64], norm: str) -> NDArray[np.float64]:
    size = float(np.linalg.norm(x, 1 if norm == "l1" else 2))
    return x / size


def _validate_strategy(strategy: Strategy, n: int) -> None:
    if strategy.kind is StrategyKind.FIXED_BUNDLE:
        if strategy.bundle is None:
            raise StrategyInfeasible("FixedBundle needs a bundle payload")
        b = as_bundle(strategy.bundle, n)
        if float(np.max(np.abs(b))) == 0.0:
            raise StrategyInfeasible("FixedBundle payload is the zero vector")
    if strategy.kind is StrategyKind.TWO_GOOD_TARGETED:
        if strategy.i is None or strategy.j is None:
            raise StrategyInfeasible("TwoGoodTargeted needs goods i and j")
        if not (0 <= strategy.i < n and 0 <= strategy.j < n):
            raise StrategyInfeasible("TwoGoodTargeted goods out of range")
        if strategy.i == strategy.j:
            raise StrategyInfeasible("TwoGoodTargeted goods must differ")


def _unit(n: int, i: int) -> NDArray[np.float64]:
    x = np.zeros(n)
    x[i] = 1.0
    return x


def run(scenario: Scenario, strategy: Strategy) -> Trajectory:
    """Simulate ``scenario.horizon`` provider steps under ``strategy``.

    Deterministic given the scenario seed. Per-step degeneracies (for
    example an exactly zero estimation error under OrthogonalToError) fall
    back to a unit bundle and flag the step; structurally impossible
    configurations raise StrategyInfeasible up front.
    """
    n = scenario.n
    beta = scenario.beta_true
    alpha_belief = (
        scenario.alpha if scenario.alpha_hat is None else scenario.alpha_hat
    )
    sigma2 = scenario.noise.sigma2
    sigma = math.sqrt(sigma2)
    rng = np.random.default_rng(scenario.noise.seed)

    def draw() -> float:
        return float(rng.normal(0.0, sigma)) if sigma2 > 0 else 0.0

    _validate_strategy(strategy, n)

    init = scenario.init
    if isinstance(init, PrecisionState):
        if init.n != n:
            raise StrategyInfeasible("init state dimension does not match scenario")
        if not init.full_rank:
            raise StateNotFullRank("init state must be full rank")
        state = init
    elif isinstance(init, RidgeInit):
        state = init_ridge(n, init.rho, init.beta0)
    else:
        rows = np.eye(n)
        utilities = np.array(
            [scenario.alpha + beta[i] + draw() for i in range(n)]
        )
        state = batch_ols(History(rows, utilities, baseline=alpha_belief))

    oracle = (
        TruthOracle(beta) if strategy.kind in COMPLETE_INFO_KINDS else None
    )
    cached_direction: NDArray[np.float64] | None = None
    prev_bundle: NDArray[np.float64] | None = None

    T = scenario.horizon
    bundles = np.zeros((T, n))
    utilities_out = np.zeros(T)
    surprises = np.zeros(T)
    estimates = np.zeros((T, n))
    mse = np.zeros(T)
    kappa = np.zeros(T)
    lambda_min = np.zeros(T)
    infeasible: list[int] = []
    first_stasis: int | None = None

    for t in range(T):
        flagged = False
        if strategy.kind is StrategyKind.SINGLE_ROUND_ROBIN:
            x = _unit(n, t % n)
        elif strategy.kind in (
            StrategyKind.POPULARITY_BIASED,
            StrategyKind.CORRELATION_BREAKING,
        ):
            if strategy.recompute or cached_direction is None:
                summary = decompose(state.info)
                cached_direction = (
                    summary.vN
                    if strategy.kind is StrategyKind.POPULARITY_BIASED
                    else summary.vC
                )
            x = np.array(cached_direction)
        elif strategy.kind is StrategyKind.ORTHOGONAL_TO_ERROR:
            if strategy.recompute or cached_direction is None:
                delta = oracle.delta(state.estimate)
                if n < 2 or float(np.max(np.abs(delta))) <= DRIFT_TOL:
                    cached_direction = _unit(n, 0)
                    flagged = True
                else:
                    try:
                        cached_direction = design.orthogonal_bundle(
                            delta, anchor=prev_bundle
                        )
                    except AnchorParallel:
                        cached_direction = design.orthogonal_bundle(delta)
            x = np.array(cached_direction)
        elif strategy.kind is StrategyKind.FIXED_BUNDLE:
            x = as_bundle(strategy.bundle, n)
        else:  # TWO_GOOD_TARGETED
            ratio = strategy.ratio
            if ratio is None:
                delta = oracle.delta(state.estimate)
                di, dj = float(delta[strategy.i]), float(delta[strategy.j])
                if di > 0 and dj < 0:
                    ratio = -di / dj
                else:
                    ratio = None
            if ratio is None:
                x = _unit(n, strategy.i)
                flagged = True
            else:
                x = np.zeros(n)
                x[strategy.i] = 1.0
                x[strategy.j] = ratio
        x = _normalized(x, scenario.norm)

        u = scenario.alpha + float(x @ beta) + draw()
        result = recursive_update(state, x, u, alpha=alpha_belief, sigma2=sigma2)
        drift = float(np.max(np.abs(result.new_state.estimate - state.estimate)))
        state = result.new_state

        bundles[t] = x
        utilities_out[t] = u
        surprises[t] = result.surprise
        estimates[t] = state.estimate
        err = state.estimate - beta
        mse[t] = float(err @ err)
        eigs = np.linalg.eigvalsh(state.info)
        lambda_min[t] = eigs[0]
        kappa[t] = eigs[-1] / eigs[0] if eigs[0] > 0 else math.inf
        if flagged:
            infeasible.append(t)
        if first_stasis is None and drift < DRIFT_TOL:
            first_stasis = t
        prev_bundle = x

    return Trajectory(
        scenario=scenario,
        strategy=strategy,
        bundles=_readonly(bundles),
        utilities=_readonly(utilities_out),
        surprises=_readonly(surprises),
        estimates=_readonly(estimates),
        mse=_readonly(mse),
        kappa=_readonly(kappa),
        lambda_min=_readonly(lambda_min),
        final_state=state,
        infeasible_steps=tuple(infeasible),
        oracle_reads=oracle.reads if oracle is not None else 0,
        first_stasis=first_stasis,
    )


class ConvergenceDiagnostics(NamedTuple):
    lambda_min_divergent: bool
    final_mse: float
    bound_ratio: float
    noiseless_guard: bool


def convergence_diagnostics(traj: Trajectory) -> ConvergenceDiagnostics:
    """Learning-quality summary of a finished trajectory.

    lambda_min_divergent holds when the second half of the lambda_min series
    is weakly increasing with a positive least-squares slope, the signature
    of information accumulating in every direction. bound_ratio compares the
    final MSE to the floor sigma2 n^2 / t at t = total observations
    (initialization included); with sigma2 = 0 the ratio is reported as
    final_mse * t / n^2 and flagged by noiseless_guard.
    """
    if len(traj) == 0:
        raise ValueError("trajectory is empty")
    lam = traj.lambda_min
    mid = len(traj) // 2
    window = lam[mid:]
    if window.size >= 2:
        weakly_up = bool(np.all(np.diff(window) > -1e-12))
        slope = float(np.polyfit(np.arange(window.size), window, 1)[0])
        divergent = weakly_up and slope > 1e-9
    else:
        divergent = False
    final_mse = float(traj.mse[-1])
    n = traj.scenario.n
    t = traj.final_state.count
    sigma2 = traj.scenario.noise.sigma2
    if sigma2 > 0:
        ratio = final_mse / (sigma2 * n * n / t)
        guard = False
    else:
        ratio = final_mse * t / (n * n)
        guard = True
    return ConvergenceDiagnostics(divergent, final_mse, ratio, guard)


def expected_update(
    state: PrecisionState, x, beta_true
) -> NDArray[np.float64]:
    """Noiseless one-step drift -[Wx / (1 + x'Wx)] * (x'(beta_hat - beta))."""
    if not state.full_rank or state.cov is None:
        raise StateNotFullRank("expected_update needs a full-rank state")
    xv = as_bundle(x, state.n)
    beta = as_bundle(beta_true, state.n)
    Wx = state.cov @ xv
    denom = 1.0 + float(xv @ Wx)
    return -(Wx / denom) * float(xv @ (state.estimate - beta))
