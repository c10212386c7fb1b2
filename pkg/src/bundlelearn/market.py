"""Monopolist planning over two periods plus welfare accounting.

Period prices extract the consumer's perceived value, p_t = x_t' beta_hat_{t-1},
so first-period bundles are chosen not only for their margin but for how they
move second-period beliefs. With known truth the planner classifies the
situation into selling the best good directly, protecting an overestimated
good's perceived margin (manipulation), or pushing an underestimated good's
estimate up before selling it (discovery). Without knowing the truth, only
the expected sign of the first surprise matters, and the optimal stationary
bundle is an extreme eigenvector of the information matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionMismatch, StateNotFullRank
from .estimator import PrecisionState, _readonly, as_bundle
from .spectral import decompose

# Points per two-good edge in the signed l1 search grid.
EDGE_GRID = 1001
# Drift this close to zero counts as preserving the target estimate.
PRESERVE_TOL = 1e-9
# Objective values within this of the best flag a non-unique optimum.
TIE_TOL = 1e-12


class PlanMode(enum.Enum):
    SELL_DIRECT = "sell_direct"
    MANIPULATION = "manipulation"
    DISCOVERY = "discovery"


class PriorStance(enum.Enum):
    PESSIMISTIC = "pessimistic"
    OPTIMISTIC = "optimistic"


@dataclass(frozen=True)
class MarketConfig:
    """Marginal costs gamma, period-2 weight delta_weight, and bundle norm."""

    gamma: NDArray[np.float64]
    delta_weight: float = 1.0
    norm: Literal["l1", "l2"] = "l1"

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma", _readonly(as_bundle(self.gamma)))
        if self.delta_weight <= 0:
            raise ValueError("delta_weight must be positive")


@dataclass(frozen=True)
class PriorBelief:
    """Expected first surprise xi; its sign must match the stance."""

    stance: PriorStance
    xi: float

    def __post_init__(self) -> None:
        if self.stance is PriorStance.PESSIMISTIC and not self.xi < 0:
            raise ValueError("pessimistic priors need xi < 0")
        if self.stance is PriorStance.OPTIMISTIC and not self.xi > 0:
            raise ValueError("optimistic priors need xi > 0")


@dataclass(frozen=True)
class PricingPlan:
    """Two-period plan: bundles, prices p_t = x_t' beta_hat_{t-1}, and the case."""

    x1: NDArray[np.float64]
    x2: NDArray[np.float64]
    p1: float
    p2: float
    mode: PlanMode
    period2_good: int
    non_unique: bool = False
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class WelfareDecomposition:
    """Consumer-surplus, profit, and welfare changes split into price and bundle parts.

    d_cs = -price_effect - cs_bundle_effect and d_profit = price_effect +
    profit_bundle_effect hold by construction, and d_welfare is defined as
    their sum so the aggregation identity is exact in floating point; it
    equals delta_x'(beta - gamma) analytically.
    """

    d_cs: float
    d_profit: float
    d_welfare: float
    price_effect: float
    cs_bundle_effect: float
    profit_bundle_effect: float


def _expected_posterior(
    candidates: NDArray[np.float64],
    W: NDArray[np.float64],
    beta_hat0: NDArray[np.float64],
    delta: NDArray[np.float64],
) -> NDArray[np.float64]:
    """E[beta_hat_1] rows for candidate bundles (rows of ``candidates``)."""
    WX = candidates @ W
    quad = np.einsum("ij,ij->i", candidates, WX)
    surprise = candidates @ delta
    return beta_hat0 - WX * (surprise / (1.0 + quad))[:, None]


def _l1_candidates(
    n: int, zero_functionals: tuple[NDArray[np.float64], ...] = ()
) -> NDArray[np.float64]:
    """Signed l1-sphere vertices plus two-good edge grids.

    Every optimal plan lives on a vertex or a two-good edge, so those are
    the only candidates enumerated. Each edge also gains the exact points
    where any of the supplied linear functionals v (constraints of the form
    v'x = 0) cross zero, so a zero-drift set is never missed between grid
    points.
    """
    base = np.linspace(0.0, 1.0, EDGE_GRID)[1:-1]
    rows: list[NDArray[np.float64]] = []
    for k in range(n):
        for sign in (1.0, -1.0):
            v = np.zeros(n)
            v[k] = sign
            rows.append(v)
    for k in range(n):
        for l in range(k + 1, n):
            for sk in (1.0, -1.0):
                for sl in (1.0, -1.0):
                    ws = base
                    extra = []
                    for func in zero_functionals:
                        a = sk * float(func[k])
                        b = sl * float(func[l])
                        if a != b:
                            w_root = a / (a - b)
                            if 0.0 < w_root < 1.0:
                                extra.append(w_root)
                    if extra:
                        ws = np.concatenate([ws, np.array(extra)])
                    block = np.zeros((ws.size, n))
                    block[:, k] = sk * (1.0 - ws)
                    block[:, l] = sl * ws
                    rows.append(block)
    return np.vstack([r if r.ndim == 2 else r[None, :] for r in rows])


def _best(
    values: NDArray[np.float64], mask: NDArray[np.bool_]
) -> tuple[int, bool]:
    """First argmax of ``values`` under ``mask`` plus a tie flag."""
    masked = np.where(mask, values, -np.inf)
    idx = int(np.argmax(masked))
    best = masked[idx]
    ties = int(np.count_nonzero(masked >= best - TIE_TOL))
    return idx, ties > 1


def plan_complete_info(
    beta, beta_hat0, state0: PrecisionState, cfg: MarketConfig
) -> PricingPlan:
    """Two-period plan when the monopolist knows the true preferences.

    Classifies by i = argmax(beta_hat0 - gamma) and j = argmax(beta - gamma)
    (ties to the lowest index):

    - i = j and good i underestimated: sell i directly both periods.
    - i = j and good i overestimated: manipulation, a period-1 bundle that
      preserves E[beta_hat_{i,1}], then sell i.
    - i != j and the perceived margin of i beats the true margin of j:
      manipulation with E-update on i >= 0, then sell i.
    - otherwise: discovery, the period-1 bundle maximizing E[beta_hat_{j,1}],
      then sell j.

    Searched bundles live on the signed l1 sphere's vertices and two-good
    edges (EDGE_GRID points per edge); searched cases maximize the two-period
    objective x1'(beta_hat0 - gamma) + delta_weight * (E[beta_hat_1]'x2 -
    gamma'x2), except discovery whose period-1 objective is E[beta_hat_{j,1}]
    itself. ``state0.estimate`` is not consulted; beliefs come from
    ``beta_hat0``.
    """
    if cfg.norm != "l1":
        raise ValueError("complete-information planning uses the l1 norm")
    if not state0.full_rank or state0.cov is None:
        raise StateNotFullRank("planner needs a full-rank state")
    b = as_bundle(beta, state0.n)
    bhat = as_bundle(beta_hat0, state0.n)
    gamma = as_bundle(cfg.gamma, state0.n)
    if gamma.size != b.size:
        raise DimensionMismatch("gamma dimension does not match beta")
    W = state0.cov
    delta = bhat - b
    i = int(np.argmax(bhat - gamma))
    j = int(np.argmax(b - gamma))

    def finish(
        x1: NDArray[np.float64],
        sell: int,
        mode: PlanMode,
        non_unique: bool,
        notes: tuple[str, ...],
    ) -> PricingPlan:
        x2 = np.zeros(b.size)
        x2[sell] = 1.0
        ebeta1 = _expected_posterior(x1[None, :], W, bhat, delta)[0]
        return PricingPlan(
            x1=_readonly(x1),
            x2=_readonly(x2),
            p1=float(x1 @ bhat),
            p2=float(x2 @ ebeta1),
            mode=mode,
            period2_good=sell,
            non_unique=non_unique,
            notes=notes,
        )

    if i == j:
        if bhat[i] <= b[i]:
            x1 = np.zeros(b.size)
            x1[i] = 1.0
            return finish(x1, i, PlanMode.SELL_DIRECT, False, ())
        cands = _l1_candidates(b.size, (np.asarray(W[:, i]), delta))
        ebeta1 = _expected_posterior(cands, W, bhat, delta)
        drift_i = ebeta1[:, i] - bhat[i]
        mask = np.abs(drift_i) <= PRESERVE_TOL
        objective = cands @ (bhat - gamma) + cfg.delta_weight * (
            ebeta1[:, i] - gamma[i]
        )
        idx, ties = _best(objective, mask)
        return finish(
            cands[idx],
            i,
            PlanMode.MANIPULATION,
            ties,
            ("preserves the period-2 good's expected estimate",),
        )
    if bhat[i] - gamma[i] > b[j] - gamma[j]:
        cands = _l1_candidates(b.size, (np.asarray(W[:, i]), delta))
        ebeta1 = _expected_posterior(cands, W, bhat, delta)
        drift_i = ebeta1[:, i] - bhat[i]
        mask = drift_i >= -TIE_TOL
        objective = cands @ (bhat - gamma) + cfg.delta_weight * (
            ebeta1[:, i] - gamma[i]
        )
        idx, ties = _best(objective, mask)
        return finish(
            cands[idx],
            i,
            PlanMode.MANIPULATION,
            ties,
            ("keeps the period-2 good's expected estimate from falling",),
        )
    cands = _l1_candidates(b.size)
    ebeta1 = _expected_posterior(cands, W, bhat, delta)
    objective = ebeta1[:, j]
    idx, ties = _best(objective, np.ones(objective.size, dtype=bool))
    return finish(cands[idx], j, PlanMode.DISCOVERY, ties, ())


def plan_incomplete_info(
    state0: PrecisionState, prior: PriorBelief, cfg: MarketConfig
) -> NDArray[np.float64]:
    """Optimal stationary unit bundle when only the surprise sign is known.

    Pessimistic priors (expected disappointment) call for minimizing how far
    beliefs can fall: the popularity direction vN. Optimistic priors call for
    maximizing the lift: the correlation direction vC. Both returned unit-l2
    and sign-normalized.
    """
    if cfg.norm != "l2":
        raise ValueError("incomplete-information planning uses the l2 norm")
    if not state0.full_rank:
        raise StateNotFullRank("planner needs a full-rank state")
    summary = decompose(state0.info)
    if prior.stance is PriorStance.PESSIMISTIC:
        return np.array(summary.vN)
    return np.array(summary.vC)


def welfare(
    bundle_map: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    beta,
    beta_hat,
    gamma,
    alpha: float = 0.0,
) -> WelfareDecomposition:
    """Decompose the harm of selling to misperceived preferences.

    ``bundle_map`` must deterministically pick, for a belief vector b, the
    bundle maximizing x'(b - gamma) over its feasible set; the sign
    guarantees (nonnegative bundle effects, nonpositive welfare change) hold
    under that revealed-preference premise. ``alpha`` cancels in every
    difference and is accepted only for interface completeness.
    """
    del alpha
    b = as_bundle(beta)
    bh = as_bundle(beta_hat, b.size)
    g = as_bundle(gamma, b.size)
    x_true = as_bundle(bundle_map(b), b.size)
    x_hat = as_bundle(bundle_map(bh), b.size)
    delta = bh - b
    dx = x_hat - x_true
    price_effect = float(x_true @ delta)
    cs_bundle_effect = float(dx @ delta)
    profit_bundle_effect = float(dx @ (bh - g))
    d_cs = -price_effect - cs_bundle_effect
    d_profit = price_effect + profit_bundle_effect
    return WelfareDecomposition(
        d_cs=d_cs,
        d_profit=d_profit,
        d_welfare=d_cs + d_profit,
        price_effect=price_effect,
        cs_bundle_effect=cs_bundle_effect,
        profit_bundle_effect=profit_bundle_effect,
    )
