"""Consumer-provider loop: strategy behavior, determinism, oracle isolation,
and the two-good learning dynamics the package is built to reproduce."""

import numpy as np
import pytest

from bundlelearn import (
    History,
    NoiseModel,
    PrecisionState,
    RidgeInit,
    Scenario,
    StateNotFullRank,
    Strategy,
    StrategyInfeasible,
    StrategyKind,
    Trajectory,
    WarmupInit,
    batch_ols,
    convergence_diagnostics,
    expected_update,
    run,
)
from conftest import line_history


def fig6_scenario(horizon=40):
    return Scenario(
        beta_true=[1.0, 1.0],
        noise=NoiseModel(sigma2=0.0, seed=0),
        horizon=horizon,
        init=RidgeInit(beta0=np.array([0.9, 1.2]), rho=1e8),
    )


def strat(kind, **kw):
    return Strategy(kind=StrategyKind(kind), **kw)


class TestTwoGoodDynamics:
    """Noiseless two-good runs from a biased diffuse start."""

    def test_error_orthogonal_bundles_freeze_learning(self):
        tr = run(fig6_scenario(), strat("orthogonal_to_error"))
        assert np.max(np.abs(tr.surprises)) == 0.0
        np.testing.assert_allclose(tr.mse, 0.05, atol=1e-12)
        assert tr.first_stasis == 0
        assert tr.infeasible_steps == ()

    def test_round_robin_identifies_both_goods_by_step_two(self):
        tr = run(fig6_scenario(), strat("single_round_robin"))
        assert tr.mse[0] == pytest.approx(0.04, abs=1e-10)
        assert np.all(tr.mse[1:] < 1e-12)

    def test_popularity_bias_locks_onto_one_good(self):
        tr = run(fig6_scenario(), strat("popularity_biased"))
        # The absorbed direction self-reinforces, so the other good's error
        # survives the whole horizon.
        np.testing.assert_allclose(tr.mse, 0.04, atol=1e-10)
        assert np.all(np.diff(tr.kappa) > 0)

    def test_correlation_breaking_matches_round_robin_here(self):
        cb = run(fig6_scenario(), strat("correlation_breaking"))
        rr = run(fig6_scenario(), strat("single_round_robin"))
        np.testing.assert_allclose(cb.mse, rr.mse, atol=1e-15)

    def test_strategy_mse_ordering(self):
        mse = {
            k: run(fig6_scenario(), strat(k)).mse
            for k in (
                "orthogonal_to_error",
                "popularity_biased",
                "correlation_breaking",
                "single_round_robin",
            )
        }
        slack = 1e-12
        assert np.all(
            mse["orthogonal_to_error"][1:] >= mse["popularity_biased"][1:] - slack
        )
        assert np.all(
            mse["popularity_biased"][1:] >= mse["correlation_breaking"][1:] - slack
        )
        assert np.all(
            mse["correlation_breaking"][1:] >= mse["single_round_robin"][1:] - slack
        )


class TestTrajectoryShape:
    def test_lengths_and_final_count(self):
        sc = Scenario(beta_true=[1.0, 2.0, 3.0], horizon=7)
        tr = run(sc, strat("single_round_robin"))
        assert len(tr) == 7
        assert tr.bundles.shape == (7, 3)
        assert tr.estimates.shape == (7, 3)
        # WarmupInit consumes one singleton per good before the horizon.
        assert tr.final_state.count == 3 + 7

    def test_norm_controls_bundle_scale(self):
        sc2 = Scenario(beta_true=[1.0, 1.0, 1.0], horizon=5, norm="l1")
        tr = run(sc2, strat("popularity_biased"))
        np.testing.assert_allclose(
            np.abs(tr.bundles).sum(axis=1), 1.0, atol=1e-12
        )
        sc = Scenario(beta_true=[1.0, 1.0, 1.0], horizon=5, norm="l2")
        tr = run(sc, strat("popularity_biased"))
        np.testing.assert_allclose(
            np.linalg.norm(tr.bundles, axis=1), 1.0, atol=1e-12
        )

    def test_scenario_validation(self):
        with pytest.raises(ValueError):
            Scenario(beta_true=[1.0], horizon=0)
        with pytest.raises(ValueError):
            Scenario(beta_true=[1.0], norm="linf")


class TestDeterminismAndIsolation:
    def test_identical_inputs_give_bitwise_identical_runs(self):
        sc = Scenario(
            beta_true=[1.0, -0.5], noise=NoiseModel(sigma2=1.0, seed=42), horizon=20
        )
        a = run(sc, strat("single_round_robin"))
        b = run(sc, strat("single_round_robin"))
        assert np.array_equal(a.utilities, b.utilities)
        assert np.array_equal(a.estimates, b.estimates)
        assert np.array_equal(a.surprises, b.surprises)

    def test_seed_changes_the_noise_stream(self):
        base = dict(beta_true=[1.0, -0.5], horizon=20)
        a = run(
            Scenario(noise=NoiseModel(sigma2=1.0, seed=1), **base),
            strat("single_round_robin"),
        )
        b = run(
            Scenario(noise=NoiseModel(sigma2=1.0, seed=2), **base),
            strat("single_round_robin"),
        )
        assert not np.array_equal(a.utilities, b.utilities)

    def test_robust_strategies_never_read_the_truth(self):
        sc = Scenario(
            beta_true=[1.0, 2.0, 0.5], noise=NoiseModel(sigma2=1.0, seed=3), horizon=15
        )
        robust = [
            strat("single_round_robin"),
            strat("popularity_biased"),
            strat("correlation_breaking"),
            strat("fixed_bundle", bundle=np.array([1.0, 1.0, 0.0])),
        ]
        for s in robust:
            assert run(sc, s).oracle_reads == 0

    def test_complete_information_strategies_do_read(self):
        sc = fig6_scenario(horizon=6)
        assert run(sc, strat("orthogonal_to_error")).oracle_reads == 6
        assert run(sc, strat("orthogonal_to_error", recompute=False)).oracle_reads == 1

    def test_recompute_false_freezes_the_direction(self):
        sc = Scenario(
            beta_true=[1.0, 2.0], noise=NoiseModel(sigma2=1.0, seed=9), horizon=12
        )
        frozen = run(sc, strat("orthogonal_to_error", recompute=False))
        live = run(sc, strat("orthogonal_to_error", recompute=True))
        assert np.ptp(frozen.bundles, axis=0).max() == 0.0
        assert np.ptp(live.bundles, axis=0).max() > 1e-6


class TestStrategyValidation:
    def test_fixed_bundle_payload_required(self):
        sc = Scenario(beta_true=[1.0, 1.0], horizon=3)
        with pytest.raises(StrategyInfeasible):
            run(sc, strat("fixed_bundle"))
        with pytest.raises(StrategyInfeasible):
            run(sc, strat("fixed_bundle", bundle=np.zeros(2)))

    def test_two_good_targeted_needs_valid_goods(self):
        sc = Scenario(beta_true=[1.0, 1.0, 1.0], horizon=3)
        with pytest.raises(StrategyInfeasible):
            run(sc, strat("two_good_targeted", i=0))
        with pytest.raises(StrategyInfeasible):
            run(sc, strat("two_good_targeted", i=0, j=3))
        with pytest.raises(StrategyInfeasible):
            run(sc, strat("two_good_targeted", i=1, j=1))

    def test_explicit_init_state_is_checked(self):
        state3 = batch_ols(
            History(np.vstack([np.eye(3), np.ones((1, 3))]), np.ones(4))
        )
        with pytest.raises(StrategyInfeasible):
            run(
                Scenario(beta_true=[1.0, 1.0], horizon=2, init=state3),
                strat("single_round_robin"),
            )
        deficient = PrecisionState(
            info=np.eye(2), cov=None, estimate=np.zeros(2), count=2, full_rank=False
        )
        with pytest.raises(StateNotFullRank):
            run(
                Scenario(beta_true=[1.0, 1.0], horizon=2, init=deficient),
                strat("single_round_robin"),
            )

    def test_explicit_full_rank_init_is_used_as_is(self):
        state = batch_ols(History(line_history().bundles, line_history().utilities))
        sc = Scenario(beta_true=np.ones(4), horizon=5, init=state)
        tr = run(sc, strat("single_round_robin"))
        assert tr.final_state.count == state.count + 5


class TestDegenerateSteps:
    def test_zero_error_orthogonal_falls_back_and_flags(self):
        # Start exactly on the truth: no direction is orthogonal to nothing.
        sc = Scenario(
            beta_true=[1.0, 1.0],
            noise=NoiseModel(sigma2=0.0, seed=0),
            horizon=4,
            init=RidgeInit(beta0=np.array([1.0, 1.0])),
        )
        tr = run(sc, strat("orthogonal_to_error"))
        assert tr.infeasible_steps == (0, 1, 2, 3)
        np.testing.assert_allclose(tr.bundles, [[1.0, 0.0]] * 4, atol=1e-12)

    def test_targeted_ratio_from_oracle_freezes_learning(self):
        sc = Scenario(
            beta_true=[1.0, 1.0, 1.0],
            noise=NoiseModel(sigma2=0.0, seed=0),
            horizon=6,
            init=RidgeInit(beta0=np.array([1.4, 0.8, 1.0]), rho=1e8),
        )
        tr = run(sc, strat("two_good_targeted", i=0, j=1))
        assert tr.oracle_reads == 6
        assert tr.infeasible_steps == ()
        # ratio -di/dj = 2, so every bundle is (1, 2, 0) normalized
        np.testing.assert_allclose(
            tr.bundles, np.tile([1.0, 2.0, 0.0] / np.sqrt(5.0), (6, 1)), atol=1e-9
        )
        np.testing.assert_allclose(tr.mse, tr.mse[0], rtol=1e-6)

    def test_targeted_with_unusable_signs_flags_each_step(self):
        sc = Scenario(
            beta_true=[1.0, 1.0, 1.0],
            noise=NoiseModel(sigma2=0.0, seed=0),
            horizon=5,
            init=RidgeInit(beta0=np.array([0.6, 1.2, 1.0]), rho=1e8),
        )
        tr = run(sc, strat("two_good_targeted", i=0, j=1))
        assert tr.infeasible_steps == (0, 1, 2, 3, 4)
        assert np.all(tr.bundles[:, 0] == 1.0)

    def test_explicit_ratio_skips_the_oracle(self):
        sc = Scenario(beta_true=[1.0, 1.0, 1.0], horizon=4)
        tr = run(sc, strat("two_good_targeted", i=0, j=2, ratio=3.0))
        assert tr.oracle_reads == 0
        np.testing.assert_allclose(
            tr.bundles, np.tile([1.0, 0.0, 3.0] / np.sqrt(10.0), (4, 1)), atol=1e-12
        )


class TestConvergenceDiagnostics:
    def test_round_robin_information_diverges(self):
        sc = Scenario(
            beta_true=[1.0, 2.0], noise=NoiseModel(sigma2=1.0, seed=5), horizon=100
        )
        diag = convergence_diagnostics(run(sc, strat("single_round_robin")))
        assert diag.lambda_min_divergent
        assert not diag.noiseless_guard

    def test_fixed_bundle_information_stalls(self):
        sc = Scenario(
            beta_true=[1.0, 2.0], noise=NoiseModel(sigma2=1.0, seed=5), horizon=60
        )
        diag = convergence_diagnostics(
            run(sc, strat("fixed_bundle", bundle=np.array([1.0, 0.0])))
        )
        assert not diag.lambda_min_divergent

    def test_noiseless_guard_reports_raw_scaling(self):
        tr = run(fig6_scenario(horizon=10), strat("single_round_robin"))
        diag = convergence_diagnostics(tr)
        assert diag.noiseless_guard
        assert diag.final_mse < 1e-12

    def test_equal_frequency_bound_ratio_is_one_on_average(self):
        # 200 seeds, n = 2, t = 100 observations including warmup.
        ratios = []
        for seed in range(200):
            sc = Scenario(
                beta_true=[1.0, -1.0],
                noise=NoiseModel(sigma2=1.0, seed=seed),
                horizon=98,
            )
            ratios.append(
                convergence_diagnostics(run(sc, strat("single_round_robin"))).bound_ratio
            )
        assert float(np.mean(ratios)) == pytest.approx(1.0, rel=0.10)

    def test_empty_trajectory_is_rejected(self):
        sc = Scenario(beta_true=[1.0], horizon=1)
        tr = run(sc, strat("single_round_robin"))
        empty = Trajectory(
            scenario=tr.scenario,
            strategy=tr.strategy,
            bundles=np.zeros((0, 1)),
            utilities=np.zeros(0),
            surprises=np.zeros(0),
            estimates=np.zeros((0, 1)),
            mse=np.zeros(0),
            kappa=np.zeros(0),
            lambda_min=np.zeros(0),
            final_state=tr.final_state,
            infeasible_steps=(),
            oracle_reads=0,
            first_stasis=None,
        )
        with pytest.raises(ValueError):
            convergence_diagnostics(empty)


class TestExpectedUpdate:
    def test_orthogonal_bundle_gives_zero_drift(self):
        state = batch_ols(line_history())
        beta = state.estimate - np.array([0.3, -0.1, 0.2, 0.0])
        from bundlelearn import orthogonal_bundle

        x = orthogonal_bundle(state.estimate - beta)
        np.testing.assert_allclose(
            expected_update(state, x, beta), np.zeros(4), atol=1e-14
        )

    def test_unit_surprise_drift_equals_the_gain_column(self):
        state = batch_ols(line_history())
        beta = state.estimate + np.array([1.0, 0.0, 0.0, 0.0])
        drift = expected_update(state, np.eye(4)[0], beta)
        np.testing.assert_allclose(
            drift, np.array([13.0, -5.0, 2.0, -1.0]) / 34.0, atol=1e-12
        )

    def test_two_good_sweep_crosses_zero_at_the_balanced_share(self):
        X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        state = batch_ols(History(X, np.ones(3)))
        beta = state.estimate - np.array([-0.2, 0.2])
        np.testing.assert_allclose(
            expected_update(state, [0.5, 0.5], beta), np.zeros(2), atol=1e-15
        )
        lo = expected_update(state, [0.45, 0.55], beta)
        hi = expected_update(state, [0.55, 0.45], beta)
        assert lo[0] * lo[1] > 0  # both move together near the crossing
        assert hi[0] * hi[1] > 0
        assert np.sign(lo[0]) == -np.sign(hi[0])

    def test_requires_full_rank(self):
        deficient = PrecisionState(
            info=np.eye(2), cov=None, estimate=np.zeros(2), count=2, full_rank=False
        )
        with pytest.raises(StateNotFullRank):
            expected_update(deficient, [1.0, 0.0], [1.0, 1.0])

    def test_monte_carlo_mean_update_matches(self):
        from bundlelearn import recursive_update

        state = batch_ols(line_history())
        beta = state.estimate - np.array([0.4, -0.2, 0.1, 0.3])
        x = np.array([0.5, 0.5, 0.0, 0.5])
        expected = expected_update(state, x, beta)
        rng = np.random.default_rng(314)
        draws = 12_000
        acc = np.zeros(4)
        for _ in range(draws):
            u = float(x @ beta) + float(rng.normal())
            acc += recursive_update(state, x, u, sigma2=1.0).new_state.estimate
        mean_drift = acc / draws - state.estimate
        gain = state.cov @ x / (1.0 + float(x @ state.cov @ x))
        se = np.abs(gain) / np.sqrt(draws)
        assert np.all(np.abs(mean_drift - expected) <= 4.0 * se + 1e-12)


class TestMseFloor:
    def test_round_robin_achieves_the_floor_at_t_ten(self):
        # n = 2, sigma2 = 1: equal-frequency singletons attain n^2 sigma^2 / t.
        vals = []
        for seed in range(300):
            sc = Scenario(
                beta_true=[0.5, 2.0],
                noise=NoiseModel(sigma2=1.0, seed=seed),
                horizon=8,
            )
            vals.append(run(sc, strat("single_round_robin")).mse[-1])
        assert float(np.mean(vals)) == pytest.approx(0.4, rel=0.10)

    def test_fixed_bundle_sits_above_the_floor(self):
        vals = []
        for seed in range(200):
            sc = Scenario(
                beta_true=[0.5, 2.0],
                noise=NoiseModel(sigma2=1.0, seed=seed),
                horizon=8,
            )
            vals.append(
                run(
                    sc, strat("fixed_bundle", bundle=np.array([1.0, 1.0]))
                ).mse[-1]
            )
        assert float(np.mean(vals)) > 0.4
