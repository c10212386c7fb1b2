import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from bundlelearn import (
    AnchorParallel,
    SignViolation,
    ZeroBias,
    batch_ols,
    companion_good,
    joint_increase_region,
    orthogonal_bundle,
    recursive_update,
    shifted_orthogonal,
    two_good_orthogonal,
)
from conftest import line_history, random_full_rank_state

nonzero_bias = hnp.arrays(
    float,
    st.integers(min_value=2, max_value=6),
    elements=st.floats(-5, 5, allow_nan=False),
).filter(lambda d: float(np.max(np.abs(d))) > 1e-3)


class TestOrthogonalBundle:
    def test_three_four_error_gives_the_normalized_swap(self):
        np.testing.assert_allclose(
            orthogonal_bundle([3.0, 4.0]), [0.8, -0.6], atol=1e-12
        )

    def test_error_on_first_good_alone_moves_to_second_good(self):
        np.testing.assert_allclose(
            orthogonal_bundle([1.0, 0.0]), [0.0, 1.0], atol=1e-12
        )

    def test_sum_normalization_option(self):
        x = orthogonal_bundle([3.0, 4.0], norm="sum")
        assert float(np.sum(x)) == pytest.approx(1.0, abs=1e-12)
        assert float(x @ [3.0, 4.0]) == pytest.approx(0.0, abs=1e-12)

    def test_anchored_variant_keeps_anchor_orientation(self):
        delta = np.array([1.0, 1.0, -2.0])
        anchor = np.array([0.0, 3.0, 1.0])
        x = orthogonal_bundle(delta, anchor=anchor)
        assert float(x @ delta) == pytest.approx(0.0, abs=1e-12)
        assert float(x @ anchor) > 0

    def test_anchor_parallel_to_bias_is_rejected(self):
        with pytest.raises(AnchorParallel):
            orthogonal_bundle([1.0, 2.0], anchor=[2.0, 4.0])

    def test_zero_bias_is_rejected(self):
        with pytest.raises(ZeroBias):
            orthogonal_bundle([0.0, 0.0])

    def test_single_good_has_no_orthogonal_direction(self):
        with pytest.raises(ValueError):
            orthogonal_bundle([1.0])

    @settings(max_examples=80, deadline=None)
    @given(nonzero_bias)
    def test_output_is_unit_length_and_orthogonal(self, delta):
        x = orthogonal_bundle(delta)
        assert float(np.linalg.norm(x)) == pytest.approx(1.0, abs=1e-9)
        scale = float(np.linalg.norm(delta))
        assert abs(float(x @ delta)) <= 1e-9 * max(scale, 1.0)

    @settings(max_examples=40, deadline=None)
    @given(nonzero_bias, st.integers(min_value=0, max_value=10_000))
    def test_noiseless_step_freezes_estimate_but_grows_information(self, delta, seed):
        rng = np.random.default_rng(seed)
        state = random_full_rank_state(rng, delta.size)
        beta = state.estimate - delta
        x = orthogonal_bundle(delta)
        res = recursive_update(state, x, float(x @ beta))
        assert np.max(np.abs(res.new_state.estimate - state.estimate)) < 1e-12
        grown = res.new_state.info - state.info
        np.testing.assert_allclose(grown, np.outer(x, x), atol=1e-15)


class TestTwoGoodOrthogonal:
    def test_ratio_offsets_opposite_signed_errors(self):
        # delta_i = 2, delta_j = -0.5: one unit of i needs four units of j.
        assert two_good_orthogonal(2.0, -0.5) == pytest.approx(4.0)

    def test_same_signed_errors_are_refused(self):
        with pytest.raises(SignViolation):
            two_good_orthogonal(1.0, 2.0)
        with pytest.raises(SignViolation):
            two_good_orthogonal(-1.0, -2.0)


class TestJointIncreaseRegion:
    def test_line_network_first_pair_bounds(self, line_state):
        region = joint_increase_region(line_state.cov, 0, 1)
        assert region.lower == pytest.approx(0.5, abs=1e-12)
        assert region.upper == pytest.approx(2.6, abs=1e-12)
        assert region.nonempty

    def test_positively_correlated_pair_gets_the_sentinel(self):
        cov = np.array([[1.0, 0.3], [0.3, 1.0]])
        region = joint_increase_region(cov, 0, 1)
        assert region.lower == 0.0
        assert math.isinf(region.upper)
        assert region.nonempty

    def test_inside_ratio_raises_both_goods_outside_violates_one_side(self, line_state):
        # Positive expected surprise scenario on the chain state.
        beta = line_state.estimate + np.array([1.0, 0, 0, 0])

        def one_step_drift(ratio):
            x = np.zeros(4)
            x[0], x[1] = 1.0, ratio
            res = recursive_update(line_state, x, float(x @ beta))
            return res.new_state.estimate - line_state.estimate

        inside = one_step_drift(1.0)  # 0.5 < 1 < 2.6
        assert inside[0] > 0 and inside[1] > 0
        below = one_step_drift(0.2)  # ratio below lower bound stalls good j
        assert below[1] < 0 < below[0]
        above = one_step_drift(4.0)  # ratio above upper bound stalls good i
        assert above[0] < 0 < above[1]


class TestCompanionGood:
    def test_zero_bias_ties_break_to_first_good(self, line_state):
        assert companion_good(line_state.cov, np.zeros(4), 0, "raise") == 0

    def test_raise_uses_argmin_of_the_score_vector(self, line_state):
        # Scores are (0, 5/31, 0, -0); argmin ties at 0 resolve to index 0.
        # Frozen by scripts/derive_oracles.py from the chain covariance.
        delta = np.array([0.0, -1.0, 0.0, 0.0])
        assert companion_good(line_state.cov, delta, 0, "raise") == 0

    def test_lower_uses_argmax_of_the_score_vector(self, line_state):
        delta = np.array([0.0, -1.0, 0.0, 0.0])
        assert companion_good(line_state.cov, delta, 0, "lower") == 1

    def test_single_good_returns_the_target(self):
        cov = np.array([[2.0]])
        assert companion_good(cov, np.array([0.3]), 0, "raise") == 0

    @settings(max_examples=40, deadline=None)
    @given(
        delta=hnp.arrays(float, 4, elements=st.floats(-3, 3, allow_nan=False)),
        c=st.floats(0.01, 100.0),
    )
    def test_positive_rescaling_never_changes_the_choice(self, delta, c):
        cov = batch_ols(line_history()).cov
        base = companion_good(cov, delta, 1, "raise")
        assert companion_good(cov, c * delta, 1, "raise") == base


class TestShiftedOrthogonal:
    def test_worked_example_with_intercept_gap(self):
        x = shifted_orthogonal([1.0, 0.0], 0.5, [0.0, 1.0])
        np.testing.assert_allclose(x, [-0.5, 1.0], atol=1e-12)
        # Expected surprise: -gap - x'delta = -0.5 - (-0.5) = 0.
        assert -0.5 - float(x @ [1.0, 0.0]) == pytest.approx(0.0, abs=1e-15)

    def test_zero_gap_returns_the_orthogonal_part_unchanged(self):
        z = np.array([0.0, 2.0])
        np.testing.assert_array_equal(shifted_orthogonal([1.0, 0.0], 0.0, z), z)

    def test_zero_bias_with_nonzero_gap_is_impossible(self):
        with pytest.raises(ZeroBias):
            shifted_orthogonal([0.0, 0.0], 0.3, [0.0, 0.0])

    def test_non_orthogonal_z_is_rejected(self):
        with pytest.raises(ValueError):
            shifted_orthogonal([1.0, 0.0], 0.5, [1.0, 1.0])

    def test_noiseless_step_with_believed_intercept_freezes_estimate(self):
        rng = np.random.default_rng(5)
        state = random_full_rank_state(rng, 3)
        delta = np.array([0.4, -0.2, 0.1])
        beta = state.estimate - delta
        gap = 0.7  # alpha_hat - alpha
        z = np.array([1.0, 2.0, 0.0])
        z = z - (z @ delta) / (delta @ delta) * delta
        x = shifted_orthogonal(delta, gap, z)
        u = 1.0 + float(x @ beta)  # true alpha = 1
        res = recursive_update(state, x, u, alpha=1.0 + gap)
        assert abs(res.surprise) < 1e-12
        assert np.max(np.abs(res.new_state.estimate - state.estimate)) < 1e-12
