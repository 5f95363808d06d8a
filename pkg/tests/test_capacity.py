"""Tests for capacity module."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capacity import (
    MaxPower,
    SumPower,
    UncertaintyRegion,
    allocate,
    capacity_bounds_other_norm,
    compound_capacity,
    minmax_capacity,
    nominal_capacity,
    project_ball_orthant,
    saddle_check,
    waterfill_max_power,
    waterfill_sum_power,
    worst_case_sigma,
)
from errors import CertificateError, InvalidParameter, UnsupportedNorm
from matrix_kernel import (
    NormKind,
    batch_log_det_capacity,
    haar_unitary,
    matrix_norm,
    sample_ball_batch,
    spectral_objective,
)
from verification import classic_waterfilling_capacity, hadamard_check

SPECTRAL = NormKind.SPECTRAL
FROBENIUS = NormKind.FROBENIUS


def _random_instance(seed):
    """Random channel, radius, SNR and constraint drawn from one seed."""
    rng = np.random.default_rng(seed)
    rows, cols = (int(x) for x in rng.integers(1, 9, size=2))
    h0 = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / math.sqrt(2)
    sigma_max = float(np.linalg.svd(h0, compute_uv=False)[0])
    epsilon = float(rng.uniform(0.0, 2 * sigma_max))
    gamma = float(10 ** rng.uniform(-2, 2))
    constraint = SumPower(float(rng.uniform(0.5, 2 * cols))) if rng.random() < 0.5 else MaxPower(float(rng.uniform(0.2, 3)))
    return h0, epsilon, gamma, constraint


class TestWorstCaseSigma:
    def test_zero_radius(self):
        np.testing.assert_allclose(worst_case_sigma([3.0, 2.0, 1.0], 0.0), [3.0, 2.0, 1.0])

    def test_shrinks_and_clips(self):
        np.testing.assert_allclose(worst_case_sigma([3.0, 2.0, 1.0], 1.5), [1.5, 0.5, 0.0])

    def test_swallows_channel(self):
        np.testing.assert_allclose(worst_case_sigma([1.0, 1.0], 2.0), [0.0, 0.0])

    def test_rejects_negative_radius(self):
        with pytest.raises(InvalidParameter):
            worst_case_sigma([1.0], -0.1)


class TestWaterfillSumPower:
    def test_equal_modes_split_evenly(self):
        alloc = waterfill_sum_power([1.0, 1.0], 1.0, 2.0)
        np.testing.assert_allclose(alloc.lam, [1.0, 1.0])
        assert alloc.capacity == pytest.approx(2 * math.log(2))

    def test_single_active_mode(self):
        alloc = waterfill_sum_power([1.0, 0.0], 1.0, 2.0)
        np.testing.assert_allclose(alloc.lam, [2.0, 0.0])
        assert alloc.capacity == pytest.approx(math.log(3))

    def test_water_level(self):
        alloc = waterfill_sum_power([2.0, 1.0], 1.0, 2.0)
        assert alloc.water_level == pytest.approx(1.625)
        np.testing.assert_allclose(alloc.lam, [1.375, 0.625])
        assert alloc.capacity == pytest.approx(math.log(1 + 4 * 1.375) + math.log(1.625))

    def test_matches_dense_grid(self):
        lam1 = np.linspace(0.0, 2.0, 200_001)
        grid = np.log1p(4 * lam1) + np.log1p(2.0 - lam1)
        alloc = waterfill_sum_power([2.0, 1.0], 1.0, 2.0)
        assert alloc.capacity == pytest.approx(float(grid.max()), abs=1e-6)

    def test_weak_mode_switched_off(self):
        alloc = waterfill_sum_power([2.0, 0.1], 1.0, 1.0)
        np.testing.assert_allclose(alloc.lam, [1.0, 0.0])
        assert alloc.active == 1

    def test_all_zero_channel_is_flagged(self):
        alloc = waterfill_sum_power([0.0, 0.0], 1.0, 2.0)
        assert alloc.all_zero_channel
        assert alloc.capacity == 0.0
        np.testing.assert_allclose(alloc.lam, [0.0, 0.0])

    def test_rejects_nonpositive_budget(self):
        with pytest.raises(InvalidParameter):
            waterfill_sum_power([1.0], 1.0, 0.0)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.floats(0.01, 10.0), min_size=1, max_size=6),
        st.floats(0.01, 100.0),
        st.floats(0.1, 10.0),
    )
    def test_kkt_conditions(self, sigma, gamma, budget):
        alloc = waterfill_sum_power(sigma, gamma, budget)
        s = np.asarray(sigma)
        inv = 1.0 / (gamma * s**2)
        assert alloc.lam.sum() == pytest.approx(budget, rel=1e-10)
        assert np.all(alloc.lam >= 0)
        active = alloc.lam > 0
        mu = alloc.water_level
        np.testing.assert_allclose(alloc.lam[active] + inv[active], mu, rtol=1e-10)
        assert np.all(inv[~active] >= mu - 1e-10 * mu)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.one_of(st.just(0.0), st.floats(0.01, 5.0)), min_size=1, max_size=5), st.floats(0.1, 10.0))
    def test_monotone_in_budget(self, sigma, budget):
        low = waterfill_sum_power(sigma, 1.0, budget).capacity
        high = waterfill_sum_power(sigma, 1.0, budget * 1.5).capacity
        assert high >= low - 1e-12


class TestWaterfillMaxPower:
    def test_saturates_cap(self):
        np.testing.assert_allclose(waterfill_max_power([2.0, 1.0], 1.0, 3.0).lam, [3.0, 3.0])

    def test_zero_mode_gets_nothing(self):
        np.testing.assert_allclose(waterfill_max_power([2.0, 0.0], 1.0, 3.0).lam, [3.0, 0.0])

    def test_capacity(self):
        alloc = waterfill_max_power([1.0, 1.0, 1.0], 2.0, 1.0)
        assert alloc.capacity == pytest.approx(3 * math.log(3))


class TestAllocate:
    def test_default_budget_is_mode_count(self):
        alloc = allocate([1.0, 1.0, 1.0], 1.0, SumPower())
        assert alloc.lam.sum() == pytest.approx(3.0)

    def test_dispatches_max_power(self):
        np.testing.assert_allclose(allocate([1.0, 0.5], 1.0, MaxPower(2.0)).lam, [2.0, 2.0])


class TestPowerConstraint:
    def test_sum_power_contains(self):
        assert SumPower(2.0).contains(np.eye(2))
        assert not SumPower(1.0).contains(np.eye(2))
        assert not SumPower(2.0).contains(np.diag([3.0, -1.0]))

    def test_max_power_contains(self):
        assert MaxPower(1.0).contains(np.diag([1.0, 0.5]))
        assert not MaxPower(1.0).contains(np.diag([1.5, 0.0]))

    def test_rejects_nonpositive(self):
        with pytest.raises(InvalidParameter):
            SumPower(0.0)
        with pytest.raises(InvalidParameter):
            MaxPower(-1.0)

    def test_unset_budget_resolves_to_antennas(self):
        assert SumPower().resolve(4).budget == 4.0


class TestCompoundCapacity:
    def test_identity_nominal(self):
        report = compound_capacity(np.eye(2), UncertaintyRegion(SPECTRAL, 0.0), 1.0, SumPower(2.0))
        assert report.c_maxmin == pytest.approx(2 * math.log(2), abs=1e-12)
        assert abs(report.duality_gap) <= 1e-8

    def test_zero_radius_matches_classic_waterfilling(self):
        h0 = haar_unitary(3, 1) @ np.diag([2.0, 1.0, 0.3]) @ haar_unitary(3, 2)
        report = compound_capacity(h0, UncertaintyRegion(SPECTRAL, 0.0), 1.7, SumPower(2.5))
        assert report.c_maxmin == pytest.approx(classic_waterfilling_capacity(h0, 1.7, 2.5), abs=1e-9)
        assert report.c_maxmin == pytest.approx(nominal_capacity(h0, 1.7, SumPower(2.5)), abs=1e-12)

    def test_composes_worst_case_and_waterfill(self):
        report = compound_capacity(np.diag([3.0, 2.0, 1.0]), UncertaintyRegion(SPECTRAL, 1.5), 1.0, SumPower(3.0))
        expected = waterfill_sum_power([1.5, 0.5, 0.0], 1.0, 3.0).capacity
        assert report.c_maxmin == pytest.approx(expected, abs=1e-12)
        np.testing.assert_allclose(report.sigma_star, [1.5, 0.5, 0.0])

    def test_radius_swallows_channel(self):
        report = compound_capacity(np.diag([2.0, 1.0]), UncertaintyRegion(SPECTRAL, 2.5), 1.0, SumPower(2.0))
        assert report.c_maxmin == 0.0
        assert report.all_zero_channel
        np.testing.assert_allclose(report.h_star, np.zeros((2, 2)), atol=1e-12)

    def test_outputs_are_feasible(self):
        h0, _, gamma, constraint = _random_instance(5)
        eps = 0.3
        report = compound_capacity(h0, UncertaintyRegion(SPECTRAL, eps), gamma, constraint)
        assert report.constraint.contains(report.q_star)
        assert matrix_norm(report.h_star - h0, SPECTRAL) <= eps + 1e-9

    def test_rejects_frobenius(self):
        with pytest.raises(UnsupportedNorm):
            compound_capacity(np.eye(2), UncertaintyRegion(FROBENIUS, 0.1), 1.0, SumPower())

    def test_rejects_nonpositive_gamma(self):
        with pytest.raises(InvalidParameter):
            compound_capacity(np.eye(2), UncertaintyRegion(SPECTRAL, 0.1), 0.0, SumPower())

    def test_zero_duality_gap_random_instances(self):
        for seed in range(200):
            h0, eps, gamma, constraint = _random_instance(seed)
            report = compound_capacity(h0, UncertaintyRegion(SPECTRAL, eps), gamma, constraint)
            assert abs(report.c_minmax - report.c_maxmin) <= 1e-8
            assert report.saddle.max_side_gap <= 1e-8
            assert report.saddle.min_side_gap <= 1e-8
            assert report.saddle_certified

    def test_nonincreasing_in_radius(self):
        h0 = np.diag([2.0, 1.0, 0.5])
        values = [
            compound_capacity(h0, UncertaintyRegion(SPECTRAL, eps), 1.0, SumPower()).c_maxmin
            for eps in np.linspace(0.0, 2.5, 26)
        ]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))

    def test_nondecreasing_in_snr(self):
        h0 = np.diag([2.0, 1.0])
        values = [
            compound_capacity(h0, UncertaintyRegion(SPECTRAL, 0.4), gamma, SumPower()).c_maxmin
            for gamma in np.logspace(-2, 2, 20)
        ]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_unitary_invariance(self):
        h0, eps, gamma, constraint = _random_instance(17)
        rows, cols = h0.shape
        rotated = haar_unitary(rows, 1) @ h0 @ haar_unitary(cols, 2)
        region = UncertaintyRegion(SPECTRAL, eps)
        a = compound_capacity(h0, region, gamma, constraint).c_maxmin
        b = compound_capacity(rotated, region, gamma, constraint).c_maxmin
        assert a == pytest.approx(b, abs=1e-9)

    def test_nondecreasing_in_budget(self):
        h0, eps, gamma, _ = _random_instance(5)
        region = UncertaintyRegion(SPECTRAL, eps)
        for make in (SumPower, MaxPower):
            values = [
                compound_capacity(h0, region, gamma, make(float(p))).c_maxmin for p in np.linspace(0.1, 6.0, 30)
            ]
            assert all(b >= a - 1e-10 for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("seed", range(5))
    def test_rotated_covariance_never_beats_diagonal(self, seed):
        h0, eps, gamma, constraint = _random_instance(seed)
        rows, cols = h0.shape
        report = compound_capacity(h0, UncertaintyRegion(SPECTRAL, eps), gamma, constraint)
        w = haar_unitary(cols, 100 + seed)
        q_rotated = w @ report.q_star @ w.conj().T
        q_rotated = (q_rotated + q_rotated.conj().T) / 2

        deltas = sample_ball_batch(rows, cols, eps, SPECTRAL, 10_000, seed)
        worst = (report.h_star - h0)[None]
        channels = h0[None] + np.concatenate([deltas, worst])
        observed = batch_log_det_capacity(channels, q_rotated, gamma)
        assert observed.min() <= report.c_maxmin + 1e-9


class TestSaddleCheck:
    def test_certified_on_solver_output(self):
        report = compound_capacity(np.diag([2.0, 1.0]), UncertaintyRegion(SPECTRAL, 0.5), 1.0, SumPower(2.0))
        gaps = saddle_check(report.sigma_star, report.lambda_star, report.sigma0, 0.5, 1.0, SumPower(2.0))
        assert gaps.certified()

    def test_moving_power_opens_max_side_gap(self):
        report = compound_capacity(np.diag([2.0, 1.5]), UncertaintyRegion(SPECTRAL, 0.5), 1.0, SumPower(2.0))
        assert np.all(report.lambda_star > 0.1)
        moved = report.lambda_star + np.array([0.1, -0.1])
        gaps = saddle_check(report.sigma_star, moved, report.sigma0, 0.5, 1.0, SumPower(2.0))
        assert gaps.max_side_gap > 0

    def test_raising_sigma_opens_min_side_gap(self):
        report = compound_capacity(np.diag([2.0, 1.5]), UncertaintyRegion(SPECTRAL, 0.5), 1.0, SumPower(2.0))
        raised = report.sigma_star + np.array([0.1, 0.0])
        gaps = saddle_check(raised, report.lambda_star, report.sigma0, 0.5, 1.0, SumPower(2.0))
        assert gaps.min_side_gap > 0


class TestProjectBallOrthant:
    def test_inside_point_unchanged(self):
        np.testing.assert_allclose(project_ball_orthant([1.2, 0.9], [1.0, 1.0], 1.0), [1.2, 0.9])

    def test_radial_projection(self):
        np.testing.assert_allclose(project_ball_orthant([3.0, 1.0], [1.0, 1.0], 1.0), [2.0, 1.0], atol=1e-9)

    def test_orthant_clip(self):
        x = project_ball_orthant([-0.5, 0.5], [0.5, 0.5], 1.0)
        np.testing.assert_allclose(x, [0.0, 0.5], atol=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_result_is_feasible(self, seed):
        rng = np.random.default_rng(seed)
        center = rng.uniform(0.0, 3.0, 3)
        radius = float(rng.uniform(0.1, 2.0))
        x = project_ball_orthant(rng.normal(0.0, 4.0, 3), center, radius)
        assert np.all(x >= 0)
        assert np.linalg.norm(x - center) <= radius * (1 + 1e-12)


class TestMinmaxCapacity:
    def test_spectral_matches_maxmin(self):
        h0, eps, gamma, constraint = _random_instance(3)
        region = UncertaintyRegion(SPECTRAL, eps)
        minmax = minmax_capacity(h0, region, gamma, constraint)
        assert minmax.c_minmax == pytest.approx(compound_capacity(h0, region, gamma, constraint).c_maxmin, abs=1e-8)

    @pytest.mark.parametrize("kind", [SPECTRAL, FROBENIUS])
    def test_zero_radius_is_nominal(self, kind):
        h0 = np.diag([2.0, 1.0])
        result = minmax_capacity(h0, UncertaintyRegion(kind, 0.0), 1.0, SumPower(2.0))
        assert result.c_minmax == pytest.approx(nominal_capacity(h0, 1.0, SumPower(2.0)), abs=1e-12)

    def test_frobenius_matches_arc_grid(self):
        # the min sits on the ball boundary, reached by shrinking both modes along an arc
        sigma0 = np.array([2.0, 1.0])
        thetas = np.linspace(0.0, math.pi / 2, 20_001)
        grid = min(
            allocate(np.maximum(sigma0 - np.array([math.cos(t), math.sin(t)]), 0.0), 1.0, SumPower(2.0)).capacity
            for t in thetas
        )
        result = minmax_capacity(np.diag(sigma0), UncertaintyRegion(FROBENIUS, 1.0), 1.0, SumPower(2.0))
        assert result.converged
        assert result.c_minmax == pytest.approx(grid, abs=1e-4)
        assert np.linalg.norm(result.sigma - sigma0) <= 1.0 + 1e-9

    def test_frobenius_reconstructs_channel(self):
        h0 = np.diag([2.0, 1.0])
        result = minmax_capacity(h0, UncertaintyRegion(FROBENIUS, 0.5), 1.0, SumPower(2.0))
        assert matrix_norm(result.h_prime - h0, FROBENIUS) <= 0.5 + 1e-9
        assert SumPower(2.0).contains(result.q_prime)

    def test_rejects_nuclear(self):
        with pytest.raises(UnsupportedNorm):
            minmax_capacity(np.eye(2), UncertaintyRegion(NormKind.NUCLEAR, 0.1), 1.0, SumPower())


class TestCapacityBoundsOtherNorm:
    def test_zero_radius_collapses(self):
        bounds = capacity_bounds_other_norm(np.diag([2.0, 1.0]), FROBENIUS, 0.0, 1.0, SumPower(2.0))
        nominal = nominal_capacity(np.diag([2.0, 1.0]), 1.0, SumPower(2.0))
        assert bounds.lower == pytest.approx(nominal)
        assert bounds.upper == pytest.approx(nominal)

    def test_single_mode_is_exact(self):
        h0 = np.array([[1.5, 0.5, 0.2]])
        bounds = capacity_bounds_other_norm(h0, FROBENIUS, 0.4, 1.0, SumPower())
        assert bounds.alpha_high == 1.0
        assert bounds.lower == pytest.approx(bounds.upper)

    def test_brackets_documented_instance(self):
        h0 = np.diag([2.0, 1.0])
        bounds = capacity_bounds_other_norm(h0, FROBENIUS, 0.5, 1.0, SumPower(2.0))
        lower = compound_capacity(h0, UncertaintyRegion(SPECTRAL, 0.5), 1.0, SumPower(2.0)).c_maxmin
        upper = compound_capacity(h0, UncertaintyRegion(SPECTRAL, 0.5 / math.sqrt(2)), 1.0, SumPower(2.0)).c_maxmin
        assert bounds.lower == pytest.approx(lower)
        assert bounds.upper == pytest.approx(upper)
        value = minmax_capacity(h0, UncertaintyRegion(FROBENIUS, 0.5), 1.0, SumPower(2.0)).c_minmax
        assert bounds.lower - 1e-6 <= value <= bounds.upper + 1e-6

    def test_brackets_frobenius_minmax_random(self):
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            rows, cols = (int(x) for x in rng.integers(1, 5, size=2))
            h0 = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
            eps = float(rng.uniform(0.0, 1.5))
            gamma = float(10 ** rng.uniform(-1, 1))
            bounds = capacity_bounds_other_norm(h0, FROBENIUS, eps, gamma, SumPower())
            value = minmax_capacity(h0, UncertaintyRegion(FROBENIUS, eps), gamma, SumPower()).c_minmax
            assert bounds.lower - 1e-6 <= value <= bounds.upper + 1e-6

    def test_nuclear_constants(self):
        bounds = capacity_bounds_other_norm(np.eye(3), NormKind.NUCLEAR, 0.3, 1.0, SumPower())
        assert bounds.alpha_low == 1.0
        assert bounds.alpha_high == 3.0
        assert bounds.lower <= bounds.upper

    def test_rejects_spectral(self):
        with pytest.raises(UnsupportedNorm):
            capacity_bounds_other_norm(np.eye(2), SPECTRAL, 0.1, 1.0, SumPower())


class TestHadamard:
    def test_psd_matrix_obeys_bound(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert hadamard_check(a @ a.conj().T).passed

    def test_saddle_covariance_obeys_bound(self):
        report = compound_capacity(np.diag([2.0, 1.0]), UncertaintyRegion(SPECTRAL, 0.5), 1.0, SumPower(2.0))
        assert hadamard_check(report.q_star).passed
        assert spectral_objective(report.sigma_star, report.lambda_star, 1.0) == pytest.approx(report.c_maxmin)


def test_certificate_error_is_arithmetic():
    assert issubclass(CertificateError, ArithmeticError)
