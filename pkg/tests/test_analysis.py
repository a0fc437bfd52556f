import math

import numpy as np
import pytest

from cecap import (
    BracketingError,
    asymptotic_capacity,
    capacity_bounds,
    norm_threshold,
    threshold_residual,
    threshold_residual_line,
    threshold_vs_waterfilling,
    uniform_sphere_mi,
    waterfilling,
)


class TestThresholdResidual:
    def test_polar_and_line_forms_agree(self):
        for lam, r in ((1.5, 0.3), (1.5, 1.0), (2.0, 0.5), (5.0, 0.4), (10.0, 0.15)):
            a = threshold_residual(lam, r)
            b = threshold_residual_line(lam, r)
            assert abs(a - b) < 1e-10

    def test_sign_change_across_threshold(self):
        # two-point optimality holds below the threshold, breaks above
        assert threshold_residual(10.0, 0.10) < 0.0
        assert threshold_residual(10.0, 0.30) > 0.0
        assert threshold_residual(2.0, 0.50) < 0.0
        assert threshold_residual(2.0, 0.70) > 0.0


class TestNormThreshold:
    def test_reference_value(self):
        th = norm_threshold(10.0)
        assert abs(th.r_threshold - 0.1647) < 2e-3
        assert abs(th.residual) < 1e-9
        assert th.bracket[0] < th.r_threshold < th.bracket[1]

    def test_decreasing_in_lam(self):
        values = [norm_threshold(lam).r_threshold for lam in (1.5, 2.0, 5.0, 10.0)]
        assert values == sorted(values, reverse=True)

    def test_skips_trivial_root_at_origin(self):
        # the residual also vanishes as R -> 0; the bracket must not collapse there
        th = norm_threshold(10.0, r_start=0.01)
        assert th.r_threshold > 0.05

    def test_raises_when_cap_too_small(self):
        with pytest.raises(BracketingError) as exc_info:
            norm_threshold(10.0, r_cap=0.05)
        assert "0.05" in str(exc_info.value)
        assert exc_info.value.samples

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            norm_threshold(1.0)
        with pytest.raises(ValueError):
            norm_threshold(2.0, r_start=-0.1)


class TestWaterfilling:
    def test_single_mode_below_knee(self):
        # R^2 under 1 - 1/lam^2 puts all power on the strong eigenmode
        wf = waterfilling(2.0, 0.5)
        assert wf.p1 == 0.25 and wf.p2 == 0.0
        assert math.isclose(wf.capacity_nats, 0.5 * math.log(2.0), rel_tol=1e-12)

    def test_split_above_knee(self):
        wf = waterfilling(2.0, 1.0)
        knee = 1.0 - 1.0 / 4.0
        assert math.isclose(wf.p1 + wf.p2, 1.0, rel_tol=1e-12)
        assert math.isclose(wf.p1 - wf.p2, knee, rel_tol=1e-12)
        expect = 0.5 * math.log1p(4.0 * wf.p1) + 0.5 * math.log1p(wf.p2)
        assert math.isclose(wf.capacity_nats, expect, rel_tol=1e-12)

    def test_activation_level_is_radius_units(self):
        wf = waterfilling(2.0, 1.0)
        assert math.isclose(wf.activation_level, math.sqrt(0.75), rel_tol=1e-12)

    def test_continuous_at_knee(self):
        knee_r = math.sqrt(1.0 - 1.0 / 4.0)
        below = waterfilling(2.0, knee_r * (1.0 - 1e-9))
        above = waterfilling(2.0, knee_r * (1.0 + 1e-9))
        assert abs(below.capacity_nats - above.capacity_nats) < 1e-8
        assert above.p2 < 1e-8

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            waterfilling(0.5, 1.0)
        with pytest.raises(ValueError):
            waterfilling(2.0, 0.0)


class TestCapacityBounds:
    def test_upper_slope_is_n_minus_one(self):
        for n in (2, 3):
            b1 = capacity_bounds(n, 2.0, 1e3)
            b2 = capacity_bounds(n, 2.0, 1e4)
            slope = (b2.upper_nats - b1.upper_nats) / math.log(10.0)
            assert math.isclose(slope, n - 1.0, rel_tol=1e-12)

    def test_lower_slope_matches_upper_at_large_radius(self):
        # the lower bound approaches slope n-1 only as its O(1/R^2) term dies
        b1 = capacity_bounds(2, 2.0, 1e5)
        b2 = capacity_bounds(2, 2.0, 1e6)
        slope = (b2.lower_nats - b1.lower_nats) / math.log(10.0)
        assert abs(slope - 1.0) < 1e-4

    def test_sandwich_holds_at_large_radius(self):
        b = capacity_bounds(2, 2.0, 100.0)
        assert b.lower_nats < b.upper_nats

    def test_fields_echo_inputs(self):
        b = capacity_bounds(3, 1.5, 10.0)
        assert (b.n, b.det_h, b.radius) == (3, 1.5, 10.0)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            capacity_bounds(1, 2.0, 1.0)
        with pytest.raises(ValueError):
            capacity_bounds(2, 0.0, 1.0)
        with pytest.raises(ValueError):
            capacity_bounds(2, 2.0, -1.0)


class TestAsymptoticCapacity:
    def test_quadratic_form(self):
        assert math.isclose(asymptotic_capacity(2.0, 0.05), 0.005, rel_tol=1e-12)
        assert math.isclose(asymptotic_capacity(3.0, 0.1), 0.045, rel_tol=1e-12)

    def test_rejects_lam_below_one(self):
        with pytest.raises(ValueError):
            asymptotic_capacity(0.9, 0.1)


class TestUniformSphereMi:
    def test_seed_reproducible(self):
        a = uniform_sphere_mi(2, (2.0, 1.0), 5.0, 2000, 3)
        b = uniform_sphere_mi(2, (2.0, 1.0), 5.0, 2000, 3)
        c = uniform_sphere_mi(2, (2.0, 1.0), 5.0, 2000, 4)
        assert a == b
        assert a.value_nats != c.value_nats

    def test_matches_capacity_scale(self):
        # at moderate radius the one-dimensional input cannot exceed ln R + O(1)
        est = uniform_sphere_mi(2, (2.0, 1.0), 10.0, 20000, 1)
        assert 1.0 < est.value_nats < math.log(10.0) + 2.0
        assert est.std_error < 0.05
        assert est.samples == 20000

    def test_three_dimensional_path(self):
        est = uniform_sphere_mi(3, (2.0, 1.5, 1.0), 3.0, 2000, 5)
        assert math.isfinite(est.value_nats)
        assert est.value_nats > 0.0

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            uniform_sphere_mi(4, (2.0, 1.0, 1.0, 1.0), 1.0, 2000, 0)
        with pytest.raises(ValueError):
            uniform_sphere_mi(2, (2.0, 1.0, 1.0), 1.0, 2000, 0)
        with pytest.raises(ValueError):
            uniform_sphere_mi(2, (2.0, -1.0), 1.0, 2000, 0)
        with pytest.raises(ValueError):
            uniform_sphere_mi(2, (2.0, 1.0), 1.0, 10, 0)


class TestThresholdComparison:
    def test_threshold_below_activation_everywhere(self):
        rows = threshold_vs_waterfilling((1.5, 2.0, 5.0))
        for row in rows:
            assert row.error is None
            assert row.r_threshold < row.activation_level
            assert math.isclose(
                row.gap, row.r_threshold - row.activation_level, rel_tol=1e-12
            )

    def test_rejects_identity_lam(self):
        with pytest.raises(ValueError):
            threshold_vs_waterfilling((1.0, 2.0))

    def test_bracketing_failure_recorded_per_row(self, monkeypatch):
        import cecap.analysis as analysis_mod

        def failing(lam, **kwargs):
            raise BracketingError("no sign change", [(0.01, -1.0)])

        monkeypatch.setattr(analysis_mod, "norm_threshold", failing)
        rows = threshold_vs_waterfilling((10.0,))
        assert rows[0].r_threshold is None
        assert rows[0].gap is None
        assert "no sign change" in rows[0].error
