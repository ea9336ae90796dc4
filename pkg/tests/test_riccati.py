import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st

from dustlab.core import LagrangianMarker
from dustlab.errors import BeyondBlowup, NoCertificateError, NoPoleInHorizon
from dustlab.riccati import (BlowupCertificate, Case, ComparisonPath,
                             RiccatiParams, blowup_time_upper_bound,
                             case2_threshold, chae_tadmor_pointwise_bound,
                             check_blowup_conditions, comparison_solution,
                             integrate_comparison_ode)


def marker(density=1.0, w=0.0, l2=None):
    return LagrangianMarker(position=0.0, velocity=0.0, density=density,
                            eig_radial=w, eig_tangential=l2, mass_weight=1.0)


class TestConditions:
    def test_case_one_when_lambda_below_ratio(self):
        cert = check_blowup_conditions(mass=1.0, v_sup=2.0, lam=0.0, n=1, h0=5.0)
        assert cert.case is Case.CASE_ONE
        assert cert.t_bound is not None

    def test_case_two_requires_strong_contraction(self):
        # M=1, v_sup=1, lambda=2, N=1: threshold = sqrt(2*1 - 1) = 1
        assert case2_threshold(1.0, 1.0, 2.0, 1) == pytest.approx(1.0)
        cert = check_blowup_conditions(1.0, 1.0, 2.0, 1, h0=-1.0)
        assert cert.case is Case.NO_CERTIFICATE
        assert cert.t_bound is None
        cert = check_blowup_conditions(1.0, 1.0, 2.0, 1, h0=-2.0)
        assert cert.case is Case.CASE_TWO
        assert cert.threshold_case2 == pytest.approx(1.0)

    def test_threshold_strictness_at_exact_value(self):
        cert = check_blowup_conditions(1.0, 1.0, 2.0, 1, h0=-1.0 - 1e-12)
        assert cert.case is Case.CASE_TWO
        cert = check_blowup_conditions(1.0, 1.0, 2.0, 1, h0=-1.0 + 1e-12)
        assert cert.case is Case.NO_CERTIFICATE

    def test_boundary_case_flagged(self):
        cert = check_blowup_conditions(1.0, 1.0, 1.0, 1, h0=-0.5)
        assert cert.case is Case.BOUNDARY
        assert "boundary" in cert.note
        cert = check_blowup_conditions(1.0, 1.0, 1.0, 1, h0=0.5)
        assert cert.case is Case.NO_CERTIFICATE

    def test_threshold_undefined_below_ratio(self):
        assert case2_threshold(1.0, 1.0, 0.5, 3) is None

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            check_blowup_conditions(0.0, 1.0, 0.0, 1, 0.0)
        with pytest.raises(ValueError):
            RiccatiParams(a=-1.0, b=0.0, h0=0.0)


class TestTimeBound:
    def test_cold_uniform_spot_value(self):
        # a=1, b=1/2, h0=0: T = (pi/2)/sqrt(1/2) = pi/sqrt(2)
        p = RiccatiParams(a=1.0, b=0.5, h0=0.0)
        assert blowup_time_upper_bound(p) == pytest.approx(math.pi / math.sqrt(2))

    def test_b_zero_spot_value(self):
        p = RiccatiParams(a=1.0, b=0.0, h0=-2.0)
        assert blowup_time_upper_bound(p) == pytest.approx(0.5)

    def test_b_negative_spot_value(self):
        # a=1, b=-1, c=1, h0=-2: T = arcoth(2) = 0.5 ln 3
        p = RiccatiParams(a=1.0, b=-1.0, h0=-2.0)
        assert blowup_time_upper_bound(p) == pytest.approx(0.5 * math.log(3.0))

    def test_no_bound_without_blowup(self):
        with pytest.raises(NoCertificateError):
            blowup_time_upper_bound(RiccatiParams(a=1.0, b=0.0, h0=1.0))
        with pytest.raises(NoCertificateError):
            blowup_time_upper_bound(RiccatiParams(a=1.0, b=-1.0, h0=-0.5))

    def test_bound_decreases_with_lambda_in_case_one(self):
        # smaller lambda -> larger b -> faster blowup
        bounds = []
        for lam in (0.0, 0.2, 0.4):
            cert = check_blowup_conditions(1.0, 2.0, lam, 1, h0=0.0)
            bounds.append(cert.t_bound)
        assert bounds[0] < bounds[1] < bounds[2]

    def test_boundary_continuity(self):
        # as b -> 0- and 0+, T should approach the rational-case value -1/(a h0)
        h0 = -2.0
        t_mid = blowup_time_upper_bound(RiccatiParams(1.0, 0.0, h0))
        for b in (1e-8, -1e-8):
            t = blowup_time_upper_bound(RiccatiParams(1.0, b, h0))
            assert t == pytest.approx(t_mid, rel=1e-6)


class TestComparisonSolution:
    def test_initial_value(self):
        for b in (0.7, 0.0, -0.7):
            p = RiccatiParams(a=1.0, b=b, h0=-2.0)
            assert comparison_solution(p, 0.0) == pytest.approx(-2.0)

    def test_tangent_midpoint(self):
        # a=b=1, h0=0: T = pi/2, and y(T/2) = tan(-pi/4) = -1
        p = RiccatiParams(a=1.0, b=1.0, h0=0.0)
        assert comparison_solution(p, math.pi / 4) == pytest.approx(-1.0)

    def test_rational_spot_value(self):
        # a=1, b=0, h0=-2: y(t) = -2/(1-2t); y(0.25) = -4
        p = RiccatiParams(a=1.0, b=0.0, h0=-2.0)
        assert comparison_solution(p, 0.25) == pytest.approx(-4.0)

    def test_beyond_pole_raises(self):
        p = RiccatiParams(a=1.0, b=0.0, h0=-2.0)
        with pytest.raises(BeyondBlowup):
            comparison_solution(p, 0.5)

    def test_bounded_branch_approaches_equilibrium(self):
        p = RiccatiParams(a=1.0, b=-1.0, h0=0.5)
        assert not p.blows_up()
        assert comparison_solution(p, 50.0) == pytest.approx(1.0, abs=1e-10)

    def test_vectorized(self):
        p = RiccatiParams(a=1.0, b=0.0, h0=-2.0)
        ts = np.array([0.0, 0.25])
        np.testing.assert_allclose(comparison_solution(p, ts), [-2.0, -4.0])

    @given(b=st.floats(0.1, 5.0), h0=st.floats(-3.0, 3.0),
           frac=st.floats(0.05, 0.95))
    @hyp_settings(max_examples=150, deadline=None)
    def test_closed_form_satisfies_ode(self, b, h0, frac):
        p = RiccatiParams(a=1.0, b=b, h0=h0)
        t = frac * blowup_time_upper_bound(p)
        eps = 1e-6 * max(1.0, t)
        y_m, y_0, y_p = (comparison_solution(p, t - eps),
                         comparison_solution(p, t),
                         comparison_solution(p, t + eps))
        lhs = (y_p - y_m) / (2 * eps)
        rhs = -p.a * y_0**2 - p.b
        assert lhs == pytest.approx(rhs, rel=1e-4, abs=1e-4 * max(1.0, abs(rhs)))


class TestOracle:
    def test_bracket_contains_closed_form(self):
        for a, b, h0 in ((1.0, 0.5, 0.0), (1.0, 0.0, -2.0), (1.0, -1.0, -2.0),
                         (0.25, 2.0, 1.5)):
            p = RiccatiParams(a=a, b=b, h0=h0)
            t_exact = blowup_time_upper_bound(p)
            path = integrate_comparison_ode(p, until=2 * t_exact + 1.0)
            lo, hi = path.pole_bracket
            assert hi - lo < 1e-8
            assert lo - 1e-9 <= t_exact <= hi + 1e-9

    def test_no_pole_reported_for_bounded_branch(self):
        p = RiccatiParams(a=1.0, b=-1.0, h0=0.5)
        with pytest.raises(NoPoleInHorizon) as exc:
            integrate_comparison_ode(p, until=10.0)
        assert exc.value.times[-1] == pytest.approx(10.0)
        assert abs(exc.value.values[-1] - 1.0) < 1e-6

    def test_no_pole_when_horizon_too_short(self):
        p = RiccatiParams(a=1.0, b=0.5, h0=0.0)  # pole at pi/sqrt(2) ~ 2.22
        with pytest.raises(NoPoleInHorizon):
            integrate_comparison_ode(p, until=1.0)

    def test_path_is_monotone_decreasing_from_cold_start(self):
        p = RiccatiParams(a=1.0, b=0.5, h0=0.0)
        path = integrate_comparison_ode(p, until=5.0)
        assert np.all(np.diff(path.values) < 0)
        assert path.pole_time == pytest.approx(
            0.5 * sum(path.pole_bracket))


class TestPointwiseBound:
    def test_contracting_characteristic(self):
        assert chae_tadmor_pointwise_bound(marker(w=-2.0), n=1) == pytest.approx(0.5)

    def test_expanding_characteristic_none(self):
        assert chae_tadmor_pointwise_bound(marker(w=1.0), n=1) is None

    def test_vacuum_none(self):
        assert chae_tadmor_pointwise_bound(marker(density=0.0, w=-2.0), n=1) is None

    def test_radial_divergence(self):
        # div u0 = l1 + (n-1) l2 = -1/3 - 2/3 = -1 -> bound = 3
        m = marker(w=-1.0 / 3.0, l2=-1.0 / 3.0)
        assert chae_tadmor_pointwise_bound(m, n=3) == pytest.approx(3.0)
