import math
from fractions import Fraction

import numpy as np
import pytest

from noncoia.errors import ConfigurationError
from noncoia.phases import (
    EPS_COS,
    PhasePlan,
    RationalAngle,
    certify_irrational,
    check_phase_plan,
    cosine_min_poly,
    integer_roots,
    irrational_core,
    mean_cos_squared,
    mobius_period_check,
    poly_divmod,
    reduced_fractions,
    sample_phase_plan,
)


def test_rational_angle_normalization():
    assert RationalAngle(6, 4) == RationalAngle(3, 2)
    assert RationalAngle(-1, 4) == RationalAngle(7, 4)      # reduced mod 2*pi
    assert RationalAngle(5, -2) == RationalAngle(3, 2)      # -5*pi/2 = 3*pi/2
    assert RationalAngle(0, 7) == RationalAngle(0, 1)
    q = RationalAngle(9, 6)
    assert (q.num, q.den) == (3, 2)
    assert math.gcd(q.num, q.den) == 1 and 0 <= q.num < 2 * q.den


def test_rational_angle_difference():
    delta = RationalAngle(1, 4) - RationalAngle(1, 6)
    assert (delta.num, delta.den) == (1, 12)
    wrap = RationalAngle(1, 6) - RationalAngle(1, 4)
    assert wrap.radians == pytest.approx(2 * math.pi - math.pi / 12)


@pytest.mark.parametrize(
    "num,den,rational", [(0, 1, True), (1, 1, True), (1, 2, True), (1, 3, True),
                         (2, 3, True), (1, 4, False), (1, 5, False), (1, 6, False),
                         (3, 8, False)]
)
def test_niven_characterization(num, den, rational):
    assert RationalAngle(num, den).has_rational_cosine() is rational


def test_min_poly_right_angle_is_t_squared():
    poly = cosine_min_poly(RationalAngle(1, 2))
    assert poly.coeffs == (1, 0, 0)
    assert poly.eval_int(0) == 0


def test_min_poly_fifth_of_pi():
    poly = cosine_min_poly(RationalAngle(1, 5))
    assert poly.coeffs == (1, 0, -5, 0, 5, 2)
    golden = 2 * math.cos(math.pi / 5)  # the golden ratio
    assert abs(poly.eval_float(golden)) < 1e-12
    # dividing out repeated and rational factors leaves x^2 - x - 1
    assert irrational_core(poly.coeffs) == (1, -1, -1)


def test_min_poly_quarter_pi_divisible_by_x2_minus_2():
    poly = cosine_min_poly(RationalAngle(1, 4))
    quot, rem = poly_divmod(poly.coeffs, (1, 0, -2))
    assert rem == [Fraction(0)]
    assert [int(c) for c in quot] == [1, 0, -2]
    assert irrational_core(poly.coeffs) == (1, 0, -2)


def test_min_poly_monic_integer_small_residual():
    for q in reduced_fractions(24):
        poly = cosine_min_poly(q)
        assert poly.coeffs[0] == 1
        assert all(isinstance(c, int) for c in poly.coeffs)
        assert poly.degree == q.den
        assert abs(poly.eval_float(2 * q.cos())) < 1e-9 * (poly.degree + 1)


def test_certify_known_values():
    assert certify_irrational(RationalAngle(1, 3)).rational_value == Fraction(1, 2)
    assert certify_irrational(RationalAngle(0, 1)).rational_value == Fraction(1)
    assert certify_irrational(RationalAngle(1, 2)).rational_value == Fraction(0)
    assert certify_irrational(RationalAngle(2, 3)).rational_value == Fraction(-1, 2)
    assert certify_irrational(RationalAngle(1, 4)).is_irrational
    assert certify_irrational(RationalAngle(1, 4)).rational_value is None


def test_certify_matches_niven_exhaustively():
    for q in reduced_fractions(24):
        cert = certify_irrational(q)
        assert cert.is_irrational == (not q.has_rational_cosine()), q
        if not cert.is_irrational:
            assert cert.rational_value == q.rational_cosine()


def test_integer_roots_divisor_enumeration():
    # (t - 1)^2 (t + 2) = t^3 - 3t + 2
    assert integer_roots((1, 0, -3, 2)) == [-2, 1]
    # t^2 (t^2 - 3)^2: only integer root is 0
    assert integer_roots((1, 0, -6, 0, 9, 0, 0)) == [0]


def test_mobius_period_three_hand_oracle():
    # sigma = 4 cos^2(pi/3) = 1 gives the integer matrix [[1, -1], [1, 0]];
    # cubing it by hand yields -I.
    m = [[1, -1], [1, 0]]
    m2 = [[m[0][0] * m[0][0] + m[0][1] * m[1][0], m[0][0] * m[0][1] + m[0][1] * m[1][1]],
          [m[1][0] * m[0][0] + m[1][1] * m[1][0], m[1][0] * m[0][1] + m[1][1] * m[1][1]]]
    m3 = [[m2[0][0] * m[0][0] + m2[0][1] * m[1][0], m2[0][0] * m[0][1] + m2[0][1] * m[1][1]],
          [m2[1][0] * m[0][0] + m2[1][1] * m[1][0], m2[1][0] * m[0][1] + m2[1][1] * m[1][1]]]
    assert m3 == [[-1, 0], [0, -1]]
    assert mobius_period_check(3, 1)


def test_mobius_period_four():
    # sigma = 2, eigenvalues 1 +- i whose ratio is a primitive 4th root of
    # unity; M^4 = -4 I.
    mp = np.linalg.matrix_power(np.array([[2.0, -1.0], [2.0, 0.0]]), 4)
    assert np.allclose(mp, -4 * np.eye(2), atol=1e-12)
    assert mobius_period_check(4, 1)
    assert mobius_period_check(5, 2)


def test_mobius_exhaustive_and_errors():
    for p in range(3, 25):
        for a in range(1, p):
            if math.gcd(a, p) == 1:
                assert mobius_period_check(p, a), (p, a)
    with pytest.raises(ValueError):
        mobius_period_check(5, 0)
    with pytest.raises(ValueError):
        mobius_period_check(6, 2)
    with pytest.raises(ConfigurationError):
        mobius_period_check(2, 1)


def _uniform_plan(k, phi_angle, theta_angle):
    theta = tuple(tuple(theta_angle for _ in range(2)) for _ in range(k))
    phi = tuple(tuple(tuple(phi_angle for _ in range(2)) for _ in range(k - 1))
                for _ in range(k))
    return PhasePlan(theta, phi, certified=False, denominator_bound=4)


def test_checker_accepts_quarter_pi_difference():
    plan = _uniform_plan(3, RationalAngle(1, 4), RationalAngle(0, 1))
    assert check_phase_plan(plan)   # 2cos = sqrt(2), certified irrational


def test_checker_rejects_third_pi_difference():
    plan = _uniform_plan(3, RationalAngle(1, 3), RationalAngle(0, 1))
    assert not check_phase_plan(plan)   # cos = 1/2, rational


def test_sampler_deterministic_and_certified():
    plan_a = sample_phase_plan(3, 360, rng_seed=12)
    plan_b = sample_phase_plan(3, 360, rng_seed=12)
    assert plan_a == plan_b
    assert plan_a.certified
    assert check_phase_plan(plan_a)
    assert plan_a != sample_phase_plan(3, 360, rng_seed=13)


def test_sampler_small_bound_and_errors():
    plan = sample_phase_plan(4, 5, rng_seed=0)
    assert check_phase_plan(plan)
    for j, i, k, tau, delta in plan.used_differences():
        assert abs(delta.cos()) >= EPS_COS
    with pytest.raises(ConfigurationError):
        sample_phase_plan(3, 4, rng_seed=0)


def test_coherent_override():
    plan = sample_phase_plan(3, rng_seed=0, coherent_override=True)
    assert not plan.certified
    assert all(t == RationalAngle(0, 1) for row in plan.theta for t in row)
    assert not check_phase_plan(plan)


def test_mean_cos_squared_near_half():
    m = mean_cos_squared(3, 100_000, rng_seed=5)
    assert 0.48 < m < 0.52
