from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mpf

from wkbborel.numerics import BetaPoleError, PrecisionContext, beta, gamma, leading_const, pi

CTX = PrecisionContext(50)


def q(x: Fraction) -> mpf:
    return mpf(x.numerator) / x.denominator

# rationals away from the Gamma poles, with both signs
rationals = st.fractions(min_value=-6, max_value=6, max_denominator=12).filter(
    lambda x: not (x.denominator == 1 and x <= 0))


def test_context_validation():
    with pytest.raises(ValueError):
        PrecisionContext(29)
    with pytest.raises(ValueError):
        PrecisionContext(40, guard=-1)
    ctx = PrecisionContext(40)
    assert ctx.dps == 60
    assert ctx.widened().guard == 40
    assert ctx.refined(30).digits == 70
    assert ctx.needs_widening(11) and not ctx.needs_widening(10)


def test_context_rounds_to_digits_plus_guard():
    with PrecisionContext(40, guard=10).workdps():
        assert mpmath.mp.dps == 50


def test_beta_half_half_is_pi():
    with CTX.workdps():
        assert abs(beta(Fraction(1, 2), Fraction(1, 2), CTX) - pi(CTX)) < mpf(10) ** -60


def test_beta_quarter_half_against_quadrature():
    with mpmath.workdps(50):
        # int_0^1 t^(-3/4) (1-t)^(-1/2) dt split at 1/2; t = w^4 below and
        # 1 - t = v^2 above remove both endpoint singularities
        half = mpf(1) / 2
        oracle = (mpmath.quad(lambda w: 4 / mpmath.sqrt(1 - w ** 4), [0, half ** (mpf(1) / 4)])
                  + mpmath.quad(lambda v: 2 * (1 - v ** 2) ** (-mpf(3) / 4), [0, mpmath.sqrt(half)]))
        assert mpmath.nstr(oracle, 12) == "5.24411510858"
        assert abs(beta(Fraction(1, 4), Fraction(1, 2), CTX) - oracle) < mpf(10) ** -45


def test_beta_negative_half_integer_by_recurrence():
    # B(a, b - 1) = B(a, b) (a + b - 1) / (b - 1), chained five times from b = 1/2
    a = Fraction(1, 4)
    with CTX.workdps():
        v = beta(a, Fraction(1, 2), CTX)
        b = Fraction(1, 2)
        for _ in range(5):
            v = v * q(a + b - 1) / q(b - 1)
            b -= 1
        assert abs(beta(a, b, CTX) - v) < mpf(10) ** -48 * abs(v)
        # Gamma(-9/2) and Gamma(-17/4) are both negative, so B(1/4, -9/2) > 0
        assert beta(a, b, CTX) > 0


def test_beta_pole():
    with pytest.raises(BetaPoleError):
        beta(0, Fraction(1, 2), CTX)
    with pytest.raises(BetaPoleError):
        gamma(-3, CTX)
    assert beta(Fraction(1, 2), Fraction(-1, 2), CTX) == 0  # Gamma(a + b) pole


@given(rationals, rationals)
@settings(max_examples=40, deadline=None)
def test_beta_symmetric(a, b):
    if (a + b).denominator == 1 and a + b <= 0:
        return
    with CTX.workdps():
        assert abs(beta(a, b, CTX) - beta(b, a, CTX)) <= mpf(10) ** -45 * (1 + abs(beta(a, b, CTX)))


@given(st.fractions(min_value=Fraction(1, 12), max_value=5, max_denominator=12),
       st.fractions(min_value=Fraction(1, 12), max_value=5, max_denominator=12))
@settings(max_examples=20, deadline=None)
def test_beta_gamma_recurrence(a, b):
    # B(a, b + 1) = B(a, b) b / (a + b)
    with CTX.workdps():
        lhs = beta(a, b, CTX) * q(b) / q(a + b)
        rhs = beta(a, b + 1, CTX)
        assert abs(lhs - rhs) <= mpf(10) ** -45 * abs(rhs)


def test_leading_const_value_and_definition():
    c = leading_const(CTX)
    # (3 pi / 5.2441151085842...)^(4/3) = 2.1850693003...
    assert mpmath.nstr(c, 11) == "2.1850693003"
    with CTX.workdps():
        b = beta(Fraction(1, 4), Fraction(1, 2), CTX)
        assert abs(c - mpmath.exp(mpf(4) / 3 * mpmath.log(3 * mpmath.pi / b))) < mpf(10) ** -48


@pytest.mark.parametrize("d", [30, 60, 120])
def test_monotone_refinement(d):
    lo, hi = PrecisionContext(d), PrecisionContext(2 * d)
    for f in (leading_const, lambda c: beta(Fraction(1, 4), Fraction(1, 2), c), pi):
        with hi.workdps():
            assert abs(f(lo) - f(hi)) < mpf(10) ** (-d + 2)


def test_deterministic():
    assert beta(Fraction(3, 4), Fraction(-7, 2), CTX) == beta(Fraction(3, 4), Fraction(-7, 2), CTX)
