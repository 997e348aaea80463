import time
from fractions import Fraction

import pytest
from mpmath import mpf

from wkbborel.numerics import PrecisionContext, beta
from wkbborel.wkb import (CacheIntegrityError, QuantizationSeries, SignViolationError, TermList,
                          UnsupportedTermError, odd_order_contour, quantization_series,
                          read_quantization, recursion_residual, reduce_contour, wkb_orders,
                          write_quantization)

CTX = PrecisionContext(40)


@pytest.fixture(scope="module")
def orders():
    return wkb_orders(24)


@pytest.fixture(scope="module")
def q24():
    return quantization_series(24)


def test_order_zero_and_one(orders):
    (t0,) = orders[0].terms
    assert (t0.coeff, t0.zpow, t0.qpow) == (1, 0, Fraction(1, 2))
    assert orders[0].phase == 1  # S'_0 = i (z^4 - E)^(1/2)
    (t1,) = orders[1].terms
    assert (t1.coeff, t1.zpow, t1.qpow) == (-1, 3, -1)  # S'_1 = -z^3 / (z^4 - E)


def test_recursion_residual_is_empty(orders):
    for n in range(1, len(orders)):
        assert not recursion_residual(orders, n), f"residual at order {n}"


def test_termlist_derivative_rule():
    t = TermList.monomial(Fraction(2, 3), zpow=0, qpow=Fraction(5, 2))
    (d,) = t.derivative().terms
    # d/dz (z^4 - E)^b = 4 b z^3 (z^4 - E)^(b - 1)
    assert (d.coeff, d.zpow, d.qpow) == (Fraction(2, 3) * 4 * Fraction(5, 2), 3, Fraction(3, 2))


def test_termlist_canonical_merge():
    a = TermList.monomial(1, zpow=2, qpow=Fraction(-1, 2))
    assert not (a - a)
    assert len(a + a) == 1 and (a + a).terms[0].coeff == 2


def _contour_value(term, ctx):
    base = beta(Fraction(1, 4), Fraction(1, 2), ctx) if term.family == "even" \
        else beta(Fraction(3, 4), Fraction(1, 2), ctx)
    return term.coeff.numerator * base / term.coeff.denominator


def test_reduce_contour_even_family_k5():
    (r,) = reduce_contour(TermList.monomial(1, zpow=0, qpow=Fraction(-11, 2)))
    with CTX.workdps():
        want = -mpf(1) / 2 * beta(Fraction(1, 4), Fraction(1, 2) - 5, CTX)
        assert abs(_contour_value(r, CTX) - want) < mpf(10) ** -45 * abs(want)
    assert r.epow == Fraction(-1, 4) - 5


def test_reduce_contour_odd_family_k2():
    (r,) = reduce_contour(TermList.monomial(1, zpow=2, qpow=Fraction(-5, 2)))
    with CTX.workdps():
        want = mpf(1) / 2 * beta(Fraction(3, 4), Fraction(1, 2) - 2, CTX)
        assert abs(_contour_value(r, CTX) - want) < mpf(10) ** -45 * abs(want)
    assert r.epow == Fraction(1, 4) - 2


def test_reduce_contour_odd_power_vanishes():
    assert reduce_contour(TermList.monomial(1, zpow=1, qpow=Fraction(-3, 2))) == []


def test_reduce_contour_rejects_integer_q_powers():
    with pytest.raises(UnsupportedTermError):
        reduce_contour(TermList.monomial(1, zpow=0, qpow=-2))


def test_reduce_contour_parity_all_orders(orders):
    for n in range(0, len(orders), 2):
        for term in reduce_contour(orders[n]):
            assert term.epow == Fraction(3, 4) - Fraction(3 * n, 4)  # homogeneity in E


def test_e_power_bookkeeping(orders):
    # order 4l carries E^{-(12l-3)/4}, order 4l+2 carries E^{-(12l+3)/4}
    for n in range(4, len(orders), 2):
        ell = n // 4
        want = Fraction(-(12 * ell - 3), 4) if n % 4 == 0 else Fraction(-(12 * ell + 3), 4)
        assert {t.epow for t in reduce_contour(orders[n])} == {want}


def test_odd_orders_beyond_first_do_not_contribute():
    assert odd_order_contour(1) == Fraction(-1, 2)
    for n in range(3, 16, 2):
        assert odd_order_contour(n) == 0


def test_leading_terms(q24):
    assert q24.q_even[0] == Fraction(1, 3)
    assert q24.q_odd[0] == Fraction(1, 16)  # -(eps/16) B(3/4,1/2) E^{-3/4}


def test_exact_anchors_fast():
    start = time.perf_counter()
    q = quantization_series(12)
    assert q.p_odd[0] == Fraction(1, 2)
    assert q.p_even[1] == Fraction(77, 1768)
    assert q.p_odd[1] == Fraction(61061, 62928)
    assert time.perf_counter() - start < 60


def test_positivity(q24):
    for seq in (q24.p_even, q24.p_odd, q24.q_even, q24.q_odd):
        assert all(v > 0 for v in seq)


def test_positivity_enforced():
    with pytest.raises(SignViolationError):
        QuantizationSeries((Fraction(1),), (Fraction(-1),), (Fraction(1, 3),), (Fraction(1, 16),), 2)


def test_n_max_validation():
    with pytest.raises(ValueError):
        quantization_series(3)
    with pytest.raises(ValueError):
        wkb_orders(-1)


def test_quantization_file_round_trip(tmp_path, q24):
    path = write_quantization(q24, tmp_path / "q.txt")
    back = read_quantization(path)
    assert back.q_even == q24.q_even and back.q_odd == q24.q_odd
    assert back.p_even == q24.p_even and back.p_odd == q24.p_odd
    assert path.read_text().splitlines()[1].startswith("q_e 0 1/3")


def test_quantization_file_corruption(tmp_path, q24):
    path = write_quantization(q24, tmp_path / "q.txt")
    lines = path.read_text().splitlines()
    lines[2] = lines[2].replace("1", "2", 1)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CacheIntegrityError):
        read_quantization(path)


def test_desk_scale_coefficients_positive(coeffs):
    q = coeffs["q"]
    assert q.max_order == 400
    assert len(q.q_even) == 101 and len(q.q_odd) == 100
    assert all(v > 0 for v in q.q_even + q.q_odd)


def test_first_correction_matches_closed_form(q24):
    # r_1 = 4 q_o[0] / (3 pi) must equal 1/(12 pi)
    assert 4 * q24.q_odd[0] / 3 == Fraction(1, 12)
