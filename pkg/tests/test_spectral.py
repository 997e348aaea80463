import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mpf

from oracles import hermite_eigenvalue, hermite_ground_state
from wkbborel import spectral
from wkbborel.numerics import PrecisionContext, leading_const
from wkbborel.spectral import (EigenResult, ShootState, WrongIndexError, default_x_max, mismatch,
                               read_eigen_table, shoot, solve_eigenvalue, taylor_coefficients,
                               taylor_step, wkb_estimate, write_eigen_table)

CTX = PrecisionContext(40)


@pytest.fixture(scope="module")
def low_levels():
    return [solve_eigenvalue(N, CTX) for N in range(6)]


def test_taylor_recurrence_about_origin():
    with CTX.workdps():
        c = taylor_coefficients(mpf(0), mpf(1), mpf(0), mpf(0), 24)
        assert c[6] == mpf(1) / 30  # psi'' = x^4 psi
        assert c[12] == mpf(1) / 30 / 132
        assert all(c[k] == 0 for k in range(1, 24) if k % 6)


def test_taylor_step_matches_series():
    with CTX.workdps():
        state = ShootState(mpf(0), mpf(1), mpf(0), CTX)
        h = mpf("0.4")
        out = taylor_step(state, 0, h, 60)
        # psi = sum_k a_k x^(6k) with a_{k+1} = a_k / ((6k+6)(6k+5))
        a, series = mpf(1), mpf(0)
        for k in range(12):
            series += a * h ** (6 * k)
            a /= (6 * k + 6) * (6 * k + 5)
        assert abs(out.psi - series) < mpf(10) ** -45


def test_taylor_order_minimum():
    with pytest.raises(ValueError):
        taylor_coefficients(mpf(0), mpf(1), mpf(0), mpf(1), 10)


@given(st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3), st.floats(0.05, 0.5), st.floats(0.5, 5))
@settings(max_examples=25, deadline=None)
def test_taylor_step_linear(a, h, E):
    with CTX.workdps():
        s = ShootState(mpf("0.3"), mpf("0.7"), mpf("-0.2"), CTX)
        sa = ShootState(mpf("0.3"), a * mpf("0.7"), a * mpf("-0.2"), CTX)
        one, scaled = taylor_step(s, E, h, 60), taylor_step(sa, E, h, 60)
        assert abs(scaled.psi - a * one.psi) < mpf(10) ** -35 * (1 + abs(one.psi))
        assert abs(scaled.dpsi - a * one.dpsi) < mpf(10) ** -35 * (1 + abs(one.dpsi))


@given(st.floats(0.05, 0.4), st.floats(0.5, 5), st.floats(0, 1.5))
@settings(max_examples=25, deadline=None)
def test_taylor_step_reversible(h, E, x0):
    with CTX.workdps():
        s = ShootState(mpf(x0), mpf(1), mpf("0.5"), CTX)
        back = taylor_step(taylor_step(s, E, h, 80), E, -h, 80)
        assert abs(back.psi - s.psi) < mpf(10) ** -35
        assert abs(back.dpsi - s.dpsi) < mpf(10) ** -35


def test_mismatch_brackets_ground_state():
    lo, hi = mismatch(mpf("1.0"), 0, CTX), mismatch(mpf("1.1"), 0, CTX)
    assert mpmath.sign(lo) != mpmath.sign(hi)


def test_odd_parity_has_no_crossing_near_ground_state():
    vals = [mismatch(mpf(E), 1, CTX) for E in ("1.0", "1.03", "1.06", "1.1")]
    assert len({mpmath.sign(v) for v in vals}) == 1


def test_mismatch_monotone_in_bracket():
    lowp = PrecisionContext(30)
    vals = [mismatch(mpf(1) + mpf(k) / 100, 0, lowp, x_max=default_x_max(mpf("1.2"), lowp))
            for k in range(11)]
    diffs = [b - a for a, b in zip(vals, vals[1:])]
    assert all(d > 0 for d in diffs) or all(d < 0 for d in diffs)


def test_mismatch_validation():
    with pytest.raises(ValueError):
        mismatch(mpf(-1), 0, CTX)
    with pytest.raises(ValueError):
        mismatch(mpf(1), 2, CTX)


def test_ground_state_against_basis_oracle():
    res = solve_eigenvalue(0, CTX)
    with mpmath.workdps(50):
        oracle = hermite_ground_state(dps=50)
        assert abs(res.E - oracle) < mpf(10) ** -20 * oracle
        assert mpmath.nstr(res.E, 20) == "1.0603620904841828996"
    assert res.digits >= 35


def test_first_excited_state(low_levels):
    est = wkb_estimate(1)
    assert abs(est - mpf("3.75")) < mpf("0.1")
    with mpmath.workdps(50):
        oracle = hermite_eigenvalue(0, 80, dps=50, parity=1)
        assert abs(low_levels[1].E - oracle) < mpf(10) ** -20
    assert mpmath.nstr(low_levels[1].E, 7) == "3.799673"


def test_interlacing_and_parity(low_levels):
    for a, b in zip(low_levels, low_levels[1:]):
        assert a.E < b.E
        assert a.parity != b.parity


def test_zero_count(low_levels):
    for r in low_levels:
        assert shoot(r.E, r.parity, CTX, r.x_max).zeros == r.N // 2


def test_weyl_large_n():
    res = solve_eigenvalue(50, CTX)
    with mpmath.workdps(40):
        ratio = res.E / (mpf("50.5") ** (mpf(4) / 3))
        assert abs(ratio / leading_const(CTX) - 1) < mpf("0.002")


def test_wrong_index_detected(monkeypatch):
    real = spectral.wkb_estimate
    monkeypatch.setattr(spectral, "wkb_estimate", lambda N, ctx=None: real(N + 2, ctx))
    with pytest.raises(WrongIndexError):
        solve_eigenvalue(0, CTX)


@pytest.mark.slow
@pytest.mark.parametrize("N", range(31))
def test_precision_and_x_max_refinement(N):
    base = solve_eigenvalue(N, CTX)
    finer = solve_eigenvalue(N, CTX.refined(30))
    padded = solve_eigenvalue(N, CTX, x_max=base.x_max * mpf("1.2"))
    tol = mpf(10) ** (-CTX.digits + 5) * base.E
    with mpmath.workdps(80):
        assert abs(finer.E - base.E) < tol
        assert abs(padded.E - base.E) < tol


def test_eigen_table_round_trip(tmp_path, low_levels):
    path = write_eigen_table(low_levels, tmp_path / "eigen.txt")
    back = read_eigen_table(path)
    assert [r.N for r in back] == list(range(6))
    assert path.read_text().splitlines()[0] == "# N  E  digits  x_max  iterations"
    with mpmath.workdps(60):
        for a, b in zip(back, low_levels):
            assert abs(a.E - b.E) < mpf(10) ** (-b.digits) * b.E
            assert isinstance(a, EigenResult)
