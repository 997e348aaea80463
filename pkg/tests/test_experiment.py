import os
import time

import mpmath
import pytest
from mpmath import mpf

from wkbborel.experiment import (CSV_FIELDS, ComparisonRecord, MetadataMismatchError, RunConfig,
                                 auto_digits, cache_coefficients, compare_level, emit_csv,
                                 energy_scale, invariant_checks, load_coefficients, m_window,
                                 read_csv)
from wkbborel.numerics import PrecisionContext, leading_const
from wkbborel.wkb import CacheIntegrityError


def record(N, Delta, E_oaa_gap=0.0, flagged=False, sigma="1e-40"):
    E = mpf(10) + N
    Delta = mpf(Delta)
    return ComparisonRecord(N, 1 / (mpf(N) + mpf(1) / 2) ** 2, E, E - Delta + mpf(E_oaa_gap),
                            E - Delta, mpf(sigma), Delta, int(mpmath.sign(Delta)), mpf("1e-5"),
                            flagged=flagged)


def law(N):
    return (-1) ** N * mpmath.exp(-mpmath.pi * N)


def test_m_window():
    assert m_window(2) == [2, 3, 4, 5, 6, 7, 8]
    assert m_window(0) == [0, 1, 2, 3]
    assert m_window(10, halfwidth=0) == [22]


def test_auto_digits():
    assert auto_digits(0) == 120
    assert auto_digits(100) == 137 + 60
    assert auto_digits(200) > auto_digits(100)


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(n_from=3, n_to=2)
    with pytest.raises(ValueError):
        RunConfig(digits=10)
    with pytest.raises(ValueError):
        RunConfig(alpha_phase=mpmath.pi)
    with pytest.raises(ValueError):
        RunConfig(series_digits=10)
    assert list(RunConfig(n_from=2, n_to=4).levels) == [2, 3, 4]


def test_energy_scale():
    with mpmath.workdps(50):
        ctx = PrecisionContext(50)
        assert abs(energy_scale(mpf(1), ctx) - leading_const(ctx)) < mpf(10) ** -45
        assert abs(energy_scale(mpf(1) / 8, ctx) - 4 * leading_const(ctx)) < mpf(10) ** -45


def test_csv_columns_and_round_trip(tmp_path):
    recs = [record(3, law(3)), record(1, law(1))]
    path = emit_csv(recs, tmp_path / "sub" / "compare.csv", digits=40)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == list(CSV_FIELDS) and len(CSV_FIELDS) == 9
    assert [ln.split(",")[0] for ln in lines[1:]] == ["1", "3"]  # sorted by N
    back = read_csv(path, digits=40)
    with mpmath.workdps(60):
        for a, b in zip(back, sorted(recs, key=lambda r: r.N)):
            assert a.N == b.N and a.sign == b.sign
            for f in ("delta", "E_exact", "E_oaa", "E_borel", "Delta", "sigma", "floor"):
                want = getattr(b, f)
                assert abs(getattr(a, f) - want) <= mpf(10) ** -38 * max(abs(want), mpf(10) ** -60)


def test_csv_header_only(tmp_path):
    path = emit_csv([], tmp_path / "empty.csv")
    assert path.read_text().splitlines() == [",".join(CSV_FIELDS)]
    assert read_csv(path) == []


def test_csv_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(p)


def test_csv_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        emit_csv([record(1, law(1))], blocker / "x.csv")


def test_invariants_on_synthetic_law():
    recs = [record(N, law(N)) for N in range(1, 9)]
    checks = invariant_checks(recs)
    assert checks and all(c.passed for c in checks)
    assert {c.name for c in checks} == {"sign", "log-law", "oaa-borel"}


def test_invariants_detect_violations():
    recs = [record(2, -law(2)), record(4, law(4) * 100), record(5, law(5), E_oaa_gap=1e-3),
            record(13, mpf("-1e-10")), record(14, mpf("-1e-10")), record(15, mpf("-1e-12"))]
    failed = {(c.name, c.N) for c in invariant_checks(recs) if not c.passed}
    assert failed == {("sign", 2), ("log-law", 4), ("oaa-borel", 5), ("odd-regime", 13),
                      ("even-positive", 14)}


def test_flagged_records_skipped():
    assert invariant_checks([record(3, law(3) * 1e6, flagged=True)]) == []


@pytest.fixture(scope="module")
def small_cache(tmp_path_factory):
    cfg = RunConfig(cache_dir=tmp_path_factory.mktemp("cache"), max_order=60, series_digits=60)
    cache_coefficients(cfg)
    return cfg


def test_cache_files_and_reuse(small_cache):
    paths = cache_coefficients(small_cache)
    assert set(paths) == {"q", "r", "s", "t", "t-tilde", "t-hat"}
    before = {k: p.stat().st_mtime_ns for k, p in paths.items()}
    time.sleep(0.01)
    cache_coefficients(small_cache)
    assert {k: p.stat().st_mtime_ns for k, p in paths.items()} == before
    data = load_coefficients(small_cache)
    assert data["t"].order == 60 and data["q"].max_order == 120


def test_cache_stronger_request_regenerates(tmp_path):
    weak = RunConfig(cache_dir=tmp_path, max_order=60, series_digits=60)
    cache_coefficients(weak)
    strong = RunConfig(cache_dir=tmp_path, max_order=60, series_digits=80)
    cache_coefficients(strong)
    assert load_coefficients(strong)["t"].digits == 80


def test_cache_incompatible_request_raises(small_cache):
    weaker = RunConfig(cache_dir=small_cache.cache_dir, max_order=60, series_digits=40)
    with pytest.raises(MetadataMismatchError):
        cache_coefficients(weaker)
    rotated = RunConfig(cache_dir=small_cache.cache_dir, max_order=60, series_digits=60,
                        alpha_phase=mpmath.pi / 5)
    with pytest.raises(MetadataMismatchError):
        cache_coefficients(rotated)


def test_cache_corruption_detected(tmp_path):
    cfg = RunConfig(cache_dir=tmp_path, max_order=60, series_digits=60)
    paths = cache_coefficients(cfg)
    lines = paths["t"].read_text().splitlines()
    lines[5] = lines[5][:-1] + ("1" if lines[5][-1] != "1" else "2")
    paths["t"].write_text("\n".join(lines) + "\n")
    with pytest.raises(CacheIntegrityError):
        cache_coefficients(cfg)


def test_compare_level_n4(t_series_desk, a_t):
    cfg = RunConfig(n_from=4, n_to=4)
    r = compare_level(4, t_series_desk, a_t, cfg)
    assert not r.flagged and r.sign == 1
    with mpmath.workdps(60):
        assert abs(r.Delta - (r.E_exact - r.E_borel)) < mpf(10) ** -50
        assert abs(r.E_oaa - r.E_borel) < abs(r.Delta) / 100
        assert r.sigma < abs(r.Delta) / 1000
        assert mpf("1e-7") < abs(r.Delta) < mpf("1e-4")


def test_cache_env_default(monkeypatch, tmp_path):
    from wkbborel.experiment import cache_dir
    monkeypatch.setenv("WKBBOREL_CACHE", os.fspath(tmp_path))
    assert cache_dir(RunConfig()) == tmp_path
