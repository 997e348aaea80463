"""Shared fixtures.

The order-200 coefficient caches (WKB order 400, 300 digits) take a few
minutes to build the first time; they are kept in ``tests/.cache`` (or the
directory named by ``WKBBOREL_TEST_CACHE``) and reused afterwards.
"""
from __future__ import annotations

import os
from pathlib import Path

import pytest

from wkbborel.experiment import RunConfig, cache_coefficients, growth_constant, load_coefficients

TEST_CACHE = Path(os.environ.get("WKBBOREL_TEST_CACHE", Path(__file__).parent / ".cache"))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running checks (minutes)")
    config.addinivalue_line("markers", "long: large-N checks, skipped unless WKBBOREL_LONG=1")


ACCEPTANCE = pytest.StashKey[list]()


def pytest_collection_modifyitems(config, items):
    if os.environ.get("WKBBOREL_LONG") == "1":
        return
    skip = pytest.mark.skip(reason="large-N check; set WKBBOREL_LONG=1 to run")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def desk_config() -> RunConfig:
    return RunConfig(cache_dir=TEST_CACHE)


@pytest.fixture(scope="session")
def coeffs(desk_config) -> dict:
    """q, r, s, t, t-tilde and t-hat at desk scale (order 200, 300 digits)."""
    cache_coefficients(desk_config)
    return load_coefficients(desk_config)


@pytest.fixture(scope="session")
def t_series_desk(coeffs):
    return coeffs["t"]


@pytest.fixture(scope="session")
def a_t(t_series_desk):
    return growth_constant(t_series_desk)


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion and return the verdict."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def report(name: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
