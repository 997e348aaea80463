"""End-to-end comparison of WKB eigenvalues (OAA and Borel) with exact eigenvalues."""
from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import mpmath
from mpmath import mpf

from .numerics import PrecisionContext, leading_const
from .resummation import BorelPlan, borel_transform, borel_window, conformal_reexpand, oaa_sum
from .series import (CoefficientSeries, fit_growth, r_series, read_series, s_series, t_series,
                     write_series)
from .spectral import solve_eigenvalue
from .wkb import quantization_series, read_quantization, write_quantization

__all__ = [
    "RunConfig",
    "ComparisonRecord",
    "MetadataMismatchError",
    "CSV_FIELDS",
    "auto_digits",
    "m_window",
    "cache_dir",
    "cache_coefficients",
    "load_coefficients",
    "growth_constant",
    "energy_scale",
    "compare_level",
    "run_compare",
    "emit_csv",
    "read_csv",
    "Check",
    "invariant_checks",
]

log = logging.getLogger(__name__)

CSV_FIELDS = ("N", "delta", "E_exact", "E_oaa", "E_borel", "sigma", "Delta", "sign", "floor")


class MetadataMismatchError(RuntimeError):
    """An existing cache was built with incompatible parameters."""


@dataclass(frozen=True)
class RunConfig:
    """Parameters of a comparison run.

    ``digits = None`` selects the per-level automatic budget
    ``max(120, ceil(pi N / ln 10) + 60)`` for the eigenvalues.
    """

    n_from: int = 0
    n_to: int = 8
    digits: int | None = None
    series_digits: int = 300
    max_order: int = 200
    alpha_phase: mpf = field(default_factory=lambda: mpmath.pi / 8)
    window_center: float = 2.2
    window_halfwidth: int = 3
    cache_dir: Path | None = None
    out: Path = Path("out")

    def __post_init__(self):
        if self.n_from < 0 or self.n_to < self.n_from:
            raise ValueError("need 0 <= n_from <= n_to")
        if self.digits is not None and self.digits < 30:
            raise ValueError("digits must be at least 30")
        if self.series_digits < 30 or self.max_order < 8:
            raise ValueError("series_digits >= 30 and max_order >= 8 required")
        if not (0 < self.alpha_phase < mpmath.pi / 2):
            raise ValueError("alpha_phase must lie in (0, pi/2)")
        if self.window_center <= 0 or self.window_halfwidth < 0:
            raise ValueError("window parameters must be positive")

    @property
    def levels(self):
        return range(self.n_from, self.n_to + 1)


@dataclass(frozen=True)
class ComparisonRecord:
    """One row of the comparison table; ``Delta = E_exact - E_borel``.

    The trailing fields are diagnostics that are not written to CSV.
    """

    N: int
    delta: mpf
    E_exact: mpf
    E_oaa: mpf
    E_borel: mpf
    sigma: mpf
    Delta: mpf
    sign: int
    floor: mpf
    err_quad: float = field(default=0.0, compare=False)
    err_tail: float = field(default=0.0, compare=False)
    stop: int = field(default=0, compare=False)
    flagged: bool = field(default=False, compare=False)


def auto_digits(N: int) -> int:
    return max(120, math.ceil(math.pi * N / math.log(10)) + 60)


def m_window(N: int, center: float = 2.2, halfwidth: int = 3) -> list:
    """Distinct M values ``ceil(center N) - halfwidth ... + halfwidth`` clipped at 0."""
    c = math.ceil(center * N)
    return sorted({max(0, c + k) for k in range(-halfwidth, halfwidth + 1)})


# ---------------------------------------------------------------------------
# coefficient caches


def cache_dir(cfg: RunConfig) -> Path:
    if cfg.cache_dir is not None:
        return Path(cfg.cache_dir)
    return Path(os.environ.get("WKBBOREL_CACHE", "wkbborel-cache"))


def _paths(cfg: RunConfig) -> dict:
    d = cache_dir(cfg)
    return {k: d / f"{k}.txt" for k in ("q", "r", "s", "t", "t-tilde", "t-hat")}


def _header(path: Path) -> dict:
    first = path.read_text().split("\n", 1)[0]
    return dict(kv.split("=", 1) for kv in first.split()[3:] if "=" in kv)


def _cache_state(cfg: RunConfig) -> str:
    """'missing', 'match', or 'stale' (cache weaker than requested); raises on other mismatches."""
    paths = _paths(cfg)
    if not all(p.exists() for p in paths.values()):
        return "missing"
    want = {"M": cfg.max_order, "digits": cfg.series_digits, "n_max": 2 * cfg.max_order}
    stale = False
    for kind, p in paths.items():
        h = _header(p)
        if kind == "q":
            got = {"n_max": int(h["n_max"])}
            need = {"n_max": want["n_max"]}
        else:
            got = {"M": int(h["M"]), "digits": int(h["digits"]), "n_max": int(h["n_max"])}
            need = dict(want)
            if kind in ("t-tilde", "t-hat"):
                meta = p.read_text().split("\n", 2)[1]
                if f"alpha_phase={mpmath.nstr(cfg.alpha_phase, 20)}" not in meta:
                    raise MetadataMismatchError(f"{p}: built with a different alpha phase")
        if kind == "s":
            need["M"] = cfg.max_order + 1
        if got == need:
            continue
        if all(got[k] <= need[k] for k in need):
            stale = True
        else:
            raise MetadataMismatchError(f"{p}: cache built with {got}, requested {need}")
    return "stale" if stale else "match"


def cache_coefficients(cfg: RunConfig) -> dict:
    """Generate q, r, s, t, t~ and t^ caches unless matching ones exist.

    Regenerates when the cache is weaker than requested (fewer digits or
    orders); raises ``MetadataMismatchError`` for any other difference and
    ``CacheIntegrityError`` for corrupted files.
    """
    paths = _paths(cfg)
    state = _cache_state(cfg)
    if state == "match":
        load_coefficients(cfg)  # verifies checksums
        return paths
    if state == "stale":
        log.info("cache in %s is weaker than requested, regenerating", cache_dir(cfg))
    ctx = PrecisionContext(cfg.series_digits)
    n_max = 2 * cfg.max_order
    q = quantization_series(n_max)
    write_quantization(q, paths["q"])
    r = r_series(q, ctx)
    s = s_series(r, ctx)
    t = t_series(s, ctx)
    a_t = growth_constant(t)
    plan = BorelPlan(a_t=a_t, alpha_phase=cfg.alpha_phase)
    tt = borel_transform(t, plan)
    hat = conformal_reexpand(tt)
    flat = [hat[n % 4][n // 4] for n in range(len(tt))]
    th = CoefficientSeries("t-hat", flat, tt.digits, dict(tt.meta))
    for series, key in ((r, "r"), (s, "s"), (t, "t"), (tt, "t-tilde"), (th, "t-hat")):
        write_series(series, paths[key])
    return paths


def load_coefficients(cfg: RunConfig) -> dict:
    """Read every cache file (checksums verified)."""
    paths = _paths(cfg)
    out = {"q": read_quantization(paths["q"])}
    for key in ("r", "s", "t", "t-tilde", "t-hat"):
        out[key] = read_series(paths[key])
    return out


def growth_constant(t: CoefficientSeries) -> mpf:
    """Fitted a_t over the top 80 available orders (the window [120, 200] at desk scale)."""
    hi = t.order
    lo = max(0, hi - 80)
    return fit_growth(t, window=(lo, hi)).a


# ---------------------------------------------------------------------------
# comparison


def energy_scale(delta, ctx: PrecisionContext | None = None) -> mpf:
    """``C delta^(-2/3)``, which turns t(delta) into E_N."""
    ctx = ctx or PrecisionContext(60)
    return leading_const(ctx) * mpf(delta) ** (mpf(-2) / 3)


def compare_level(N: int, t: CoefficientSeries, a_t, cfg: RunConfig, E_exact=None) -> ComparisonRecord:
    """OAA and Borel WKB values of E_N against the exact eigenvalue."""
    digits = cfg.digits or auto_digits(N)
    ctx = PrecisionContext(digits)
    with ctx.workdps():
        delta = 1 / (mpf(N) + mpf(1) / 2) ** 2
        if E_exact is None:
            E_exact = solve_eigenvalue(N, ctx).E
        scale = energy_scale(delta, ctx)
        oaa, stop, floor = oaa_sum(t, delta)
        Ms = m_window(N, cfg.window_center, cfg.window_halfwidth)
        results = borel_window(delta, BorelPlan(a_t=a_t, alpha_phase=cfg.alpha_phase), t, Ms)
        energies = [scale * r.value for r in results]
        E_borel = mpmath.fsum(energies) / len(energies)
        if len(energies) > 1:
            sigma = mpmath.sqrt(mpmath.fsum((e - E_borel) ** 2 for e in energies) / (len(energies) - 1))
        else:
            sigma = mpf(0)
        err_quad = float(scale) * max(r.err_quad for r in results)
        err_tail = float(scale) * max(r.err_tail for r in results)
        Delta = E_exact - E_borel
        eig_err = mpf(10) ** (-digits) * E_exact
        flagged = abs(Delta) <= 10 * (sigma + err_quad + eig_err)
        return ComparisonRecord(N, +delta, +E_exact, scale * oaa, +E_borel, +sigma, +Delta,
                                int(mpmath.sign(Delta)), scale * floor, err_quad, err_tail, stop,
                                bool(flagged))


def run_compare(cfg: RunConfig, t: CoefficientSeries | None = None, a_t=None, exact=None) -> list:
    """Comparison records for every level in ``cfg.levels`` (ordered by N)."""
    if t is None:
        cache_coefficients(cfg)
        t = load_coefficients(cfg)["t"]
    if a_t is None:
        a_t = growth_constant(t)
    exact = exact or {}
    return [compare_level(N, t, a_t, cfg, exact.get(N)) for N in cfg.levels]


# ---------------------------------------------------------------------------
# CSV


def _fmt(v, digits):
    if isinstance(v, int):
        return str(v)
    with mpmath.workdps(digits + 5):
        return mpmath.nstr(mpmath.mpmathify(v), digits, min_fixed=1, max_fixed=0)


def emit_csv(records, path, digits: int = 60) -> Path:
    """Header plus one row per record, sorted by N, full-precision decimals."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(CSV_FIELDS)
            for r in sorted(records, key=lambda r: r.N):
                wr.writerow([_fmt(getattr(r, f), digits) for f in CSV_FIELDS])
    except OSError as exc:
        raise OSError(f"cannot write comparison table {path}: {exc}") from exc
    return path


def read_csv(path, digits: int = 60) -> list:
    out = []
    with Path(path).open(newline="") as fh, mpmath.workdps(digits + 10):
        rd = csv.reader(fh)
        header = next(rd)
        if tuple(header) != CSV_FIELDS:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in rd:
            vals = dict(zip(CSV_FIELDS, row))
            out.append(ComparisonRecord(
                int(vals["N"]), mpf(vals["delta"]), mpf(vals["E_exact"]), mpf(vals["E_oaa"]),
                mpf(vals["E_borel"]), mpf(vals["sigma"]), mpf(vals["Delta"]), int(vals["sign"]),
                mpf(vals["floor"])))
    return out


# ---------------------------------------------------------------------------
# invariant checks


@dataclass(frozen=True)
class Check:
    """Outcome of one invariant on one level."""

    name: str
    N: int
    passed: bool
    detail: str


def invariant_checks(records) -> list:
    """Evaluate the discrepancy invariants on every non-flagged record.

    * sign(Delta_N) = (-1)^N for N <= 8;
    * |ln|Delta_N| + pi N| / (pi N) < 0.1 for 2 <= N <= 8;
    * |E_oaa - E_borel| < 0.01 |Delta_N| for 1 <= N <= 8;
    * odd levels 13 <= N <= 23: sign(Delta_N) = (-1)^((N-1)/2);
    * even levels N >= 9 in range: Delta_N > 0.
    """
    out = []
    for r in sorted(records, key=lambda r: r.N):
        if r.flagged:
            continue
        N = r.N
        if N <= 8:
            out.append(Check("sign", N, r.sign == (-1) ** N, f"sign {r.sign:+d}"))
        if 2 <= N <= 8:
            dev = abs(mpmath.log(abs(r.Delta)) + mpmath.pi * N) / (mpmath.pi * N)
            out.append(Check("log-law", N, bool(dev < 0.1), f"deviation {mpmath.nstr(dev, 4)}"))
        if 1 <= N <= 8:
            gap = abs(r.E_oaa - r.E_borel)
            out.append(Check("oaa-borel", N, bool(gap < abs(r.Delta) / 100),
                             f"|E_oaa - E_borel| = {mpmath.nstr(gap, 4)}, |Delta| = {mpmath.nstr(abs(r.Delta), 4)}"))
        if N % 2 == 1 and 13 <= N <= 23:
            want = (-1) ** ((N - 1) // 2)
            out.append(Check("odd-regime", N, r.sign == want, f"sign {r.sign:+d}, expected {want:+d}"))
        if N % 2 == 0 and N >= 9:
            out.append(Check("even-positive", N, r.sign > 0, f"sign {r.sign:+d}"))
    return out
