"""Formal power series at high precision: r (quantization), s (reversion), t (energies).

Notation: ``F(eps) = sum_m c_m eps^m`` is the bracket of the rescaled
quantization condition ``eps = delta * F(eps)^2`` with ``c_m = (-1)^(l+1) r_m``
for ``m in {2l, 2l+1}``; ``eps(delta) = delta + sum_{m>=2} s_m delta^m`` and
``E_N = C delta^(-2/3) (eps/delta)^(-2/3) = C delta^(-2/3) sum_m t_m delta^m``.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import mpmath
from mpmath import mpf

from .numerics import PrecisionContext, beta
from .wkb import QuantizationSeries

__all__ = [
    "CoefficientSeries",
    "GrowthModel",
    "InconsistencyError",
    "PrecisionLossError",
    "SignPatternError",
    "NonConvergenceError",
    "r_series",
    "s_series",
    "t_series",
    "bracket_coefficients",
    "fit_growth",
    "rescaled",
    "roundtrip_residual",
    "write_series",
    "read_series",
]

def T_SIGN(ell: int) -> int:
    """Sign shared by t_{2l} and t_{2l+1} for l >= 1 (t_2 < 0, t_4 > 0, ...)."""
    return (-1) ** ell


KINDS = ("r", "s", "t", "t-tilde", "t-hat")
FORMAT_VERSION = 1


class InconsistencyError(ArithmeticError):
    pass


class PrecisionLossError(ArithmeticError):
    pass


class SignPatternError(ArithmeticError):
    def __init__(self, index, value):
        super().__init__(f"t_{index} = {mpmath.nstr(value, 8)} breaks the sign pattern (-1)^l")
        self.index = index


class NonConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class CoefficientSeries:
    """Coefficients ``coeffs[m]`` of one of the series r, s, t, t-tilde, t-hat."""

    kind: str
    coeffs: tuple
    digits: int
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown series kind {self.kind!r}")
        object.__setattr__(self, "coeffs", tuple(self.coeffs))

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, m):
        return self.coeffs[m]

    @property
    def order(self) -> int:
        """Highest stored index."""
        return len(self.coeffs) - 1

    def truncated(self, n_terms: int) -> "CoefficientSeries":
        return CoefficientSeries(self.kind, self.coeffs[:n_terms], self.digits, dict(self.meta))


@dataclass(frozen=True)
class GrowthModel:
    """Large-order law ``|c_m| ~ m!^2 a^m (m+1)^nu``."""

    a: mpf
    nu: Fraction
    fit_window: tuple
    residual: mpf
    extrapolated: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("growth constant must be positive")


# ---------------------------------------------------------------------------
# truncated series arithmetic (lists of mpf, length = number of terms kept)


def _mul(a, b, n):
    out = []
    for k in range(n):
        lo, hi = max(0, k - len(b) + 1), min(k, len(a) - 1)
        if lo > hi:
            out.append(mpf(0))
        else:
            out.append(mpmath.fdot(a[lo:hi + 1], b[k - lo::-1][:hi - lo + 1]))
    return out


def _power(f, alpha, n, audit=None):
    """f^alpha for f[0] = 1 via f g' = alpha f' g."""
    if f[0] != 1:
        raise ValueError("power expects a unit constant term")
    g = [mpf(1)] + [mpf(0)] * (n - 1)
    for m in range(1, n):
        terms = [(alpha * k - (m - k)) * f[k] * g[m - k] for k in range(1, min(m, len(f) - 1) + 1)]
        g[m] = mpmath.fsum(terms) / m
        if audit is not None:
            audit.observe(terms, g[m] * m)
    return g


def _compose_with_derivative(h, e, n):
    """h(e) and h'(e) for a series e with e[0] = 0, truncated to n terms."""
    val = [mpf(0)] * n
    der = [mpf(0)] * n
    val[0] = h[0]
    der[0] = h[1] if len(h) > 1 else mpf(0)
    p = [mpf(1)] + [mpf(0)] * (n - 1)
    for k in range(1, min(len(h), n + 1)):
        # p = e^k has zero coefficients below k; only indices k..n-1 matter
        new = [mpf(0)] * n
        for j in range(k, n):
            lo = k - 1
            new[j] = mpmath.fdot(p[lo:j], e[j - lo:0:-1])
        p = new
        for j in range(k, n):
            val[j] += h[k] * p[j]
            if k + 1 < len(h):
                der[j] += (k + 1) * h[k + 1] * p[j]
    return val, der


class _Audit:
    """Largest cancellation (in decimal digits) seen in audited sums."""

    def __init__(self):
        self.lost = 0.0

    def observe(self, terms, total):
        big = max((abs(t) for t in terms), default=mpf(0))
        if big == 0:
            return
        if total == 0:
            self.lost = max(self.lost, float(mpmath.mp.dps))
        else:
            self.lost = max(self.lost, float(mpmath.log10(big / abs(total))))


# ---------------------------------------------------------------------------
# r, s, t


def bracket_coefficients(r: CoefficientSeries) -> list:
    """c_m = (-1)^(l+1) r_m, the coefficients of the squared bracket."""
    return [(-1) ** (m // 2 + 1) * v for m, v in enumerate(r.coeffs)]


def r_series(q: QuantizationSeries, ctx: PrecisionContext) -> CoefficientSeries:
    """Numeric r_m from the exact quantization coefficients.

    ``r_{2l} = 3 q_e[l] (B/3pi)^(4l)`` and ``r_{2l+1} = 4 q_o[l] (B/3pi)^(4l) / (3 pi)``
    with ``B = B(1/4, 1/2)`` (using ``B(3/4,1/2) B(1/4,1/2) = 4 pi``); ``r_0 = -1``.
    """
    if q.max_order < 2:
        raise ValueError("need quantization coefficients through order 2")
    n_even, n_odd = 2 * len(q.q_even) - 1, 2 * len(q.q_odd) + 1
    top = min(n_even, n_odd)  # number of contiguous r_m
    with ctx.workdps():
        b = beta(Fraction(1, 4), Fraction(1, 2), ctx)
        x4 = (b / (3 * mpmath.pi)) ** 4
        coeffs = []
        for m in range(top):
            ell = m // 2
            if m % 2 == 0:
                qv = q.q_even[ell]
                v = 3 * mpf(qv.numerator) / qv.denominator * x4 ** ell
            else:
                qv = q.q_odd[ell]
                v = 4 * mpf(qv.numerator) / qv.denominator * x4 ** ell / (3 * mpmath.pi)
            coeffs.append(v)
        coeffs[0] = -coeffs[0]
        tol = mpf(10) ** (-ctx.digits + 5)
        if abs(coeffs[0] + 1) > tol or abs(coeffs[1] - 1 / (12 * mpmath.pi)) > tol:
            raise InconsistencyError("r_0 != -1 or r_1 != 1/(12 pi)")
        coeffs = tuple(+c for c in coeffs)
    return CoefficientSeries("r", coeffs, ctx.digits,
                             {"n_max": q.max_order, "guard": ctx.guard})


def _revert(bracket, n):
    """eps(delta) through delta^(n-1) solving delta = H(eps), H(w) = w F(w)^-2 (Newton)."""
    inv2 = _power(bracket, mpf(-2), n)
    h = [mpf(0)] + inv2[: n - 1]
    eps = [mpf(0), mpf(1)] + [mpf(0)] * (n - 2)
    known = 2  # eps correct through delta^(known-1)
    while known < n:
        target = min(n, 2 * known)
        val, der = _compose_with_derivative(h[:target], eps[:target], target)
        resid = list(val)
        resid[1] -= 1
        # Newton correction: resid / der, der[0] = 1
        corr = _power_div(resid, der, target)
        eps = [eps[i] - corr[i] if i < target else mpf(0) for i in range(n)]
        known = target
    return eps


def _power_div(num, den, n):
    """num / den for den[0] != 0."""
    out = [mpf(0)] * n
    for k in range(n):
        acc = num[k] - mpmath.fdot(out[:k], den[k:0:-1]) if k else num[k]
        out[k] = acc / den[0]
    return out


def s_series(r: CoefficientSeries, ctx: PrecisionContext, M: int | None = None) -> CoefficientSeries:
    """Coefficients of eps(delta): ``coeffs[0] = 0``, ``coeffs[1] = 1``, ``coeffs[m] = s_m``.

    The bracket of the eigenvalue formula is ``eps/delta = 1 + sum_{m>=1} s_{m+1} delta^m``.
    """
    M = r.order if M is None else M
    if M > r.order:
        raise ValueError(f"need r through order {M}, have {r.order}")
    for _ in range(3):
        with ctx.workdps():
            bracket = [+v for v in bracket_coefficients(r)[: M + 1]]
            eps = _revert(bracket, M + 2)
            lost = _roundtrip_loss(bracket, eps)
            eps = tuple(+v for v in eps)
        if not ctx.needs_widening(lost):
            break
        ctx = ctx.widened()
    if lost > ctx.guard:
        raise PrecisionLossError(f"reversion lost {lost:.1f} digits with guard {ctx.guard}")
    return CoefficientSeries("s", eps, ctx.digits,
                             {**r.meta, "guard": ctx.guard, "lost_digits": lost})


def _roundtrip_loss(bracket, eps):
    """Digits cancelled in ``delta F(eps)^2``: |F^2|(|eps|) against |eps| per coefficient."""
    n = len(eps)
    f2 = [abs(v) for v in _mul(bracket, bracket, n)]
    mags, _ = _compose_with_derivative(f2, [abs(v) for v in eps], n)
    worst = 0.0
    for j in range(1, n - 1):
        if eps[j + 1] != 0 and mags[j] != 0:
            worst = max(worst, float(mpmath.log10(mags[j] / abs(eps[j + 1]))))
    return worst


def roundtrip_residual(r: CoefficientSeries, s: CoefficientSeries) -> list:
    """Relative residual of ``eps - delta F(eps)^2`` per coefficient."""
    n = len(s.coeffs)
    with mpmath.workdps(s.digits + s.meta.get("guard", 20)):
        bracket = bracket_coefficients(r)[:n]
        eps = list(s.coeffs)
        f2 = _mul(bracket, bracket, n)
        val, _ = _compose_with_derivative(f2, eps, n)
        out = []
        for j in range(1, n):
            rhs = val[j - 1]
            scale = max(abs(eps[j]), abs(rhs), mpf(1))
            out.append(abs(eps[j] - rhs) / scale)
    return out


def t_series(s: CoefficientSeries, ctx: PrecisionContext) -> CoefficientSeries:
    """t_m of ``(1 + sum s_{m+1} delta^m)^(-2/3)``.

    Raises ``SignPatternError`` unless t_{2l} and t_{2l+1} both have sign
    ``(-1)^l`` for every stored l >= 1.
    """
    n = len(s.coeffs) - 1
    audit = _Audit()
    with ctx.workdps():
        bracket = [mpf(s.coeffs[m + 1]) for m in range(n)]
        t = _power(bracket, mpf(-2) / 3, n, audit)
        t = tuple(+v for v in t)
    for ell in range(1, (n + 1) // 2 + 1):
        for m in (2 * ell, 2 * ell + 1):
            if m < n and mpmath.sign(t[m]) != T_SIGN(ell):
                raise SignPatternError(m, t[m])
    return CoefficientSeries("t", t, ctx.digits,
                             {**s.meta, "guard": ctx.guard, "lost_digits_power": audit.lost})


# ---------------------------------------------------------------------------
# large-order growth


def rescaled(series: CoefficientSeries, a, nu=Fraction(-5, 2)) -> list:
    """|c_m| / (m!^2 a^m (m+1)^nu)."""
    out = []
    with mpmath.workdps(30):
        a = mpf(a)
        nu = mpf(nu.numerator) / nu.denominator if isinstance(nu, Fraction) else mpf(nu)
        for m, c in enumerate(series.coeffs):
            out.append(abs(c) / (mpmath.factorial(m) ** 2 * a ** m * mpf(m + 1) ** nu))
    return out


def _richardson(seq, start, levels):
    """Richardson extrapolation of seq[m] = A + b/m + c/m^2 + ... from m = start."""
    total = mpf(0)
    for j in range(levels + 1):
        total += (mpf(-1) ** (levels - j) * mpf(start + j) ** levels * seq[start + j]
                  / (math.factorial(j) * math.factorial(levels - j)))
    return total


def fit_growth(series: CoefficientSeries, nu_fixed=Fraction(-5, 2), window=(120, 200),
               levels: int = 4, tol: float = 1e-6) -> GrowthModel:
    """Fit ``a`` in ``|c_m| ~ m!^2 a^m (m+1)^nu`` with nu fixed.

    Even and odd members carry different constant prefactors, so the ratio is
    taken within one parity class,
    ``g_m = sqrt(|c_{m+2}/c_m| / ((m+1)(m+2))^2 * ((m+1)/(m+3))^nu)``,
    which tends to ``a`` with corrections in powers of 1/m.  Each class is
    Richardson-extrapolated at the top of the window and the two results are
    averaged.

    Raises
    ------
    NonConvergenceError
        If the extrapolants over the last part of the window spread by more
        than ``tol`` relative, or the two parity classes disagree by more.
    """
    lo, hi = window
    if hi - lo < 20:
        raise ValueError("fit window must span at least 20 indices")
    if hi > series.order:
        raise ValueError(f"window end {hi} beyond available order {series.order}")
    nu = Fraction(nu_fixed)
    with mpmath.workdps(40):
        nuv = mpf(nu.numerator) / nu.denominator
        c = [abs(mpf(v)) for v in series.coeffs[: hi + 1]]
        estimates, extrap_all = [], []
        for parity in (0, 1):
            ms = [m for m in range(lo, hi - 1) if m % 2 == parity]
            seq = {}  # keyed by m // 2 so that the corrections are powers of 1/key
            for m in ms:
                ratio = c[m + 2] / c[m] / (mpf(m + 1) * (m + 2)) ** 2 * (mpf(m + 1) / (m + 3)) ** nuv
                seq[m // 2] = mpmath.sqrt(ratio)
            keys = sorted(seq)
            extrap = [_richardson(seq, n - levels, levels) for n in keys[levels:]]
            tail = extrap[-max(4, len(extrap) // 4):]
            spread = max(tail) - min(tail)
            if spread > tol * abs(extrap[-1]):
                raise NonConvergenceError(
                    f"growth constant not settled in parity class {parity}: "
                    f"spread {mpmath.nstr(spread, 3)}")
            estimates.append(extrap[-1])
            extrap_all.extend(extrap[-4:])
        a = (estimates[0] + estimates[1]) / 2
        if abs(estimates[0] - estimates[1]) > tol * a:
            raise NonConvergenceError(f"parity classes give different growth constants: {estimates}")
        resc = rescaled(CoefficientSeries(series.kind, series.coeffs[: hi + 1], series.digits), a, nu)
        residual = mpf(0)
        for parity in (0, 1):
            ref = resc[hi - ((hi - parity) % 2)]
            residual = max(residual, max(abs(resc[m] / ref - 1) for m in range(lo, hi + 1)
                                         if m % 2 == parity))
    return GrowthModel(+a, nu, (lo, hi), +residual, tuple(extrap_all))


# ---------------------------------------------------------------------------
# cache files


def _checksum(lines):
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def write_series(series: CoefficientSeries, path) -> Path:
    """Header with metadata, one full-precision value per line, checksum line."""
    path = Path(path)
    meta = {k: v for k, v in series.meta.items() if isinstance(v, (int, str))}
    head = [f"# wkbborel series format={FORMAT_VERSION} kind={series.kind} "
            f"M={series.order} digits={series.digits} n_max={meta.get('n_max', 0)}"]
    extra = " ".join(f"{k}={v}" for k, v in sorted(meta.items()) if k != "n_max")
    if extra:
        head.append(f"# meta {extra}")
    dps = series.digits + int(series.meta.get("guard", 20))
    body = []
    with mpmath.workdps(dps + 5):
        for v in series.coeffs:
            if isinstance(v, mpmath.mpc):
                body.append(f"{mpmath.nstr(v.real, dps, min_fixed=1, max_fixed=0)} "
                            f"{mpmath.nstr(v.imag, dps, min_fixed=1, max_fixed=0)}")
            else:
                body.append(mpmath.nstr(mpmath.mpmathify(v), dps, min_fixed=1, max_fixed=0))
    lines = head + body
    lines.append(f"# sha256 {_checksum(lines)}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_series(path) -> CoefficientSeries:
    from .wkb import CacheIntegrityError

    lines = Path(path).read_text().splitlines()
    if not lines or not lines[-1].startswith("# sha256 "):
        raise CacheIntegrityError(f"{path}: missing checksum line")
    if lines[-1].split()[2] != _checksum(lines[:-1]):
        raise CacheIntegrityError(f"{path}: checksum mismatch")
    header = dict(kv.split("=", 1) for kv in lines[0].split()[3:])
    if int(header["format"]) != FORMAT_VERSION:
        raise CacheIntegrityError(f"{path}: unsupported format {header['format']}")
    meta = {"n_max": int(header["n_max"])}
    body = lines[1:-1]
    if body and body[0].startswith("# meta "):
        for kv in body[0][7:].split():
            k, v = kv.split("=", 1)
            meta[k] = int(v) if v.lstrip("-").isdigit() else v
        body = body[1:]
    digits = int(header["digits"])
    with mpmath.workdps(digits + int(meta.get("guard", 20))):
        coeffs = []
        for ln in body:
            parts = ln.split()
            coeffs.append(mpf(parts[0]) if len(parts) == 1 else mpmath.mpc(parts[0], parts[1]))
    if len(coeffs) != int(header["M"]) + 1:
        raise CacheIntegrityError(f"{path}: expected {int(header['M']) + 1} values, found {len(coeffs)}")
    return CoefficientSeries(header["kind"], tuple(coeffs), digits, meta)
