"""Double Borel summation of the t-series with conformal re-expansion.

With ``alpha = exp(i phi)`` and ``m!^2 = alpha^(2(m+1)) int int x^m y^m e^(-alpha(x+y)) dx dy``,

    t(delta) = Re int_0^inf int_0^inf e^(-alpha(x+y)) t~(z) dx dy,   z = x y a_t delta,

where ``t~_m = alpha^(2(m+1)) t_m / (m!^2 a_t^m)``.  The Borel function is
split into four residue classes ``t~(z) = sum_p z^p h_p(z^4)`` and each class
is re-expanded in ``u = z^4/(1+z^4)``.  The M-corrected value subtracts the
degree-(M-1) Taylor head of ``t~`` inside the integral and adds back the exact
head ``sum_{m<M} t_m delta^m``.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import mpmath
import numpy as np
from mpmath import mpc, mpf

from .series import CoefficientSeries

__all__ = [
    "QuadratureParams",
    "BorelPlan",
    "HatSeries",
    "ResummationResult",
    "ResummationRecord",
    "ConvergenceDomainError",
    "TailWarning",
    "NoMinimumError",
    "QuadratureError",
    "borel_transform",
    "conformal_reexpand",
    "reconstruct",
    "hat_eval",
    "hat_tail_estimate",
    "borel_integral",
    "borel_window",
    "oaa_sum",
    "write_records",
    "read_records",
]


class ConvergenceDomainError(ArithmeticError):
    pass


class TailWarning(RuntimeWarning):
    pass


class NoMinimumError(ArithmeticError):
    pass


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuadratureParams:
    """Double-exponential rule ``x = exp(s - exp(-s))`` on ``s in [s_lo, s_hi]`` with step ``h``.

    ``z_direct`` is the |z| below which the Borel tail is summed directly
    instead of through the conformal series.
    """

    h: float = 1 / 32
    s_lo: float = -4.5
    s_hi: float = 4.5
    z_direct: float = 0.5

    def __post_init__(self):
        if not (0 < self.h < 1 and self.s_lo < 0 < self.s_hi and 0 < self.z_direct < 1):
            raise ValueError(f"invalid quadrature parameters {self}")


@dataclass(frozen=True)
class BorelPlan:
    """Parameters of the Borel evaluation.

    ``hat_terms = None`` uses every available conformal coefficient.
    """

    a_t: mpf
    M: int = 0
    alpha_phase: mpf = field(default_factory=lambda: mpmath.pi / 8)
    quad: QuadratureParams = field(default_factory=QuadratureParams)
    hat_terms: int | None = None

    def __post_init__(self):
        if not (0 < self.alpha_phase < mpmath.pi / 2):
            raise ValueError("alpha_phase must lie in (0, pi/2)")
        if not self.a_t > 0:
            raise ValueError("a_t must be positive")
        if self.M < 0:
            raise ValueError("M must be non-negative")
        if self.hat_terms is not None and self.hat_terms < 1:
            raise ValueError("hat_terms must be positive")

    @property
    def alpha(self) -> mpc:
        return mpmath.expj(self.alpha_phase)


@dataclass(frozen=True)
class HatSeries:
    """Conformal coefficients ``classes[p][l]`` of ``sum_l t~_{4l+p} z^(4l) = sum_l t^_{4l+p} u^l``."""

    classes: tuple
    digits: int

    def __post_init__(self):
        if len(self.classes) != 4:
            raise ValueError("HatSeries needs four residue classes")
        object.__setattr__(self, "classes", tuple(tuple(c) for c in self.classes))

    def __getitem__(self, p):
        return self.classes[p]

    def terms(self, p: int) -> int:
        return len(self.classes[p])


@dataclass(frozen=True)
class ResummationResult:
    """``value = sum_{m<M} t_m delta^m + corr``."""

    value: mpf
    corr: mpf
    err_quad: float
    err_tail: float
    M: int = 0
    delta: mpf = mpf(0)


@dataclass(frozen=True)
class ResummationRecord:
    delta: str
    M: int
    value: str
    corr: str
    err_quad: str
    err_tail: str


# ---------------------------------------------------------------------------
# coefficients


def borel_transform(t: CoefficientSeries, plan: BorelPlan) -> CoefficientSeries:
    """``t~_m = alpha^(2(m+1)) t_m / (m!^2 a_t^m)``, with the factorial division done in log form."""
    if t.kind != "t":
        raise ValueError("borel_transform expects a t-series")
    dps = t.digits + int(t.meta.get("guard", 20))
    with mpmath.workdps(dps):
        alpha2 = mpmath.expj(2 * mpf(plan.alpha_phase))
        log_a = mpmath.log(mpf(plan.a_t))
        out = []
        for m, tm in enumerate(t.coeffs):
            if tm == 0:
                out.append(mpc(0))
                continue
            log_mag = mpmath.log(abs(tm)) - 2 * mpmath.loggamma(m + 1) - m * log_a
            out.append(mpmath.sign(tm) * mpmath.exp(log_mag) * alpha2 ** (m + 1))
    return CoefficientSeries("t-tilde", tuple(out), t.digits,
                             {**t.meta, "alpha_phase": mpmath.nstr(plan.alpha_phase, 20),
                              "a_t": mpmath.nstr(plan.a_t, 20)})


def conformal_reexpand(tt: CoefficientSeries) -> HatSeries:
    """Solve the triangular relation between t~ (powers of z^4) and t^ (powers of u).

    Since ``z^4 = u/(1-u)``, ``z^(4l) = sum_j C(l-1+j, j) u^(l+j)``, hence
    ``t^_0 = t~_0`` and ``t^_n = sum_{l=1}^{n} C(n-1, n-l) t~_l`` within each class.
    """
    if len(tt) < 4:
        raise ValueError("need at least four Borel coefficients")
    dps = tt.digits + int(tt.meta.get("guard", 20))
    classes = []
    with mpmath.workdps(dps):
        for p in range(4):
            a = list(tt.coeffs[p::4])
            hat = [a[0]]
            for n in range(1, len(a)):
                hat.append(mpmath.fsum(mpmath.binomial(n - 1, n - k) * a[k] for k in range(1, n + 1)))
            classes.append(tuple(hat))
    return HatSeries(tuple(classes), tt.digits)


def reconstruct(hat: HatSeries, p: int) -> list:
    """Inverse map: ``t~_{4n+p} = sum_{l<=n} (-1)^(n-l) C(n-1, n-l) t^_l`` (from u^l in powers of z^4)."""
    h = hat[p]
    out = [h[0]] if h else []
    with mpmath.workdps(hat.digits + 20):
        for n in range(1, len(h)):
            out.append(mpmath.fsum((-1) ** (n - k) * mpmath.binomial(n - 1, n - k) * h[k]
                                   for k in range(1, n + 1)))
    return out


def _tail_ratio(coeffs, window: int = 8) -> float:
    mags = [abs(complex(c)) for c in coeffs[-window - 1:]]
    ratios = [mags[i + 1] / mags[i] for i in range(len(mags) - 1) if mags[i] > 0]
    if not ratios:
        return 0.0
    return math.exp(sum(math.log(r) for r in ratios) / len(ratios))


def hat_tail_estimate(hat: HatSeries, p: int, z) -> float:
    """Geometric tail model ``|t^_{L-1}| |u|^(L-1) rho|u| / (1 - rho|u|)``.

    ``rho`` is the observed ratio of the last conformal coefficients (capped
    below 1); infinite if ``rho |u| >= 1``.
    """
    c = hat[p]
    z4 = mpmath.mpmathify(z) ** 4
    u = abs(complex(z4 / (1 + z4)))
    q = min(_tail_ratio(c), 1.0) * u
    if q >= 1:
        return math.inf
    return abs(complex(c[-1])) * u ** (len(c) - 1) * q / (1 - q)


def hat_eval(hat: HatSeries, p: int, z, tail_tol=None, margin: float = 1e-9):
    """``sum_l t^_{4l+p} u^l`` with ``u = z^4/(1+z^4)``.

    Raises ``ConvergenceDomainError`` if ``|u| >= 1 - margin``; warns with
    ``TailWarning`` if the observed coefficient ratio exceeds 1 or the tail
    estimate exceeds ``tail_tol``.
    """
    with mpmath.workdps(hat.digits + 20):
        z = mpmath.mpmathify(z)
        z4 = z ** 4
        u = z4 / (1 + z4)
        if abs(u) >= 1 - margin:
            raise ConvergenceDomainError(f"|u| = {mpmath.nstr(abs(u), 12)} outside the convergence disc")
        c = hat[p]
        if _tail_ratio(c) > 1:
            warnings.warn(f"conformal coefficients of class {p} are growing", TailWarning, stacklevel=2)
        val = mpmath.polyval(list(reversed(c)), u)
    if tail_tol is not None and hat_tail_estimate(hat, p, z) > tail_tol:
        warnings.warn("conformal series tail above tolerance", TailWarning, stacklevel=2)
    return val


# ---------------------------------------------------------------------------
# Borel integral


class _Evaluator:
    """Float64 evaluation of the M-corrected Borel integral on a fixed node grid."""

    def __init__(self, t: CoefficientSeries, plan: BorelPlan):
        self.plan = plan
        self.t = t
        tt = borel_transform(t, plan)
        hat = conformal_reexpand(tt)
        L = plan.hat_terms
        avail = min(hat.terms(p) for p in range(4))
        if L is not None and L > avail:
            raise ValueError(f"hat_terms = {L} exceeds the {avail} available coefficients per class")
        L = avail if L is None else L
        self.hat_terms = L
        self.tt = np.array([complex(c) for c in tt.coeffs], dtype=complex)
        self.hat = [np.array([complex(c) for c in hat[p][:L]], dtype=complex) for p in range(4)]
        self.hat_last = np.array([abs(h[-1]) for h in self.hat])
        self.hat_ratio = np.array([min(_tail_ratio(h), 1.0) for h in self.hat])
        q = plan.quad
        s = np.arange(q.s_lo, q.s_hi + q.h / 2, q.h)
        self.x = np.exp(s - np.exp(-s))
        self.w = self.x * (1 + np.exp(-s)) * q.h
        self.alpha = complex(plan.alpha)

    def _borel_values(self, z):
        """t~(z) through the conformal series, and the tail estimate, for real z >= 0."""
        z4 = z ** 4
        u = z4 / (1 + z4)
        total = np.zeros(z.shape, dtype=complex)
        tail = np.zeros(z.shape)
        uL = u ** (self.hat_terms - 1)
        for p in range(4):
            acc = np.zeros(z.shape, dtype=complex)
            for c in self.hat[p][::-1]:
                acc = acc * u + c
            total += z ** p * acc
            q = self.hat_ratio[p] * u
            with np.errstate(divide="ignore"):
                tail += z ** p * self.hat_last[p] * uL * q / (1 - q)
        return total, tail

    def _head(self, z, M):
        acc = np.zeros(z.shape, dtype=complex)
        for c in self.tt[:M][::-1]:
            acc = acc * z + c
        return acc

    def _direct_tail(self, z, M):
        acc = np.zeros(z.shape, dtype=complex)
        for c in self.tt[M:][::-1]:
            acc = acc * z + c
        return acc * z ** M

    def corrections(self, delta, Ms):
        """Re of the double integral of the M-corrected kernel for each M, with error estimates."""
        a_delta = float(self.plan.a_t) * float(delta)
        x, w = self.x, self.w
        # symmetric grid: integrate over i <= j with weight 2 off the diagonal
        X, Y = np.meshgrid(x, x, indexing="ij")
        WX, WY = np.meshgrid(w, w, indexing="ij")
        upper = np.triu(np.ones(X.shape, dtype=bool))
        sym = np.where(np.eye(len(x), dtype=bool), 1.0, 2.0)[upper]
        xs, ys = X[upper], Y[upper]
        weight = WX[upper] * WY[upper] * sym * np.exp(-self.alpha * (xs + ys))
        z = xs * ys * a_delta
        keep = np.abs(weight) > 1e-300
        xs, ys, z, weight = xs[keep], ys[keep], z[keep], weight[keep]
        small = z < self.plan.quad.z_direct
        full, tail = self._borel_values(z[~small])
        ix = np.searchsorted(x, xs)
        iy = np.searchsorted(x, ys)
        coarse = (ix % 2 == 0) & (iy % 2 == 0)
        wc = np.where(coarse, 4 * weight, 0)  # the step-2h sub-rule
        out = []
        err_tail = float(np.sum(np.abs(weight[~small]) * tail))
        for M in Ms:
            if M > len(self.tt):
                raise ValueError(f"M = {M} exceeds the {len(self.tt)} available coefficients")
            R = np.empty(z.shape, dtype=complex)
            R[small] = self._direct_tail(z[small], M)
            R[~small] = full - self._head(z[~small], M)
            fine = float(np.real(np.sum(weight * R)))
            crude = float(np.real(np.sum(wc * R)))
            out.append((fine, abs(fine - crude), 10 * err_tail))
        return out


def _head_sum(t: CoefficientSeries, delta, M):
    with mpmath.workdps(t.digits + int(t.meta.get("guard", 20))):
        delta = mpf(delta)
        return mpmath.fsum(t.coeffs[m] * delta ** m for m in range(M))


def borel_window(delta, plan: BorelPlan, t: CoefficientSeries, Ms) -> list:
    """``borel_integral`` for several M sharing one node grid."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    ev = _Evaluator(t, plan)
    out = []
    for M, (corr, eq, et) in zip(Ms, ev.corrections(delta, list(Ms))):
        head = _head_sum(t, delta, M)
        if not math.isfinite(corr):
            raise QuadratureError(f"non-finite correction integral at M = {M}")
        with mpmath.workdps(t.digits + 20):
            corr_mp = mpf(corr)
            out.append(ResummationResult(head + corr_mp, corr_mp, eq, et, M, mpf(delta)))
    return out


def borel_integral(delta, plan: BorelPlan, t: CoefficientSeries) -> ResummationResult:
    """M-corrected Borel value ``sum_{m<M} t_m delta^m + t_corr^(M)(delta)``.

    The correction is the real part of the double integral of
    ``e^(-alpha(x+y)) [t~(z) - sum_{m<M} t~_m z^m]``; for ``|z| < z_direct`` the
    bracket is summed directly from ``m = M``, elsewhere through the
    conformal series.  ``err_quad`` compares the rule with its step-2h
    sub-rule; ``err_tail`` integrates ten times the conformal truncation estimate.
    """
    return borel_window(delta, plan, t, [plan.M])[0]


# ---------------------------------------------------------------------------
# optimal asymptotic approximation


def oaa_sum(t: CoefficientSeries, delta):
    """Sum up to, not including, the smallest ``|t_m delta^m|``.

    Returns ``(value, stop, floor)`` where ``floor = |t_stop delta^stop|``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    with mpmath.workdps(t.digits + int(t.meta.get("guard", 20))):
        delta = mpf(delta)
        terms = [t.coeffs[m] * delta ** m for m in range(len(t.coeffs))]
        mags = [abs(v) for v in terms]
        stop = min(range(1, len(mags)), key=lambda m: mags[m])
        if stop == len(mags) - 1:
            raise NoMinimumError("terms still decreasing at the last available coefficient")
        return mpmath.fsum(terms[:stop]), stop, mags[stop]


# ---------------------------------------------------------------------------
# records


_FIELDS = ("delta", "M", "value", "corr", "err_quad", "err_tail")


def write_records(results, path, digits: int = 40) -> Path:
    """CSV of ``delta, M, value, corr, err_quad, err_tail`` per evaluation."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(_FIELDS)
        for r in results:
            wr.writerow([mpmath.nstr(r.delta, digits), r.M, mpmath.nstr(r.value, digits),
                         mpmath.nstr(r.corr, 17), repr(r.err_quad), repr(r.err_tail)])
    return path


def read_records(path) -> list:
    with Path(path).open(newline="") as fh:
        rd = csv.DictReader(fh)
        return [ResummationRecord(row["delta"], int(row["M"]), row["value"], row["corr"],
                                  row["err_quad"], row["err_tail"]) for row in rd]
