"""High-precision eigenvalues of -psi'' + x^4 psi = E psi by Taylor-series shooting.

The even (odd) solution is started at x = 0 with psi = 1, psi' = 0 (psi = 0,
psi' = 1) and advanced with high-order local Taylor polynomials generated by
the exact recurrence of psi'' = (x^4 - E) psi.  At a matching point deep in
the forbidden region the solution is compared with the decaying WKB tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import mpmath
from mpmath import mpf

from .numerics import PrecisionContext, leading_const

__all__ = [
    "ShootState",
    "ShootResult",
    "EigenResult",
    "WrongIndexError",
    "PrecisionExhaustedError",
    "StepUnderflowError",
    "taylor_coefficients",
    "taylor_step",
    "shoot",
    "mismatch",
    "default_x_max",
    "solve_eigenvalue",
    "wkb_estimate",
    "write_eigen_table",
    "read_eigen_table",
]


class WrongIndexError(RuntimeError):
    pass


class PrecisionExhaustedError(RuntimeError):
    pass


class StepUnderflowError(RuntimeError):
    pass


@dataclass(frozen=True)
class ShootState:
    """Solution data at ``x``; the true values are ``(psi, dpsi) * exp(log_scale)``."""

    x: mpf
    psi: mpf
    dpsi: mpf
    ctx: PrecisionContext
    log_scale: mpf = field(default_factory=lambda: mpf(0))

    def normalized(self) -> "ShootState":
        """Rescale so that max(|psi|, |dpsi|) is 1, moving the factor into ``log_scale``."""
        big = max(abs(self.psi), abs(self.dpsi))
        if big == 0:
            return self
        return replace(self, psi=self.psi / big, dpsi=self.dpsi / big,
                       log_scale=self.log_scale + mpmath.log(big))


@dataclass(frozen=True)
class ShootResult:
    mismatch: mpf
    zeros: int
    x_max: mpf
    steps: int


@dataclass(frozen=True)
class EigenResult:
    """Eigenvalue ``E`` of level ``N`` with its attained precision (decimal digits)."""

    N: int
    E: mpf
    digits: int
    x_max: mpf
    iterations: int

    @property
    def parity(self) -> int:
        return self.N % 2


# ---------------------------------------------------------------------------
# Taylor stepping


def taylor_coefficients(x0, psi, dpsi, E, order: int) -> list:
    """Coefficients c_n of psi(x0 + h) = sum c_n h^n for psi'' = (x^4 - E) psi.

    (n+2)(n+1) c_{n+2} = sum_{k=0}^{4} v_k c_{n-k} with v = (x0^4 - E, 4x0^3, 6x0^2, 4x0, 1).
    """
    if order < 20:
        raise ValueError("Taylor order must be at least 20")
    x2 = x0 * x0
    v = (x2 * x2 - E, 4 * x2 * x0, 6 * x2, 4 * x0, mpf(1))
    c = [mpf(psi), mpf(dpsi)] + [mpf(0)] * (order - 1)
    for n in range(order - 1):
        acc = v[0] * c[n]
        for k in range(1, min(n, 4) + 1):
            acc += v[k] * c[n - k]
        c[n + 2] = acc / ((n + 2) * (n + 1))
    return c


def _evaluate(c, h):
    """psi and psi' of the Taylor polynomial at offset h (Horner)."""
    p = c[-1]
    d = mpf(0)
    for a in reversed(c[:-1]):
        d = d * h + p
        p = p * h + a
    return p, d


def _safe_step(c, tol, cap):
    """Largest h <= cap such that the last Taylor terms stay below tol."""
    h = cap
    for n in range(len(c) - 4, len(c)):
        if c[n] != 0:
            h = min(h, (tol / abs(c[n])) ** (mpf(1) / n))
    return h


def taylor_step(state: ShootState, E, h, order: int) -> ShootState:
    """Advance ``state`` by ``h`` using one Taylor polynomial of the given order."""
    with state.ctx.workdps():
        c = taylor_coefficients(state.x, state.psi, state.dpsi, mpf(E), order)
        psi, dpsi = _evaluate(c, mpf(h))
        return replace(state, x=state.x + h, psi=psi, dpsi=dpsi)


def _order_for(ctx: PrecisionContext) -> int:
    return int(1.2 * ctx.dps) + 20


# ---------------------------------------------------------------------------
# shooting


def _tail_action(E, x_max) -> mpf:
    """Integral of sqrt(x^4 - E) from the turning point to x_max (low precision)."""
    with mpmath.workdps(30):
        E = mpf(E)
        a = E ** mpf(0.25)
        x_max = mpf(x_max)
        if x_max <= a:
            return mpf(0)
        return mpmath.quad(lambda x: mpmath.sqrt(max(x ** 4 - E, 0)), [a, (a + x_max) / 2, x_max])


def default_x_max(E, ctx: PrecisionContext, padding: float = 0.0) -> mpf:
    """Matching point where twice the tail action exceeds ``dps * ln 10``."""
    target = mpf(ctx.dps * math.log(10)) / 2 * (1 + padding)
    with mpmath.workdps(30):
        E = mpf(E)
        a = E ** mpf(0.25)
        lo, hi = a, a + 1
        while _tail_action(E, hi) < target:
            lo, hi = hi, a + 2 * (hi - a)
        for _ in range(40):
            mid = (lo + hi) / 2
            if _tail_action(E, mid) < target:
                lo = mid
            else:
                hi = mid
        return hi * (1 + mpf(padding))


def shoot(E, parity: int, ctx: PrecisionContext, x_max=None, count_zeros: bool = True) -> ShootResult:
    """Integrate from 0 to ``x_max`` and return the scaled tail mismatch and the zero count.

    The mismatch is ``(psi' - L psi) exp(-S)`` with the decaying-tail log-derivative
    ``L = -sqrt(Q) - x^3/Q`` (Q = x^4 - E) and S the tail action up to ``x_max``:
    the growing component is divided by a fixed WKB growth factor, so the
    mismatch is a smooth function of E that changes sign at each eigenvalue.
    """
    if E <= 0:
        raise ValueError("E must be positive")
    if parity not in (0, 1):
        raise ValueError("parity must be 0 (even) or 1 (odd)")
    with ctx.workdps():
        E = mpf(E)
        x_max = default_x_max(E, ctx) if x_max is None else mpf(x_max)
        order = _order_for(ctx)
        tol = mpf(10) ** (-ctx.dps)
        turning = E ** mpf(0.25)
        count_until = turning * mpf(1.1) + 1
        state = ShootState(mpf(0), mpf(1 - parity), mpf(parity), ctx)
        zeros = 0
        last_sign = 0 if parity else 1
        steps = 0
        while state.x < x_max:
            c = taylor_coefficients(state.x, state.psi, state.dpsi, E, order)
            k = max(mpmath.sqrt(abs(state.x ** 4 - E)), state.x ** 2, mpf(1))
            scale = max(abs(c[0]), abs(c[1]) / k)
            h = _safe_step(c, tol * scale, mpf(12) / k)
            h = min(h, x_max - state.x)
            if h < mpf(10) ** (-8):
                raise StepUnderflowError(f"step underflow at x = {mpmath.nstr(state.x, 8)}")
            if count_zeros and state.x < count_until:
                for j in range(1, 9):
                    val, _ = _evaluate(c, h * j / 8)
                    s = int(mpmath.sign(val))
                    if s != 0 and last_sign != 0 and s != last_sign:
                        zeros += 1
                    if s != 0:
                        last_sign = s
            psi, dpsi = _evaluate(c, h)
            state = replace(state, x=state.x + h, psi=psi, dpsi=dpsi).normalized()
            steps += 1
        q = state.x ** 4 - E
        L = -mpmath.sqrt(q) - state.x ** 3 / q
        w = (state.dpsi - L * state.psi) * mpmath.exp(state.log_scale - _tail_action(E, x_max))
        return ShootResult(+w, zeros, x_max, steps)


def mismatch(E, parity: int, ctx: PrecisionContext, x_max=None) -> mpf:
    """Scaled tail mismatch; zero exactly at eigenvalues of the given parity."""
    return shoot(E, parity, ctx, x_max, count_zeros=False).mismatch


# ---------------------------------------------------------------------------
# eigenvalues


def wkb_estimate(N: int, ctx: PrecisionContext | None = None) -> mpf:
    """Two-term WKB estimate C (N+1/2)^(4/3) (1 + delta/(9 pi))."""
    ctx = ctx or PrecisionContext(30)
    with ctx.workdps():
        n = mpf(N) + mpf(1) / 2
        return leading_const(ctx) * n ** (mpf(4) / 3) * (1 + 1 / (9 * mpmath.pi * n * n))


def _bracket(f, N, ctx):
    centre = wkb_estimate(N, ctx)
    n = mpf(N) + mpf(1) / 2
    half = centre / (3 * n) if N > 0 else centre / 4  # about a quarter of the level spacing
    lo, hi = centre - half, centre + half
    flo, fhi = f(lo), f(hi)
    for _ in range(6):
        if mpmath.sign(flo) != mpmath.sign(fhi):
            return lo, hi, flo, fhi
        half *= mpf(1.5)
        lo, hi = centre - half, centre + half
        flo, fhi = f(lo), f(hi)
    raise WrongIndexError(f"no sign change of the mismatch around the estimate for N = {N}")


def solve_eigenvalue(N: int, ctx: PrecisionContext, x_max=None, max_iter: int = 200) -> EigenResult:
    """E_N to ``ctx.digits`` digits by bracketed secant (Illinois) iteration on the mismatch."""
    if N < 0:
        raise ValueError("N must be non-negative")
    parity = N % 2
    with ctx.workdps():
        if x_max is None:
            x_max = default_x_max(wkb_estimate(N, ctx) * mpf(1.2), ctx)
        x_max = mpf(x_max)
        evals = [0]

        def f(E):
            evals[0] += 1
            return shoot(E, parity, ctx, x_max, count_zeros=False).mismatch

        a, b, fa, fb = _bracket(f, N, ctx)
        target = mpf(10) ** (-ctx.digits - 5) * abs(a)
        side = 0
        it = 0
        step = abs(b - a)
        c = a
        while step > target and abs(b - a) > target:
            it += 1
            if it > max_iter:
                raise PrecisionExhaustedError(f"no convergence for N = {N} after {max_iter} steps")
            new = (a * fb - b * fa) / (fb - fa)
            step = abs(new - c)
            c = new
            fc = f(c)
            if fc == 0:
                a = b = c
                break
            if mpmath.sign(fc) == mpmath.sign(fb):
                b, fb = c, fc
                if side == -1:
                    fa /= 2
                side = -1
            else:
                a, fa = c, fc
                if side == 1:
                    fb /= 2
                side = 1
        E = c
        width = min(step, abs(b - a))
        digits = ctx.digits if width == 0 else int(min(ctx.digits, -mpmath.log10(width / abs(E))))
        check = shoot(E, parity, ctx, x_max, count_zeros=True)
        if check.zeros != N // 2:
            raise WrongIndexError(f"expected {N // 2} zeros for N = {N}, counted {check.zeros}")
        return EigenResult(N, +E, digits, x_max, it)


# ---------------------------------------------------------------------------
# eigen table


def write_eigen_table(results, path) -> Path:
    """Plain-text table ``N  E  digits  x_max  iterations``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# N  E  digits  x_max  iterations"]
    for r in sorted(results, key=lambda r: r.N):
        lines.append(f"{r.N}  {mpmath.nstr(r.E, r.digits + 5, min_fixed=-1, max_fixed=0)}  "
                     f"{r.digits}  {mpmath.nstr(r.x_max, 12)}  {r.iterations}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_eigen_table(path) -> list:
    out = []
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        n, e, d, xm, it = line.split()
        with mpmath.workdps(int(d) + 10):
            out.append(EigenResult(int(n), mpf(e), int(d), mpf(xm), int(it)))
    return out
