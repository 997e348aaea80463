"""Arbitrary-precision contexts and the Beta/Gamma values used by the pipeline.

Real values are plain :class:`mpmath.mpf` numbers and complex values are
:class:`mpmath.mpc`; a :class:`PrecisionContext` fixes how many decimal digits
they are computed with.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

import mpmath
from mpmath import mpf, mpc

RealValue = mpf
ComplexValue = mpc

__all__ = [
    "PrecisionContext",
    "RealValue",
    "ComplexValue",
    "BetaPoleError",
    "gamma",
    "beta",
    "leading_const",
    "pi",
    "to_fraction",
]


class BetaPoleError(ArithmeticError):
    """Raised when B(a, b) is genuinely infinite."""


@dataclass(frozen=True)
class PrecisionContext:
    """Decimal working precision.

    Parameters
    ----------
    digits : int
        Target number of correct decimal digits (at least 30).
    guard : int
        Extra digits carried during intermediate computations.
    """

    digits: int = 50
    guard: int = 20

    def __post_init__(self):
        if int(self.digits) != self.digits or self.digits < 30:
            raise ValueError(f"digits must be an integer >= 30, got {self.digits!r}")
        if int(self.guard) != self.guard or self.guard < 0:
            raise ValueError(f"guard must be a non-negative integer, got {self.guard!r}")

    @property
    def dps(self) -> int:
        return self.digits + self.guard

    @property
    def eps(self) -> mpf:
        """Relative size of one unit in the last target digit."""
        return mpf(10) ** (-self.digits)

    def workdps(self):
        """Context manager running mpmath at ``digits + guard`` digits."""
        return mpmath.workdps(self.dps)

    def widened(self) -> "PrecisionContext":
        """Same target, doubled guard digits."""
        return replace(self, guard=max(2 * self.guard, 20))

    def refined(self, extra: int) -> "PrecisionContext":
        return replace(self, digits=self.digits + extra)

    def needs_widening(self, lost_digits: float) -> bool:
        """Audit rule: cancellation beyond half the guard forces a wider guard."""
        return lost_digits > self.guard / 2


def to_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _nonpositive_int(x: Fraction) -> bool:
    return x.denominator == 1 and x <= 0


def _mp_rational(x: Fraction) -> mpf:
    return mpf(x.numerator) / x.denominator


def gamma(x, ctx: PrecisionContext) -> mpf:
    """Gamma at a rational argument, reflected for x < 1/2."""
    x = to_fraction(x)
    if _nonpositive_int(x):
        raise BetaPoleError(f"Gamma has a pole at {x}")
    with ctx.workdps():
        if x < Fraction(1, 2):
            # Gamma(x) Gamma(1 - x) = pi / sin(pi x)
            v = mpmath.pi / (mpmath.sinpi(_mp_rational(x)) * mpmath.gamma(_mp_rational(1 - x)))
        else:
            v = mpmath.gamma(_mp_rational(x))
    return +v


def _pochhammer_ratio_beta(a: Fraction, k: int, ctx) -> mpf:
    # B(a, k) for a positive integer k: (k-1)! / (a (a+1) ... (a+k-1))
    with ctx.workdps():
        den = mpf(1)
        for i in range(k):
            den *= _mp_rational(a + i)
        return mpmath.factorial(k - 1) / den


def beta(a, b, ctx: PrecisionContext) -> mpf:
    """Euler Beta function B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b) at rationals.

    Poles of Gamma(a + b) make the value zero; a pole of Gamma(a) or Gamma(b)
    that is not cancelled raises :class:`BetaPoleError`.
    """
    a, b = to_fraction(a), to_fraction(b)
    poles_num = _nonpositive_int(a) + _nonpositive_int(b)
    pole_den = _nonpositive_int(a + b)
    if poles_num > pole_den:
        raise BetaPoleError(f"B({a}, {b}) is infinite")
    if poles_num == 1:
        # one pole above, one below: the finite limit needs the other argument
        # to be a positive integer, which a + b <= 0 with a <= 0 guarantees
        pole, other = (a, b) if _nonpositive_int(a) else (b, a)
        return +_pochhammer_ratio_beta(pole, int(other), ctx)
    if pole_den:
        return mpf(0)
    with ctx.workdps():
        v = gamma(a, ctx) * gamma(b, ctx) / gamma(a + b, ctx)
    return +v


def pi(ctx: PrecisionContext) -> mpf:
    with ctx.workdps():
        return +mpmath.pi


def leading_const(ctx: PrecisionContext) -> mpf:
    """[3 pi / B(1/4, 1/2)]^(4/3), the Weyl prefactor of the eigenvalue series."""
    with ctx.workdps():
        b = beta(Fraction(1, 4), Fraction(1, 2), ctx)
        return (3 * mpmath.pi / b) ** (mpf(4) / 3)
