"""Exact WKB recursion for V = x^4 and the Dunham quantization coefficients.

The Riccati hierarchy ``S''_{n-1} + sum_j S'_j S'_{n-j} = 0`` is solved in
exact integer arithmetic.  Every order is a single power of ``z`` times a
Laurent polynomial in ``Q = z^4 - E``; powers ``z^a`` with ``a >= 4`` are
reduced with ``z^4 = Q + E``.  With ``S'_0^2 = -Q`` every order carries a pure
phase ``i^(1-n)`` times a real term list, so all arithmetic stays in Q.

Contour integrals around the cut between the turning points reduce to
``(1/2i) oint z^a Q^(-k-1/2) dz = (-1)^k B((a+1)/4, 1/2-k) E^((a+1)/4-k-1/2) / 2``
for even ``a`` and vanish for odd ``a``.
"""
from __future__ import annotations

import hashlib
from collections import namedtuple
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import lcm
from pathlib import Path

from gmpy2 import mpz

__all__ = [
    "TermList",
    "ContourTerm",
    "QuantizationSeries",
    "UnsupportedTermError",
    "SignViolationError",
    "wkb_orders",
    "recursion_residual",
    "reduce_contour",
    "odd_order_contour",
    "quantization_series",
    "write_quantization",
    "read_quantization",
]

FORMAT_VERSION = 1
HALF = Fraction(1, 2)


class UnsupportedTermError(ValueError):
    pass


class SignViolationError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# term lists

Term = namedtuple("Term", "coeff epow zpow qpow")


def _canonical(pairs):
    """Merge like terms, reduce z^a (a >= 4) with z^4 = Q + E, drop zeros."""
    acc = {}
    stack = list(pairs)
    while stack:
        c, e, a, b = stack.pop()
        if c == 0:
            continue
        if a >= 4:
            stack.append((c, e, a - 4, b + 1))
            stack.append((c, e + 1, a - 4, b))
            continue
        key = (a, b, e)
        acc[key] = acc.get(key, 0) + c
    terms = [Term(Fraction(c), e, a, b) for (a, b, e), c in acc.items() if c != 0]
    terms.sort(key=lambda t: (t.zpow, t.qpow, t.epow))
    return tuple(terms)


@dataclass(frozen=True)
class TermList:
    """Sum of ``coeff * E^epow * z^zpow * (z^4 - E)^qpow`` times ``i^phase``.

    ``qpow`` is an integer or half-integer :class:`~fractions.Fraction`.
    Instances are kept in canonical form: ``zpow < 4``, like terms merged,
    zeros dropped and terms sorted.
    """

    terms: tuple = ()
    order: int | None = None
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, "terms", _canonical(
            (Fraction(t[0]), int(t[1]), int(t[2]), Fraction(t[3])) for t in self.terms))
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def monomial(cls, coeff=1, zpow=0, qpow=0, epow=0, **kw):
        return cls(((coeff, epow, zpow, qpow),), **kw)

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def _check_phase(self, other):
        if self and other and self.phase != other.phase:
            raise ValueError("cannot add term lists with different phases")

    def __add__(self, other):
        self._check_phase(other)
        phase = self.phase if self else other.phase
        return TermList(self.terms + other.terms, phase=phase)

    def __neg__(self):
        return TermList(tuple((-c, e, a, b) for c, e, a, b in self.terms), self.order, self.phase)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return TermList(tuple((c * other, e, a, b) for c, e, a, b in self.terms),
                            self.order, self.phase)
        prod = [(c1 * c2, e1 + e2, a1 + a2, b1 + b2)
                for c1, e1, a1, b1 in self.terms for c2, e2, a2, b2 in other.terms]
        return TermList(tuple(prod), phase=self.phase + other.phase)

    __rmul__ = __mul__

    def derivative(self):
        """d/dz, using d/dz (z^4 - E)^b = 4 b z^3 (z^4 - E)^(b - 1)."""
        out = []
        for c, e, a, b in self.terms:
            if a:
                out.append((c * a, e, a - 1, b))
            if b:
                out.append((c * 4 * b, e, a + 3, b - 1))
        return TermList(tuple(out), phase=self.phase)

    def homogeneous_degree(self):
        """Common value of ``zpow + 4 qpow + 4 epow``, or None when mixed."""
        degs = {t.zpow + 4 * t.qpow + 4 * t.epow for t in self.terms}
        return degs.pop() if len(degs) == 1 else None


# ---------------------------------------------------------------------------
# exact recursion, packed integer convolution

_Order = namedtuple("_Order", "zpow lo2 coeffs")
# order n represents 2^-(n-1) z^zpow sum_i coeffs[i] Q^((lo2 + 2 i)/2), at E = 1


def _bias(length, width):
    return mpz(int.from_bytes((1 << (width - 1)).to_bytes(width // 8, "little") * length, "little"))


def _pack(coeffs, width):
    bias = 1 << (width - 1)
    nb = width // 8
    raw = b"".join((c + bias).to_bytes(nb, "little") for c in coeffs)
    return mpz(int.from_bytes(raw, "little")) - _bias(len(coeffs), width)


def _unpack(x, length, width):
    nb = width // 8
    raw = int(x + _bias(length, width)).to_bytes(length * nb, "little")
    bias = 1 << (width - 1)
    return [int.from_bytes(raw[i * nb:(i + 1) * nb], "little") - bias for i in range(length)]


def _derivative(o: _Order) -> _Order:
    a, lo2, cs = o
    out = [0] * (len(cs) + 1)
    for i, c in enumerate(cs):
        e2 = lo2 + 2 * i
        if a:
            out[i + 1] += c * (a + 2 * e2)
        out[i] += c * 2 * e2
    return _Order((a - 1) % 4, lo2 - 2, out)


@lru_cache(maxsize=4)
def _riccati_orders(n_max: int) -> tuple:
    """Real solutions R_n of R_0^2 = Q, R'_{n-1} + sum_{j=0}^n R_j R_{n-j} = 0 (E = 1).

    Integer numerators N_n = 2^(n-1) R_n obey
    ``N_n = -(N'_{n-1} + sum_{j=1}^{n-1} N_j N_{n-j}) / Q^(1/2)``.
    """
    orders = [_Order(0, 1, [1]), _Order(3, -2, [-1])]
    width, packed = 0, [None]
    for n in range(2, n_max + 1):
        a, lo2, dcs = _derivative(orders[n - 1])
        maxbits = max(max(abs(c).bit_length() for c in orders[j].coeffs) for j in range(1, n))
        need = 2 * maxbits + (4 * n).bit_length() + 8
        if need > width:
            width = ((int(need * 1.1) + 63) // 64) * 64
            packed = [None] + [_pack(orders[j].coeffs, width) for j in range(1, n)]
        else:
            packed.append(_pack(orders[n - 1].coeffs, width))
        prods = []
        for j in range(1, n // 2 + 1):
            oj, ok = orders[j], orders[n - j]
            if (oj.zpow + ok.zpow) % 4 != a:
                raise AssertionError(f"z-power bookkeeping broken at order {n}")
            p = packed[j] * packed[n - j]
            if j != n - j:
                p *= 2
            length = len(oj.coeffs) + len(ok.coeffs) - 1
            if oj.zpow + ok.zpow >= 4:
                p += p << width  # times (Q + 1)
                length += 1
            prods.append((oj.lo2 + ok.lo2, length, p))
        base = min(min(lo for lo, _, _ in prods), lo2)
        top = max(max(lo + 2 * (ln - 1) for lo, ln, _ in prods), lo2 + 2 * (len(dcs) - 1))
        acc = _pack(dcs, width) << (width * ((lo2 - base) // 2))
        for lo, _, p in prods:
            acc += p << (width * ((lo - base) // 2))
        cs = _unpack(acc, (top - base) // 2 + 1, width)
        i0, i1 = 0, len(cs)
        while cs[i0] == 0:
            i0 += 1
        while cs[i1 - 1] == 0:
            i1 -= 1
        orders.append(_Order(a, base + 2 * i0 - 1, [-c for c in cs[i0:i1]]))
    return tuple(orders)


def _as_termlist(n: int, o: _Order) -> TermList:
    scale = Fraction(1, 2 ** (n - 1)) if n else Fraction(1)
    deg = 2 - 3 * n  # homogeneity in (z, E^(1/4))
    terms = []
    for i, c in enumerate(o.coeffs):
        if c:
            b = Fraction(o.lo2 + 2 * i, 2)
            epow = (deg - o.zpow - 4 * b) / 4
            terms.append((c * scale, int(epow), o.zpow, b))
    return TermList(tuple(terms), order=n, phase=1 - n)


def wkb_orders(n_max: int) -> list:
    """Return S'_0 ... S'_{n_max} as canonical term lists.

    ``S'_n = i^(1-n) * terms``; S'_0 is ``i (z^4 - E)^(1/2)`` so that
    ``(S'_0)^2 = -(z^4 - E)``.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    raw = _riccati_orders(max(n_max, 1))
    return [_as_termlist(n, raw[n]) for n in range(n_max + 1)]


def recursion_residual(orders, n: int) -> TermList:
    """``S''_{n-1} + sum_{j=0}^n S'_j S'_{n-j}`` (n >= 1); empty when the recursion holds.

    All pieces share the phase ``i^(2-n)``, so the sum is taken directly.
    """
    total = orders[n - 1].derivative()
    for j in range(n + 1):
        total = total + orders[j] * orders[n - j]
    return total


# ---------------------------------------------------------------------------
# contour integrals


def _gamma_shift(s: Fraction, n: int) -> Fraction:
    """Gamma(s + n) / Gamma(s) for integer n."""
    r = Fraction(1)
    if n >= 0:
        for i in range(n):
            r *= s + i
    else:
        for i in range(1, -n + 1):
            r /= s - i
    return r


def _family_base(a: int) -> Fraction:
    return Fraction(1, 4) if a % 4 == 0 else Fraction(3, 4)


def beta_ratio(x: Fraction, k: int) -> Fraction:
    """B(x, 1/2 - k) / B(x0, 1/2) with x0 = 1/4 or 3/4 and x - x0 a non-negative integer."""
    j = x.numerator // x.denominator
    x0 = x - j
    return (_gamma_shift(x0, j) * _gamma_shift(HALF, -k)
            / _gamma_shift(x0 + HALF, j - k))


ContourTerm = namedtuple("ContourTerm", "coeff epow k family")
ContourTerm.__doc__ = """One reduced contour integral.

``coeff`` multiplies ``B(1/4, 1/2)`` (family ``"even"``) or ``B(3/4, 1/2)``
(family ``"odd"``); it already contains ``(-1)^k / 2`` and the Gamma shifts.
"""


def reduce_contour(t: TermList) -> list:
    """(1/2i) oint around the turning-point cut, term by term.

    Odd z-powers integrate to zero and are dropped.  The phase of ``t`` is
    not applied.
    """
    out = []
    for c, e, a, b in t.terms:
        if a % 2:
            continue
        if b.denominator != 2:
            raise UnsupportedTermError(
                f"term z^{a} (z^4-E)^{b}: integer powers of Q are residues, not Beta integrals")
        k = int(-b - HALF)
        x = Fraction(a + 1, 4)
        coeff = c * (-1) ** (k % 2) * HALF * beta_ratio(x, k)
        epow = e + x - k - HALF
        out.append(ContourTerm(coeff, epow, k, "even" if a % 4 == 0 else "odd"))
    return out


def _binom_frac(beta: Fraction, j: int) -> Fraction:
    r = Fraction(1)
    for i in range(j):
        r = r * (beta - i) / (i + 1)
    return r


def odd_order_contour(n: int, raw=None) -> Fraction:
    """(1/2i) oint S'_n dz / pi for odd n, from residues at z = +-E^(1/4).

    Uses Res_{z=1} z^a (z^4-1)^-m = binom((a-3)/4, m-1) / 4 (substitute u = z^4);
    both real roots contribute equally for odd ``a``.
    """
    if n % 2 == 0:
        raise ValueError("odd orders only")
    o = (raw or _riccati_orders(max(n, 1)))[n]
    beta = Fraction(o.zpow - 3, 4)
    total = Fraction(0)
    for i, c in enumerate(o.coeffs):
        e2 = o.lo2 + 2 * i
        if e2 >= 0 or e2 % 2:
            raise UnsupportedTermError(f"unexpected power Q^{e2}/2 at odd order {n}")
        m = -e2 // 2
        total += c * _binom_frac(beta, m - 1)
    return total * 2 / 4 / 2 ** (n - 1)


# ---------------------------------------------------------------------------
# quantization series


@dataclass(frozen=True)
class QuantizationSeries:
    """Exact coefficients of the all-orders quantization condition.

    With B = B(1/4,1/2) and B' = B(3/4,1/2) the condition reads ::

        B E^{3/4} / (3 eps) - eps B' E^{-3/4} / 16
          + sum_{l>=1} (-1)^(l+1) B  q_e[l] eps^(4l-1) E^{-(12l-3)/4}
          + sum_{l>=1} (-1)^(l+1) B' q_o[l] eps^(4l+1) E^{-(12l+3)/4}  = (N + 1/2) pi

    Index 0 holds the magnitudes of the two leading terms (1/3 and 1/16).
    ``p_e[l]``, ``p_o[l]`` are the multipliers of the single Beta integrals
    with k = 6l - 1 and k = 6l + 2.
    """

    p_even: tuple
    p_odd: tuple
    q_even: tuple
    q_odd: tuple
    max_order: int
    odd_orders_checked: int = field(default=0, compare=False)

    def __post_init__(self):
        for name in ("p_even", "p_odd", "q_even", "q_odd"):
            for ell, v in enumerate(getattr(self, name)):
                if v <= 0:
                    raise SignViolationError(f"{name}[{ell}] = {v} is not positive")

    @staticmethod
    def term_sign(family: str, ell: int) -> int:
        if ell == 0:
            return 1 if family == "even" else -1
        return (-1) ** (ell + 1)


@lru_cache(maxsize=None)
def _w_table(x: Fraction, kmax: int):
    """Integers W_k and common denominator D with (-1)^k B(x,1/2-k)/(2 B(x0,1/2)) = W_k / D."""
    vals = [(-1) ** (k % 2) * HALF * beta_ratio(x, k) for k in range(-1, kmax + 1)]
    den = lcm(*(v.denominator for v in vals))
    return [v.numerator * (den // v.denominator) for v in vals], den


def _even_order_contour(n: int, o: _Order) -> Fraction:
    """(1/2i) oint R_n dz at E = 1, as a multiple of the family base Beta."""
    x = Fraction(o.zpow + 1, 4)
    ks = [int(-Fraction(o.lo2 + 2 * i, 2) - HALF) for i in range(len(o.coeffs))]
    table, den = _w_table(x, max(ks) + 8)
    num = sum(c * table[k + 1] for c, k in zip(o.coeffs, ks))
    return Fraction(num, den * (2 ** (n - 1) if n else 1))


# overall sign of the even-order integrals in the quantization condition; fixed
# by the two leading terms and checked in quantization_series
_DUNHAM_PHASE = -1


def quantization_series(n_max: int = 60) -> QuantizationSeries:
    """Exact q and p coefficients through order eps^(n_max - 1).

    Raises
    ------
    SignViolationError
        If an extracted coefficient does not have the expected sign.
    """
    if n_max < 2 or n_max % 2:
        raise ValueError("n_max must be even and >= 2")
    raw = _riccati_orders(n_max)
    lead = _DUNHAM_PHASE * _even_order_contour(0, raw[0])
    second = _DUNHAM_PHASE * _even_order_contour(2, raw[2])
    if lead != Fraction(1, 3) or second != Fraction(-1, 16):
        raise SignViolationError(f"leading terms {lead}, {second} != 1/3, -1/16")
    if odd_order_contour(1, raw) != -HALF:
        raise SignViolationError("order-1 term must contribute -pi/2")
    for n in range(3, n_max, 2):
        if odd_order_contour(n, raw) != 0:
            raise SignViolationError(f"odd order {n} contributes to the contour integral")
    q_e, q_o, p_e, p_o = [Fraction(1, 3)], [Fraction(1, 16)], [Fraction(1)], [HALF]
    for n in range(4, n_max + 1, 2):
        val = _DUNHAM_PHASE * _even_order_contour(n, raw[n])
        ell = n // 4
        family = "even" if n % 4 == 0 else "odd"
        q = val * QuantizationSeries.term_sign(family, ell)
        if q <= 0:
            raise SignViolationError(f"q_{family}[{ell}] = {q} violates the sign pattern")
        k = 6 * ell - 1 if family == "even" else 6 * ell + 2
        x = Fraction(1, 4) if family == "even" else Fraction(3, 4)
        single = (-1) ** (k % 2) * HALF * beta_ratio(x, k)
        p = (-1) ** ell * val / single
        (q_e if family == "even" else q_o).append(q)
        (p_e if family == "even" else p_o).append(p)
    return QuantizationSeries(tuple(p_e), tuple(p_o), tuple(q_e), tuple(q_o), n_max,
                              odd_orders_checked=len(range(3, n_max, 2)))


def p_from_q(family: str, ell: int, q: Fraction) -> Fraction:
    if ell == 0:
        return Fraction(1) if family == "even" else HALF
    k = 6 * ell - 1 if family == "even" else 6 * ell + 2
    x = Fraction(1, 4) if family == "even" else Fraction(3, 4)
    return -q / ((-1) ** (k % 2) * HALF * beta_ratio(x, k))


# ---------------------------------------------------------------------------
# export


def _checksum(lines) -> str:
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def write_quantization(qs: QuantizationSeries, path) -> Path:
    """Text export: header, one ``q_e <l> <num>/<den>`` line per coefficient, checksum."""
    path = Path(path)
    lines = [f"# wkbborel quantization format={FORMAT_VERSION} n_max={qs.max_order}"]
    for tag, seq in (("q_e", qs.q_even), ("q_o", qs.q_odd)):
        lines += [f"{tag} {ell} {v.numerator}/{v.denominator}" for ell, v in enumerate(seq)]
    lines.append(f"# sha256 {_checksum(lines)}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


class CacheIntegrityError(ValueError):
    pass


def read_quantization(path) -> QuantizationSeries:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[-1].startswith("# sha256 "):
        raise CacheIntegrityError(f"{path}: missing checksum line")
    if lines[-1].split()[2] != _checksum(lines[:-1]):
        raise CacheIntegrityError(f"{path}: checksum mismatch")
    header = dict(kv.split("=") for kv in lines[0].split()[3:])
    if int(header["format"]) != FORMAT_VERSION:
        raise CacheIntegrityError(f"{path}: unsupported format {header['format']}")
    seqs = {"q_e": {}, "q_o": {}}
    for ln in lines[1:-1]:
        tag, ell, val = ln.split()
        seqs[tag][int(ell)] = Fraction(val)
    q_e = tuple(seqs["q_e"][i] for i in range(len(seqs["q_e"])))
    q_o = tuple(seqs["q_o"][i] for i in range(len(seqs["q_o"])))
    p_e = tuple(p_from_q("even", i, q) for i, q in enumerate(q_e))
    p_o = tuple(p_from_q("odd", i, q) for i, q in enumerate(q_o))
    return QuantizationSeries(p_e, p_o, q_e, q_o, int(header["n_max"]))
