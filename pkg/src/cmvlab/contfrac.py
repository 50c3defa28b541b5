"""Continued fractions of frequencies and their convergents.

A frequency is carried as an exact rational approximation together with a
rigorous error bound, so that every floor decision made downstream is either
exact or explicitly refused with :class:`PrecisionExhausted`.  Periodic
expansions (golden mean, silver mean, ``cf:1,2`` ...) are symbolic: their
partial quotients are returned without any floating-point work.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, PrecisionExhausted

DEFAULT_PRECISION = 256
# fractional parts closer than this to a decision point are refused
GUARD_BITS = 64


def working_precision() -> int:
    """Bit precision for irrational frequencies (``CMVLAB_PRECISION`` overrides)."""
    raw = os.environ.get("CMVLAB_PRECISION")
    if raw is None:
        return DEFAULT_PRECISION
    try:
        bits = int(raw)
    except ValueError:
        raise DomainError(f"CMVLAB_PRECISION must be an integer, got {raw!r}")
    if bits < 64:
        raise DomainError("CMVLAB_PRECISION must be at least 64 bits")
    return bits


class PartialQuotients(list):
    """List of partial quotients ``[a_1, ..., a_n]``.

    ``terminated`` is True when the expansion ended early because the
    frequency is rational.
    """

    def __init__(self, terms=(), terminated=False):
        super().__init__(terms)
        self.terminated = terminated

    def __repr__(self):
        tail = ", terminated" if self.terminated else ""
        return f"PartialQuotients({list.__repr__(self)}{tail})"


@dataclass(frozen=True)
class ThetaAffine:
    """The real number ``k * theta + c`` with integer ``k`` and rational ``c``.

    Phases and interval endpoints are stored this way so that expressions such
    as ``phi = theta`` or ``I = [1 - theta, 1)`` stay exact.
    """

    k: int = 0
    c: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "c", Fraction(self.c))

    def __add__(self, other):
        other = as_affine(other)
        return ThetaAffine(self.k + other.k, self.c + other.c)

    def __radd__(self, other):
        return self + other

    def __neg__(self):
        return ThetaAffine(-self.k, -self.c)

    def __sub__(self, other):
        return self + (-as_affine(other))

    def __rsub__(self, other):
        return as_affine(other) - self

    def shift(self, n: int) -> "ThetaAffine":
        """Return ``(k + n) * theta + c``."""
        return ThetaAffine(self.k + n, self.c)

    def value(self, freq: "Frequency") -> float:
        return self.k * float(freq.approx) + float(self.c)

    def __str__(self):
        if self.k == 0:
            return str(self.c)
        head = "theta" if self.k == 1 else f"{self.k}*theta"
        if self.c == 0:
            return head
        return f"{head}{'+' if self.c > 0 else '-'}{abs(self.c)}"


def as_affine(x) -> ThetaAffine:
    """Coerce numbers and the string ``"theta"`` into a :class:`ThetaAffine`."""
    if isinstance(x, ThetaAffine):
        return x
    if isinstance(x, str):
        s = x.strip().lower()
        if s == "theta":
            return ThetaAffine(1, 0)
        if s in ("1-theta", "1 - theta"):
            return ThetaAffine(-1, 1)
        return ThetaAffine(0, _exact_rational(s))
    return ThetaAffine(0, _exact_rational(x))


def _exact_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise DomainError(f"non-finite value {x!r}")
        return Fraction(float(x))
    if isinstance(x, Decimal):
        return Fraction(x)
    if isinstance(x, str):
        try:
            if "/" in x:
                return Fraction(x)
            return Fraction(Decimal(x))
        except (InvalidOperation, ValueError, ZeroDivisionError):
            raise DomainError(f"cannot parse {x!r} as a number")
    raise DomainError(f"cannot interpret {x!r} as an exact rational")


def _periodic_approximation(pattern: Sequence[int], bits: int):
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    j = 0
    # |theta - p_n/q_n| < 1/(q_n q_{n+1}) <= 1/q_n^2
    while 2 * (q.bit_length() - 1) < bits:
        a = pattern[j % len(pattern)]
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        j += 1
    return Fraction(p, q), Fraction(1, q * q)


@dataclass(frozen=True)
class Frequency:
    """A frequency ``theta`` in (0, 1).

    Attributes
    ----------
    approx : Fraction
        Exact rational approximation of ``theta``.
    error : Fraction
        Rigorous bound ``|theta - approx| <= error``; zero for exact rationals.
    pattern : tuple of int or None
        Period of a purely periodic continued fraction, when known.
    name : str
        Display label.
    """

    approx: Fraction
    error: Fraction = Fraction(0)
    pattern: tuple | None = None
    name: str = ""

    def __post_init__(self):
        lo, hi = self.approx - self.error, self.approx + self.error
        if not (0 < lo and hi < 1):
            raise DomainError(f"theta must lie in (0, 1), got approximately {float(self.approx)}")

    # -- constructors -------------------------------------------------
    @classmethod
    def from_cf(cls, terms: Iterable[int], periodic: bool = True, bits: int | None = None, name: str = ""):
        terms = tuple(int(a) for a in terms)
        if not terms:
            raise DomainError("empty continued fraction")
        if any(a < 1 for a in terms):
            raise DomainError("partial quotients must be positive integers")
        if not periodic:
            x = Fraction(0)
            for a in reversed(terms):
                x = 1 / (a + x)
            return cls(x, Fraction(0), None, name or "cf:" + ",".join(map(str, terms)) + " (finite)")
        bits = bits or working_precision()
        approx, err = _periodic_approximation(terms, bits)
        return cls(approx, err, terms, name or "cf:" + ",".join(map(str, terms)))

    @classmethod
    def golden(cls, bits: int | None = None):
        return cls.from_cf((1,), bits=bits, name="golden")

    @classmethod
    def silver(cls, bits: int | None = None):
        return cls.from_cf((2,), bits=bits, name="silver")

    @classmethod
    def coerce(cls, x) -> "Frequency":
        """Build a frequency from a name, decimal, rational, float or mpmath value.

        Decimal strings, floats and fractions are taken as exact rationals.
        An ``mpmath.mpf`` is treated as a rounded real with a half-ulp error.
        """
        if isinstance(x, Frequency):
            return x
        if isinstance(x, str):
            s = x.strip().lower()
            if s in ("golden", "phi"):
                return cls.golden()
            if s == "silver":
                return cls.silver()
            if s.startswith("cf:"):
                return cls.from_cf(int(t) for t in s[3:].split(",") if t.strip())
            return cls(_exact_rational(s), Fraction(0), None, x.strip())
        if hasattr(x, "_mpf_"):
            import mpmath

            man, exp = mpmath.mpf(x).man_exp
            approx = Fraction(int(man)) * Fraction(2) ** int(exp)
            err = Fraction(1, 2 ** (mpmath.mp.prec - 1))
            return cls(approx, err, None, "mpf")
        return cls(_exact_rational(x), Fraction(0), None, repr(x))

    # -- properties ---------------------------------------------------
    @property
    def is_exact(self) -> bool:
        return self.error == 0

    def __float__(self):
        return float(self.approx)

    def cf(self, n_terms: int) -> PartialQuotients:
        return cf_expand(self, n_terms)

    # -- floor decisions ------------------------------------------------
    def floor_affine(self, k: int, c: Fraction | int = 0) -> int:
        """Exact ``floor(k * theta + c)``.

        Raises PrecisionExhausted when the value is not known exactly and
        lies within ``|k| * error + 2**-64`` of an integer.
        """
        k = int(k)
        c = Fraction(c)
        P, Q = self.approx.numerator, self.approx.denominator
        num = k * P * c.denominator + c.numerator * Q
        den = Q * c.denominator
        fl = num // den
        if k == 0 or self.error == 0:
            return fl
        rem = num - fl * den
        en, ed = self.error.numerator, self.error.denominator
        # rem/den <= |k| en/ed + 2^-G  <=>  rem ed 2^G <= (|k| en 2^G + ed) den
        rhs = (abs(k) * en * (1 << GUARD_BITS) + ed) * den
        if rem * ed << GUARD_BITS <= rhs or (den - rem) * ed << GUARD_BITS <= rhs:
            raise PrecisionExhausted(
                f"{k}*theta + {c} lies within working precision of an integer"
            )
        return fl

    def ceil_affine(self, k: int, c: Fraction | int = 0) -> int:
        return -self.floor_affine(-k, -Fraction(c))

    def floor_many(self, k: np.ndarray, c: Fraction | int = 0) -> np.ndarray:
        """Vectorised :meth:`floor_affine` over an integer array ``k``.

        Floats decide every entry whose fractional part is comfortably away from
        an integer; the remaining entries go through the exact path.
        """
        k = np.asarray(k, dtype=np.int64)
        c = Fraction(c)
        approx = k * float(self.approx) + float(c)
        fl = np.floor(approx)
        dist = np.minimum(approx - fl, fl + 1.0 - approx)
        tol = 2.0**-30 + (np.abs(k) + abs(float(c)) + 1.0) * 2.0**-44
        out = fl.astype(np.int64)
        for i in np.nonzero(dist <= tol)[0]:
            out[i] = self.floor_affine(int(k[i]), c)
        return out

    def ceil_many(self, k: np.ndarray, c: Fraction | int = 0) -> np.ndarray:
        return -self.floor_many(-np.asarray(k, dtype=np.int64), -Fraction(c))


def cf_expand(theta, n_terms: int) -> PartialQuotients:
    """First ``n_terms`` partial quotients of ``theta``.

    Periodic frequencies are expanded symbolically.  Rationals return their
    finite expansion with ``terminated=True``.  Otherwise the expansion runs on
    both ends of the error interval and stops with PrecisionExhausted as soon
    as they disagree.
    """
    freq = Frequency.coerce(theta)
    n_terms = int(n_terms)
    if n_terms < 0:
        raise DomainError("n_terms must be non-negative")
    if freq.pattern is not None:
        pat = freq.pattern
        return PartialQuotients([pat[j % len(pat)] for j in range(n_terms)])

    lo, hi = freq.approx - freq.error, freq.approx + freq.error
    terms = []
    while len(terms) < n_terms:
        if lo == 0 and hi == 0:
            return PartialQuotients(terms, terminated=True)
        if lo <= 0 or hi <= 0:
            raise PrecisionExhausted(f"continued fraction undetermined after {len(terms)} terms")
        a_lo, a_hi = math.floor(1 / lo), math.floor(1 / hi)
        if a_lo != a_hi:
            raise PrecisionExhausted(f"continued fraction undetermined after {len(terms)} terms")
        terms.append(a_lo)
        lo, hi = 1 / lo - a_lo, 1 / hi - a_hi
    return PartialQuotients(terms)


@dataclass(frozen=True)
class Convergents:
    """``p[n] / q[n]`` for ``n = 0..N`` with ``p[0] = 0, q[0] = 1``."""

    p: list
    q: list

    def __len__(self):
        return len(self.q)

    def ratio(self, n: int) -> Fraction:
        return Fraction(self.p[n], self.q[n])


def convergents(cf: Sequence[int], n: int | None = None) -> Convergents:
    """Numerators and denominators of the convergents of ``[a_1, a_2, ...]``."""
    cf = [int(a) for a in cf]
    n = len(cf) if n is None else int(n)
    if n > len(cf):
        raise DomainError(f"need {n} partial quotients, have {len(cf)}")
    if any(a < 1 for a in cf[:n]):
        raise DomainError("partial quotients must be positive integers")
    p, q = [0], [1]
    p_prev, q_prev = 1, 0
    for a in cf[:n]:
        p_new, q_new = a * p[-1] + p_prev, a * q[-1] + q_prev
        p_prev, q_prev = p[-1], q[-1]
        p.append(p_new)
        q.append(q_new)
    return Convergents(p, q)


def denominators(cf: Sequence[int], n: int | None = None) -> list:
    """Shorthand for ``convergents(cf, n).q``."""
    return convergents(cf, n).q
