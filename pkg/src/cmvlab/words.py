"""Sturmian words, rotation codings and substitution words.

All symbols are computed from exact floor decisions on ``k * theta + c`` (see
:class:`cmvlab.contfrac.Frequency`), so word combinatorics never depend on
floating-point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .contfrac import Frequency, ThetaAffine, as_affine, convergents
from .errors import DomainError, NoRepetitionFound, OutOfWindow, WindowTooSmall

PROVENANCES = ("mechanical-floor", "mechanical-ceiling", "rotation-coding", "substitution")


@dataclass(frozen=True, eq=False)
class Word:
    """A finite window of a two-letter sequence.

    ``symbols[origin_index]`` is the entry at ambient index 0, so the window
    covers ambient indices ``start .. stop - 1`` with ``start = -origin_index``.
    """

    symbols: np.ndarray
    origin_index: int = 0
    provenance: str = "substitution"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.symbols, dtype=np.uint8)
        if arr.ndim != 1:
            raise DomainError("word symbols must be one-dimensional")
        if arr.size and arr.max() > 1:
            raise DomainError("word symbols must be 0 or 1")
        object.__setattr__(self, "symbols", arr)
        if self.provenance not in PROVENANCES:
            raise DomainError(f"unknown provenance {self.provenance!r}")

    @classmethod
    def from_string(cls, s: str, origin_index: int = 0, provenance: str = "substitution"):
        return cls(np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0"), origin_index, provenance)

    def __len__(self):
        return int(self.symbols.size)

    def __str__(self):
        return (self.symbols + ord("0")).astype(np.uint8).tobytes().decode("ascii")

    def __eq__(self, other):
        if isinstance(other, str):
            return str(self) == other
        if isinstance(other, Word):
            return self.origin_index == other.origin_index and np.array_equal(self.symbols, other.symbols)
        return NotImplemented

    @property
    def start(self) -> int:
        return -self.origin_index

    @property
    def stop(self) -> int:
        return self.start + len(self)

    def covers(self, n0: int, n1: int) -> bool:
        """True if ambient indices ``n0 .. n1 - 1`` are inside the window."""
        return self.start <= n0 and n1 <= self.stop

    def at(self, n: int) -> int:
        if not self.start <= n < self.stop:
            raise OutOfWindow(f"index {n} outside word window [{self.start}, {self.stop})")
        return int(self.symbols[n + self.origin_index])

    def segment(self, n0: int, n1: int) -> np.ndarray:
        """Symbols at ambient indices ``n0 .. n1 - 1``."""
        if not self.covers(n0, n1):
            raise OutOfWindow(f"[{n0}, {n1}) outside word window [{self.start}, {self.stop})")
        return self.symbols[n0 + self.origin_index : n1 + self.origin_index]


@dataclass(frozen=True)
class RotationInterval:
    """Arc of the circle R/Z between ``left`` and ``right``.

    Endpoints are numbers or :class:`ThetaAffine` values in [0, 1].  When the
    left endpoint exceeds the right one the arc wraps through 0.
    """

    left: ThetaAffine
    right: ThetaAffine
    left_closed: bool = True
    right_closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "left", as_affine(self.left))
        object.__setattr__(self, "right", as_affine(self.right))
        if self.left == self.right:
            raise DomainError("degenerate interval")
        if self.left.k == self.right.k and (self.right.c - self.left.c) % 1 == 0:
            raise DomainError("interval must have length strictly between 0 and 1 mod 1")

    @classmethod
    def sturmian(cls, ceiling: bool = False):
        """``[1 - theta, 1)`` (or ``(1 - theta, 1]`` for the ceiling variant)."""
        if ceiling:
            return cls(ThetaAffine(-1, 1), ThetaAffine(0, 1), False, True)
        return cls(ThetaAffine(-1, 1), ThetaAffine(0, 1), True, False)

    @classmethod
    def parse(cls, text: str):
        parts = [t.strip() for t in text.split(",")]
        if len(parts) != 2:
            raise DomainError(f"interval must be 'left,right', got {text!r}")
        return cls(as_affine(parts[0]), as_affine(parts[1]))

    def _check_range(self, freq: Frequency):
        for end in (self.left, self.right):
            v = end.value(freq)
            if not -1e-12 <= v <= 1 + 1e-12:
                raise DomainError(f"interval endpoint {end} = {v} outside [0, 1]")

    def wraps(self, freq: Frequency) -> bool:
        # the sign of right - left is an exact decision
        d = self.right - self.left
        return freq.floor_affine(d.k, d.c) < 0


def _phase(phi) -> ThetaAffine:
    return ThetaAffine(1, 0) if phi is None else as_affine(phi)


def _floor_seq(freq: Frequency, ks: np.ndarray, c: Fraction, ceiling: bool) -> np.ndarray:
    return freq.ceil_many(ks, c) if ceiling else freq.floor_many(ks, c)


def mechanical(theta, phi, n: int, variant: str = "floor") -> int:
    """One symbol of the mechanical sequence with slope ``theta`` and phase ``phi``.

    ``floor``: ``floor((n+1) theta + phi) - floor(n theta + phi)``;
    ``ceiling`` uses ceilings instead.
    """
    freq = Frequency.coerce(theta)
    ph = _phase(phi)
    if variant == "floor":
        return freq.floor_affine(ph.k + n + 1, ph.c) - freq.floor_affine(ph.k + n, ph.c)
    if variant == "ceiling":
        return freq.ceil_affine(ph.k + n + 1, ph.c) - freq.ceil_affine(ph.k + n, ph.c)
    raise DomainError(f"variant must be 'floor' or 'ceiling', got {variant!r}")


def mechanical_word(theta, phi, n0: int, n1: int, variant: str = "floor") -> Word:
    """Mechanical sequence on ambient indices ``n0 .. n1 - 1``."""
    if variant not in ("floor", "ceiling"):
        raise DomainError(f"variant must be 'floor' or 'ceiling', got {variant!r}")
    if n1 < n0:
        raise DomainError("empty range")
    freq = Frequency.coerce(theta)
    ph = _phase(phi)
    ks = np.arange(n0 + ph.k, n1 + ph.k + 1, dtype=np.int64)
    fl = _floor_seq(freq, ks, ph.c, variant == "ceiling")
    return Word(np.diff(fl).astype(np.uint8), -n0, "mechanical-" + variant,
                {"theta": freq.name, "phi": str(ph)})


def sturmian_word(theta, n0: int, n1: int) -> Word:
    """The reference word ``s_{theta,theta}`` on ``n0 .. n1 - 1``."""
    return mechanical_word(theta, ThetaAffine(1, 0), n0, n1, "floor")


def _coding_many(freq: Frequency, ph: ThetaAffine, interval: RotationInterval, ns: np.ndarray):
    """Indicator of ``n theta + phi`` (mod 1) in ``interval`` for each ``n``."""
    interval._check_range(freq)
    if interval.wraps(freq):
        comp = RotationInterval(interval.right, interval.left,
                                not interval.right_closed, not interval.left_closed)
        return 1 - _coding_many(freq, ph, comp, ns)
    ns = np.asarray(ns, dtype=np.int64)
    lo, hi = interval.left, interval.right
    # count of integers m with x - hi (<) m (<) x - lo, where x = n theta + phi
    k_lo, c_lo = ns + (ph.k - lo.k), ph.c - lo.c
    k_hi, c_hi = ns + (ph.k - hi.k), ph.c - hi.c
    if interval.left_closed:
        upper = freq.floor_many(k_lo, c_lo)
    else:
        upper = freq.ceil_many(k_lo, c_lo) - 1
    if interval.right_closed:
        lower = freq.ceil_many(k_hi, c_hi)
    else:
        lower = freq.floor_many(k_hi, c_hi) + 1
    return (upper - lower + 1).astype(np.uint8)


def rotation_coding(theta, phi, interval: RotationInterval, n: int) -> int:
    """``chi_I(n theta + phi mod 1)``."""
    freq = Frequency.coerce(theta)
    return int(_coding_many(freq, _phase(phi), interval, np.array([n]))[0])


def rotation_word(theta, phi, interval: RotationInterval, n0: int, n1: int) -> Word:
    freq = Frequency.coerce(theta)
    ph = _phase(phi)
    sym = _coding_many(freq, ph, interval, np.arange(n0, n1, dtype=np.int64))
    return Word(sym, -n0, "rotation-coding", {"theta": freq.name, "phi": str(ph)})


def substitution_word(cf: Sequence[int], k: int) -> Word:
    """The word ``v_k`` built from ``v_{-1} = 1``, ``v_0 = 0``,
    ``v_1 = v_0^{a_1 - 1} v_{-1}`` and ``v_n = v_{n-1}^{a_n} v_{n-2}``."""
    if k < -1:
        raise DomainError("k must be >= -1")
    if k > len(cf):
        raise DomainError(f"need {k} partial quotients, have {len(cf)}")
    words = ["1", "0"]
    for n in range(1, k + 1):
        a = int(cf[n - 1])
        if a < 1:
            raise DomainError("partial quotients must be positive integers")
        if n == 1:
            words.append(words[1] * (a - 1) + words[0])
        else:
            words.append(words[-1] * a + words[-2])
    return Word.from_string(words[k + 1], 0, "substitution")


def check_prefix_identity(cf: Sequence[int], theta, k: int) -> bool:
    """True iff ``v_k`` equals ``s_{theta,theta}`` on ``[0, q_k - 1]``."""
    if k < 1:
        raise DomainError("k must be >= 1")
    v = substitution_word(cf, k)
    q_k = convergents(cf, k).q[k]
    w = sturmian_word(theta, 0, q_k)
    return len(v) == q_k and np.array_equal(v.symbols, w.symbols)


def factor_complexity(word: Word, n: int, window: int | None = None) -> int:
    """Number of distinct length-``n`` factors in the first ``window`` symbols.

    The default window is ``10 n (n + 1)``, capped by the word length.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    if n == 0:
        return 1
    if window is None:
        window = min(len(word), 10 * n * (n + 1))
    if window > len(word) or window < 11 * n:
        raise WindowTooSmall(f"window {window} (word length {len(word)}) too small for n={n}")
    data = word.symbols[:window].tobytes()
    return len({data[i : i + n] for i in range(window - n + 1)})


@dataclass(frozen=True)
class GordonScale:
    n: int
    candidate: str
    matches: tuple
    three_block: bool | None


def gordon_scales(word: Word, cf: Sequence[int], k: int) -> GordonScale:
    """Find a repetition length ``n_k`` with ``w(j) = w(j + n_k)`` for ``0 <= j < n_k``.

    Candidates are tried in the order ``q_{k-1}, q_k, q_{k+1}, q_{k+1} + q_k``.
    ``three_block`` reports whether ``w(j - n) = w(j) = w(j + n)`` also holds,
    or None when the word does not reach back to ``-n``.
    """
    if k < 3:
        raise DomainError("k must be >= 3")
    q = convergents(cf, k + 1).q
    cands = [("q_{k-1}", q[k - 1]), ("q_k", q[k]), ("q_{k+1}", q[k + 1]), ("q_{k+1}+q_k", q[k + 1] + q[k])]
    found = []
    for label, n in cands:
        if not word.covers(0, 2 * n):
            continue
        if np.array_equal(word.segment(0, n), word.segment(n, 2 * n)):
            found.append((label, n))
    if not found:
        raise NoRepetitionFound(f"no square among candidates {[n for _, n in cands]} at k={k}")
    label, n = found[0]
    three = None
    if word.covers(-n, 2 * n):
        three = bool(np.array_equal(word.segment(-n, 0), word.segment(0, n)))
    return GordonScale(n, label, tuple(m for _, m in found), three)


def has_three_block(word: Word, n: int) -> bool:
    """``w(j - n) = w(j) = w(j + n)`` for ``0 <= j < n``."""
    mid = word.segment(0, n)
    return bool(np.array_equal(word.segment(-n, 0), mid) and np.array_equal(mid, word.segment(n, 2 * n)))
