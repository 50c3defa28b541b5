"""Szegő and Gesztesy–Zinchenko transfer matrices and their cocycles.

One-step matrices broadcast over arrays of ``alpha`` and ``z`` and return
arrays of shape ``(..., 2, 2)``.  Cocycles are ordered products over a
:class:`~cmvlab.cmv.VerblunskySequence` window; GZ data ``Phi(n) = (u_n, v_n)``
propagate as ``Phi(n) = Z(n, m; z) Phi(m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cmv import VerblunskySequence
from .errors import DomainError, OutOfWindow

LONG_PRODUCT = 1000


def _rho(alpha):
    a2 = np.abs(alpha) ** 2
    if np.any(a2 >= 1.0):
        raise DomainError("|alpha| must be < 1")
    return np.sqrt(1.0 - a2)


def _check_z(z):
    if np.any(z == 0):
        raise DomainError("z must be nonzero")


def _stack(a, b, c, d):
    a, b, c, d = np.broadcast_arrays(*(np.asarray(t, dtype=complex) for t in (a, b, c, d)))
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)


# Entries before the 1/rho factor, shared by the float and the mpmath paths.
def _s_entries(a, ac, z, one):
    return z, -ac, -a * z, one


def _p_entries(a, ac, z, one):
    return -a, one / z, z, -ac


def _q_entries(a, ac, z, one):
    return -ac, one, one, -a


def _one_step(entries, alpha, z):
    alpha, z = np.asarray(alpha, dtype=complex), np.asarray(z, dtype=complex)
    rho = _rho(alpha)
    _check_z(z)
    one = np.ones(np.broadcast(alpha, z).shape)
    a, b, c, d = entries(alpha * one, np.conj(alpha) * one, z * one, one)
    return _stack(a, b, c, d) / rho[..., None, None]


def szego(alpha, z):
    """``(1/rho) [[z, -conj(alpha)], [-alpha z, 1]]``, determinant ``z``."""
    return _one_step(_s_entries, alpha, z)


def gz_p(alpha, z):
    """``(1/rho) [[-alpha, 1/z], [z, -conj(alpha)]]`` (even sites), determinant -1."""
    return _one_step(_p_entries, alpha, z)


def gz_q(alpha, z):
    """``(1/rho) [[-conj(alpha), 1], [1, -alpha]]`` (odd sites), determinant -1."""
    return _one_step(_q_entries, alpha, z)


def gz_step(alpha, n: int, z):
    """``Y(n, z)``: P for even ``n``, Q for odd ``n``."""
    return gz_p(alpha, z) if n % 2 == 0 else gz_q(alpha, z)


def norm2(m) -> np.ndarray:
    """Operator 2-norm of 2x2 matrices from the closed-form singular values."""
    m = np.asarray(m)
    fro2 = np.sum(np.abs(m) ** 2, axis=(-2, -1))
    det = np.abs(m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0])
    disc = np.sqrt(np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0))
    return np.sqrt(0.5 * (fro2 + disc))


def det2(m):
    m = np.asarray(m)
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def inv2(m):
    m = np.asarray(m)
    d = det2(m)
    return _stack(m[..., 1, 1], -m[..., 0, 1], -m[..., 1, 0], m[..., 0, 0]) / d[..., None, None]


def _as_seq(alpha_seq) -> VerblunskySequence:
    if isinstance(alpha_seq, VerblunskySequence):
        return alpha_seq
    return VerblunskySequence(np.asarray(alpha_seq, dtype=complex), 0)


def _product(mats: np.ndarray) -> np.ndarray:
    """``mats[-1] @ ... @ mats[0]``, in long double for long products."""
    if len(mats) > LONG_PRODUCT:
        acc = np.eye(2, dtype=np.clongdouble)
        for m in mats:
            acc = m.astype(np.clongdouble) @ acc
        return acc.astype(complex)
    acc = np.eye(2, dtype=complex)
    for m in mats:
        acc = m @ acc
    return acc


def szego_cocycle(alpha_seq, n: int, m: int, z) -> np.ndarray:
    """``T(n, m; z) = S(alpha_{n-1}, z) ... S(alpha_m, z)``, inverted for ``n < m``."""
    seq = _as_seq(alpha_seq)
    if n == m:
        return np.eye(2, dtype=complex)
    lo, hi = min(n, m), max(n, m)
    if not seq.covers(lo, hi):
        raise OutOfWindow(f"cocycle needs alpha on [{lo}, {hi})")
    T = _product(szego(seq.segment(lo, hi), complex(z)))
    return T if n > m else inv2(T)


def gz_cocycle(alpha_seq, n: int, m: int, z) -> np.ndarray:
    """``Z(n, m; z) = Y(n-1, z) ... Y(m, z)``, inverted for ``n < m``."""
    seq = _as_seq(alpha_seq)
    if n == m:
        return np.eye(2, dtype=complex)
    lo, hi = min(n, m), max(n, m)
    if not seq.covers(lo, hi):
        raise OutOfWindow(f"cocycle needs alpha on [{lo}, {hi})")
    z = complex(z)
    vals = seq.segment(lo, hi)
    idx = np.arange(lo, hi)
    even = idx % 2 == 0
    mats = np.empty((hi - lo, 2, 2), dtype=complex)
    mats[even] = gz_p(vals[even], z)
    mats[~even] = gz_q(vals[~even], z)
    Z = _product(mats)
    return Z if n > m else inv2(Z)


@dataclass(frozen=True)
class SolutionState:
    """``Phi(n) = (u_n, v_n)`` with ``v = M u``."""

    u: complex
    v: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v], dtype=complex)

    @classmethod
    def from_array(cls, x):
        return cls(complex(x[0]), complex(x[1]))

    def norm(self) -> float:
        return math.hypot(abs(self.u), abs(self.v))


def _state(phi0) -> np.ndarray:
    if isinstance(phi0, SolutionState):
        return phi0.as_array()
    x = np.asarray(phi0, dtype=complex)
    if x.shape != (2,):
        raise DomainError("initial state must have two components")
    return x


def propagate(alpha_seq, z, phi0, n: int) -> SolutionState:
    """``Phi(n) = Z(n, 0; z) Phi(0)``."""
    return SolutionState.from_array(gz_cocycle(alpha_seq, n, 0, z) @ _state(phi0))


def propagate_range(alpha_seq, z, phi0, n0: int, n1: int) -> tuple:
    """Arrays ``(u, v)`` of ``Phi(n)`` for ``n0 <= n < n1`` (``n0 <= 0 < n1``)."""
    seq = _as_seq(alpha_seq)
    if not n0 <= 0 < n1:
        raise DomainError("range must contain 0")
    if not seq.covers(n0, n1 - 1):
        raise OutOfWindow(f"propagation needs alpha on [{n0}, {n1 - 1})")
    z = complex(z)
    out = np.zeros((n1 - n0, 2), dtype=complex)
    out[-n0] = _state(phi0)
    for n in range(0, n1 - 1):
        out[n + 1 - n0] = gz_step(seq.alpha_at(n), n, z) @ out[n - n0]
    for n in range(-1, n0 - 1, -1):
        out[n - n0] = inv2(gz_step(seq.alpha_at(n), n, z)) @ out[n + 1 - n0]
    return out[:, 0], out[:, 1]


def one_step_identity_deviation(alpha, beta, z) -> np.ndarray:
    """``|| Q(alpha, z) P(beta, z) - z^{-1} S(alpha, z) S(beta, z) ||`` (broadcasts)."""
    z = np.asarray(z, dtype=complex)
    lhs = gz_q(alpha, z) @ gz_p(beta, z)
    rhs = szego(alpha, z) @ szego(beta, z) / z[..., None, None]
    return norm2(lhs - rhs)


def check_sgz_identity(alpha_seq, z, n: int, precision: int | None = None) -> float:
    """``|| z^{-n} T(2n, 0; z) - Z(2n, 0; z) ||``.

    In float64 the deviation is rounding noise of size about ``1e-16 ||T||``.
    With ``precision`` (bits) both products are formed in mpmath from the same
    float inputs and entry formulas, which resolves the identity far below the
    float64 noise floor even when ``||T||`` is large.
    """
    z = complex(z)
    if precision is None:
        T = szego_cocycle(alpha_seq, 2 * n, 0, z)
        Z = gz_cocycle(alpha_seq, 2 * n, 0, z)
        return float(norm2(z ** (-n) * T - Z))
    return _mp_identity_deviation(_as_seq(alpha_seq), z, n, int(precision))


def _mp_identity_deviation(seq: VerblunskySequence, z: complex, n: int, bits: int) -> float:
    import mpmath

    if not seq.covers(0, 2 * n):
        raise OutOfWindow(f"identity check needs alpha on [0, {2 * n})")
    with mpmath.workprec(bits):
        one, zz = mpmath.mpf(1), mpmath.mpc(z)

        def mul(x, y):
            return (x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3],
                    x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3])

        T = Z = (one, 0, 0, one)
        for j, a in enumerate(seq.segment(0, 2 * n)):
            a = mpmath.mpc(complex(a))
            ac = mpmath.conj(a)
            rho = mpmath.sqrt(1 - abs(a) ** 2)
            T = mul(tuple(e / rho for e in _s_entries(a, ac, zz, one)), T)
            Y = _p_entries(a, ac, zz, one) if j % 2 == 0 else _q_entries(a, ac, zz, one)
            Z = mul(tuple(e / rho for e in Y), Z)
        D = [complex(t * zz ** (-n) - w) for t, w in zip(T, Z)]
    return float(norm2(np.array(D).reshape(2, 2)))


def lipschitz_constant(r: float) -> float:
    """Explicit ``A(r)`` bounding ``||P||, ||Q||`` and their Lipschitz constants on ``|alpha| <= r``.

    ``||Q(alpha)|| = (1 + |alpha|) / rho`` gives the first term; differentiating
    along a segment gives ``(1 + r) / rho^3 <= 2 / (1 - r^2)^{3/2}``.
    """
    if not 0 <= r < 1:
        raise DomainError("r must lie in [0, 1)")
    return max(math.sqrt((1 + r) / (1 - r)), 2.0 / (1 - r * r) ** 1.5)


def perturbation_constant(r: float) -> float:
    """``C(r) = A(r) * 3^{1/3}``, so that ``n A^n <= C^n`` for every ``n >= 0``."""
    return lipschitz_constant(r) * 3 ** (1.0 / 3.0)


@dataclass(frozen=True)
class PerturbationReport:
    lhs: float
    bound: float
    sharp_bound: float
    delta: float
    r: float
    n: int

    @property
    def ok(self) -> bool:
        return self.lhs <= self.bound


def perturbation_gap(alpha, alpha_tilde, z, n: int, r: float | None = None) -> PerturbationReport:
    """Compare ``||Z(n,0;z) - Z~(n,0;z)||`` with ``delta C(r)^n``.

    ``delta`` is the largest coefficient difference on ``[0, n)`` and ``r``
    defaults to the larger sup norm of the two windows.  ``sharp_bound`` is the
    intermediate estimate ``n delta A(r)^n``.
    """
    a, b = _as_seq(alpha), _as_seq(alpha_tilde)
    va, vb = a.segment(0, n), b.segment(0, n)
    sup = float(max(np.max(np.abs(va), initial=0.0), np.max(np.abs(vb), initial=0.0)))
    r = sup if r is None else float(r)
    if r >= 1:
        raise DomainError("r must be < 1")
    if sup > r:
        raise DomainError(f"coefficients exceed r={r}")
    delta = float(np.max(np.abs(va - vb), initial=0.0))
    lhs = float(norm2(gz_cocycle(a, n, 0, z) - gz_cocycle(b, n, 0, z)))
    A = lipschitz_constant(r)
    return PerturbationReport(lhs, delta * perturbation_constant(r) ** n, n * delta * A**n, delta, r, n)


class ScaledMatrix:
    """2x2 matrix stored as ``exp(log_scale) * mat`` with ``||mat|| = 1``."""

    __slots__ = ("mat", "log_scale")

    def __init__(self, mat, log_scale=0.0):
        mat = np.asarray(mat, dtype=complex)
        nrm = norm2(mat)
        self.mat = mat / np.asarray(nrm)[..., None, None]
        self.log_scale = np.log(nrm) + log_scale

    def __matmul__(self, other: "ScaledMatrix") -> "ScaledMatrix":
        return ScaledMatrix(self.mat @ other.mat, self.log_scale + other.log_scale)

    def power(self, k: int) -> "ScaledMatrix":
        out = ScaledMatrix(np.broadcast_to(np.eye(2, dtype=complex), self.mat.shape).copy())
        for _ in range(int(k)):
            out = out @ self
        return out

    def log_norm(self):
        return self.log_scale

    def value(self) -> np.ndarray:
        return self.mat * np.exp(self.log_scale)[..., None, None]
