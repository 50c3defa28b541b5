"""Verblunsky sequences and the extended CMV operator ``E = L M``.

``L`` is the direct sum of ``Theta(alpha_{2j})`` acting on sites ``(2j, 2j+1)``
and ``M`` the direct sum of ``Theta(alpha_{2j+1})`` acting on ``(2j+1, 2j+2)``.
The operator is applied block by block and never stored as a matrix.
"""

from __future__ import annotations

import numpy as np

from .contfrac import Frequency
from .errors import DomainError, EigensolveFailure, InsufficientMargin, OutOfWindow
from .words import Word, mechanical_word, sturmian_word


def theta_block(alpha: complex) -> np.ndarray:
    """The 2x2 unitary block ``[[conj(a), rho], [rho, -a]]``."""
    rho = np.sqrt(1.0 - abs(alpha) ** 2)
    return np.array([[np.conj(alpha), rho], [rho, -alpha]], dtype=complex)


class VerblunskySequence:
    """Finite window ``alpha(n)``, ``start <= n < stop``, of a Verblunsky sequence.

    Sequences built from a word take the value ``beta`` where the word is 0 and
    ``gamma`` where it is 1.
    """

    def __init__(self, values, start: int = 0, beta=None, gamma=None, word: Word | None = None):
        values = np.asarray(values, dtype=complex)
        if values.ndim != 1:
            raise DomainError("Verblunsky values must be one-dimensional")
        if values.size and np.max(np.abs(values)) >= 1.0:
            raise DomainError("Verblunsky coefficients must lie in the open unit disk")
        self.values = values
        self.start = int(start)
        self.beta = beta
        self.gamma = gamma
        self.word = word

    @classmethod
    def from_word(cls, beta, gamma, word: Word, allow_degenerate: bool = False):
        beta, gamma = complex(beta), complex(gamma)
        if abs(beta) >= 1 or abs(gamma) >= 1:
            raise DomainError("beta and gamma must lie in the open unit disk")
        if beta == gamma and not allow_degenerate:
            raise DomainError("beta must differ from gamma (pass allow_degenerate=True to override)")
        values = np.where(word.symbols.astype(bool), gamma, beta)
        return cls(values, word.start, beta, gamma, word)

    @classmethod
    def sturmian(cls, beta, gamma, theta, n0: int, n1: int, phi=None, variant="floor",
                 allow_degenerate: bool = False):
        """Coefficients driven by a mechanical word; ``phi=None`` means ``phi = theta``."""
        if phi is None:
            word = sturmian_word(theta, n0, n1)
        else:
            word = mechanical_word(theta, phi, n0, n1, variant)
        return cls.from_word(beta, gamma, word, allow_degenerate)

    @property
    def stop(self) -> int:
        return self.start + self.values.size

    @property
    def window(self) -> range:
        return range(self.start, self.stop)

    @property
    def sup_bound(self) -> float:
        """``max |alpha(n)|`` over the window."""
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def __len__(self):
        return int(self.values.size)

    def covers(self, n0: int, n1: int) -> bool:
        return self.start <= n0 and n1 <= self.stop

    def alpha_at(self, n: int) -> complex:
        if not self.start <= n < self.stop:
            raise OutOfWindow(f"alpha({n}) outside window [{self.start}, {self.stop})")
        return complex(self.values[n - self.start])

    def segment(self, n0: int, n1: int) -> np.ndarray:
        if not self.covers(n0, n1):
            raise OutOfWindow(f"[{n0}, {n1}) outside window [{self.start}, {self.stop})")
        return self.values[n0 - self.start : n1 - self.start]

    def rho(self, n: int) -> float:
        return float(np.sqrt(1.0 - abs(self.alpha_at(n)) ** 2))


def _apply_blocks(alpha: np.ndarray, start: int, u: np.ndarray, parity: int) -> np.ndarray:
    """Apply the direct sum of Theta(alpha_m), m = parity (mod 2), to ``u``.

    ``u`` lives on sites ``start .. start + len(u) - 1``; blocks that are cut by
    the window edge are dropped (the vector is assumed to vanish there).
    """
    out = np.zeros_like(u)
    n = u.size
    first = start if (start - parity) % 2 == 0 else start + 1
    i0 = first - start
    i = np.arange(i0, n - 1, 2)
    a = alpha[i]
    rho = np.sqrt(1.0 - np.abs(a) ** 2)
    x, y = u[i], u[i + 1]
    out[i] = np.conj(a) * x + rho * y
    out[i + 1] = rho * x - a * y
    return out


class CmvOperator:
    """Extended CMV operator restricted to the window of its Verblunsky sequence."""

    MARGIN = 2

    def __init__(self, alpha: VerblunskySequence):
        self.alpha = alpha

    @property
    def start(self) -> int:
        return self.alpha.start

    @property
    def size(self) -> int:
        return len(self.alpha)

    def rho(self, n: int) -> float:
        return self.alpha.rho(n)

    def _apply(self, u: np.ndarray) -> np.ndarray:
        v = _apply_blocks(self.alpha.values, self.start, u, 1)
        return _apply_blocks(self.alpha.values, self.start, v, 0)

    def _check_vector(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        if u.shape != (self.size,):
            raise DomainError(f"vector must have length {self.size}, got {u.shape}")
        return u

    def apply(self, u) -> np.ndarray:
        """``E u`` for ``u`` supported at least two sites inside the window.

        Under that support condition the result is exact: every nonzero entry
        of ``E u`` lies inside the window.
        """
        u = self._check_vector(u)
        m = self.MARGIN
        if np.any(u[:m] != 0) or np.any(u[-m:] != 0):
            raise InsufficientMargin("u must vanish on the two outermost sites at each end")
        return self._apply(u)

    def interior(self) -> slice:
        """Rows whose stencil lies inside the window."""
        return slice(self.MARGIN, self.size - self.MARGIN)

    def residual(self, z: complex, u) -> float:
        """``||E u - z u||`` over the interior rows (``u`` need not vanish at the edges)."""
        u = self._check_vector(u)
        r = self._apply(u) - z * u
        return float(np.linalg.norm(r[self.interior()]))

    def dense(self, n0: int | None = None, n1: int | None = None) -> np.ndarray:
        """Matrix of ``E`` restricted to sites ``n0 .. n1 - 1``.

        Needs ``alpha`` on ``n0 - 1 .. n1``; by default the window shrunk by one site.
        """
        n0 = self.start + 1 if n0 is None else n0
        n1 = self.alpha.stop - 1 if n1 is None else n1
        if not self.alpha.covers(n0 - 1, n1 + 1):
            raise OutOfWindow("dense block needs alpha one site beyond each end")
        sub = CmvOperator(VerblunskySequence(self.alpha.segment(n0 - 1, n1 + 1), n0 - 1))
        size = n1 - n0 + 2
        cols = []
        for j in range(1, size - 1):
            e = np.zeros(size, dtype=complex)
            e[j] = 1.0
            cols.append(sub._apply(e)[1:-1])
        return np.array(cols).T

    def truncated_spectrum(self, N: int, boundary: complex = 1.0, start: int | None = None) -> np.ndarray:
        """Eigenvalues of an ``N x N`` unitary truncation.

        The window ``start .. start + N - 1`` (``start`` and ``N`` even) is cut
        out by making the two Verblunsky parameters at its edges unimodular:
        ``alpha(start - 1) = -boundary`` and ``alpha(start + N - 1) =
        conj(boundary)``, so both decoupled corner entries equal ``boundary``.
        Eigenvalues are returned sorted by angle in [0, 2 pi).
        """
        boundary = complex(boundary)
        if abs(abs(boundary) - 1.0) > 1e-12:
            raise DomainError("boundary parameter must be unimodular")
        if N > 2000:
            raise DomainError("dense eigensolve limited to N <= 2000")
        start = self.start + (self.start % 2) if start is None else start
        if N < 2 or N % 2 or start % 2:
            raise DomainError("N and start must be even, N >= 2")
        vals = self.alpha.segment(start, start + N)
        L = np.zeros((N, N), dtype=complex)
        M = np.zeros((N, N), dtype=complex)
        for i in range(0, N, 2):
            L[i : i + 2, i : i + 2] = theta_block(vals[i])
        M[0, 0] = boundary
        for i in range(1, N - 1, 2):
            M[i : i + 2, i : i + 2] = theta_block(vals[i])
        M[N - 1, N - 1] = boundary
        try:
            ev = np.linalg.eigvals(L @ M)
        except np.linalg.LinAlgError as exc:
            raise EigensolveFailure(str(exc))
        if np.max(np.abs(np.abs(ev) - 1.0)) > 1e-8:
            raise EigensolveFailure("truncation eigenvalues left the unit circle")
        return ev[np.argsort(np.mod(np.angle(ev), 2 * np.pi))]
