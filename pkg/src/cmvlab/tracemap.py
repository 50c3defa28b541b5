"""Trace matrices ``M_n``, trace-map orbits and spectral scans for Sturmian CMV matrices.

With ``M_{-1} = S(gamma) S(beta)^{-1}``, ``M_0 = zeta^{-1/2} S(beta)`` and
``M_n = M_{n-2} M_{n-1}^{a_n}``, the half traces

    x_n = tr(M_{n-1}) / 2,   y_n = tr(M_n) / 2,   z_n = tr(M_n M_{n-1}) / 2

evolve under a polynomial map.  Because ``det M_n = 1``, Cayley–Hamilton gives
``M^a = U_{a-1}(y) M - U_{a-2}(y) I`` with Chebyshev polynomials of the second
kind, hence

    x_{n+1} = y_n
    y_{n+1} = U_{a-1}(y_n) z_n - U_{a-2}(y_n) x_n
    z_{n+1} = U_a(y_n) z_n - U_{a-1}(y_n) x_n      (a = a_{n+1}).

Every function here accepts an array of angles so that whole grids are
evolved at once.  The square root ``zeta^{1/2}`` is ``exp(i phi / 2)`` with
``phi`` in ``[0, 2 pi)`` fixed per point, which makes the branch of
``zeta^{-q_n/2}`` consistent across levels automatically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .contfrac import convergents
from .errors import DomainError, TraceOverflow
from .transfer import ScaledMatrix, inv2, szego

OVERFLOW = 1e150


def _angle(zeta) -> np.ndarray:
    return np.mod(np.angle(np.asarray(zeta, dtype=complex)), 2 * np.pi)


@dataclass
class TraceSetup:
    """Parameters of a trace-map computation at one or many spectral points."""

    beta: complex
    gamma: complex
    cf: Sequence[int]
    zeta: np.ndarray | complex

    def __post_init__(self):
        self.beta, self.gamma = complex(self.beta), complex(self.gamma)
        if abs(self.beta) >= 1 or abs(self.gamma) >= 1:
            raise DomainError("beta and gamma must lie in the open unit disk")
        self.cf = [int(a) for a in self.cf]
        if any(a < 1 for a in self.cf):
            raise DomainError("partial quotients must be positive integers")
        z = np.asarray(self.zeta, dtype=complex)
        if np.any(np.abs(np.abs(z) - 1.0) > 1e-12):
            raise DomainError("zeta must lie on the unit circle")
        self.zeta = z

    @classmethod
    def from_angles(cls, beta, gamma, cf, angles):
        return cls(beta, gamma, cf, np.exp(1j * np.asarray(angles, dtype=float)))

    @property
    def angle(self) -> np.ndarray:
        return _angle(self.zeta)

    @property
    def branch_root(self) -> np.ndarray:
        """``zeta^{1/2}`` on the fixed branch."""
        return np.exp(0.5j * self.angle)

    def require_levels(self, N: int):
        if N > len(self.cf):
            raise DomainError(f"need {N} partial quotients, have {len(self.cf)}")


def branch_exponents(cf: Sequence[int], N: int) -> list:
    """Half-angle exponents ``e_n = -q_n`` with ``zeta^{-q_n/2} = exp(i e_n phi / 2)``.

    Index 0 of the list is ``n = -1`` (``e_{-1} = 0``).  The branch rule
    ``e_n = a_n e_{n-1} + e_{n-2}`` then holds in exact integer arithmetic.
    """
    q = convergents(cf, N).q
    return [0] + [-qn for qn in q]


def init_matrices(beta, gamma, zeta):
    """``(M_{-1}, M_0)``; both have determinant one."""
    zeta = np.asarray(zeta, dtype=complex)
    Sb, Sg = szego(beta, zeta), szego(gamma, zeta)
    m_minus1 = Sg @ inv2(Sb)
    m0 = np.exp(-0.5j * _angle(zeta))[..., None, None] * Sb
    return m_minus1, m0


def fricke_vogt(beta, gamma, zeta):
    """Closed-form value of ``x^2 + y^2 + z^2 - 2xyz - 1`` along the orbit."""
    beta, gamma = complex(beta), complex(gamma)
    if abs(beta) >= 1 or abs(gamma) >= 1:
        raise DomainError("beta and gamma must lie in the open unit disk")
    rb2, rg2 = 1 - abs(beta) ** 2, 1 - abs(gamma) ** 2
    K = 2 - 2 * (beta * np.conj(gamma)).real
    re = np.real(np.asarray(zeta, dtype=complex))
    return (re / (2 * rb2 * rg2) * (rb2 + rg2 - K)
            + (K * K - 2 * K + 2 * rb2 + 2 * rg2) / (4 * rb2 * rg2) - 1)


def chebyshev_u(k: int, y):
    """``U_k(y)`` with ``U_{-1} = 0``, ``U_0 = 1`` (also ``U_{-2} = -1``)."""
    y = np.asarray(y)
    if k == -2:
        return -np.ones_like(y)
    prev, cur = np.zeros_like(y), np.ones_like(y)
    if k == -1:
        return prev
    for _ in range(k):
        prev, cur = cur, 2 * y * cur - prev
    return cur


def trace_step(x, y, z, a: int):
    """One application of the trace map with partial quotient ``a``."""
    with np.errstate(over="ignore", invalid="ignore"):
        ua, ua1, ua2 = chebyshev_u(a, y), chebyshev_u(a - 1, y), chebyshev_u(a - 2, y)
        return y, ua1 * z - ua2 * x, ua * z - ua1 * x


def initial_triple(beta, gamma, zeta):
    m1, m0 = init_matrices(beta, gamma, zeta)
    half_tr = lambda m: 0.5 * (m[..., 0, 0] + m[..., 1, 1])
    return half_tr(m1), half_tr(m0), half_tr(m0 @ m1)


def iterate_matrices(setup: TraceSetup, N: int) -> list:
    """``[M_{-1}, M_0, ..., M_N]`` from the recursion ``M_n = M_{n-2} M_{n-1}^{a_n}``.

    Raises TraceOverflow with the level index once entries exceed the float
    range; use :func:`iterate_scaled` beyond that.
    """
    setup.require_levels(N)
    mats = list(init_matrices(setup.beta, setup.gamma, setup.zeta))
    for n in range(1, N + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            m = mats[-2] @ np.linalg.matrix_power(mats[-1], setup.cf[n - 1])
        if not np.all(np.isfinite(m)) or np.max(np.abs(m)) > 1e300:
            raise TraceOverflow(n)
        mats.append(m)
    return mats


def iterate_scaled(setup: TraceSetup, N: int) -> list:
    """Like :func:`iterate_matrices` but as :class:`ScaledMatrix` (no overflow)."""
    setup.require_levels(N)
    m1, m0 = init_matrices(setup.beta, setup.gamma, setup.zeta)
    mats = [ScaledMatrix(m1), ScaledMatrix(m0)]
    for n in range(1, N + 1):
        mats.append(mats[-2] @ mats[-1].power(setup.cf[n - 1]))
    return mats


def lyapunov_estimate(setup: TraceSetup, n: int):
    """``log ||M_n(zeta)|| / q_n`` computed in scale-and-log form."""
    if n < 3:
        raise DomainError("n must be >= 3")
    q = convergents(setup.cf, n).q[n]
    est = iterate_scaled(setup, n)[-1].log_norm() / q
    return float(est) if np.ndim(est) == 0 else est


@dataclass
class OrbitRecord:
    """Trace-map orbit of one spectral point.

    ``triples[n]`` is ``(x_n, y_n, z_n)``.  ``escape_step`` is the first level
    at which the escape certificate fired (None when bounded within budget).
    """

    triples: np.ndarray
    status: str
    escape_step: int | None
    invariant_drift: float
    budget: int
    fricke_vogt: float = float("nan")

    def __post_init__(self):
        if (self.status == "escaped") != (self.escape_step is not None):
            raise ValueError("escape_step must be set exactly when status is 'escaped'")

    @property
    def x(self):
        return self.triples[:, 0]

    @property
    def y(self):
        return self.triples[:, 1]

    @property
    def z(self):
        return self.triples[:, 2]


def escape_threshold(beta, gamma) -> float:
    """``max(1, |tr M_{-1}| / 2)``: the level ``|y|`` must clear before growth counts.

    The trace of ``M_{-1}`` does not depend on ``zeta``.
    """
    beta, gamma = complex(beta), complex(gamma)
    if abs(beta) >= 1 or abs(gamma) >= 1:
        raise DomainError("beta and gamma must lie in the open unit disk")
    K = 2 - 2 * (beta * np.conj(gamma)).real
    half_tr = K / (2 * math.sqrt((1 - abs(beta) ** 2) * (1 - abs(gamma) ** 2)))
    return max(1.0, abs(half_tr))


def escape_fires(x, y, z, threshold: float):
    """The escape certificate ``|y| > threshold`` and ``|z| >= max(|x|, |y|)``.

    Once it holds, the fine sequence ``tr(M_{n-1} M_n^j) / 2`` grows
    geometrically in ``j`` by the factor ``2|y| - 1 > 1`` and the certificate
    holds again at the next level, so the orbit is unbounded.
    """
    ay = np.abs(y)
    return (ay > threshold) & (np.abs(z) >= np.maximum(np.abs(x), ay))


@dataclass
class _Orbits:
    triples: np.ndarray      # (N + 1, P, 3)
    escape: np.ndarray       # (P,) first firing level, -1 if none
    drift: np.ndarray        # (P,)
    trace_sup: np.ndarray    # (P,) 2 * max |x|, |y|, |z| up to escape


def _run_orbits(beta, gamma, cf, angles, N, threshold=None, stop_on_escape=True) -> _Orbits:
    angles = np.asarray(angles, dtype=float)
    if len(cf) < N:
        raise DomainError(f"need {N} partial quotients, have {len(cf)}")
    zeta = np.exp(1j * angles)
    thr = escape_threshold(beta, gamma) if threshold is None else float(threshold)
    inv = fricke_vogt(beta, gamma, zeta)
    x, y, z = initial_triple(beta, gamma, zeta)
    P = angles.size
    out = np.full((N + 1, P, 3), np.nan + 0j)
    escape = np.full(P, -1, dtype=np.int64)
    drift = np.zeros(P)
    tsup = np.zeros(P)
    live = np.ones(P, dtype=bool)
    for n in range(N + 1):
        out[n, live] = np.stack([x[live], y[live], z[live]], -1)
        with np.errstate(over="ignore", invalid="ignore"):
            inv_n = x * x + y * y + z * z - 2 * x * y * z - 1
        drift[live] = np.maximum(drift[live], np.abs(inv_n - inv)[live])
        tsup[live] = np.maximum(tsup[live], 2 * np.max(np.abs(np.stack([x, y, z])), axis=0)[live])
        fire = live & (escape < 0) & escape_fires(x, y, z, thr)
        escape[fire] = n
        if stop_on_escape:
            live &= ~fire
        big = live & ~((np.abs(y) < OVERFLOW) & (np.abs(z) < OVERFLOW) & (np.abs(x) < OVERFLOW))
        live &= ~big
        escape[big & (escape < 0)] = n
        if n == N or not live.any():
            break
        x, y, z = trace_step(x, y, z, cf[n])
        x, y, z = (np.where(live, t, 0) for t in (x, y, z))
    return _Orbits(out, escape, drift, tsup)


def _record(orb: _Orbits, i: int, N: int, inv) -> OrbitRecord:
    tr = orb.triples[:, i, :]
    keep = ~np.isnan(tr[:, 0])
    esc = int(orb.escape[i])
    return OrbitRecord(tr[keep], "escaped" if esc >= 0 else "bounded", esc if esc >= 0 else None,
                       float(orb.drift[i]), N, float(np.real(inv)))


def trace_orbit(setup: TraceSetup, N: int, method: str = "chebyshev"):
    """Orbit ``(x_n, y_n, z_n)``, ``0 <= n <= N`` for every point of the setup.

    ``method="chebyshev"`` iterates the polynomial trace map;
    ``method="matrix"`` takes traces of the matrices ``M_n`` (the independent
    check).  The orbit continues past the escape step until the values leave
    the float range.  Returns a single record for scalar ``zeta``.
    """
    setup.require_levels(N)
    angles = np.atleast_1d(setup.angle)
    inv = np.atleast_1d(fricke_vogt(setup.beta, setup.gamma, np.exp(1j * angles)))
    if method == "chebyshev":
        orb = _run_orbits(setup.beta, setup.gamma, setup.cf, angles, N, stop_on_escape=False)
    elif method == "matrix":
        orb = _matrix_orbits(setup, angles, N)
    else:
        raise DomainError(f"unknown method {method!r}")
    recs = [_record(orb, i, N, inv[i]) for i in range(angles.size)]
    return recs[0] if np.ndim(setup.zeta) == 0 else recs


def _matrix_orbits(setup: TraceSetup, angles, N) -> _Orbits:
    sub = TraceSetup.from_angles(setup.beta, setup.gamma, setup.cf, angles)
    m1, m0 = init_matrices(sub.beta, sub.gamma, sub.zeta)
    P = angles.size
    half_tr = lambda m: 0.5 * (m[..., 0, 0] + m[..., 1, 1])
    inv = fricke_vogt(sub.beta, sub.gamma, sub.zeta)
    thr = escape_threshold(sub.beta, sub.gamma)
    out = np.full((N + 1, P, 3), np.nan + 0j)
    escape = np.full(P, -1, dtype=np.int64)
    drift = np.zeros(P)
    tsup = np.zeros(P)
    prev, cur = m1, m0
    live = np.ones(P, dtype=bool)
    for n in range(N + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            x, y, z = half_tr(prev), half_tr(cur), half_tr(cur @ prev)
            inv_n = x * x + y * y + z * z - 2 * x * y * z - 1
        ok = live & np.isfinite(x) & np.isfinite(y) & np.isfinite(z) & (np.abs(z) < OVERFLOW)
        out[n, ok] = np.stack([x[ok], y[ok], z[ok]], -1)
        drift[ok] = np.maximum(drift[ok], np.abs(inv_n - inv)[ok])
        tsup[ok] = np.maximum(tsup[ok], 2 * np.max(np.abs(np.stack([x, y, z])), axis=0)[ok])
        fire = ok & (escape < 0) & escape_fires(x, y, z, thr)
        escape[fire] = n
        live = ok
        if n == N or not live.any():
            break
        with np.errstate(over="ignore", invalid="ignore"):
            prev, cur = cur, prev @ np.linalg.matrix_power(cur, setup.cf[n])
    return _Orbits(out, escape, drift, tsup)


def bounded_orbit_test(setup: TraceSetup, N_max: int, escape_threshold_value: float | None = None):
    """Budget-relative boundedness verdict.

    "bounded" only means the escape certificate did not fire at any level
    ``0 .. N_max``.  Returns one record for scalar ``zeta``, else a list.
    """
    if N_max < 5:
        raise DomainError("N_max must be >= 5")
    setup.require_levels(N_max)
    angles = np.atleast_1d(setup.angle)
    inv = np.atleast_1d(fricke_vogt(setup.beta, setup.gamma, np.exp(1j * angles)))
    orb = _run_orbits(setup.beta, setup.gamma, setup.cf, angles, N_max, escape_threshold_value)
    recs = [_record(orb, i, N_max, inv[i]) for i in range(angles.size)]
    return recs[0] if np.ndim(setup.zeta) == 0 else recs


@dataclass(frozen=True)
class GrowthReport:
    G: list
    ratios: list
    C: Fraction

    @property
    def ok(self) -> bool:
        return all(r >= self.C for r in self.ratios)


def growth_sequence(cf: Sequence[int], k0: int, k: int) -> GrowthReport:
    """``G_j^{(k0)}`` for ``j = 0..k`` and the exact ratios ``G_j / q_{j + k0}``.

    ``C = min(1 / q_{k0}, a_{k0+1} / q_{k0+1})`` bounds every ratio from below.
    """
    if k0 < 1 or k < 0:
        raise DomainError("need k0 >= 1 and k >= 0")
    need = k0 + max(k, 1)
    if len(cf) < need:
        raise DomainError(f"need {need} partial quotients, have {len(cf)}")
    a = lambda j: int(cf[j - 1])
    q = convergents(cf, need).q
    G = [1, a(k0 + 1)]
    for j in range(1, k):
        G.append(a(k0 + j + 1) * G[j] + G[j - 1])
    G = G[: k + 1]
    C = min(Fraction(1, q[k0]), Fraction(a(k0 + 1), q[k0 + 1]))
    ratios = [Fraction(G[j], q[j + k0]) for j in range(k + 1)]
    return GrowthReport(G, ratios, C)


@dataclass
class SpectrumScan:
    """Per-point scan results plus budget summaries.

    ``escape_step`` is -1 for points that stayed bounded within ``budget``.
    ``weights`` are arc lengths (radians) represented by each point.
    """

    beta: complex
    gamma: complex
    cf: list
    budget: int
    angles: np.ndarray
    escape_step: np.ndarray
    lyapunov: np.ndarray
    invariant_drift: np.ndarray
    trace_sup: np.ndarray
    weights: np.ndarray
    grid_size: int
    lyapunov_level: int
    refine: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def zeta(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    def bounded_mask(self, budget: int | None = None) -> np.ndarray:
        budget = self.budget if budget is None else budget
        if budget > self.budget:
            raise DomainError(f"scan only ran to budget {self.budget}")
        return (self.escape_step < 0) | (self.escape_step > budget)

    @property
    def status(self) -> np.ndarray:
        return np.where(self.bounded_mask(), "bounded", "escaped")

    def bounded_measure(self, budget: int | None = None) -> float:
        """Arc length (radians) of the bounded set at a given budget."""
        return float(np.sum(self.weights[self.bounded_mask(budget)]))

    def measure_by_budget(self) -> list:
        return [self.bounded_measure(b) for b in range(self.budget + 1)]

    def bounded_angles(self, budget: int | None = None) -> np.ndarray:
        return self.angles[self.bounded_mask(budget)]


def _arc_weights(angles: np.ndarray) -> np.ndarray:
    order = np.argsort(angles)
    a = angles[order]
    gaps = np.diff(np.concatenate([a, [a[0] + 2 * np.pi]]))
    w_sorted = 0.5 * (gaps + np.roll(gaps, 1))
    w = np.empty_like(w_sorted)
    w[order] = w_sorted
    return w


def spectrum_scan(beta, gamma, cf: Sequence[int], grid_size: int = 4096, N_max: int = 18,
                  refine: int = 0, lyapunov_level: int | None = None) -> SpectrumScan:
    """Trace-map scan over a uniform angle grid on the unit circle.

    Each point gets its escape step, orbit drift of the Fricke–Vogt value,
    the largest trace seen, and ``log ||M_n|| / q_n`` at ``lyapunov_level``
    (default ``N_max``).  ``refine`` rounds bisect every cell whose endpoints
    disagree on the final verdict.
    """
    if grid_size < 64:
        raise DomainError("grid_size must be >= 64")
    cf = [int(a) for a in cf]
    if len(cf) < N_max:
        raise DomainError(f"need {N_max} partial quotients, have {len(cf)}")
    lyap_level = N_max if lyapunov_level is None else int(lyapunov_level)
    angles = 2 * np.pi * np.arange(grid_size) / grid_size
    orb = _run_orbits(beta, gamma, cf, angles, N_max)
    esc, drift, tsup = orb.escape, orb.drift, orb.trace_sup
    for _ in range(int(refine)):
        order = np.argsort(angles)
        a, b = angles[order], (esc[order] < 0)
        nxt = np.roll(np.arange(a.size), -1)
        flip = b != b[nxt]
        if not flip.any():
            break
        hi = np.where(nxt > np.arange(a.size), a[nxt], a[nxt] + 2 * np.pi)
        mids = np.mod(0.5 * (a[flip] + hi[flip]), 2 * np.pi)
        new = _run_orbits(beta, gamma, cf, mids, N_max)
        angles = np.concatenate([angles, mids])
        esc = np.concatenate([esc, new.escape])
        drift = np.concatenate([drift, new.drift])
        tsup = np.concatenate([tsup, new.trace_sup])
    order = np.argsort(angles, kind="stable")
    angles, esc, drift, tsup = angles[order], esc[order], drift[order], tsup[order]
    setup = TraceSetup.from_angles(beta, gamma, cf, angles)
    lyap = np.atleast_1d(lyapunov_estimate(setup, lyap_level))
    return SpectrumScan(complex(beta), complex(gamma), cf[:N_max], N_max, angles, esc,
                        np.asarray(lyap, dtype=float), drift, tsup, _arc_weights(angles),
                        grid_size, lyap_level, int(refine))
