"""Two-block, three-block and Gordon-sequence criteria for CMV matrices.

Every check propagates actual solution data ``Phi(n) = Z(n, 0; z) Phi(0)`` and
compares the measured norms with the explicit lower bound ``Delta ||Phi(0)||``.
Nothing here proves the absence of eigenvalues; each certificate is a finite
inequality at one spectral point and one scale.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .cmv import VerblunskySequence
from .contfrac import Frequency, convergents
from .errors import DomainError, OutOfWindow, RepetitionViolated, TraceBoundViolated
from .transfer import gz_cocycle, norm2, szego, szego_cocycle
from .words import RotationInterval, gordon_scales, has_three_block, rotation_word

BASIS_STATES = ((1.0, 0.0), (0.0, 1.0))


def _seq(alpha) -> VerblunskySequence:
    if isinstance(alpha, VerblunskySequence):
        return alpha
    return VerblunskySequence(np.asarray(alpha, dtype=complex), 0)


@dataclass(frozen=True)
class GordonConstants:
    c: float
    eta: float
    Gamma: float
    Delta: float

    @classmethod
    def two_block(cls, c: float, Gamma: float):
        if c < 0:
            raise DomainError("trace bound c must be nonnegative")
        eta = 0.5 * min(1.0, 1.0 / c) if c > 0 else 0.5
        return cls(float(c), eta, float(Gamma), eta / Gamma)

    @classmethod
    def three_block(cls, Gamma: float):
        return cls(1.0, 0.5, float(Gamma), 0.5 / Gamma)


def szego_sup(alpha_seq, z, n0: int, n1: int) -> float:
    """``Gamma = max ||S(alpha_n, z)||`` over ``n0 <= n < n1`` (at least 1)."""
    seq = _seq(alpha_seq)
    vals = seq.segment(n0, n1)
    return max(1.0, float(np.max(norm2(szego(vals, complex(z))), initial=1.0)))


@dataclass
class ScaleCheck:
    """One scale of a certificate.  ``norms`` maps a site to ``||Phi(site)||``."""

    mode: str
    z0: complex
    n_k: int
    n_underline: int
    norms: dict
    phi0_norm: float
    constants: GordonConstants
    trace: float | None = None

    @property
    def max_norm(self) -> float:
        return max(self.norms.values())

    @property
    def threshold(self) -> float:
        return self.constants.Delta * self.phi0_norm

    @property
    def slack(self) -> float:
        """``max norm / (Delta ||Phi(0)||)``; at least 1 when the bound holds."""
        return self.max_norm / self.threshold

    @property
    def bound_ok(self) -> bool:
        return self.max_norm >= self.threshold

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "z0": [self.z0.real, self.z0.imag],
            "n_k": self.n_k,
            "n_underline": self.n_underline,
            "norms": {str(k): v for k, v in self.norms.items()},
            "phi0_norm": self.phi0_norm,
            "constants": asdict(self.constants),
            "trace": self.trace,
            "slack": self.slack,
            "bound_ok": self.bound_ok,
        }


@dataclass
class GordonCertificate:
    z0: complex
    checks: list = field(default_factory=list)

    @property
    def scales(self) -> list:
        return [c.n_k for c in self.checks]

    @property
    def ok(self) -> bool:
        return all(c.bound_ok for c in self.checks)

    def to_dict(self) -> dict:
        return {"z0": [self.z0.real, self.z0.imag], "scales": self.scales, "ok": self.ok,
                "checks": [c.to_dict() for c in self.checks]}


def _phi0(phi0) -> np.ndarray:
    x = np.asarray(phi0, dtype=complex)
    if x.shape != (2,) or not np.any(x):
        raise DomainError("initial state must be a nonzero 2-vector")
    return x


def _repeats(seq: VerblunskySequence, n: int, shift: int) -> bool:
    return bool(np.array_equal(seq.segment(0, n), seq.segment(shift, shift + n)))


def check_two_block(alpha_seq, z0, n_k: int, phi0=(1.0, 0.0), c: float | None = None) -> ScaleCheck:
    """Verify ``max(||Phi(n_)||, ||Phi(2 n_k)||) >= Delta ||Phi(0)||`` at one scale.

    Preconditions are checked on the data: ``alpha(j) = alpha(j + n_k)`` for
    ``0 <= j < n_k`` and ``|tr T(n_k, 0; z0)| <= c``.  With ``c=None`` the
    measured trace is used as ``c``.
    """
    seq, z0 = _seq(alpha_seq), complex(z0)
    if n_k < 1:
        raise DomainError("scale must be positive")
    if not seq.covers(0, 2 * n_k):
        raise OutOfWindow(f"two-block check needs alpha on [0, {2 * n_k})")
    if not _repeats(seq, n_k, n_k):
        raise RepetitionViolated(f"alpha is not {n_k}-repetitive on [0, {2 * n_k})")
    tr = abs(np.trace(szego_cocycle(seq, n_k, 0, z0)))
    c = tr if c is None else float(c)
    if tr > c * (1 + 1e-12):
        raise TraceBoundViolated(f"|tr T(n_k,0)| = {tr:.6g} exceeds c = {c:.6g}")
    phi = _phi0(phi0)
    nu = 2 * (n_k // 2)
    consts = GordonConstants.two_block(c, szego_sup(seq, z0, 0, 2 * n_k))
    norms = {site: float(np.linalg.norm(gz_cocycle(seq, site, 0, z0) @ phi)) for site in (nu, 2 * n_k)}
    return ScaleCheck("two", z0, n_k, nu, norms, float(np.linalg.norm(phi)), consts, float(tr))


def check_three_block(alpha_seq, z, n_k: int, phi0=(1.0, 0.0)) -> ScaleCheck:
    """Verify ``max ||Phi(l)|| >= ||Phi(0)|| / (2 Gamma)`` over ``l = -n_, n_, 2 n_k``.

    Needs ``alpha(j - n_k) = alpha(j) = alpha(j + n_k)`` for ``0 <= j < n_k``;
    no trace hypothesis.
    """
    seq, z = _seq(alpha_seq), complex(z)
    if n_k < 1:
        raise DomainError("scale must be positive")
    if not seq.covers(-n_k, 2 * n_k):
        raise OutOfWindow(f"three-block check needs alpha on [{-n_k}, {2 * n_k})")
    if not (_repeats(seq, n_k, n_k) and _repeats(seq, n_k, -n_k)):
        raise RepetitionViolated(f"alpha has no three-block repetition at scale {n_k}")
    phi = _phi0(phi0)
    nu = 2 * (n_k // 2)
    consts = GordonConstants.three_block(szego_sup(seq, z, -n_k, 2 * n_k))
    norms = {site: float(np.linalg.norm(gz_cocycle(seq, site, 0, z) @ phi))
             for site in (-nu, nu, 2 * n_k)}
    return ScaleCheck("three", z, n_k, nu, norms, float(np.linalg.norm(phi)), consts)


def periodized(alpha_seq, n_k: int, n0: int, n1: int) -> VerblunskySequence:
    """The ``n_k``-periodic sequence repeating ``alpha(0), ..., alpha(n_k - 1)`` on ``[n0, n1)``."""
    seq = _seq(alpha_seq)
    base = seq.segment(0, n_k)
    idx = np.arange(n0, n1)
    return VerblunskySequence(base[np.mod(idx, n_k)], n0)


def check_approximate_three_block(alpha_seq, z, n_k: int, phi0=(1.0, 0.0)) -> dict:
    """Compare ``alpha`` with its ``n_k``-periodization and bound ``||Phi(l)||`` from below.

    Picks the site ``l`` where the periodized solution is largest; by the
    perturbation bound, ``||Phi(l)|| >= Delta/2`` once
    ``||Z_k(l, 0) - Z(l, 0)|| <= Delta/2``.
    """
    seq, z = _seq(alpha_seq), complex(z)
    phi = _phi0(phi0) / np.linalg.norm(phi0)
    per = periodized(seq, n_k, -n_k, 2 * n_k)
    ref = check_three_block(per, z, n_k, phi)
    site = max(ref.norms, key=ref.norms.get)
    gap = float(norm2(gz_cocycle(per, site, 0, z) - gz_cocycle(seq, site, 0, z)))
    actual = float(np.linalg.norm(gz_cocycle(seq, site, 0, z) @ phi))
    Delta = ref.constants.Delta
    return {"site": site, "Delta": Delta, "periodic_norm": ref.norms[site], "gap": gap,
            "norm": actual, "close": gap <= Delta / 2, "ok": actual >= Delta / 2}


@dataclass
class GordonSequenceReport:
    scales: list
    defects: list                    # max_j |alpha(j) - alpha(j +- n_k)|
    log_values: dict                 # C -> [log(C^{n_k} * defect)]
    tol: float

    def values(self, C: float) -> np.ndarray:
        return np.exp(np.asarray(self.log_values[C]))

    def passes(self, C: float) -> bool:
        """The last value is below ``tol`` and the tail is non-increasing."""
        v = np.asarray(self.log_values[C])
        tail = v[len(v) // 2:]
        # exact zeros give -inf; compare directly so that -inf after -inf counts as non-increasing
        return bool(v[-1] <= math.log(self.tol) and np.all(tail[1:] <= tail[:-1] + 1e-12))

    @property
    def summary(self) -> dict:
        return {str(C): self.passes(C) for C in self.log_values}


def gordon_sequence_test(alpha_seq, scales: Sequence[int], C_list: Iterable[float], tol: float = 1e-8,
                         sides: str = "both") -> GordonSequenceReport:
    """Evaluate ``C^{n_k} max_{0 <= j < n_k} |alpha(j) - alpha(j +- n_k)|`` in log space.

    ``sides="forward"`` only compares with ``alpha(j + n_k)``.
    """
    if sides not in ("both", "forward"):
        raise DomainError("sides must be 'both' or 'forward'")
    seq = _seq(alpha_seq)
    scales = [int(n) for n in scales]
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise DomainError("scales must be strictly increasing")
    defects = []
    for n in scales:
        mid = seq.segment(0, n)
        d = np.max(np.abs(mid - seq.segment(n, 2 * n)))
        if sides == "both":
            d = max(d, np.max(np.abs(mid - seq.segment(-n, 0))))
        defects.append(float(d))
    logs = {}
    for C in C_list:
        C = float(C)
        if C <= 0:
            raise DomainError("C must be positive")
        logs[C] = [n * math.log(C) + (math.log(d) if d > 0 else -math.inf) for n, d in zip(scales, defects)]
    return GordonSequenceReport(scales, defects, logs, float(tol))


@dataclass
class ExclusionSummary:
    """Outcome of running two-block certificates over scan points and scales."""

    certified_fraction: float
    min_slack: float
    n_points: int
    scales: list
    trace_sup: list
    certificates: list
    failures: list

    def to_dict(self) -> dict:
        return {"certified_fraction": self.certified_fraction, "min_slack": self.min_slack,
                "n_points": self.n_points, "scales": self.scales, "trace_sup": self.trace_sup,
                "failures": self.failures, "certificates": [c.to_dict() for c in self.certificates]}


def eigenvalue_excluder(beta, gamma, theta, scan, k_range: Iterable[int] = range(3, 9),
                        max_points: int | None = 128, budget: int | None = None) -> ExclusionSummary:
    """Two-block certificates at bounded scan points for the Sturmian sequence.

    Scales come from the word itself (first square among the four candidate
    lengths at each ``k``).  At each point ``c`` is the largest ``|tr T(n_k, 0)|``
    over the scales, and both basis vectors are used as ``Phi(0)``.
    """
    freq = Frequency.coerce(theta)
    k_range = list(k_range)
    cf = freq.cf(max(k_range) + 2)
    q = convergents(cf, max(k_range) + 1).q
    reach = 2 * (q[max(k_range) + 1] + q[max(k_range)])
    seq = VerblunskySequence.sturmian(beta, gamma, freq, 0, reach, allow_degenerate=True)
    scales = [gordon_scales(seq.word, cf, k).n for k in k_range]
    zs = scan.zeta[scan.bounded_mask(budget)]
    if max_points is not None and zs.size > max_points:
        zs = zs[np.linspace(0, zs.size - 1, max_points).round().astype(int)]
    certs, sups, failures = [], [], []
    total = good = 0
    min_slack = math.inf
    for z in zs:
        traces = [abs(np.trace(szego_cocycle(seq, n, 0, z))) for n in scales]
        c = max(traces)
        sups.append(c)
        cert = GordonCertificate(complex(z))
        for n in scales:
            for phi in BASIS_STATES:
                chk = check_two_block(seq, z, n, phi, c)
                cert.checks.append(chk)
                total += 1
                good += chk.bound_ok
                min_slack = min(min_slack, chk.slack)
                if not chk.bound_ok:
                    failures.append({"z0": [z.real, z.imag], "n_k": n, "slack": chk.slack})
        certs.append(cert)
    frac = good / total if total else float("nan")
    return ExclusionSummary(frac, min_slack, int(zs.size), scales, sups, certs, failures)


@dataclass(frozen=True)
class PhaseMeasure:
    n: list
    per_n: list
    ratios: list
    limsup_a: int
    kam_bound: float
    hypothesis: bool

    @property
    def measure_bound(self) -> float:
        """``1 - 4 / kam_bound``, the guaranteed limsup of ``per_n``."""
        return 1.0 - 4.0 / self.kam_bound


def rotcode_phase_measure(cf: Sequence[int], n_range: Iterable[int]) -> PhaseMeasure:
    """``1 - 4 q_n / q_{n+1}`` over ``n_range`` and the bound on ``limsup q_{n+1} / q_n``.

    ``limsup a_j`` is estimated as the largest partial quotient on the second
    half of the supplied prefix.
    """
    n_range = [int(n) for n in n_range]
    cf = [int(a) for a in cf]
    if max(n_range) + 1 > len(cf):
        raise DomainError(f"need {max(n_range) + 1} partial quotients, have {len(cf)}")
    q = convergents(cf, max(n_range) + 1).q
    ratios = [q[n + 1] / q[n] for n in n_range]
    per_n = [1.0 - 4.0 * q[n] / q[n + 1] for n in n_range]
    A = max(cf[len(cf) // 2:])
    kam = 0.5 * (A + math.sqrt(A * A + 4))
    return PhaseMeasure(n_range, per_n, ratios, A, kam, A >= 4)


def three_block_phase_fraction(theta, interval: RotationInterval, n: int, n_phases: int = 256,
                               seed: int = 0) -> dict:
    """Fraction of random phases whose rotation coding has a three-block repetition at ``q_n``.

    The guaranteed lower bound ``1 - 4 q_n / q_{n+1}`` is returned alongside.
    """
    freq = Frequency.coerce(theta)
    cf = freq.cf(n + 1)
    q = convergents(cf, n + 1).q
    qn = q[n]
    rng = np.random.default_rng(seed)
    phases = rng.random(n_phases)
    hits = 0
    for phi in phases:
        w = rotation_word(freq, float(phi), interval, -qn, 2 * qn)
        hits += has_three_block(w, qn)
    return {"n": n, "q_n": qn, "fraction": hits / n_phases, "bound": 1.0 - 4.0 * qn / q[n + 1],
            "n_phases": n_phases, "seed": seed}
