"""Acceptance criteria 1-10, each at its stated tolerance and runtime.

Every test prints one ``ACCEPTANCE k: PASS|FAIL`` line; the lines are also
collected into the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from cmvlab.cmv import CmvOperator, VerblunskySequence
from cmvlab.contfrac import Frequency, convergents
from cmvlab.gordon import eigenvalue_excluder, rotcode_phase_measure
from cmvlab.tracemap import TraceSetup, fricke_vogt, growth_sequence, iterate_matrices, spectrum_scan, trace_orbit
from cmvlab.transfer import (
    check_sgz_identity,
    det2,
    gz_step,
    one_step_identity_deviation,
    perturbation_gap,
    szego,
    szego_cocycle,
)
from cmvlab.words import (
    RotationInterval,
    check_prefix_identity,
    factor_complexity,
    mechanical_word,
    rotation_word,
    sturmian_word,
)

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance

BETA, GAMMA = 0.5, -0.5
GRID = 4096


def report(k: int, ok: bool, detail: str):
    line = f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _disk(rng, size, r=0.9):
    return r * np.sqrt(rng.random(size)) * np.exp(2j * np.pi * rng.random(size))


def _circle(rng, size=None):
    return np.exp(2j * np.pi * rng.random(size))


@pytest.fixture(scope="module")
def golden_scan():
    t0 = time.perf_counter()
    freq = Frequency.golden()
    scan = spectrum_scan(BETA, GAMMA, freq.cf(18), grid_size=GRID, N_max=18)
    return scan, time.perf_counter() - t0


def test_1_identity_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    worst_float_rel = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 51))
        seq = VerblunskySequence(_disk(rng, 2 * n), 0)
        z = complex(_circle(rng))
        worst = max(worst, check_sgz_identity(seq, z, n, precision=128))
        T = szego_cocycle(seq, 2 * n, 0, z)
        worst_float_rel = max(worst_float_rel, check_sgz_identity(seq, z, n) / max(1.0, np.linalg.norm(T, 2)))
    a, b, z = _disk(rng, 10_000), _disk(rng, 10_000), _circle(rng, 10_000)
    one_step = float(np.max(one_step_identity_deviation(a, b, z)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and one_step <= 1e-13 and dt < 5
    report(1, ok, f"identity dev {worst:.2e} (128-bit products; float64 dev/||T|| {worst_float_rel:.1e}), "
                  f"one-step {one_step:.2e}, {dt:.2f}s")


def test_2_determinant_unitarity_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    a, z = _disk(rng, 10_000), _circle(rng, 10_000)
    det_s = float(np.max(np.abs(det2(szego(a, z)) - z)))
    det_y = max(float(np.max(np.abs(det2(gz_step(a, n, z)) + 1))) for n in (0, 1))
    unit = dense = 0.0
    for _ in range(50):
        seq = VerblunskySequence(_disk(rng, 64), -int(rng.integers(0, 32)))
        op = CmvOperator(seq)
        u = np.zeros(64, dtype=complex)
        u[2:-2] = rng.normal(size=60) + 1j * rng.normal(size=60)
        unit = max(unit, abs(np.linalg.norm(op.apply(u)) - np.linalg.norm(u)))
        D = op.dense()
        dense = max(dense, _stencil_gap(seq, D))
    dt = time.perf_counter() - t0
    ok = det_s <= 1e-13 and det_y <= 1e-13 and unit <= 1e-12 and dense <= 1e-14 and dt < 5
    report(2, ok, f"det S {det_s:.1e}, det Y {det_y:.1e}, unitarity {unit:.1e}, dense-stencil {dense:.1e}, {dt:.2f}s")


def _stencil_gap(seq, D):
    """Largest entry gap between a dense block and the five-diagonal formula."""
    def al(n):
        # columns outside the block may need alpha beyond the window; they are dropped below
        return seq.alpha_at(n) if seq.start <= n < seq.stop else 0.0

    rho = lambda n: math.sqrt(1 - abs(al(n)) ** 2)
    n0 = seq.start + 1
    size = D.shape[0]
    ref = np.zeros_like(D)
    for r in range(size):
        i = n0 + r
        for c in range(size):
            j = n0 + c
            if i % 2 == 0:
                k = i
                entries = {k - 1: np.conj(al(k)) * rho(k - 1), k: -np.conj(al(k)) * al(k - 1),
                           k + 1: rho(k) * np.conj(al(k + 1)), k + 2: rho(k) * rho(k + 1)}
            else:
                k = i - 1
                entries = {k - 1: rho(k) * rho(k - 1), k: -rho(k) * al(k - 1),
                           k + 1: -al(k) * np.conj(al(k + 1)), k + 2: -al(k) * rho(k + 1)}
            ref[r, c] = entries.get(j, 0)
    return float(np.max(np.abs(D - ref)))


def test_3_word_suite():
    t0 = time.perf_counter()
    freqs = {"golden": Frequency.golden(), "silver": Frequency.silver(), "cf:1,2": Frequency.from_cf([1, 2])}
    prefix = all(check_prefix_identity(f.cf(16), f, k) for f in freqs.values() for k in range(1, 16))
    complexity = True
    for f in freqs.values():
        w = sturmian_word(f, 0, 4000)
        complexity &= all(factor_complexity(w, n) == n + 1 for n in range(1, 31))
    coding = True
    f = freqs["golden"]
    for phi in ("0", "0.3", "0.77", "0.6180339887"):
        rot = rotation_word(f, phi, RotationInterval.sturmian(), -10_000, 10_001)
        mech = mechanical_word(f, phi, -10_000, 10_001)
        coding &= bool(np.array_equal(rot.symbols, mech.symbols))
    dt = time.perf_counter() - t0
    ok = prefix and complexity and coding and dt < 10
    report(3, ok, f"prefix identity {prefix}, complexity n+1 {complexity}, coding=mechanical {coding}, {dt:.2f}s")


def test_4_trace_map_suite(golden_scan):
    t0 = time.perf_counter()
    scan, _ = golden_scan
    cf = Frequency.golden().cf(25)
    pts = scan.bounded_angles()[::8]
    recs = trace_orbit(TraceSetup.from_angles(BETA, GAMMA, cf, pts), 20)
    drift = max(r.invariant_drift for r in recs if r.status == "bounded")
    # brute-force Szego products along the Sturmian prefix
    q = convergents(cf, 12).q
    seq = VerblunskySequence.sturmian(BETA, GAMMA, Frequency.golden(), 0, q[12] + 1)
    rng = np.random.default_rng(104)
    angles = np.concatenate([pts[:20], 2 * np.pi * rng.random(20)])
    mats = iterate_matrices(TraceSetup.from_angles(BETA, GAMMA, cf, angles), 12)
    tr_bounded = tr_rel = 0.0
    for i, phi in enumerate(angles):
        for n in range(13):
            T = np.exp(-0.5j * q[n] * phi) * szego_cocycle(seq, q[n], 0, np.exp(1j * phi))
            gap = abs(np.trace(T) - np.trace(mats[n + 1][i]))
            if i < 20:
                tr_bounded = max(tr_bounded, gap)
            tr_rel = max(tr_rel, gap / max(1.0, abs(np.trace(T))))
    b = _disk(rng, 100)
    fv = max(float(np.max(np.abs(fricke_vogt(bb, bb, _circle(rng, 100))))) for bb in b)
    dt = time.perf_counter() - t0
    ok = drift <= 1e-8 and tr_bounded <= 1e-9 and tr_rel <= 1e-9 and fv <= 1e-12 and dt < 30
    report(4, ok, f"drift {drift:.1e} on {len(recs)} bounded orbits, trace gap {tr_bounded:.1e} (bounded pts) / "
                  f"{tr_rel:.1e} (relative, random pts), I(beta=gamma) {fv:.1e}, {dt:.2f}s")


def test_5_spectral_cross_validation(golden_scan):
    t0 = time.perf_counter()
    scan, scan_time = golden_scan
    seq = VerblunskySequence.sturmian(BETA, GAMMA, Frequency.golden(), 0, 600)
    ev = CmvOperator(seq).truncated_spectrum(600, start=0)
    ang = np.mod(np.angle(ev), 2 * np.pi)
    bounded = scan.bounded_angles()
    d = np.abs(ang[:, None] - bounded[None, :])
    d = np.min(np.minimum(d, 2 * np.pi - d), axis=1)
    cell = 2 * np.pi / GRID
    far = int(np.sum(d > 2 * cell))
    dt = time.perf_counter() - t0 + scan_time
    ok = far == 0 and dt < 120
    report(5, ok, f"{far}/{ev.size} eigenvalues farther than 2 cells from a budget-18 bounded point "
                  f"(worst {np.max(d) / cell:.1f} cells), {dt:.2f}s")


def test_6_cantor_trend(golden_scan):
    scan, scan_time = golden_scan
    m = scan.measure_by_budget()
    ok = m[18] < m[10] < m[5]
    report(6, ok, f"bounded measure at budget 5/10/18: {m[5]:.4f} > {m[10]:.4f} > {m[18]:.4f}, {scan_time:.2f}s")


def test_7_gordon_certificates(golden_scan):
    t0 = time.perf_counter()
    scan, scan_time = golden_scan
    out = eigenvalue_excluder(BETA, GAMMA, Frequency.golden(), scan, range(3, 9), max_points=128)
    dt = time.perf_counter() - t0 + scan_time
    finite = all(math.isfinite(c) for c in out.trace_sup)
    ok = out.n_points >= 128 and finite and out.certified_fraction == 1.0 and dt < 120
    report(7, ok, f"{out.n_points} points, scales {out.scales}, pass rate {out.certified_fraction:.3f}, "
                  f"min slack {out.min_slack:.2f}, {dt:.2f}s")


def test_8_perturbation_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(108)
    fails = 0
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 31))
        r = 0.8 * float(rng.random()) + 1e-3
        delta = 1e-6 * float(rng.random())
        a = _disk(rng, n, r - delta)
        b = a + delta * _circle(rng, n)
        rep = perturbation_gap(VerblunskySequence(a, 0), VerblunskySequence(b, 0), complex(_circle(rng)), n, r)
        fails += not rep.ok
        worst = max(worst, rep.lhs / rep.bound if rep.bound > 0 else 0.0)
    dt = time.perf_counter() - t0
    report(8, fails == 0, f"{1000 - fails}/1000 pairs within delta C(r)^n, max ratio {worst:.2e}, {dt:.2f}s")


def test_9_growth_bound():
    rng = np.random.default_rng(109)
    prefixes = [[1] * 25, [2] * 25] + [list(rng.integers(1, 10, size=25)) for _ in range(20)]
    checked = bad = 0
    for cf in prefixes:
        for k0 in range(1, 6):
            rep = growth_sequence(cf, k0, 15)
            checked += len(rep.ratios)
            bad += sum(r < rep.C for r in rep.ratios)
    report(9, bad == 0, f"{checked - bad}/{checked} exact ratios >= C over {len(prefixes)} prefixes")


def test_10_phase_measure_formulas():
    lines, ok = [], True
    for a in (4, 5, 6):
        pm = rotcode_phase_measure([a] * 40, range(1, 21))
        target = 1 - 4 / ((a + math.sqrt(a * a + 4)) / 2)
        err = abs(pm.per_n[-1] - target)
        ok &= err <= 1e-6 and pm.hypothesis and pm.limsup_a == a
        lines.append(f"a={a}: |per_20 - limit| {err:.1e}, hypothesis {pm.hypothesis}")
    report(10, ok, "; ".join(lines))
