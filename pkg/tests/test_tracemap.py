from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmvlab.cmv import VerblunskySequence
from cmvlab.contfrac import convergents
from cmvlab.errors import DomainError
from cmvlab.tracemap import (
    TraceSetup,
    bounded_orbit_test,
    branch_exponents,
    chebyshev_u,
    escape_fires,
    escape_threshold,
    fricke_vogt,
    growth_sequence,
    init_matrices,
    iterate_matrices,
    iterate_scaled,
    lyapunov_estimate,
    spectrum_scan,
    trace_orbit,
    trace_step,
)
from cmvlab.transfer import det2, szego_cocycle

CF = [2, 1, 3, 1, 2, 4, 1, 1, 2, 3, 1, 2, 1, 1, 2, 1, 3, 1, 2, 2]
GOLDEN = [1] * 30
SILVER = [2] * 30
disk = st.builds(lambda r, t: r * np.exp(1j * t), st.floats(0, 0.9), st.floats(0, 2 * np.pi))


def _theta(cf):
    x = Fraction(0)
    for a in reversed(cf):
        x = 1 / (a + x)
    return x


def test_init_matrices_closed_form():
    b, g, zeta = 0.3 + 0.2j, -0.4 + 0.1j, np.exp(0.7j)
    m1, m0 = init_matrices(b, g, zeta)
    rb, rg = np.sqrt(1 - abs(b) ** 2), np.sqrt(1 - abs(g) ** 2)
    expect = np.array([[1 - b * np.conj(g), np.conj(b) - np.conj(g)],
                       [b - g, 1 - np.conj(b) * g]]) / (rb * rg)
    assert np.max(np.abs(m1 - expect)) <= 1e-14
    assert abs(det2(m1) - 1) <= 1e-14 and abs(det2(m0) - 1) <= 1e-14
    m1, _ = init_matrices(b, b, zeta)
    assert np.max(np.abs(m1 - np.eye(2))) <= 1e-15


def test_matrices_match_sturmian_transfer_products():
    # M_n = zeta^{-q_n / 2} T(q_n, 0) along the Sturmian coefficients
    b, g, phi = 0.3 + 0.2j, -0.4 + 0.1j, 1.1
    N = 12
    q = convergents(CF, N).q
    mats = iterate_matrices(TraceSetup.from_angles(b, g, CF, phi), N)
    seq = VerblunskySequence.sturmian(b, g, _theta(CF), 0, q[N] + 2)
    for n in range(N + 1):
        T = np.exp(-0.5j * q[n] * phi) * szego_cocycle(seq, q[n], 0, np.exp(1j * phi))
        assert np.max(np.abs(T - mats[n + 1])) <= 1e-9 * max(1.0, np.max(np.abs(T)))


def test_recursion_keeps_determinant_one():
    setup = TraceSetup.from_angles(0.5, -0.2 + 0.3j, CF, np.linspace(0.1, 6, 9))
    for m in iterate_matrices(setup, 9):
        d = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
        scale = np.max(np.abs(m), axis=(-1, -2)) ** 2
        assert np.all(np.abs(d - 1) <= 1e-11 * np.maximum(1, scale))


def test_scaled_iteration_agrees():
    setup = TraceSetup.from_angles(0.4j, 0.1, CF, [0.3, 2.0, 4.5])
    plain = iterate_matrices(setup, 8)[-1]
    scaled = iterate_scaled(setup, 8)[-1]
    assert np.allclose(scaled.value(), plain, rtol=1e-10, atol=0)


def test_branch_exponents():
    e = branch_exponents(CF, 15)
    assert e[:2] == [0, -1]
    for n in range(1, 16):
        assert e[n + 1] == CF[n - 1] * e[n] + e[n - 1]


def test_chebyshev_u():
    t = np.linspace(0.1, 3, 7)
    for k in range(6):
        assert np.allclose(chebyshev_u(k, np.cos(t)), np.sin((k + 1) * t) / np.sin(t))
    assert np.all(chebyshev_u(-1, np.cos(t)) == 0)
    assert np.all(chebyshev_u(-2, np.cos(t)) == -1)


def test_fricke_vogt_degenerate_and_initial():
    zeta = np.exp(1j * np.linspace(0, 6, 11))
    assert np.max(np.abs(fricke_vogt(0.4 - 0.3j, 0.4 - 0.3j, zeta))) <= 1e-12
    b, g = 0.2 + 0.6j, -0.5
    m1, m0 = init_matrices(b, g, zeta)
    h = lambda m: 0.5 * (m[..., 0, 0] + m[..., 1, 1])
    x, y, z = h(m1), h(m0), h(m0 @ m1)
    assert np.max(np.abs(x * x + y * y + z * z - 2 * x * y * z - 1 - fricke_vogt(b, g, zeta))) <= 1e-12


def test_chebyshev_and_matrix_traces_agree():
    setup = TraceSetup.from_angles(0.3 + 0.2j, -0.4 + 0.1j, CF, np.linspace(0, 2 * np.pi, 40, endpoint=False))
    cheb = trace_orbit(setup, 14)
    mat = trace_orbit(setup, 14, method="matrix")
    for a, b in zip(cheb, mat):
        n = min(len(a.triples), len(b.triples))
        ta, tb = a.triples[:n], b.triples[:n]
        small = np.max(np.abs(tb), axis=1) < 1e6
        rel = np.abs(ta - tb)[small] / np.maximum(1, np.abs(tb[small]))
        assert np.all(rel <= 1e-9)


@settings(max_examples=25)
@given(disk, disk, st.floats(0, 2 * np.pi))
def test_invariant_drift_on_bounded_orbits(b, g, phi):
    rec = trace_orbit(TraceSetup.from_angles(b, g, CF, phi), 20)
    if rec.status == "bounded":
        size = np.max(np.abs(rec.triples))
        assert rec.invariant_drift <= 1e-8 * max(1.0, size ** 3)


def test_escape_certificate_persists():
    # once it fires, the certificate holds at every later level
    angles = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    b, g = 0.5, -0.5 + 0.2j
    thr = escape_threshold(b, g)
    recs = trace_orbit(TraceSetup.from_angles(b, g, CF, angles), 16)
    fired = 0
    for r in recs:
        if r.escape_step is None:
            continue
        fired += 1
        x, y, z = r.x[r.escape_step:], r.y[r.escape_step:], r.z[r.escape_step:]
        assert np.all(escape_fires(x, y, z, thr))
        assert np.all(np.diff(np.abs(y)) > 0)
    assert fired > 100


def test_trace_step_is_matrix_power_identity():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    A /= np.sqrt(np.linalg.det(A))
    B = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    B /= np.sqrt(np.linalg.det(B))
    h = lambda m: 0.5 * np.trace(m)
    for a in range(1, 6):
        C = A @ np.linalg.matrix_power(B, a)
        x, y, z = trace_step(h(A), h(B), h(B @ A), a)
        assert np.allclose([x, y, z], [h(B), h(C), h(C @ B)], rtol=1e-10)


def test_degenerate_band_oracle():
    # beta == gamma: M_n = M_0^{q_n}, bounded exactly where |cos(phi/2)| <= rho
    b = 0.6 * np.exp(0.4j)
    rho = np.sqrt(1 - abs(b) ** 2)
    scan = spectrum_scan(b, b, CF, grid_size=512, N_max=14)
    c = np.abs(np.cos(scan.angles / 2)) / rho
    clear = np.abs(c - 1) > 1e-9
    assert np.array_equal(scan.bounded_mask()[clear], (c <= 1)[clear])
    band = 2 * (2 * np.pi - 4 * np.arccos(rho)) / 2
    assert abs(scan.bounded_measure() - band) <= 2 * 2 * np.pi / 512


def test_bounded_measure_monotone_in_budget():
    scan = spectrum_scan(0.5, -0.3 + 0.3j, GOLDEN, grid_size=1024, N_max=18)
    m = scan.measure_by_budget()
    assert all(a >= b - 1e-15 for a, b in zip(m, m[1:]))
    assert m[-1] < m[0]
    assert abs(np.sum(scan.weights) - 2 * np.pi) <= 1e-12


def test_refine_adds_points_at_boundaries():
    base = spectrum_scan(0.5, -0.3, GOLDEN, grid_size=256, N_max=12)
    ref = spectrum_scan(0.5, -0.3, GOLDEN, grid_size=256, N_max=12, refine=2)
    assert ref.angles.size > base.angles.size
    assert np.all(np.diff(ref.angles) > 0)
    assert abs(np.sum(ref.weights) - 2 * np.pi) <= 1e-12


def test_lyapunov_estimate():
    setup = TraceSetup.from_angles(0.0, 0.0, GOLDEN, np.linspace(0, 6, 7))
    assert np.max(np.abs(lyapunov_estimate(setup, 10))) <= 1e-12
    scan = spectrum_scan(0.6, -0.6, GOLDEN, grid_size=256, N_max=16)
    esc = scan.escape_step >= 0
    assert esc.any() and np.all(scan.lyapunov[esc] > 0)
    with pytest.raises(DomainError):
        lyapunov_estimate(setup, 2)


def test_growth_sequence_golden_and_silver():
    r = growth_sequence(GOLDEN, 1, 4)
    assert r.G == [1, 1, 2, 3, 5]
    assert r.C == Fraction(1, 2)
    assert r.ok
    s = growth_sequence(SILVER, 2, 4)
    # q = 1, 2, 5, 12, 29, 70, 169; G_j follows the Pell recursion from (1, 2)
    assert s.G == [1, 2, 5, 12, 29]
    assert s.C == Fraction(1, 6)
    assert s.ratios[:2] == [Fraction(1, 5), Fraction(1, 6)] and s.ok


def test_validation():
    with pytest.raises(DomainError):
        TraceSetup(1.0, 0.0, CF, 1.0)
    with pytest.raises(DomainError):
        TraceSetup(0.1, 0.0, CF, 1.1)
    with pytest.raises(DomainError):
        bounded_orbit_test(TraceSetup(0.1, 0.0, CF, 1.0), 4)
    with pytest.raises(DomainError):
        spectrum_scan(0.1, 0.2, CF, grid_size=32)
    with pytest.raises(DomainError):
        escape_threshold(1.2, 0)
    assert escape_threshold(0.3, 0.3) == 1.0
