import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warpfock.deformation import (
    Annihilator,
    ConjugationMap,
    Creator,
    DeformedField,
    Field,
    ParityMap,
    Product,
    SecondQuantizedMap,
    Translation,
    TranslationMap,
    Warped,
    adjoint_deformed,
    apply_operator,
    covariance_transport,
    deformed_field_apply,
    kernel_1d,
    neville_zero,
    oscillatory_phase,
    rieffel_product,
    warp_oscillatory,
    warp_right_form,
    warp_spectral,
)
from warpfock.errors import ConfigurationError, PreconditionError
from warpfock.fock import FockState, SmearedField, free_field_apply
from warpfock.geometry import ThetaMatrix, phase_form
from warpfock.testfunctions import OnShellFunction, rapidity_grid
from warpfock.unitaries import BoostStabilizer, Generator

GRID = rapidity_grid(1.0, 2.0, 8, 2)
BIG = rapidity_grid(1.0, 4.0, 16, 2)
TH = ThetaMatrix.from_params(0.6, 0.0, 2)
seeds = st.integers(0, 2**32 - 1)


def rand_h(grid, rng, sign=1, lo=0, hi=None):
    hi = grid.n if hi is None else hi
    v = np.zeros(grid.n, dtype=complex)
    v[lo:hi] = rng.standard_normal(hi - lo) + 1j * rng.standard_normal(hi - lo)
    return OnShellFunction(grid, v, sign)


def rand_field(grid, rng, lo=0, hi=None):
    return SmearedField(rand_h(grid, rng, 1, lo, hi), rand_h(grid, rng, -1, lo, hi))


def rand_state(grid, rng, n_max=2, sectors=(0, 1, 2), lo=0, hi=None):
    psi = FockState.random(grid, rng, n_max, sectors=sectors)
    hi = grid.n if hi is None else hi
    mask = np.zeros(grid.n)
    mask[lo:hi] = 1
    secs = []
    for n, s in enumerate(psi.sectors):
        m = np.array(1.0)
        for _ in range(n):
            m = np.multiply.outer(m, mask)
        secs.append(s * m)
    return psi.replace(secs)


def test_kernel_closed_form():
    # int int exp(-eps^2 (x^2+y^2) + i (b x + c y - s x y)) = pi/sqrt(D) exp(-(eps^2 (b^2+c^2) - i s b c) / (4 D))
    for b, c, s, eps in [(0.3, -0.7, 1.0, 0.2), (1.1, 0.4, -1.0, 0.1), (0.0, 0.5, 1.0, 0.05)]:
        D = eps**4 + s * s / 4
        exact = np.pi / np.sqrt(D) * np.exp(-(eps**2 * (b * b + c * c) - 1j * s * b * c) / (4 * D))
        assert abs(kernel_1d(np.array([b]), c, s, eps)[0] - exact) < 1e-12 * abs(exact)


def test_neville_is_exact_on_polynomials():
    h = [0.04, 0.01, 0.0025, 0.000625]
    vals = [3.0 + 2 * x - 5 * x * x + x**3 for x in h]
    assert neville_zero(h, vals) == pytest.approx(3.0, abs=1e-12)


@given(st.floats(0.05, 1.0), st.tuples(st.floats(-2, 2), st.floats(-2, 2)), st.tuples(st.floats(-2, 2), st.floats(-2, 2)))
def test_oscillatory_phase_recovers_exponential(lam, Q, mu):
    th = ThetaMatrix.from_params(lam, 0.0, 2)
    Q, mu = np.array(Q), np.array(mu)
    val, err = oscillatory_phase(Q[None, :], mu, th)
    assert abs(val[0] - np.exp(1j * phase_form(Q, mu, th))) < 1e-8
    assert err[0] < 1e-6


def test_zero_theta_is_undeformed(rng):
    psi = rand_state(GRID, rng)
    A = Field(rand_field(GRID, rng))
    out = warp_spectral(A, ThetaMatrix.zero(2), Generator(), psi)
    assert all(np.array_equal(a, b) for a, b in zip(out.sectors, apply_operator(A, psi).sectors))


@given(seeds)
def test_three_routes_agree(seed):
    rng = np.random.default_rng(seed)
    psi = rand_state(GRID, rng)
    gen = Generator(BoostStabilizer(GRID.rapidity_step))
    for A in (Creator(rand_h(GRID, rng)), Annihilator(rand_h(GRID, rng)), Field(rand_field(GRID, rng))):
        fast = warp_spectral(A, TH, gen, psi, route="fast")
        group = warp_spectral(A, TH, gen, psi, route="grouping")
        right = warp_right_form(A, TH, gen, psi)
        assert (fast - group).norm() <= 1e-12 * max(1.0, fast.norm())
        assert (fast - right).norm() <= 1e-12 * max(1.0, fast.norm())


def test_warped_creator_phase_by_hand(rng):
    # a*_theta(h) acting on a single particle at node j multiplies by exp(i p_q theta p_j)
    h = rand_h(GRID, rng)
    j = 3
    tens = np.zeros(GRID.n, dtype=complex)
    tens[j] = 1.0
    psi = FockState.from_sector(GRID, 1, tens, 2)
    out = warp_spectral(Creator(h), TH, Generator(), psi)
    ph = np.exp(1j * phase_form(GRID.nodes, GRID.nodes[j][None, :], TH))
    expect = np.sqrt(2) * 0.5 * (h.values * ph)
    assert np.allclose(out.sectors[2][:, j], expect + (np.arange(GRID.n) == j) * expect[j])


@settings(max_examples=5)
@given(seeds)
def test_oscillatory_oracle_matches_spectral(seed):
    rng = np.random.default_rng(seed)
    g = rapidity_grid(1.0, 0.75, 6, 2)
    psi = rand_state(g, rng)
    A = Field(rand_field(g, rng))
    th = ThetaMatrix.from_params(float(rng.uniform(0.1, 0.6)), 0.0, 2)
    gen = Generator(BoostStabilizer(g.rapidity_step))
    res = warp_oscillatory(A, th, gen, psi)
    assert (res.state - warp_spectral(A, th, gen, psi)).norm() <= 1e-6


def test_oscillatory_size_limit(rng):
    psi = FockState.vacuum(BIG, 2)
    with pytest.raises(ConfigurationError):
        warp_oscillatory(Creator(rand_h(BIG, rng)), TH, Generator(), psi)


@given(seeds)
def test_rieffel_product_of_creators(seed):
    rng = np.random.default_rng(seed)
    om = FockState.vacuum(BIG, 2)
    A, B = Creator(rand_h(BIG, rng)), Creator(rand_h(BIG, rng))
    gen = Generator(BoostStabilizer(BIG.rapidity_step))
    lhs = apply_operator(Product([Warped(A, TH, gen), Warped(B, TH, gen)]), om)
    assert (lhs - rieffel_product(A, B, TH, gen, om)).norm() <= 1e-12 * lhs.norm()


def test_translation_is_fixed_by_warping(rng):
    # U(x) commutes with X, so its warped version is itself (forced through the grouping route)
    psi = rand_state(GRID, rng)
    T = Translation(np.array([0.3, -1.1]))
    out = warp_spectral(Product([T]), TH, Generator(BoostStabilizer(GRID.rapidity_step)), psi)
    assert (out - apply_operator(T, psi)).norm() <= 1e-12 * psi.norm()


@pytest.mark.parametrize("W", [
    TranslationMap(np.array([0.4, -0.2])),
    SecondQuantizedMap(BoostStabilizer(BIG.rapidity_step)),
    ParityMap(),
    ConjugationMap(False),
    ConjugationMap(True),
])
def test_covariance_both_branches(W, rng):
    psi = rand_state(BIG, rng, lo=4, hi=12)
    A = Field(rand_field(BIG, rng, lo=4, hi=12))
    lhs, rhs = covariance_transport(W, A, TH, Generator(), psi)
    assert (lhs - rhs).norm() <= 1e-12 * max(1.0, lhs.norm())


def test_covariance_intertwining_failure(rng):
    # wrapped boost on edge-supported states breaks the intertwining relation
    psi = rand_state(BIG, rng)
    with pytest.raises(PreconditionError):
        covariance_transport(SecondQuantizedMap(BoostStabilizer(BIG.rapidity_step)), Field(rand_field(BIG, rng)), TH, Generator(), psi)


@given(seeds)
def test_transport_route(seed):
    rng = np.random.default_rng(seed)
    psi = rand_state(BIG, rng)
    desc = DeformedField(rand_field(BIG, rng), TH, Generator(BoostStabilizer(2 * BIG.rapidity_step)))
    a = deformed_field_apply(desc, psi, "direct")
    b = deformed_field_apply(desc, psi, "transport")
    assert (a - b).norm() <= 1e-12 * max(1.0, a.norm())


def test_vacuum_coincidence_and_hermiticity(rng):
    desc = DeformedField(rand_field(BIG, rng), TH, Generator(BoostStabilizer(BIG.rapidity_step)))
    om = FockState.vacuum(BIG, 3)
    a, b = deformed_field_apply(desc, om), free_field_apply(desc.smearing, om)
    assert all(np.array_equal(x, y) for x, y in zip(a.sectors, b.sectors))
    pairs = [(rand_state(BIG, rng, 3), rand_state(BIG, rng, 3)) for _ in range(3)]
    assert adjoint_deformed(desc, pairs)["max_deviation"] <= 1e-12
