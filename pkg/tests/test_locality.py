import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from warpfock.errors import ConfigurationError, OrderingError, PreconditionError
from warpfock.fock import FockState, create
from warpfock.geometry import ThetaMatrix, Wedge, phase_form
from warpfock.locality import (
    commutator_residual,
    continuity_sequence,
    contour_identity_gap,
    field_bound,
    full_commutator_norm,
    s_matrix_phase,
    same_wedge,
    tempered_bound_check,
    two_particle_state,
)
from warpfock.deformation import DeformedField, deformed_field_apply
from warpfock.fock import SmearedField
from warpfock.suites import LOCALITY_CASES, packet_pair, scatter_deviation
from warpfock.testfunctions import OnShellFunction, TestFunction, momentum_grid, rapidity_grid, sample_onshell
from warpfock.unitaries import BoostStabilizer, Dilation, Generator, Identity, MomentumShift

FINE = rapidity_grid(1.0, 5.0, 256, 2)
W = Wedge.reference(2)

# [DERIVED] |s/|s| - exp(2 i p theta q)| for lam = 0.1, packets at rapidities +-0.3 on N = 64, 128, 256
SCATTER_DEVIATIONS = (6.956457793264866e-04, 1.5441093484166006e-04, 4.0972417299497644e-05)


def case(k):
    cf, hf, cg, hg, lam, z = LOCALITY_CASES[k]
    return TestFunction(cf, hf), TestFunction(cg, hg), ThetaMatrix.from_params(lam, 0.0, 2), z


@pytest.mark.parametrize("k", range(len(LOCALITY_CASES)))
@pytest.mark.parametrize("V", [Identity(), BoostStabilizer(2 * FINE.rapidity_step), MomentumShift(0.3)])
def test_residual_resolved_on_fine_grid(k, V):
    f, g, th, z = case(k)
    r = commutator_residual(f, g, th, V, z, (0.0, 0.0), FINE)
    neg = TestFunction(-g.center, g.half_widths)
    c = commutator_residual(f, neg, th, V, z, (0.0, 0.0), FINE, override=True)
    assert r.relative <= 1e-6 and r.relative <= 1e-4 * c.relative
    assert r.contour_gap <= 1e-8


@pytest.mark.parametrize("k", range(len(LOCALITY_CASES)))
def test_residual_convergence_rate(k):
    # pre-asymptotic range: each doubling of N cuts the residual by at least 4x
    f, g, th, z = case(k)
    res = [commutator_residual(f, g, th, Identity(), z, (0.0, 0.0), rapidity_grid(1.0, 5.0, n, 2)).relative for n in (64, 128, 256)]
    assert res[1] <= res[0] / 4 and res[2] <= res[1] / 4


@given(st.floats(-0.5, 0.5), st.floats(0.8, 2.0), st.floats(0.1, 0.4))
def test_contour_identity(c0, c1, h):
    f = TestFunction((c0, c1), (h, h))
    assert contour_identity_gap(f, rapidity_grid(1.0, 4.0, 32, 2)) <= 1e-8


def test_free_commutator_vanishes():
    f, g, _, _ = case(0)
    r = commutator_residual(f, g, ThetaMatrix.zero(2), Identity(), (0.0, 0.0), (0.0, 0.0), FINE)
    assert r.relative <= 1e-6


def test_residual_preconditions():
    f, g, th, z = case(0)
    with pytest.raises(PreconditionError):
        commutator_residual(g, f, th, Identity(), z, (0.0, 0.0), FINE)
    with pytest.raises(ConfigurationError):
        commutator_residual(f, g, th, Identity(), z, (0.0, 0.0), momentum_grid())
    with pytest.raises(ConfigurationError):
        commutator_residual(f, g, th, Dilation(0.1), z, (0.0, 0.0), FINE)


def test_same_wedge():
    assert same_wedge(W.opposite().opposite(), W)
    assert not same_wedge(W.opposite(), W)


def full_commutator_pair(n):
    grid = rapidity_grid(1.0, 4.0, n, 2)
    f, g, _, _ = case(1)
    vac = FockState.vacuum(grid, 3)
    psi = create(sample_onshell(TestFunction((0.0, 0.5), (0.3, 0.3)), grid, 1), vac) + vac
    pos, s1 = full_commutator_norm(f, g, W, W.opposite(), Identity(), psi, 0.25)
    neg, s2 = full_commutator_norm(f, TestFunction(-g.center, g.half_widths), W, W.opposite(), Identity(), psi, 0.25, override=True)
    return pos / s1, neg / s2, psi


def test_full_commutator_converges_while_control_stays():
    pos64, neg64, psi = full_commutator_pair(64)
    pos128, neg128, _ = full_commutator_pair(128)
    assert pos128 <= pos64 / 4
    assert neg128 == pytest.approx(neg64, rel=0.01) and neg128 > 1e-2
    f, g, _, _ = case(1)
    with pytest.raises(PreconditionError):
        full_commutator_norm(f, g, W, W, Identity(), psi, 0.25)


def test_scatter_phase_frozen_values():
    for n, frozen in zip((64, 128, 256), SCATTER_DEVIATIONS):
        _, _, dev = scatter_deviation(rapidity_grid(1.0, 4.0, n, 2), 0.1, 0.3, -0.3)
        assert dev == pytest.approx(frozen, rel=1e-6)
    assert SCATTER_DEVIATIONS[0] <= 1e-3


def test_scatter_phase_properties():
    grid = rapidity_grid(1.0, 4.0, 64, 2)
    _, _, a, b = packet_pair(grid, 0.3, -0.3)
    assert abs(s_matrix_phase(a, b, ThetaMatrix.zero(2)) - 1) <= 1e-10
    th = ThetaMatrix.from_params(0.1, 0.0, 2)
    s = s_matrix_phase(a, b, th)
    assert abs(abs(s) - 1) < 1e-3
    assert abs(s - np.conj(s_matrix_phase(b, a, th, w=W.opposite()))) <= 1e-12
    with pytest.raises(OrderingError):
        s_matrix_phase(b, a, th)
    with pytest.raises(PreconditionError):
        s_matrix_phase(a, a, th)


def test_scatter_sign_convention():
    # the phase follows exp(+2 i p theta q) with p the faster packet, not its conjugate
    grid = rapidity_grid(1.0, 4.0, 64, 2)
    i, j, a, b = packet_pair(grid, 0.3, -0.3)
    th = ThetaMatrix.from_params(0.1, 0.0, 2)
    ang = np.angle(s_matrix_phase(a, b, th))
    assert ang == pytest.approx(2 * phase_form(grid.nodes[i], grid.nodes[j], th), rel=0.01)


def test_time_independence():
    grid = rapidity_grid(1.0, 4.0, 64, 2)
    _, _, a, b = packet_pair(grid, 0.3, -0.3)
    states = [two_particle_state(a, b, W, W.opposite(), Identity(), "in", grid, 0.1, t=t) for t in (-5.0, 0.0, 5.0)]
    assert max((s - states[1]).norm() for s in states) <= 1e-13
    with pytest.raises(OrderingError):
        two_particle_state(a, b, W, W.opposite(), Identity(), "out", grid, 0.1)


def test_bounds():
    grid = rapidity_grid(1.0, 4.0, 16, 2)
    rng = np.random.default_rng(7)
    sm = SmearedField(OnShellFunction(grid, rng.standard_normal(16), 1), OnShellFunction(grid, rng.standard_normal(16), -1))
    desc = DeformedField(sm, ThetaMatrix.from_params(0.5, 0.0, 2), Generator(BoostStabilizer(grid.rapidity_step)))
    psi = FockState.random(grid, rng, 3, sectors=(0, 1, 2))
    assert deformed_field_apply(desc, psi).norm() <= field_bound(desc, psi) * (1 + 1e-12)
    excess, bound = tempered_bound_check(desc, psi, rng.standard_normal((5, 2)) * 3)
    assert excess <= 1e-10 and bound > 0
    seq = continuity_sequence(desc, psi.project(1), np.array([0.2, 0.1]))
    assert np.all(np.diff(seq) <= 0) and seq[-1] / seq[0] < 1e-4
