from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad, quad

from warpfock.errors import ConfigurationError, EmptySupportError, RangeError
from warpfock.geometry import Wedge
from warpfock.testfunctions import (
    OnShellFunction,
    TestFunction,
    bump_profile,
    bump_transform_1d,
    bump_transform_adaptive,
    continue_to_shifted_contour,
    geometric_grid,
    is_precursor,
    make_grid,
    momentum_grid,
    perp_reflection_index,
    rapidity_grid,
    sample_onshell,
    sharp_packet,
    transform,
    velocity_support,
)

# [DERIVED] int_{-1}^{1} exp(1 - 1/(1-u^2)) du, scipy quad
BUMP_INTEGRAL = 1.2069003224378743
# [DERIVED] int dmu(p) exp(-p0) = K_0(1), scipy.special.k0
K0_ONE = 0.42102443824070823

coord = st.floats(-1.0, 1.0)
width = st.floats(0.3, 1.0)


@st.composite
def bumps(draw, d=2):
    c = [draw(coord) for _ in range(d)]
    h = [draw(width) for _ in range(d)]
    k = [draw(st.floats(-0.5, 0.5)) for _ in range(d)]
    return TestFunction(c, h, k, complex(draw(st.floats(0.5, 2)), draw(st.floats(-1, 1))))


def test_bump_profile_values():
    assert bump_profile(np.array([0.0, 1.0, -1.0, 2.0])).tolist() == [1.0, 0.0, 0.0, 0.0]
    assert bump_transform_1d(0.0, 256).real == pytest.approx(BUMP_INTEGRAL, rel=1e-13)


@pytest.mark.parametrize("t", [0.3, 2.0, 7.5, 20.0])
def test_bump_transform_against_quad(t):
    re = quad(lambda u: bump_profile(np.array([u]))[0] * np.cos(t * u), -1, 1, epsabs=1e-14, limit=200)[0]
    im = quad(lambda u: bump_profile(np.array([u]))[0] * np.sin(t * u), -1, 1, epsabs=1e-14, limit=200)[0]
    val, order, err = bump_transform_adaptive(np.array([t]))
    assert abs(val[0] - (re + 1j * im)) < 1e-11
    assert err <= 1e-10 * BUMP_INTEGRAL


def test_transform_against_2d_quadrature():
    f = TestFunction((0.2, -0.1), (0.6, 0.5), (0.3, -0.2), 1.5 - 0.5j)
    p = np.array([1.3, 0.4])
    g = np.array([1.0, -1.0])

    def part(fn):
        return dblquad(lambda x1, x0: fn(f(np.array([x0, x1])) * np.exp(1j * np.dot(g * p, [x0, x1]))),
                       -0.4, 0.8, -0.6, 0.4, epsabs=1e-13)[0]

    ref = part(np.real) + 1j * part(np.imag)
    assert abs(transform(f, p, 1)[0] - ref) < 1e-10


@given(bumps())
def test_conjugation_relation(f):
    # (conj f)^+(p) = conj(f^-(p))
    g = rapidity_grid(1.0, 3.0, 12, 2)
    a = sample_onshell(f.conjugate(), g, 1).values
    b = np.conj(sample_onshell(f, g, -1).values)
    assert np.allclose(a, b, atol=1e-13)


@given(bumps(), st.tuples(st.floats(-2, 2), st.floats(-2, 2)))
def test_translation_is_pointwise_shift(f, a):
    a = np.array(a)
    x = np.array([[0.1, 0.2], [-0.3, 0.5], [0.7, -0.9]]) + f.center
    assert np.allclose(f.translated(a)(x + a), f(x), atol=1e-14)


@given(bumps(), st.tuples(st.floats(-2, 2), st.floats(-2, 2)))
def test_translation_phase_on_shell(f, a):
    # (f(. - a))^+(p) = exp(i p.a) f^+(p)
    g = rapidity_grid(1.0, 2.0, 8, 2)
    a = np.array(a)
    pa = g.nodes[:, 0] * a[0] - g.nodes[:, 1] * a[1]
    lhs = sample_onshell(f.translated(a), g, 1).values
    rhs = np.exp(1j * pa) * sample_onshell(f, g, 1).values
    assert np.allclose(lhs, rhs, atol=1e-12 * max(1, np.abs(rhs).max()))


def test_modulation_shifts_transform():
    f = TestFunction((0.0, 0.5), (0.5, 0.5))
    k = np.array([0.4, -0.3])
    p = np.array([[1.2, 0.3], [2.0, -1.0]])
    assert np.allclose(transform(f.modulated(k), p, 1), transform(f, p + k, 1), atol=1e-14)


def test_rapidity_grid_integrates_bessel():
    g = rapidity_grid(1.0, 8.0, 256, 2)
    assert np.sum(g.weights * np.exp(-g.energies)) == pytest.approx(K0_ONE, rel=1e-13)
    assert np.allclose(g.nodes[:, 0] ** 2 - g.nodes[:, 1] ** 2, 1.0)


def test_momentum_grid_integrates_bessel():
    g = momentum_grid(1.0, 30.0, 512)
    assert np.sum(g.weights * np.exp(-g.energies)) == pytest.approx(K0_ONE, rel=1e-12)


def test_geometric_grid_massless():
    g = geometric_grid(0.05, 1.25, 24)
    assert np.allclose(g.nodes[:, 0], np.abs(g.nodes[:, 1]))
    # int_{a}^{b} dp/(2p) = log(b/a)/2 per branch
    assert np.sum(g.weights) == pytest.approx(np.log(1.25) * 24)


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        rapidity_grid(0.0, 4.0, 16, 2)
    with pytest.raises(ConfigurationError):
        make_grid({"mode": "geometric", "mass": 1.0})
    with pytest.raises(ConfigurationError):
        make_grid({"mode": "nonsense"})


def test_higher_dimensional_grid():
    g = rapidity_grid(1.0, 2.0, 8, 4, perp_max=1.0, n_perp=2)
    assert g.n == 8 * 4
    assert np.allclose(g.nodes[:, 0] ** 2 - np.sum(g.nodes[:, 1:] ** 2, axis=1), 1.0)
    idx = perp_reflection_index(g)
    assert np.allclose(g.nodes[idx, 2:], -g.nodes[:, 2:])


@given(bumps())
def test_contour_shift_identity(f):
    # f^-(t + i pi) = f^+(t) in d = 2
    g = rapidity_grid(1.0, 3.0, 16, 2)
    a = continue_to_shifted_contour(f, g, -1, np.pi).values
    b = sample_onshell(f, g, 1).values
    assert np.allclose(a, b, atol=1e-12 * max(1.0, np.abs(b).max()))


def test_contour_overflow_guard():
    with np.errstate(over="ignore"):
        g = rapidity_grid(1.0, 1000.0, 4, 2)
    with pytest.raises(RangeError):
        g.complex_nodes(np.pi)


def test_onshell_function_algebra():
    g = rapidity_grid(1.0, 2.0, 8, 2)
    h = OnShellFunction(g, np.arange(8) + 1j)
    assert h.norm() ** 2 == pytest.approx(h.inner(h).real)
    assert (2 * h).norm() == pytest.approx(2 * h.norm())
    with pytest.raises(ConfigurationError):
        OnShellFunction(g, np.ones(3))


def test_velocity_support_and_precursor():
    g = rapidity_grid(1.0, 4.0, 64, 2)
    a = sharp_packet(g, 40)
    b = sharp_packet(g, 20)
    va, vb = velocity_support(a), velocity_support(b)
    assert np.all(va[:, 1] > 0) and np.all(vb[:, 1] < 0)
    w = Wedge.reference(2)
    assert is_precursor(va, vb, w) and not is_precursor(vb, va, w)
    with pytest.raises(EmptySupportError):
        velocity_support(OnShellFunction(g, np.zeros(g.n)))
    with pytest.raises(ConfigurationError):
        sharp_packet(g, 0)


def test_inside_wedge():
    w = Wedge.reference(2)
    assert TestFunction((0.0, 1.0), (0.4, 0.5)).inside(w)
    assert not TestFunction((0.0, 1.0), (0.6, 0.5)).inside(w)
    f = TestFunction((0.0, 1.0), (0.4, 0.5), (0.1, 0.2), 2j)
    assert TestFunction.from_dict(f.to_dict()).to_dict() == f.to_dict()


@given(bumps(), bumps(), st.complex_numbers(max_magnitude=3), st.complex_numbers(max_magnitude=3))
@settings(max_examples=10)
def test_sampling_is_linear(f, g, alpha, beta):
    grid = rapidity_grid(1.0, 3.0, 16, 2)
    fa = sample_onshell(f, grid)
    ga = sample_onshell(g, grid)
    combo = alpha * fa.values + beta * ga.values
    scaled = sample_onshell(replace(f, amplitude=alpha * f.amplitude), grid).values \
        + sample_onshell(replace(g, amplitude=beta * g.amplitude), grid).values
    assert np.abs(combo - scaled).max() <= 1e-12 * max(1.0, np.abs(combo).max())
