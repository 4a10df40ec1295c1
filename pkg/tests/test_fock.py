import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from warpfock.errors import ConfigurationError
from warpfock.fock import (
    FockState,
    SmearedField,
    annihilate,
    apply_translation,
    create,
    free_field_apply,
    number_sqrt_apply,
    symmetrize,
)
from warpfock.testfunctions import OnShellFunction, rapidity_grid

GRID = rapidity_grid(1.0, 2.0, 6, 2)
seeds = st.integers(0, 2**32 - 1)


def rand_h(rng, sign=1):
    return OnShellFunction(GRID, rng.standard_normal(GRID.n) + 1j * rng.standard_normal(GRID.n), sign)


def test_vacuum_and_norms():
    om = FockState.vacuum(GRID, 3)
    assert om.norm() == 1.0 and om.max_sector() == 0
    rng = np.random.default_rng(0)
    h = rand_h(rng)
    one = create(h, om)
    assert one.norm() == pytest.approx(h.norm(), rel=1e-14)


@given(seeds)
def test_canonical_commutation(seed):
    # [a(h), a*(k)] psi = <h, k> psi below the truncation edge
    rng = np.random.default_rng(seed)
    h, k = rand_h(rng), rand_h(rng)
    psi = FockState.random(GRID, rng, 3, sectors=(0, 1))
    lhs = annihilate(h, create(k, psi)) - create(k, annihilate(h, psi))
    rhs = psi * h.inner(k)
    assert (lhs - rhs).norm() <= 1e-12 * max(1.0, rhs.norm())


@given(seeds)
def test_creators_commute(seed):
    rng = np.random.default_rng(seed)
    h, k = rand_h(rng), rand_h(rng)
    psi = FockState.random(GRID, rng, 3, sectors=(0, 1))
    d = create(h, create(k, psi)) - create(k, create(h, psi))
    assert d.norm() <= 1e-12 * create(h, create(k, psi)).norm()


@given(seeds)
def test_annihilator_is_adjoint(seed):
    rng = np.random.default_rng(seed)
    h = rand_h(rng)
    a = FockState.random(GRID, rng, 2)
    b = FockState.random(GRID, rng, 2, sectors=(0, 1))
    assert a.inner(create(h, b)) == pytest.approx(annihilate(h, a).inner(b), rel=1e-12, abs=1e-12)


def test_truncation_flag():
    rng = np.random.default_rng(1)
    psi = FockState.random(GRID, rng, 1, sectors=(1,))
    out = create(rand_h(rng), psi)
    assert out.truncated and not psi.truncated


@given(seeds)
def test_inner_product_hermitian(seed):
    rng = np.random.default_rng(seed)
    a, b = FockState.random(GRID, rng, 2), FockState.random(GRID, rng, 2)
    assert a.inner(b) == pytest.approx(np.conj(b.inner(a)), rel=1e-13)
    assert a.symmetry_defect() < 1e-15


def test_symmetrize_idempotent():
    t = np.random.default_rng(2).standard_normal((4, 4, 4))
    s = symmetrize(t)
    assert np.allclose(symmetrize(s), s) and np.allclose(s, np.transpose(s, (2, 0, 1)))


@given(seeds, st.tuples(st.floats(-3, 3), st.floats(-3, 3)), st.tuples(st.floats(-3, 3), st.floats(-3, 3)))
def test_translation_group(seed, a, b):
    rng = np.random.default_rng(seed)
    psi = FockState.random(GRID, rng, 2)
    a, b = np.array(a), np.array(b)
    two = apply_translation(a, apply_translation(b, psi))
    assert (two - apply_translation(a + b, psi)).norm() <= 1e-12 * psi.norm()
    assert apply_translation(a, psi).norm() == pytest.approx(psi.norm(), rel=1e-13)


def test_free_field_hermitian():
    rng = np.random.default_rng(3)
    f = SmearedField(rand_h(rng, 1), rand_h(rng, -1))
    a, b = FockState.random(GRID, rng, 3, sectors=(0, 1, 2)), FockState.random(GRID, rng, 3, sectors=(0, 1, 2))
    lhs = a.inner(free_field_apply(f, b))
    rhs = np.conj(b.inner(free_field_apply(f.conjugate(), a)))
    assert abs(lhs - rhs) < 1e-12 * abs(lhs)


def test_number_operator():
    rng = np.random.default_rng(4)
    psi = FockState.random(GRID, rng, 2, sectors=(2,))
    assert number_sqrt_apply(psi).norm() == pytest.approx(np.sqrt(3) * psi.norm())


def test_json_round_trip():
    rng = np.random.default_rng(5)
    psi = FockState.random(GRID, rng, 2)
    back = FockState.from_json(psi.to_json(), GRID)
    assert all(np.array_equal(x, y) for x, y in zip(back.sectors, psi.sectors))
    with pytest.raises(ConfigurationError):
        FockState.from_json(psi.to_json(), rapidity_grid(1.0, 2.0, 7, 2))


def test_grid_mismatch_rejected():
    other = rapidity_grid(1.0, 3.0, 6, 2)
    with pytest.raises(ConfigurationError):
        FockState.vacuum(GRID) + FockState.vacuum(other)
    with pytest.raises(ConfigurationError):
        create(OnShellFunction(other, np.ones(6)), FockState.vacuum(GRID))
