"""Wedge-locality residuals, two-particle scattering states and norm bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .deformation import Creator, DeformedField, deformed_field_apply, warp_spectral
from .errors import ConfigurationError, OrderingError, PreconditionError
from .fock import FockState, SmearedField, apply_translation, number_sqrt_apply
from .geometry import ThetaMatrix, Wedge, phase_form, theta_of_wedge, wedge_contains
from .testfunctions import (
    OnShellFunction,
    continue_to_shifted_contour,
    is_precursor,
    perp_reflection_index,
    sample_onshell,
    velocity_support,
)
from .unitaries import (
    BoostStabilizer,
    Composition,
    Generator,
    Identity,
    MomentumShift,
    realize,
    second_quantize_apply,
    supports_wedge_covariance,
    transformed_test_function,
)

# ------------------------------------------------------------------ V on f


def _split_unitary(V):
    """Split V into (modulation part, node-map part) for the rapidity grid.

    Momentum shifts act on the test function by modulation (their support
    image is the support itself); boosts act as node permutations.  A
    composition must apply all modulations before any boost.
    """
    parts = list(V.parts) if isinstance(V, Composition) else [V]
    mods, maps = [], []
    for p in reversed(parts):  # order of action
        if isinstance(p, Identity):
            continue
        if isinstance(p, MomentumShift):
            if maps:
                raise ConfigurationError("a momentum shift after a boost has no modulation form")
            mods.append(p)
        elif isinstance(p, BoostStabilizer):
            maps.append(p)
        else:
            raise ConfigurationError(f"{type(p).__name__} is not supported in the locality suite")
    mod = Composition(list(reversed(mods))) if mods else Identity()
    node = Composition(list(reversed(maps))) if maps else Identity()
    return mod, node


def transported_samples(V, f, grid, sign, shift=None):
    """(V f)^{sign} on the grid, optionally on the contour t + i*shift."""
    mod, node = _split_unitary(V)
    fm = transformed_test_function(mod, f)
    if shift is None:
        vals = sample_onshell(fm, grid, sign)
    else:
        vals = continue_to_shifted_contour(fm, grid, sign, shift)
    m = realize(node, grid)
    return OnShellFunction(grid, m.apply(vals.values), sign)


def transported_field(V, f, grid):
    """Smearing descriptor of V f together with the generator left for X."""
    mod, node = _split_unitary(V)
    fm = transformed_test_function(mod, f)
    desc = SmearedField(sample_onshell(fm, grid, 1), sample_onshell(fm, grid, -1))
    return desc, Generator(node)


# ------------------------------------------------------------- residuals


@dataclass(frozen=True)
class LocalityResult:
    i1: complex
    i2: complex
    residual: complex
    relative: float
    contour_gap: float


def commutator_residual(f, g, theta, V, x, y, grid, override=False, w=None):
    """I1 - I2 for the mixed contractions of the deformed commutator.

        I1 = sum_i w_i (Vf)^-(p_i) (Vg)^+(p_i) exp(-i p_i theta z)
        I2 = sum_i w_i (Vf)^+(p_i) (Vg)^-(p_i) exp(+i p_i theta z),  z = x + y

    The contour gap compares I1 evaluated on t + i*pi with I2.
    """
    if grid.mode != "rapidity":
        raise ConfigurationError("locality residuals need the rapidity-uniform grid")
    w = Wedge.reference(grid.d) if w is None else w
    if not override:
        for fn, wedge, name in ((f, w, "f"), (g, w.opposite(), "g")):
            if not fn.inside(wedge):
                raise PreconditionError(f"supp {name} is not inside its wedge")
            mod, node = _split_unitary(V)
            if supports_wedge_covariance(node, fn, wedge) is False:
                raise PreconditionError(f"V moves supp {name} out of its wedge")
    th = theta if isinstance(theta, ThetaMatrix) else ThetaMatrix(theta)
    z = np.asarray(x, dtype=float) + np.asarray(y, dtype=float)
    wts = grid.weights
    ptz = phase_form(grid.nodes, z[None, :], th)
    fm = transported_samples(V, f, grid, -1).values
    fp = transported_samples(V, f, grid, 1).values
    gm = transported_samples(V, g, grid, -1).values
    gp = transported_samples(V, g, grid, 1).values
    i1 = complex(np.sum(wts * fm * gp * np.exp(-1j * ptz)))
    i2 = complex(np.sum(wts * fp * gm * np.exp(1j * ptz)))
    # I1 on the shifted contour
    pc = grid.complex_nodes(np.pi)
    fmc = transported_samples(V, f, grid, -1, shift=np.pi).values
    gpc = transported_samples(V, g, grid, 1, shift=np.pi).values
    ptzc = phase_form(pc, z[None, :].astype(complex), th)
    i1c = complex(np.sum(wts * fmc * gpc * np.exp(-1j * ptzc)))
    scale = max(abs(i1), abs(i2), 1e-300)
    return LocalityResult(i1, i2, i1 - i2, abs(i1 - i2) / scale, abs(i1c - i2) / scale)


def contour_identity_gap(f, grid):
    """max_i |f^-(p_perp, t_i + i pi) - f^+(-p_perp, t_i)| relative to max |f^+|."""
    cont = continue_to_shifted_contour(f, grid, -1, np.pi).values
    plus = sample_onshell(f, grid, 1).values[perp_reflection_index(grid)]
    scale = max(np.abs(plus).max(), 1e-300)
    return float(np.abs(cont - plus).max() / scale)


def same_wedge(a, b, n_probe=256):
    """Compare two wedges as point sets on a fixed probe cloud."""
    pts = np.random.default_rng(0).uniform(-5.0, 5.0, size=(n_probe, a.d))
    return bool(np.array_equal(wedge_contains(a, pts), wedge_contains(b, pts)))


def full_commutator_norm(f, g, w, w_opp, V, psi, lam, eta=0.0, override=False):
    """||[phi_W(f), phi_{-W}(g)] psi|| and a scale for it.

    The field for W uses theta_of_wedge(W), the one for -W its negative.
    Returns (norm, scale) with scale = max of the two ordered products.
    """
    if not same_wedge(w_opp, w.opposite()):
        raise PreconditionError("w_opp must be the opposite wedge -w")
    if not override:
        if not f.inside(w):
            raise PreconditionError("supp f is not inside W")
        if not g.inside(w_opp):
            raise PreconditionError("supp g is not inside -W")
    grid = psi.grid
    th = theta_of_wedge(w, lam, eta)
    sf, gen = transported_field(V, f, grid)
    sg, _ = transported_field(V, g, grid)
    phi_f = DeformedField(sf, th, gen)
    phi_g = DeformedField(sg, -th, gen)
    fg = deformed_field_apply(phi_f, deformed_field_apply(phi_g, psi))
    gf = deformed_field_apply(phi_g, deformed_field_apply(phi_f, psi))
    comm = fg - gf
    return comm.norm(), max(fg.norm(), gf.norm())


# ------------------------------------------------------------ scattering


def _plus_values(f, grid):
    if isinstance(f, OnShellFunction):
        return f.with_sign(1)
    return sample_onshell(f, grid, 1)


def evolve_onshell(h, t):
    """f_t on shell: multiply by exp(i (p0 - omega_p) t) with omega from the spatial momentum."""
    p = h.grid.nodes
    omega = np.sqrt(h.grid.mass**2 + np.sum(p[:, 1:] ** 2, axis=1))
    return h.with_values(h.values * np.exp(1j * (p[:, 0] - omega) * t))


def _check_order(fp, gp, w, direction, threshold):
    xf = velocity_support(fp, threshold=threshold)
    xg = velocity_support(gp, threshold=threshold)
    if direction == "in":
        if not is_precursor(xf, xg, w):
            raise OrderingError("in-state needs Xi(f) to precede Xi(g)")
    elif direction == "out":
        if not is_precursor(xg, xf, w):
            raise OrderingError("out-state needs Xi(g) to precede Xi(f)")
    else:
        raise ConfigurationError(f"direction must be 'in' or 'out', got {direction!r}")


def _ordered_state(fp, gp, theta, theta_g, V, n_max):
    """Gamma(V^-1) a*_theta(V f^+) a*_theta_g(V g^+) Omega."""
    grid = fp.grid
    m = realize(V, grid)
    vf = OnShellFunction(grid, m.apply(fp.values), 1)
    vg = OnShellFunction(grid, m.apply(gp.values), 1)
    gen = Generator(Identity())
    state = FockState.vacuum(grid, n_max)
    state = warp_spectral(Creator(vg), theta_g, gen, state)
    state = warp_spectral(Creator(vf), theta, gen, state)
    return second_quantize_apply(m.inverse(), state)


def two_particle_state(f, g, w, w_prime, V, direction, grid, lam, eta=0.0, n_max=2, t=0.0, threshold=1e-3):
    """Gamma(V^-1) a*_theta(V f_t^+) a*_theta'(V g_t^+) Omega for the in or out configuration.

    theta = theta_of_wedge(w), theta' = theta_of_wedge(w_prime).  ``in``
    needs Xi(f) < Xi(g) and ``out`` needs Xi(g) < Xi(f), both relative to w.
    Only creators reach the vacuum, so the field and its creation part agree.
    """
    fp = evolve_onshell(_plus_values(f, grid), t)
    gp = evolve_onshell(_plus_values(g, grid), t)
    _check_order(fp, gp, w, direction, threshold)
    th = theta_of_wedge(w, lam, eta)
    th2 = theta_of_wedge(w_prime, lam, eta)
    return _ordered_state(fp, gp, th, th2, V, n_max)


def s_matrix_phase(f, g, theta, V=None, w=None, threshold=1e-3):
    """<Psi_out, Psi_in> / (||Psi_out|| ||Psi_in||) for sharp packets f, g.

    Psi_in = a*_theta(f) a*_{-theta}(g) Omega with Xi(f) < Xi(g) and Psi_out
    the same with f and g exchanged.  The ordering is checked against w
    (reference wedge by default).
    """
    V = Identity() if V is None else V
    grid = f.grid
    w = Wedge.reference(grid.d) if w is None else w
    th = theta if isinstance(theta, ThetaMatrix) else ThetaMatrix(np.asarray(theta, dtype=float))
    fp = _plus_values(f, grid)
    gp = _plus_values(g, grid)
    if np.any((np.abs(fp.values) > 0) & (np.abs(gp.values) > 0)):
        raise PreconditionError("packets must have disjoint momentum supports")
    _check_order(fp, gp, w, "in", threshold)
    psi_in = _ordered_state(fp, gp, th, -th, V, 2)
    psi_out = _ordered_state(gp, fp, th, -th, V, 2)
    return psi_out.inner(psi_in) / (psi_out.norm() * psi_in.norm())


def packet_center(h):
    """Weighted mean momentum of |h|^2."""
    wts = h.grid.weights * np.abs(h.values) ** 2
    return (wts @ h.grid.nodes) / wts.sum()


# ---------------------------------------------------------------- bounds


def field_bound(desc, psi):
    """(||f^+|| + ||f^-||) ||(N+1)^{1/2} psi||."""
    return desc.smearing.norm_sum() * number_sqrt_apply(psi).norm()


def tempered_bound_check(desc, psi, displacements):
    """max_x ( ||phi_{theta,X}(f) U(x) psi|| - bound ) over the displacements."""
    bound = field_bound(desc, psi)
    worst = -math.inf
    for x in displacements:
        moved = apply_translation(np.asarray(x, dtype=float), psi)
        worst = max(worst, deformed_field_apply(desc, moved).norm() - bound)
    return worst, bound


def continuity_sequence(desc, psi, x0, x_min=1e-6):
    """||phi_{theta,X}(f)(U(x_k) - 1) psi|| for x_k = x0 / 2^k down to |x_k| >= x_min."""
    x0 = np.asarray(x0, dtype=float)
    out = []
    k = 0
    while np.linalg.norm(x0) / 2**k >= x_min:
        x = x0 / 2**k
        diff = apply_translation(x, psi) - psi
        out.append(deformed_field_apply(desc, diff).norm())
        k += 1
    return np.array(out)
