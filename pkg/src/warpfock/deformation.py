"""Warped convolutions on the truncated Fock space.

For a generator X that is diagonal in the node basis the warped
convolution of an operator A has matrix elements

    (A_theta)_{oi} = exp(i Q_o theta lam_i) A_{oi},

where lam_i is the X-eigenvalue of the input and Q_o that of the output.
Three evaluations are provided: a fast route for creators, annihilators
and fields (the phase factorizes over particles), a generic route that
groups the input by X-eigenvalue, and an oscillatory-integral route that
recovers the phase by quadrature and Richardson extrapolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .errors import ConfigurationError, NumericalError, PreconditionError
from .fock import (
    FockState,
    SmearedField,
    annihilate,
    apply_translation,
    create,
    free_field_apply,
    weight_tensor,
)
from .geometry import ThetaMatrix, metric, phase_form
from .testfunctions import OnShellFunction
from .unitaries import Generator, Identity, NodeMap, realize, second_quantize_apply

DEFAULT_EPS_SCHEDULE = (0.2, 0.1, 0.05, 0.025, 0.0125)
DEFAULT_GH_ORDER = 96
OSC_TOL = 1e-6


# ----------------------------------------------------------- operator words


@dataclass(frozen=True)
class Creator:
    h: OnShellFunction


@dataclass(frozen=True)
class Annihilator:
    """a(h), antilinear in h."""

    h: OnShellFunction


@dataclass(frozen=True)
class Field:
    smearing: SmearedField


@dataclass(frozen=True)
class SecondQuantized:
    V: object


@dataclass(frozen=True)
class Translation:
    a: np.ndarray


@dataclass(frozen=True)
class Product:
    """Product([A, B, C]) = A B C, applied right to left."""

    factors: tuple

    def __init__(self, factors):
        object.__setattr__(self, "factors", tuple(factors))


@dataclass(frozen=True)
class Conjugated:
    """W A W^{-1} for a symmetry W (see the ``*Map`` classes below)."""

    W: object
    A: object


@dataclass(frozen=True)
class Warped:
    """A_theta with respect to ``generator``, usable inside other words."""

    A: object
    theta: ThetaMatrix
    generator: Generator = field(default_factory=Generator)


@dataclass(frozen=True)
class Rieffel:
    """The deformed product A x_theta B."""

    A: object
    B: object
    theta: ThetaMatrix
    generator: Generator = field(default_factory=Generator)


def apply_operator(op, psi):
    """Undeformed action of an operator word on a state."""
    if isinstance(op, Creator):
        return create(op.h, psi)
    if isinstance(op, Annihilator):
        return annihilate(op.h, psi)
    if isinstance(op, Field):
        return free_field_apply(op.smearing, psi)
    if isinstance(op, SecondQuantized):
        return second_quantize_apply(op.V, psi)
    if isinstance(op, Translation):
        return apply_translation(op.a, psi)
    if isinstance(op, Product):
        for f in reversed(op.factors):
            psi = apply_operator(f, psi)
        return psi
    if isinstance(op, Conjugated):
        return op.W.apply(apply_operator(op.A, op.W.apply_inverse(psi)))
    if isinstance(op, Warped):
        return warp_spectral(op.A, op.theta, op.generator, psi)
    if isinstance(op, Rieffel):
        return _rieffel_apply(op, psi)
    raise ConfigurationError(f"operator {type(op).__name__} is outside the supported grammar")


# ------------------------------------------------------- spectral helpers


def _theta(theta):
    return theta if isinstance(theta, ThetaMatrix) else ThetaMatrix(theta)


def phase_table(mom, theta):
    """E[a, b] = exp(i mom_a theta mom_b)."""
    th = _theta(theta)
    return np.exp(1j * phase_form(mom[:, None, :], mom[None, :, :], th))


def node_phase(psi, mom, theta, v):
    """Multiply each sector entry by prod_k exp(i mom_{t_k} theta v)."""
    e = np.exp(1j * phase_form(mom, np.asarray(v)[None, :], _theta(theta)))
    return psi.replace([s * weight_tensor(e, n) for n, s in enumerate(psi.sectors)])


def sector_totals(mom, n):
    """X-eigenvalue of every multi-index in sector n, shape (N**n, d).

    Indices are summed in sorted order so permuted multi-indices give
    bitwise identical totals.
    """
    N, d = mom.shape
    if n == 0:
        return np.zeros((1, d))
    idx = np.indices((N,) * n).reshape(n, -1).T
    idx = np.sort(idx, axis=1)
    tot = mom[idx[:, 0]].copy()
    for k in range(1, n):
        tot = tot + mom[idx[:, k]]
    return tot


def eigen_groups(psi, mom):
    """Yield (lam, E_lam psi) over the distinct X-eigenvalues carried by psi.

    Groups are formed per sector; grouping finer than the eigenspaces is
    harmless because the phase depends on the eigenvalue only.
    """
    for n, s in enumerate(psi.sectors):
        flat = s.ravel()
        nz = np.flatnonzero(flat)
        if nz.size == 0:
            continue
        tot = sector_totals(mom, n)[nz]
        keys, inv = np.unique(tot, axis=0, return_inverse=True)
        inv = inv.ravel()
        for g, lam in enumerate(keys):
            part = np.zeros_like(flat)
            sel = nz[inv == g]
            part[sel] = flat[sel]
            secs = [np.zeros_like(t) for t in psi.sectors]
            secs[n] = part.reshape(s.shape)
            yield lam, psi.replace(secs)


def _zero_like(psi):
    return psi.replace([np.zeros_like(s) for s in psi.sectors])


def _is_zero(theta):
    return not np.any(_theta(theta).entries)


# --------------------------------------------------------------- routes


def _fast_route(A, theta, mom, psi):
    E = phase_table(mom, theta)
    if isinstance(A, Creator):
        return create(A.h, psi, E)
    if isinstance(A, Annihilator):
        return annihilate(A.h, psi, E)
    if isinstance(A, Field):
        f = A.smearing
        return annihilate(f.f_minus.conj(), psi, E) + create(f.f_plus, psi, E)
    if isinstance(A, Translation):
        # diagonal in the node basis, hence commutes with X
        return apply_operator(A, psi)
    raise ConfigurationError(f"no fast route for {type(A).__name__}")


FAST_TYPES = (Creator, Annihilator, Field, Translation)


def _grouping_route(A, theta, mom, psi):
    out = _zero_like(psi)
    for lam, part in eigen_groups(psi, mom):
        out = out + node_phase(apply_operator(A, part), mom, theta, lam)
    return out


def warp_spectral(A, theta, generator, psi, route="auto"):
    """A_theta psi as the exact sum over the joint spectrum of X."""
    generator = generator if isinstance(generator, Generator) else Generator(generator)
    mom = generator.momenta(psi.grid)
    if _is_zero(theta):
        return apply_operator(A, psi)
    if route == "auto":
        route = "fast" if isinstance(A, FAST_TYPES) else "grouping"
    if route == "fast":
        return _fast_route(A, theta, mom, psi)
    if route == "grouping":
        return _grouping_route(A, theta, mom, psi)
    raise ConfigurationError(f"unknown route {route!r}")


def _all_totals(mom, n_max):
    keys = [sector_totals(mom, n) for n in range(n_max + 1)]
    return np.unique(np.concatenate(keys, axis=0), axis=0)


def warp_right_form(A, theta, generator, psi):
    """sum_lam E_lam alpha_{theta lam}(A) psi, grouping by the output eigenvalue."""
    generator = generator if isinstance(generator, Generator) else Generator(generator)
    mom = generator.momenta(psi.grid)
    out = _zero_like(psi)
    for lam_out in _all_totals(mom, psi.n_max):
        # alpha_{theta mu}(A) = U(theta mu) A U(-theta mu); project the output on mu
        shifted = node_phase(psi, mom, theta, -lam_out)
        image = node_phase(apply_operator(A, shifted), mom, theta, lam_out)
        out = out + _project_eigenvalue(image, mom, lam_out)
    return out


def _project_eigenvalue(psi, mom, lam):
    secs = []
    for n, s in enumerate(psi.sectors):
        tot = sector_totals(mom, n)
        mask = np.all(tot == lam[None, :], axis=1).reshape(s.shape)
        secs.append(np.where(mask, s, 0))
    return psi.replace(secs)


def _rieffel_apply(op, psi):
    mom = op.generator.momenta(psi.grid)
    th = op.theta
    out = _zero_like(psi)
    for lam, part in eigen_groups(psi, mom):
        chi = apply_operator(op.B, part)
        for mu, chi_mu in eigen_groups(chi, mom):
            scal = np.exp(1j * phase_form(mu, lam, th))
            xi = apply_operator(op.A, chi_mu) * scal
            out = out + node_phase(xi, mom, th, mu - lam)
    return out


def rieffel_product(A, B, theta, generator, psi):
    """(A x_theta B) psi by the double spectral sum."""
    generator = generator if isinstance(generator, Generator) else Generator(generator)
    return _rieffel_apply(Rieffel(A, B, _theta(theta), generator), psi)


# ---------------------------------------------------------- oscillatory


def _gauss_line(a, k, order):
    """int exp(-a t^2 + i k t) dt by Gauss-Hermite on the rotated contour t = tau/sqrt(a)."""
    tau, w = hermgauss(order)
    ra = np.sqrt(a)
    return (np.exp(1j * np.multiply.outer(k / ra, tau)) @ w) / ra


def kernel_1d(b, c, s, eps, order=DEFAULT_GH_ORDER):
    """int int exp(-eps^2 (x^2+y^2)) exp(i (b x + c y - s x y)) dx dy, per axis.

    The rotation u = (x+y)/sqrt2, v = (x-y)/sqrt2 diagonalizes the
    bilinear term; each factor is then a Gaussian line integral.
    """
    b = np.asarray(b, dtype=float)
    ku = (b + c) / math.sqrt(2.0)
    kv = (b - c) / math.sqrt(2.0)
    h = eps * eps
    return _gauss_line(h + 0.5j * s, ku, order) * _gauss_line(h - 0.5j * s, kv, order)


def neville_zero(h, values):
    """Polynomial extrapolation of values(h) to h = 0 (Neville's scheme)."""
    P = [np.asarray(v, dtype=complex) for v in values]
    n = len(h)
    for m in range(1, n):
        for i in range(n - m):
            P[i] = (-h[i + m] * P[i] + h[i] * P[i + 1]) / (h[i] - h[i + m])
    return P[0]


def richardson(h, values):
    """Extrapolated value and error estimate (difference to the table without the largest h)."""
    full = neville_zero(h, values)
    order = np.argsort(h)[::-1]
    h = [h[i] for i in order]
    values = [values[i] for i in order]
    if len(h) < 2:
        return full, np.full(np.shape(full), np.inf)
    reduced = neville_zero(h[1:], values[1:])
    return full, np.abs(full - reduced)


def oscillatory_phase(Q, lam, theta, eps_schedule=DEFAULT_EPS_SCHEDULE, order=DEFAULT_GH_ORDER):
    """Regularized quadrature of exp(i Q theta lam) for an array of outputs Q.

    Evaluates (2 pi)^{-d} int dx dy exp(-i x.y) chi(eps x, eps y)
    exp(i (Q-lam).theta x) exp(i lam.y) with chi Gaussian, for each eps,
    then extrapolates eps^2 -> 0.
    """
    th = _theta(theta).entries
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    lam = np.asarray(lam, dtype=float)
    d = Q.shape[1]
    g = metric(d)
    b = ((g * (Q - lam)) @ th) * g
    c = g * lam
    vals = []
    for eps in eps_schedule:
        v = np.ones(Q.shape[0], dtype=complex)
        for nu in range(d):
            v = v * kernel_1d(b[:, nu], c[nu], g[nu], eps, order) / (2.0 * math.pi)
        vals.append(v)
    h = [e * e for e in eps_schedule]
    return richardson(h, vals)


@dataclass(frozen=True)
class OscillatoryResult:
    state: FockState
    error: float


def warp_oscillatory(A, theta, generator, psi, eps_schedule=DEFAULT_EPS_SCHEDULE, order=DEFAULT_GH_ORDER, tol=OSC_TOL):
    """Cross-validation oracle: A_theta psi from the regularized oscillatory integral."""
    generator = generator if isinstance(generator, Generator) else Generator(generator)
    if psi.grid.n > 8 or psi.n_max > 2:
        raise ConfigurationError("the oscillatory oracle is limited to <= 8 nodes and n_max <= 2")
    mom = generator.momenta(psi.grid)
    out = _zero_like(psi)
    worst = 0.0
    for lam, part in eigen_groups(psi, mom):
        image = apply_operator(A, part)
        secs = []
        for n, s in enumerate(image.sectors):
            if not np.any(s):
                secs.append(s)
                continue
            tot = sector_totals(mom, n)
            keys, inv = np.unique(tot, axis=0, return_inverse=True)
            ph, err = oscillatory_phase(keys, lam, theta, eps_schedule, order)
            worst = max(worst, float(err.max()))
            secs.append(s * ph[inv.ravel()].reshape(s.shape))
        out = out + image.replace(secs)
    if not worst <= tol:
        raise NumericalError(
            "Richardson extrapolation did not reach the tolerance",
            {"error": worst, "tolerance": tol, "schedule": list(eps_schedule), "order": order},
        )
    return OscillatoryResult(out, worst)


# ------------------------------------------------------------ fields


@dataclass(frozen=True)
class DeformedField:
    smearing: SmearedField
    theta: ThetaMatrix
    generator: Generator = field(default_factory=Generator)

    def __post_init__(self):
        if self.theta.d != self.smearing.grid.d:
            raise ConfigurationError("theta dimension does not match the grid")

    def conjugate(self):
        return DeformedField(self.smearing.conjugate(), self.theta, self.generator)


def deformed_field_apply(desc, psi, route="direct"):
    """phi_{theta,X}(f) psi.

    ``direct`` deforms with the eigen-momenta of X.  ``transport`` uses
    Gamma(V^-1) phi_{theta,P}(V f) Gamma(V).
    """
    if route == "direct":
        return warp_spectral(Field(desc.smearing), desc.theta, desc.generator, psi)
    if route == "transport":
        V = desc.generator.V
        m = realize(V, psi.grid)
        f = desc.smearing
        vf = SmearedField(OnShellFunction(f.grid, m.apply(f.f_plus.values), 1), OnShellFunction(f.grid, m.apply(f.f_minus.values), -1))
        moved = second_quantize_apply(m, psi)
        image = warp_spectral(Field(vf), desc.theta, Generator(Identity()), moved)
        return second_quantize_apply(m.inverse(), image)
    raise ConfigurationError(f"unknown route {route!r}")


def adjoint_deformed(desc, pairs):
    """Max deviation of <chi, phi(f) psi> from conj <psi, phi(conj f) chi> over state pairs."""
    conj = desc.conjugate()
    worst = 0.0
    for chi, psi in pairs:
        lhs = chi.inner(deformed_field_apply(desc, psi))
        rhs = np.conj(psi.inner(deformed_field_apply(conj, chi)))
        worst = max(worst, abs(lhs - rhs))
    return {"max_deviation": worst, "pairs": len(pairs)}


# ------------------------------------------------------------ symmetries


@dataclass(frozen=True)
class TranslationMap:
    a: np.ndarray
    antiunitary = False

    def apply(self, psi):
        return apply_translation(self.a, psi)

    def apply_inverse(self, psi):
        return apply_translation(-np.asarray(self.a), psi)

    def one_particle(self, h):
        g = metric(h.grid.d)
        return h.with_values(h.values * np.exp(1j * (h.grid.nodes * g) @ np.asarray(self.a)))

    def matrix(self, d):
        return np.eye(d)


@dataclass(frozen=True)
class SecondQuantizedMap:
    """Gamma(V) for a lattice boost; intertwines U(x) with U(Lambda x) away from the edge."""

    V: object
    antiunitary = False

    def apply(self, psi):
        return second_quantize_apply(self.V, psi)

    def apply_inverse(self, psi):
        return second_quantize_apply(self.V.inverse(), psi)

    def one_particle(self, h):
        return h.with_values(realize(self.V, h.grid).apply(h.values))

    def matrix(self, d):
        return self.V.lorentz(d).matrix


@dataclass(frozen=True)
class ParityMap:
    """Rapidity reflection t -> -t on the symmetric rapidity grid (p1 -> -p1)."""

    antiunitary = False

    def _src(self, grid):
        if grid.mode != "rapidity":
            raise ConfigurationError("parity is realized on the rapidity grid")
        nt, npp = grid.n_rapidity, grid.n_perp
        return ((nt - 1 - np.arange(nt))[:, None] * npp + np.arange(npp)[None, :]).ravel()

    def _map(self, grid):
        return NodeMap(self._src(grid), np.ones(grid.n), np.zeros(grid.n, dtype=bool))

    def apply(self, psi):
        return second_quantize_apply(self._map(psi.grid), psi)

    apply_inverse = apply

    def one_particle(self, h):
        return h.with_values(self._map(h.grid).apply(h.values))

    def matrix(self, d):
        m = np.eye(d)
        m[1, 1] = -1.0
        return m


@dataclass(frozen=True)
class ConjugationMap:
    """Complex conjugation K of all sector tensors, optionally after parity."""

    with_parity: bool = False
    antiunitary = True

    def apply(self, psi):
        out = psi.conj()
        return ParityMap().apply(out) if self.with_parity else out

    def apply_inverse(self, psi):
        out = ParityMap().apply(psi) if self.with_parity else psi
        return out.conj()

    def one_particle(self, h):
        out = h.with_values(np.conj(h.values))
        return ParityMap().one_particle(out) if self.with_parity else out

    def matrix(self, d):
        m = -np.eye(d)
        if self.with_parity:
            m[1, 1] = 1.0
        return m


def conjugate_operator(W, A):
    """W A W^{-1} for primitive words, acting on the smearing functions."""
    if isinstance(A, Creator):
        return Creator(W.one_particle(A.h))
    if isinstance(A, Annihilator):
        return Annihilator(W.one_particle(A.h))
    if isinstance(A, Field):
        f = A.smearing
        plus = W.one_particle(f.f_plus).with_sign(1)
        minus = W.one_particle(f.f_minus.conj()).conj().with_sign(-1)
        return Field(SmearedField(plus, minus))
    if isinstance(A, Product):
        return Product([conjugate_operator(W, x) for x in A.factors])
    return Conjugated(W, A)


def check_intertwining(W, generator, probes, displacements, tol=1e-12):
    """max over probes/displacements of ||W U_X(x) W^-1 phi - U_X(M x) phi|| / ||phi||."""
    generator = generator if isinstance(generator, Generator) else Generator(generator)
    worst = 0.0
    for phi in probes:
        nrm = phi.norm()
        if nrm == 0:
            continue
        mom = generator.momenta(phi.grid)
        M = W.matrix(phi.grid.d)
        for x in displacements:
            x = np.asarray(x, dtype=float)
            lhs = W.apply(apply_translation(x, W.apply_inverse(phi), nodes=mom))
            rhs = apply_translation(M @ x, phi, nodes=mom)
            worst = max(worst, (lhs - rhs).norm() / nrm)
    return worst


def covariance_transport(W, A, theta, generator, psi, displacements=None, tol=1e-12):
    """(W A_theta W^-1 psi, (W A W^-1)_{sigma M theta M^T} psi).

    The intertwining relation W U_X(x) W^-1 = U_X(M x) is verified first on
    the states entering both sides.
    """
    generator = generator if isinstance(generator, Generator) else Generator(generator)
    th = _theta(theta)
    d = psi.grid.d
    M = W.matrix(d)
    sigma = -1.0 if W.antiunitary else 1.0
    rhs_theta = ThetaMatrix(sigma * (M @ th.entries @ M.T))
    lhs = W.apply(warp_spectral(A, th, generator, W.apply_inverse(psi)))
    rhs = warp_spectral(conjugate_operator(W, A), rhs_theta, generator, psi)
    if displacements is None:
        rng = np.random.default_rng(0)
        displacements = rng.standard_normal((3, d))
    probes = [psi, W.apply_inverse(psi), lhs, W.apply_inverse(lhs)]
    defect = check_intertwining(W, generator, probes, displacements, tol)
    if defect > tol:
        raise PreconditionError(f"W U_X(x) W^-1 = U_X(M x) fails on the inputs (defect {defect:.2e})")
    return lhs, rhs
