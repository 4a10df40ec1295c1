"""Noncommutative coordinates: Weyl words, twisted fields, Moyal products.

The Weyl factor is never represented by states.  Every expectation value
in scope reduces to a Weyl word of total momentum zero, whose normalized
value is 1, so only phases are tracked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .deformation import DeformedField, deformed_field_apply
from .errors import ConfigurationError, NumericalError, RangeError
from .fock import FockState, SmearedField
from .geometry import ThetaMatrix, metric, phase_form
from .testfunctions import axis_factors, bump_transform_adaptive, sample_onshell, transform
from .unitaries import BoostStabilizer, Dilation, Generator, Identity

PHASE_TOL = 1e-14


def _theta(theta):
    return theta if isinstance(theta, ThetaMatrix) else ThetaMatrix(np.asarray(theta, dtype=float))


# ------------------------------------------------------------ Weyl words


@dataclass(frozen=True)
class WeylWord:
    """phase * exp(i k.x_hat) with k = total_momentum."""

    total_momentum: np.ndarray
    phase: complex = 1.0 + 0j
    history: tuple = field(default=())

    def __post_init__(self):
        k = np.asarray(self.total_momentum, dtype=float)
        k.setflags(write=False)
        object.__setattr__(self, "total_momentum", k)
        object.__setattr__(self, "phase", complex(self.phase))
        if abs(abs(self.phase) - 1.0) > PHASE_TOL:
            raise NumericalError("Weyl word phase left the unit circle", {"modulus": abs(self.phase)})
        if not self.history:
            object.__setattr__(self, "history", (tuple(k.tolist()),))

    @classmethod
    def generator(cls, k):
        return cls(np.asarray(k, dtype=float))

    def history_sum(self):
        return np.sum(np.array(self.history, dtype=float), axis=0)


def weyl_multiply(a, b, theta):
    """W(p) W(q) = exp(i p theta q) W(p + q), phases multiplied."""
    th = _theta(theta)
    p, q = a.total_momentum, b.total_momentum
    ph = a.phase * b.phase * np.exp(1j * phase_form(p, q, th))
    return WeylWord(p + q, ph, a.history + b.history)


def weyl_product(words, theta):
    out = words[0]
    for w in words[1:]:
        out = weyl_multiply(out, w, theta)
    return out


def heisenberg_phase(p, q, theta):
    """Phase of W(p) W(q) from nilpotent matrices, an independent route.

    Coordinates are represented by (d+2)x(d+2) strictly upper-triangular
    matrices whose commutators are central, so the exponential series
    terminates and BCH holds exactly.
    """
    th = _theta(theta)
    d = th.d
    g = np.diag(metric(d))
    omega = 2.0 * (g @ th.entries @ g)

    def gen(a):
        n = np.zeros((d + 2, d + 2))
        n[0, 1 : d + 1] = a @ (omega / 2.0)
        n[1 : d + 1, d + 1] = a
        return n

    top = (expm(gen(np.asarray(p, float))) @ expm(gen(np.asarray(q, float))))[0, d + 1]
    return np.exp(1j * top)


# ------------------------------------------------- coordinate commutators


def coordinate_commutator(V, theta):
    """theta' with [x'_mu, x'_nu] = -2i theta'_{mu nu}, or None when no closed form is cataloged.

    Covariant (lower-index) form: Lambda^T theta Lambda for boosts,
    exp(-2b) theta for dilations, theta for the identity.
    """
    th = _theta(theta)
    if isinstance(V, Identity):
        return th
    if isinstance(V, BoostStabilizer):
        L = V.lorentz(th.d).matrix
        g = np.diag(metric(th.d))
        lower = g @ th.entries @ g
        return ThetaMatrix(g @ (L.T @ lower @ L) @ g)
    if isinstance(V, Dilation):
        return th.scaled(math.exp(-2.0 * V.b))
    return None


# --------------------------------------------------------- Moyal products


@dataclass(frozen=True)
class MomentumLattice:
    """Uniform lattice k = spacing * (i - half), i = 0..2*half, per axis."""

    spacing: np.ndarray
    half: int

    @property
    def axis(self):
        return [s * np.arange(-self.half, self.half + 1) for s in self.spacing]

    @property
    def d(self):
        return len(self.spacing)


def hat(f, values, tol=1e-12):
    """Per-axis factors of f_hat(k) = int f(x) exp(-i k.x) d^dx on the given axis arrays."""
    return axis_factors(f, values, -1, tol)


def band_for(f, tol):
    """Per-axis band K with |B(h K)| <= tol * B(0), found by doubling."""
    b0 = abs(bump_transform_adaptive(np.array([0.0]))[0][0])
    t = 8.0
    while abs(bump_transform_adaptive(np.array([t]), tol=tol * 1e-2)[0][0]) > tol * b0:
        t *= 1.25
        if t > 5000:
            raise RangeError("bump transform does not reach the requested band tolerance")
    return t / np.asarray(f.half_widths) + np.abs(np.asarray(f.k_mod))


def moyal_lattice(f1, f2, tol=1e-12, refine=1.0):
    """Lattice fine enough for exact Riemann sums and wide enough for the band."""
    ext = 2.0 * (np.asarray(f1.half_widths) + np.asarray(f2.half_widths))
    spacing = 2.0 * math.pi / (ext * 1.05 * refine)
    band = np.maximum(band_for(f1, tol), band_for(f2, tol))
    half = int(np.ceil(np.max(band / spacing)))
    return MomentumLattice(spacing, half)


def moyal_star(f1, f2, theta, k_points, lattice=None, tol=1e-12, edge_tol=1e-9):
    """Transform of the twisted product mu(F(f1 (x) f2)) at the given momenta.

        h_hat(k) = (2 pi)^-d sum_q Delta^d f1_hat(q) f2_hat(k - q) exp(-i q theta (k - q))

    The sum runs over the lattice in q.  Raises RangeError when either
    transform is not negligible at the lattice edge.
    """
    th = _theta(theta)
    d = th.d
    lat = moyal_lattice(f1, f2, tol) if lattice is None else lattice
    axes = lat.axis
    F1 = f1.amplitude * _outer(hat(f1, axes))
    edge = _edge_max(F1) / max(np.abs(F1).max(), 1e-300)
    if edge > edge_tol:
        raise RangeError(f"f1 transform at lattice edge is {edge:.2e} of its peak")
    q = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    F1 = F1.ravel()
    vol = np.prod(lat.spacing) / (2 * math.pi) ** d
    k_points = np.atleast_2d(np.asarray(k_points, dtype=float))
    out = np.empty(len(k_points), dtype=complex)
    for n, k in enumerate(k_points):
        F2 = f2.amplitude * _outer(hat(f2, [k[mu] - axes[mu] for mu in range(d)]))
        edge2 = _edge_max(F2) / max(np.abs(F2).max(), 1e-300)
        if edge2 > edge_tol:
            raise RangeError(f"f2 transform at lattice edge is {edge2:.2e} of its peak")
        ph = np.exp(-1j * phase_form(q, (k[None, :] - q), th))
        out[n] = vol * np.sum(F1 * F2.ravel() * ph)
    return out


def _outer(factors):
    out = factors[0]
    for f in factors[1:]:
        out = np.multiply.outer(out, f)
    return out


def _edge_max(arr):
    m = 0.0
    for ax in range(arr.ndim):
        for idx in (0, -1):
            m = max(m, float(np.abs(np.take(arr, idx, axis=ax)).max()))
    return m


def twisted_convolution(A, B, theta, spacing):
    """Discrete twisted convolution of lattice arrays with a common centre.

    (A * B)[k] = sum_q A[q] B[k - q] exp(-i q theta (k - q)).  Arrays have odd
    side length with index half at k = 0; mass pushed off the array raises
    RangeError.
    """
    th = _theta(theta)
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape or any(s % 2 == 0 for s in A.shape):
        raise ConfigurationError("lattice arrays must share an odd-sided shape")
    d = A.ndim
    half = np.array(A.shape) // 2
    step = np.asarray(spacing, dtype=float) * np.ones(d)
    out = np.zeros_like(A)
    lost = 0.0
    nz_a = np.argwhere(A != 0)
    nz_b = np.argwhere(B != 0)
    for ia in nz_a:
        qa = (ia - half) * step
        kb = nz_b + ia - half  # output indices
        inside = np.all((kb >= 0) & (kb < np.array(A.shape)), axis=1)
        vals = A[tuple(ia)] * B[tuple(nz_b.T)]
        rb = (nz_b - half) * step
        vals = vals * np.exp(-1j * phase_form(qa[None, :], rb, th))
        lost += float(np.abs(vals[~inside]).sum())
        np.add.at(out, tuple(kb[inside].T), vals[inside])
    if lost > 0:
        raise RangeError(f"twisted convolution lost weight {lost:.2e} off the lattice")
    return out


# ------------------------------------------------------ twisted n-points


def pairings(items):
    """All perfect matchings of a list as lists of (i, j) with i < j."""
    items = list(items)
    if not items:
        yield []
        return
    first = items[0]
    for k in range(1, len(items)):
        rest = items[1:k] + items[k + 1 :]
        for tail in pairings(rest):
            yield [(first, items[k])] + tail


def pairing_coefficients(pairing, n):
    """Integer C[P, Q] with total Weyl exponent sum_{P<Q} C[P,Q] m_P theta m_Q.

    Position s of the word carries c_s m_{pair(s)}, c = -1 for the annihilating
    member (earlier) and +1 for the creating one (later).  Words are multiplied
    symbolically with coefficient vectors over the pair momenta.
    """
    npairs = len(pairing)
    coeff = np.zeros((n, npairs), dtype=int)
    for k, (a, b) in enumerate(pairing):
        coeff[a, k] = -1
        coeff[b, k] = 1
    total = np.zeros(npairs, dtype=int)
    C = np.zeros((npairs, npairs), dtype=int)
    for s in range(n):
        # BCH step: (running total) theta (new letter)
        C += np.multiply.outer(total, coeff[s])
        total = total + coeff[s]
    if np.any(total != 0):
        raise NumericalError("contraction leaves nonzero total Weyl momentum", {"total": total.tolist()})
    # antisymmetrize onto P < Q
    return np.triu(C - C.T, k=1)


def twisted_npoint(functions, theta, V, grid):
    """<xi (x) Omega, phi_tw(f_1) ... phi_tw(f_n) xi (x) Omega> by Wick contraction.

    Odd n returns 0.  Each pair (a, b) contributes the contraction
    sum_i w_i f_a^-(p_i) f_b^+(p_i) with Weyl momentum m_i = X-eigenvalue.
    """
    n = len(functions)
    if n % 2:
        return 0j
    if n > 4:
        raise ConfigurationError("n-point functions are limited to n <= 4")
    th = _theta(theta)
    mom = Generator(V).momenta(grid)
    w = grid.weights
    minus = [_samples(f, grid, -1) for f in functions]
    plus = [_samples(f, grid, 1) for f in functions]
    P = phase_form(mom[:, None, :], mom[None, :, :], th)  # m_i theta m_j
    total = 0j
    for pairing in pairings(range(n)):
        C = pairing_coefficients(pairing, n)
        legs = [w * minus[a] * plus[b] for a, b in pairing]
        if len(pairing) == 1:
            total += np.sum(legs[0])
        else:
            expo = C[0, 1] * P
            total += np.sum(np.multiply.outer(legs[0], legs[1]) * np.exp(1j * expo))
    return complex(total)


def _samples(f, grid, sign):
    if isinstance(f, SmearedField):
        return (f.f_plus if sign == 1 else f.f_minus).values
    return sample_onshell(f, grid, sign).values


def fock_npoint(functions, theta, V, grid):
    """<Omega, phi_{theta,X}(f_1) ... phi_{theta,X}(f_n) Omega> on the truncated Fock space."""
    th = _theta(theta)
    n = len(functions)
    n_max = max(1, (n + 1) // 2 + 1)
    psi = FockState.vacuum(grid, n_max)
    gen = Generator(V)
    for f in reversed(functions):
        desc = f if isinstance(f, SmearedField) else SmearedField(sample_onshell(f, grid, 1), sample_onshell(f, grid, -1))
        psi = deformed_field_apply(DeformedField(desc, th, gen), psi)
    return complex(psi.sectors[0])


def isomorphism_check(functions, theta, V, grid):
    """Compare twisted and Fock-side n-points for n = 2 and n = 4 prefixes."""
    th = _theta(theta)
    rows = []
    for n in (2, 4):
        if len(functions) < n:
            continue
        fs = functions[:n]
        lhs = twisted_npoint(fs, th, V, grid)
        rhs = fock_npoint(fs, th, V, grid)
        rows.append({"n": n, "lhs": lhs, "rhs": rhs, "deviation": abs(lhs - rhs)})
    cc = coordinate_commutator(V, th)
    return {
        "rows": rows,
        "max_deviation": max((r["deviation"] for r in rows), default=0.0),
        "commutator": None if cc is None else cc.entries.tolist(),
    }


# -------------------------------------------------- product equivalence


def twist_onshell(f1, f2, twist, grid, tol=1e-12):
    """Two-variable on-shell transform of F(f1 (x) f2), F = exp(-i twist P (x) P).

    On plane waves the twist multiplies by exp(-i p twist q).  It is realized
    here by translating f1 by a_j = -twist g p_j for each second momentum p_j,
    so the phase comes from position-space quadrature, not from phase_form.
    """
    th = _theta(twist)
    g = metric(grid.d)
    f2p = sample_onshell(f2, grid, 1, tol).values
    out = np.empty((grid.n, grid.n), dtype=complex)
    for j in range(grid.n):
        a = -(th.entries @ (g * grid.nodes[j]))
        out[:, j] = transform(f1.translated(a), grid.nodes, 1, tol) * f2p[j]
    return out


def twisted_product_equivalence(f1, f2, theta, grid, tol=1e-12):
    """Max deviation between the two-particle components of both sides.

    Left: phi_tw(f1) phi_tw(f2) Omega in sector two, from the Weyl phases
    e^{i p theta q}.  Right: the on-shell smearing of F_{-theta}(f1 (x) f2),
    symmetrized.  Also reports the deviation of the swapped pair.
    """
    th = _theta(theta)
    mom = grid.nodes

    def left(a, b):
        ap = sample_onshell(a, grid, 1, tol).values
        bp = sample_onshell(b, grid, 1, tol).values
        ph = np.exp(1j * phase_form(mom[:, None, :], mom[None, :, :], th))
        return np.multiply.outer(ap, bp) * ph

    def sym(t):
        return 0.5 * (t + t.T)

    lhs = sym(left(f1, f2))
    rhs = sym(twist_onshell(f1, f2, -th, grid, tol))
    lhs_s = sym(left(f2, f1))
    rhs_s = sym(twist_onshell(f2, f1, -th, grid, tol))
    scale = max(np.abs(lhs).max(), 1e-300)
    dev = float(np.abs(lhs - rhs).max() / scale)
    swap = float(np.abs((lhs - lhs_s) - (rhs - rhs_s)).max() / scale)
    return {"deviation": dev, "swap_deviation": swap, "scale": scale}
