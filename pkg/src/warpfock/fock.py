"""Truncated bosonic Fock space over the nodes of a mass-shell grid.

Sector n is a dense symmetric tensor of shape (N,)*n whose entries are
direct samples of the n-particle wavefunction.  Quadrature weights enter
only through the inner product

    <a, b> = sum_n sum_{i1..in} w_i1 ... w_in conj(a[i]) b[i].
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import ConfigurationError
from .testfunctions import MassShellGrid, OnShellFunction

DEFAULT_N_MAX = 3
SYMMETRY_TOL = 1e-14


@dataclass(frozen=True)
class FockState:
    grid: MassShellGrid
    n_max: int
    sectors: tuple
    truncated: bool = False

    def __post_init__(self):
        if self.n_max < 0:
            raise ConfigurationError("n_max must be non-negative")
        if len(self.sectors) != self.n_max + 1:
            raise ConfigurationError(f"expected {self.n_max + 1} sectors, got {len(self.sectors)}")
        secs = []
        for n, s in enumerate(self.sectors):
            a = np.array(s, dtype=complex)
            if a.shape != (self.grid.n,) * n:
                raise ConfigurationError(f"sector {n} has shape {a.shape}, expected {(self.grid.n,) * n}")
            a.setflags(write=False)
            secs.append(a)
        object.__setattr__(self, "sectors", tuple(secs))

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, grid, n_max=DEFAULT_N_MAX):
        return cls(grid, n_max, tuple(np.zeros((grid.n,) * n, dtype=complex) for n in range(n_max + 1)))

    @classmethod
    def vacuum(cls, grid, n_max=DEFAULT_N_MAX):
        secs = [np.zeros((grid.n,) * n, dtype=complex) for n in range(n_max + 1)]
        secs[0] = np.array(1.0 + 0j)
        return cls(grid, n_max, tuple(secs))

    @classmethod
    def from_sector(cls, grid, n, tensor, n_max=DEFAULT_N_MAX):
        if n > n_max:
            raise ConfigurationError(f"sector {n} exceeds n_max={n_max}")
        secs = [np.zeros((grid.n,) * k, dtype=complex) for k in range(n_max + 1)]
        secs[n] = symmetrize(np.asarray(tensor, dtype=complex))
        return cls(grid, n_max, tuple(secs))

    @classmethod
    def random(cls, grid, rng, n_max=DEFAULT_N_MAX, sectors=None, scale=1.0):
        """Random symmetric state; ``sectors`` limits which sectors are filled."""
        sectors = range(n_max + 1) if sectors is None else sectors
        secs = [np.zeros((grid.n,) * k, dtype=complex) for k in range(n_max + 1)]
        for n in sectors:
            shape = (grid.n,) * n
            t = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            secs[n] = scale * symmetrize(t)
        return cls(grid, n_max, tuple(secs))

    def replace(self, sectors, truncated=None):
        return FockState(self.grid, self.n_max, tuple(sectors), self.truncated if truncated is None else truncated)

    # algebra --------------------------------------------------------------
    def _check(self, other):
        if not self.grid.same_as(other.grid):
            raise ConfigurationError("states live on different grids")
        if self.n_max != other.n_max:
            raise ConfigurationError("states have different truncation levels")

    def __add__(self, other):
        self._check(other)
        return self.replace([a + b for a, b in zip(self.sectors, other.sectors)], self.truncated or other.truncated)

    def __sub__(self, other):
        self._check(other)
        return self.replace([a - b for a, b in zip(self.sectors, other.sectors)], self.truncated or other.truncated)

    def __mul__(self, c):
        return self.replace([c * a for a in self.sectors])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def inner(self, other):
        self._check(other)
        w = self.grid.weights
        total = 0j
        for n, (a, b) in enumerate(zip(self.sectors, other.sectors)):
            total += np.sum(weight_tensor(w, n) * np.conj(a) * b)
        return complex(total)

    def norm(self):
        return math.sqrt(max(self.inner(self).real, 0.0))

    def sector_norms(self):
        w = self.grid.weights
        return [float(np.sqrt(np.sum(weight_tensor(w, n) * np.abs(a) ** 2))) for n, a in enumerate(self.sectors)]

    def symmetry_defect(self):
        """Largest deviation of any sector from its symmetrization."""
        return max((float(np.abs(s - symmetrize(s)).max()) if s.ndim > 1 else 0.0) for s in self.sectors)

    def project(self, n):
        secs = [s if k == n else np.zeros_like(s) for k, s in enumerate(self.sectors)]
        return self.replace(secs)

    def conj(self):
        """Complex conjugation of every sector tensor (antiunitary)."""
        return self.replace([np.conj(s) for s in self.sectors])

    def max_sector(self):
        nz = [n for n, s in enumerate(self.sectors) if np.any(s != 0)]
        return max(nz) if nz else -1

    # serialization --------------------------------------------------------
    def to_json(self):
        payload = {
            "grid": self.grid.digest(),
            "n_max": self.n_max,
            "truncated": self.truncated,
            "sectors": [[np.real(s).tolist(), np.imag(s).tolist()] for s in self.sectors],
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text, grid):
        payload = json.loads(text)
        if payload["grid"] != grid.digest():
            raise ConfigurationError("state was serialized on a different grid")
        secs = [np.asarray(re) + 1j * np.asarray(im) for re, im in payload["sectors"]]
        return cls(grid, payload["n_max"], tuple(secs), payload["truncated"])


def weight_tensor(w, n):
    """Outer product w (x) ... (x) w with n factors (scalar 1 for n = 0)."""
    out = np.array(1.0)
    for _ in range(n):
        out = np.multiply.outer(out, w)
    return out


def symmetrize(t):
    """Average of ``t`` over all permutations of its axes."""
    n = t.ndim
    if n < 2:
        return t.copy()
    acc = np.zeros_like(t)
    perms = list(permutations(range(n)))
    for p in perms:
        acc += np.transpose(t, p)
    return acc / len(perms)


def _symmetrize_first_axis(u):
    """Symmetrize a tensor already symmetric in axes 1..n.

    For such tensors the full symmetrization is the mean over the
    transpositions (0 k), k = 0..n.
    """
    n = u.ndim
    acc = u.copy()
    for k in range(1, n):
        axes = list(range(n))
        axes[0], axes[k] = axes[k], axes[0]
        acc += np.transpose(u, axes)
    return acc / n


def _pair_phase(tensor, table):
    """Multiply entries by prod_{k>=1} table[i_0, i_k]."""
    n = tensor.ndim
    out = tensor
    for k in range(1, n):
        shape = [1] * n
        shape[0] = table.shape[0]
        shape[k] = table.shape[1]
        out = out * table.reshape(shape)
    return out


def _require_grid(h, psi):
    if not h.grid.same_as(psi.grid):
        raise ConfigurationError("on-shell function and state live on different grids")


def create(h, psi, phase_table=None):
    """a*(h) psi.

    With ``phase_table`` E (an N x N array) the creator is deformed: the new
    particle at node q picks up prod_k E[q, t_k] over the existing ones.
    """
    _require_grid(h, psi)
    secs = [np.zeros_like(s) for s in psi.sectors]
    truncated = psi.truncated
    hv = np.asarray(h.values)
    for n, s in enumerate(psi.sectors):
        if not np.any(s):
            continue
        if n + 1 > psi.n_max:
            truncated = True
            continue
        u = np.multiply.outer(hv, s)
        if phase_table is not None and n > 0:
            u = _pair_phase(u, phase_table)
        secs[n + 1] = secs[n + 1] + math.sqrt(n + 1) * _symmetrize_first_axis(u)
    return psi.replace(secs, truncated)


def annihilate(h, psi, phase_table=None):
    """a(h) psi, antilinear in h.

    With ``phase_table`` E the removed particle at node i contributes
    prod_k E[t'_k, i] over the remaining ones.
    """
    _require_grid(h, psi)
    w = psi.grid.weights
    c = w * np.conj(np.asarray(h.values))
    secs = [np.zeros_like(s) for s in psi.sectors]
    for n, s in enumerate(psi.sectors):
        if n == 0 or not np.any(s):
            continue
        t = s
        if phase_table is not None and n > 1:
            t = _pair_phase(t, phase_table.T)
        secs[n - 1] = secs[n - 1] + math.sqrt(n) * np.tensordot(c, t, axes=(0, 0))
    return psi.replace(secs)


@dataclass(frozen=True)
class SmearedField:
    """phi(f) = a(conj f^-) + a*(f^+)."""

    f_plus: OnShellFunction
    f_minus: OnShellFunction

    def __post_init__(self):
        if not self.f_plus.grid.same_as(self.f_minus.grid):
            raise ConfigurationError("f^+ and f^- live on different grids")

    @property
    def grid(self):
        return self.f_plus.grid

    def conjugate(self):
        """Descriptor of conj(f): (conj f)^{+/-} = conj(f^{-/+})."""
        return SmearedField(self.f_minus.conj().with_sign(1), self.f_plus.conj().with_sign(-1))

    def scaled(self, c):
        return SmearedField(self.f_plus * c, self.f_minus * c)

    def norm_sum(self):
        return self.f_plus.norm() + self.f_minus.norm()


def smeared_field(f, grid):
    """Descriptor for a TestFunction sampled on ``grid``."""
    from .testfunctions import sample_onshell

    return SmearedField(sample_onshell(f, grid, 1), sample_onshell(f, grid, -1))


def free_field_apply(desc, psi):
    """phi(f) psi = a(conj f^-) psi + a*(f^+) psi."""
    return annihilate(desc.f_minus.conj(), psi) + create(desc.f_plus, psi)


def number_sqrt_apply(psi):
    """(N + 1)^{1/2} psi."""
    return psi.replace([math.sqrt(n + 1) * s for n, s in enumerate(psi.sectors)])


def apply_translation(a, psi, nodes=None):
    """U(a) psi: sector n multiplied by exp(i (p_1 + ... + p_n).a)."""
    grid = psi.grid
    a = np.asarray(a, dtype=float)
    if a.shape != (grid.d,):
        raise ConfigurationError(f"translation must have {grid.d} components")
    p = grid.nodes if nodes is None else nodes
    g = np.where(np.arange(grid.d) == 0, 1.0, -1.0)
    phase = np.exp(1j * (p * g) @ a)
    secs = []
    for n, s in enumerate(psi.sectors):
        secs.append(s * weight_tensor(phase, n))
    return psi.replace(secs)
