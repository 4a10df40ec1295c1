"""Minkowski geometry: Lorentz maps, wedges and deformation matrices.

Metric signature is (+, -, ..., -).  Deformation matrices are stored with
both indices up, as plain antisymmetric arrays, and the bilinear phase

    p theta q = sum_{mu nu} p_mu theta^{mu nu} q_nu

is evaluated with lowered momenta (see :func:`phase_form`).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, ConfigurationError

SKEW_TOL = 1e-14
GROUP_TOL = 1e-12
SUPPORTED_ADMISSIBLE_DIMS = (2, 3, 4)


def metric(d):
    """Diagonal of the Minkowski metric in ``d`` dimensions."""
    if d < 2:
        raise ConfigurationError(f"dimension must be >= 2, got {d}")
    g = -np.ones(d)
    g[0] = 1.0
    return g


def as_vector(x, d=None):
    """Validate and return a Minkowski vector as a float (or complex) array."""
    x = np.asarray(x)
    if x.ndim != 1:
        raise ConfigurationError(f"expected a 1-d vector, got shape {x.shape}")
    if d is not None and x.shape[0] != d:
        raise ConfigurationError(f"vector has {x.shape[0]} components, expected {d}")
    if not np.iscomplexobj(x):
        x = x.astype(float)
    return x


def minkowski_dot(x, y):
    """x^0 y^0 - x.y, broadcasting over leading axes."""
    x = np.asarray(x)
    y = np.asarray(y)
    g = metric(x.shape[-1])
    return np.sum(g * x * y, axis=-1)


def phase_form(p, q, theta):
    """The deformation phase ``p theta q`` for contravariant ``p`` and ``q``.

    Broadcasts: ``p`` of shape (..., d) and ``q`` of shape (..., d).
    """
    th = theta.entries if isinstance(theta, ThetaMatrix) else np.asarray(theta)
    d = th.shape[0]
    g = metric(d)
    p = np.asarray(p)
    q = np.asarray(q)
    return np.einsum("...m,mn,...n->...", g * p, th, g * q)


# ---------------------------------------------------------------- Lorentz maps


@dataclass(frozen=True)
class LorentzTransform:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigurationError(f"Lorentz matrix must be square, got {m.shape}")
        g = np.diag(metric(m.shape[0]))
        if not np.allclose(m.T @ g @ m, g, atol=GROUP_TOL * max(1.0, np.abs(m).max() ** 2)):
            raise ConfigurationError("matrix does not preserve the Minkowski metric")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d(self):
        return self.matrix.shape[0]

    @property
    def orthochronous(self):
        return bool(self.matrix[0, 0] >= 1.0 - GROUP_TOL)

    @property
    def proper(self):
        return bool(abs(np.linalg.det(self.matrix) - 1.0) < GROUP_TOL * max(1.0, np.abs(self.matrix).max() ** self.d))

    def __matmul__(self, other):
        return LorentzTransform(self.matrix @ other.matrix)

    def inverse(self):
        g = np.diag(metric(self.d))
        return LorentzTransform(g @ self.matrix.T @ g)

    def apply(self, x):
        return np.asarray(x) @ self.matrix.T

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d))


def boost(rapidity, d, axis=1):
    """Boost with the given rapidity along spatial ``axis``."""
    if not 1 <= axis < d:
        raise ConfigurationError(f"boost axis {axis} invalid for d={d}")
    m = np.eye(d)
    c, s = np.cosh(rapidity), np.sinh(rapidity)
    m[0, 0] = m[axis, axis] = c
    m[0, axis] = m[axis, 0] = s
    return LorentzTransform(m)


def rotation(angle, d, plane=(2, 3)):
    """Spatial rotation in the given coordinate plane."""
    i, j = plane
    if not (1 <= i < d and 1 <= j < d and i != j):
        raise ConfigurationError(f"rotation plane {plane} invalid for d={d}")
    m = np.eye(d)
    c, s = np.cos(angle), np.sin(angle)
    m[i, i] = m[j, j] = c
    m[i, j] = -s
    m[j, i] = s
    return LorentzTransform(m)


def reflection(d):
    """The total spacetime reflection j: x -> -x."""
    return LorentzTransform(-np.eye(d))


def stabilizer(rapidity, d, angle=0.0):
    """Element of SO(1,1) x SO(d-2) fixing the reference wedge."""
    L = boost(rapidity, d, axis=1)
    if d == 4 and angle:
        L = L @ rotation(angle, d, plane=(2, 3))
    elif angle and d != 4:
        raise ConfigurationError("a perpendicular rotation angle needs d = 4")
    return L


@dataclass(frozen=True)
class PoincareTransform:
    lorentz: LorentzTransform
    translation: np.ndarray = None

    def __post_init__(self):
        a = np.zeros(self.lorentz.d) if self.translation is None else as_vector(self.translation, self.lorentz.d)
        a = np.array(a, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "translation", a)

    @property
    def d(self):
        return self.lorentz.d

    def apply(self, x):
        return self.lorentz.apply(x) + self.translation

    def pullback(self, x):
        """Inverse map x -> Lambda^{-1}(x - a)."""
        return self.lorentz.inverse().apply(np.asarray(x) - self.translation)

    def __matmul__(self, other):
        return PoincareTransform(self.lorentz @ other.lorentz, self.lorentz.apply(other.translation) + self.translation)


# ---------------------------------------------------------------------- wedges


@dataclass(frozen=True)
class Wedge:
    """Poincare image of the reference wedge W1 = {x1 > |x0|}."""

    transform: PoincareTransform

    @classmethod
    def reference(cls, d):
        return cls(PoincareTransform(LorentzTransform.identity(d)))

    @classmethod
    def opposite_reference(cls, d):
        return cls(PoincareTransform(reflection(d)))

    @property
    def d(self):
        return self.transform.d

    def opposite(self):
        """Causal complement -W, the image of this wedge under x -> -x."""
        j = PoincareTransform(reflection(self.d))
        return Wedge(j @ self.transform)

    def contains(self, x):
        return wedge_contains(self, x)


def wedge_contains(w, x):
    """Strict membership; boundary points are excluded.

    Accepts a single vector or an array of shape (n, d) and returns bool or
    a boolean array accordingly.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != w.d:
        raise ConfigurationError(f"point dimension {x.shape[-1]} != wedge dimension {w.d}")
    y = w.transform.pullback(x)
    inside = y[..., 1] > np.abs(y[..., 0])
    return bool(inside) if inside.ndim == 0 else inside


# ---------------------------------------------------------- deformation matrix


@dataclass(frozen=True)
class ThetaMatrix:
    entries: np.ndarray
    lam: float | None = None
    eta: float | None = None

    def __post_init__(self):
        th = np.array(self.entries, dtype=float)
        if th.ndim != 2 or th.shape[0] != th.shape[1]:
            raise ConfigurationError(f"theta must be square, got shape {th.shape}")
        scale = max(1.0, np.abs(th).max())
        if np.abs(th + th.T).max() > SKEW_TOL * scale:
            raise ConfigurationError("theta violates antisymmetry theta^{mu nu} = -theta^{nu mu}")
        th.setflags(write=False)
        object.__setattr__(self, "entries", th)

    @property
    def d(self):
        return self.entries.shape[0]

    def __neg__(self):
        return ThetaMatrix(-self.entries, None if self.lam is None else -self.lam, None if self.eta is None else -self.eta)

    def scaled(self, c):
        return ThetaMatrix(c * self.entries)

    @classmethod
    def zero(cls, d):
        return cls(np.zeros((d, d)), 0.0, 0.0 if d == 4 else None)

    @classmethod
    def from_params(cls, lam, eta=0.0, d=2):
        """Reference matrix for the wedge W1.

        The admissible block form is read as the mixed tensor theta^mu_nu
        and raised on its second index, which puts -lam at (0, 1).  The
        eta block is already antisymmetric and is stored as given.
        """
        if d not in SUPPORTED_ADMISSIBLE_DIMS:
            raise ConfigurationError(f"admissible matrices supported for d in {SUPPORTED_ADMISSIBLE_DIMS}, got {d}")
        if eta and d != 4:
            raise ConfigurationError("eta is only defined for d = 4")
        mixed = np.zeros((d, d))
        mixed[0, 1] = mixed[1, 0] = lam
        th = mixed @ np.diag(metric(d))
        if d == 4:
            th[2, 3] = eta
            th[3, 2] = -eta
        return cls(th, float(lam), float(eta) if d == 4 else None)


def theta_from_params(lam, eta=0.0, d=2):
    return ThetaMatrix.from_params(lam, eta, d)


def gamma_lambda(L, theta):
    """Action of a Lorentz map on deformation matrices.

    ``Lambda theta Lambda^T`` for orthochronous maps and its negative
    otherwise.
    """
    if L.d != theta.d:
        raise ConfigurationError(f"dimension mismatch: Lorentz d={L.d}, theta d={theta.d}")
    m = L.matrix
    out = m @ theta.entries @ m.T
    if not L.orthochronous:
        out = -out
    # symmetrize away rounding so the skew invariant holds exactly
    out = 0.5 * (out - out.T)
    return ThetaMatrix(out)


def is_admissible(theta, d=None, atol=1e-14):
    """True iff ``theta`` has the admissible block form with lam >= 0."""
    d = theta.d if d is None else d
    if d not in SUPPORTED_ADMISSIBLE_DIMS:
        raise ConfigurationError(f"admissibility is defined for d in {SUPPORTED_ADMISSIBLE_DIMS}, got {d}")
    if theta.d != d:
        return False
    th = theta.entries
    lam = -th[0, 1]
    eta = th[2, 3] if d == 4 else 0.0
    if lam < -atol:
        return False
    expected = ThetaMatrix.from_params(max(lam, 0.0), eta, d).entries
    return bool(np.abs(th - expected).max() <= atol * max(1.0, np.abs(th).max()))


def theta_of_wedge(w, lam, eta=0.0):
    """Deformation matrix attached to the wedge ``w``.

    Only the Lorentz part of the wedge's transform enters; translations
    leave the matrix unchanged.
    """
    ref = ThetaMatrix.from_params(lam, eta, w.d)
    if not is_admissible(ref):
        raise AdmissibilityError(f"(lambda={lam}, eta={eta}) is not admissible")
    return gamma_lambda(w.transform.lorentz, ref)
