"""Test functions, discretized mass shells and on-shell transforms.

On-shell transforms follow

    f^{+/-}(p) = int dx f(x) exp(+/- i p.x),     p.x = p0 x0 - p_vec . x_vec

and are computed by per-axis Gauss-Legendre quadrature of a separable
mollifier bump.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigurationError, EmptySupportError, NumericalError, RangeError
from .geometry import as_vector, metric, wedge_contains

QUAD_TOL = 1e-10
MAX_GL_ORDER = 2048
SUPPORT_THRESHOLD = 1e-3
COSH_LIMIT = 700.0


# ------------------------------------------------------------- test functions


def bump_profile(u):
    """exp(1 - 1/(1 - u^2)) on (-1, 1), zero elsewhere; unit peak at u = 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


@dataclass(frozen=True)
class TestFunction:
    """Modulated product bump  A * prod_mu bump((x_mu - c_mu)/h_mu) * exp(i k_mod.x)."""

    __test__ = False  # keep pytest from collecting this class

    center: np.ndarray
    half_widths: np.ndarray
    k_mod: np.ndarray = None
    amplitude: complex = 1.0

    def __post_init__(self):
        c = as_vector(self.center).astype(float)
        h = np.asarray(self.half_widths, dtype=float)
        if h.shape != c.shape:
            raise ConfigurationError(f"half_widths shape {h.shape} != center shape {c.shape}")
        if np.any(h <= 0):
            raise ConfigurationError("half-widths must be positive")
        k = np.zeros_like(c) if self.k_mod is None else as_vector(self.k_mod, c.shape[0]).astype(float)
        for a in (c, h, k):
            a.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_widths", h)
        object.__setattr__(self, "k_mod", k)
        object.__setattr__(self, "amplitude", complex(self.amplitude))

    @property
    def d(self):
        return self.center.shape[0]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - self.center) / self.half_widths
        prof = np.prod(bump_profile(u), axis=-1)
        g = metric(self.d)
        return self.amplitude * prof * np.exp(1j * np.sum(g * self.k_mod * x, axis=-1))

    def corners(self):
        """The 2^d vertices of the support box."""
        signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * self.d, indexing="ij")).reshape(self.d, -1).T
        return self.center + signs * self.half_widths

    def translated(self, a):
        """x -> f(x - a); the modulation contributes a constant phase."""
        a = as_vector(a, self.d)
        shift = np.exp(-1j * np.sum(metric(self.d) * self.k_mod * a))
        return TestFunction(self.center + a, self.half_widths, self.k_mod, self.amplitude * shift)

    def modulated(self, k):
        """Multiply by exp(i k.x); shifts the on-shell transforms by -/+ k."""
        return TestFunction(self.center, self.half_widths, self.k_mod + as_vector(k, self.d), self.amplitude)

    def scaled(self, c):
        return TestFunction(self.center, self.half_widths, self.k_mod, c * self.amplitude)

    def conjugate(self):
        return TestFunction(self.center, self.half_widths, -self.k_mod, np.conj(self.amplitude))

    def inside(self, w):
        """True iff the closed support box lies in the (open) wedge ``w``."""
        return bool(np.all(wedge_contains(w, self.corners())))

    def to_dict(self):
        return {
            "center": self.center.tolist(),
            "half_widths": self.half_widths.tolist(),
            "k_mod": self.k_mod.tolist(),
            "amplitude": [self.amplitude.real, self.amplitude.imag],
        }

    @classmethod
    def from_dict(cls, dct):
        amp = dct.get("amplitude", 1.0)
        if isinstance(amp, (list, tuple)):
            amp = complex(amp[0], amp[1])
        return cls(dct["center"], dct["half_widths"], dct.get("k_mod"), amp)


@lru_cache(maxsize=None)
def _gl_rule(n):
    u, w = leggauss(n)
    return u, w * bump_profile(u)


def bump_transform_1d(t, order):
    """int_{-1}^{1} bump(u) exp(i t u) du at fixed Gauss-Legendre order."""
    u, wb = _gl_rule(order)
    t = np.asarray(t)
    return np.exp(1j * np.multiply.outer(t, u)) @ wb


def bump_transform_adaptive(t, tol=QUAD_TOL, start=32, max_order=MAX_GL_ORDER):
    """Adaptive version: doubles the order until two successive orders agree.

    The tolerance is relative to the L1 norm of the profile, which bounds
    the transform at real arguments.  Returns (values, order, error).
    """
    t = np.asarray(t, dtype=complex)
    scale = float(np.abs(bump_transform_1d(0.0, 64)))
    # growth factor for complex arguments
    scale *= float(np.exp(np.abs(t.imag).max())) if t.size else 1.0
    order = start
    prev = bump_transform_1d(t, order)
    while order < max_order:
        order *= 2
        cur = bump_transform_1d(t, order)
        err = float(np.abs(cur - prev).max()) if t.size else 0.0
        if err <= tol * scale:
            return cur, order, err
        prev = cur
    raise NumericalError(
        "Gauss-Legendre bump transform did not converge",
        {"max_order": max_order, "error": err, "tolerance": tol * scale},
    )


def axis_factors(f, values, sign, tol=QUAD_TOL):
    """Per-axis factors of f^{sign}: f^{sign}(p) = amplitude * prod_mu F_mu(p_mu).

    ``values`` is a sequence of d one-dimensional arrays of momentum components.
    """
    if len(values) != f.d:
        raise ConfigurationError(f"need {f.d} axis arrays, got {len(values)}")
    if sign not in (1, -1):
        raise ConfigurationError(f"sign must be +1 or -1, got {sign}")
    g = metric(f.d)
    out = []
    for mu in range(f.d):
        kappa = g[mu] * (f.k_mod[mu] + sign * np.asarray(values[mu]))
        h = f.half_widths[mu]
        vals, _, _ = bump_transform_adaptive(kappa * h, tol=tol)
        out.append(h * np.exp(1j * kappa * f.center[mu]) * vals)
    return out


def transform(f, momenta, sign, tol=QUAD_TOL):
    """f^{sign}(p) for an array of (possibly complex) momenta of shape (n, d)."""
    p = np.asarray(momenta)
    if p.ndim == 1:
        p = p[None, :]
    if p.shape[-1] != f.d:
        raise ConfigurationError(f"momentum dimension {p.shape[-1]} != test function dimension {f.d}")
    if f.amplitude == 0:
        return np.zeros(p.shape[0], dtype=complex)
    out = np.full(p.shape[0], f.amplitude, dtype=complex)
    for factor in axis_factors(f, [p[:, mu] for mu in range(f.d)], sign, tol):
        out *= factor
    return out


# --------------------------------------------------------------- mass shells


@dataclass(frozen=True)
class MassShellGrid:
    """Discretized positive mass shell with weights for dmu(p) = d^n p / (2 omega_p).

    Modes:
      rapidity   p = (m_perp cosh t, m_perp sinh t, p_perp), cell-centred in t
      momentum   cell-centred p1 in [-p_max, p_max]; d = 2 only
      geometric  massless d = 2, |p1| = p_min r^k on both branches
    """

    mass: float
    d: int
    mode: str
    nodes: np.ndarray
    weights: np.ndarray
    params: tuple

    @property
    def n(self):
        return self.nodes.shape[0]

    @property
    def energies(self):
        return self.nodes[:, 0]

    @property
    def velocities(self):
        """(1, p_vec/omega) per node."""
        v = self.nodes / self.nodes[:, :1]
        return v

    def descriptor(self):
        return {"mode": self.mode, "mass": self.mass, "d": self.d, "params": list(self.params)}

    def digest(self):
        h = hashlib.sha256()
        h.update(repr(self.descriptor()).encode())
        h.update(np.ascontiguousarray(self.nodes).tobytes())
        h.update(np.ascontiguousarray(self.weights).tobytes())
        return h.hexdigest()[:16]

    def same_as(self, other):
        return self is other or (
            self.mode == other.mode
            and self.params == other.params
            and self.mass == other.mass
            and self.d == other.d
        )

    # rapidity-mode helpers
    @property
    def n_rapidity(self):
        if self.mode != "rapidity":
            raise ConfigurationError("n_rapidity is defined in rapidity mode only")
        return self.params[1]

    @property
    def n_perp(self):
        return self.n // self.n_rapidity

    @property
    def rapidity_step(self):
        theta_max, n = self.params[0], self.params[1]
        return 2.0 * theta_max / n

    @property
    def rapidities(self):
        theta_max, n = self.params[0], self.params[1]
        step = 2.0 * theta_max / n
        return -theta_max + (np.arange(n) + 0.5) * step

    @property
    def perp_nodes(self):
        """Perpendicular momenta of shape (n_perp, d-2)."""
        if self.d == 2:
            return np.zeros((1, 0))
        pmax, npp = self.params[2], self.params[3]
        step = 2.0 * pmax / npp
        axis = -pmax + (np.arange(npp) + 0.5) * step
        mesh = np.meshgrid(*[axis] * (self.d - 2), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def momentum_step(self):
        if self.mode != "momentum":
            raise ConfigurationError("momentum_step is defined in momentum mode only")
        pmax, n = self.params
        return 2.0 * pmax / n

    def geometric_ratio(self):
        if self.mode != "geometric":
            raise ConfigurationError("geometric_ratio is defined in geometric mode only")
        return self.params[1]

    def complex_nodes(self, shift):
        """On-shell vectors at rapidity t + i*shift (rapidity mode)."""
        if self.mode != "rapidity":
            raise ConfigurationError("complex rapidities need the rapidity-uniform grid")
        t = self.rapidities
        if np.abs(t).max() > COSH_LIMIT:
            raise RangeError(f"|rapidity| up to {np.abs(t).max()} overflows cosh")
        z = t + 1j * shift
        pp = self.perp_nodes
        mperp = np.sqrt(self.mass**2 + np.sum(pp**2, axis=1))
        p0 = np.multiply.outer(np.cosh(z), mperp)
        p1 = np.multiply.outer(np.sinh(z), mperp)
        parts = [p0.ravel(), p1.ravel()]
        for k in range(self.d - 2):
            parts.append(np.broadcast_to(pp[:, k], p0.shape).ravel().astype(complex))
        return np.stack(parts, axis=-1)


def rapidity_grid(mass=1.0, theta_max=4.0, n_nodes=64, d=2, perp_max=1.0, n_perp=4):
    if mass < 0:
        raise ConfigurationError("mass must be non-negative")
    if d not in (2, 3, 4):
        raise ConfigurationError(f"d must be 2, 3 or 4, got {d}")
    if mass == 0 and d == 2:
        raise ConfigurationError("the rapidity grid needs m > 0 in d = 2; use the geometric grid")
    if n_nodes < 1 or theta_max <= 0:
        raise ConfigurationError("need n_nodes >= 1 and theta_max > 0")
    step = 2.0 * theta_max / n_nodes
    t = -theta_max + (np.arange(n_nodes) + 0.5) * step
    if d == 2:
        pp = np.zeros((1, 0))
        pstep = 1.0
        params = (float(theta_max), int(n_nodes))
    else:
        pstep = 2.0 * perp_max / n_perp
        axis = -perp_max + (np.arange(n_perp) + 0.5) * pstep
        mesh = np.meshgrid(*[axis] * (d - 2), indexing="ij")
        pp = np.stack([m.ravel() for m in mesh], axis=-1)
        params = (float(theta_max), int(n_nodes), float(perp_max), int(n_perp))
    mperp = np.sqrt(mass**2 + np.sum(pp**2, axis=1))
    p0 = np.multiply.outer(np.cosh(t), mperp).ravel()
    p1 = np.multiply.outer(np.sinh(t), mperp).ravel()
    cols = [p0, p1] + [np.tile(pp[:, k], n_nodes) for k in range(d - 2)]
    nodes = np.stack(cols, axis=-1)
    # dmu = d^n p/(2 omega) = (1/2) dt d^{n-1} p_perp
    weights = np.full(nodes.shape[0], 0.5 * step * pstep ** (d - 2))
    return MassShellGrid(float(mass), d, "rapidity", nodes, weights, params)


def momentum_grid(mass=1.0, p_max=8.0, n_nodes=64):
    if mass <= 0:
        raise ConfigurationError("the momentum-uniform grid needs m > 0")
    step = 2.0 * p_max / n_nodes
    p1 = -p_max + (np.arange(n_nodes) + 0.5) * step
    omega = np.sqrt(mass**2 + p1**2)
    nodes = np.stack([omega, p1], axis=-1)
    weights = step / (2.0 * omega)
    return MassShellGrid(float(mass), 2, "momentum", nodes, weights, (float(p_max), int(n_nodes)))


def geometric_grid(p_min=0.05, ratio=1.25, n_per_branch=24):
    """Massless d = 2 grid, log-uniform in |p1| on each light-cone branch."""
    if p_min <= 0 or ratio <= 1 or n_per_branch < 1:
        raise ConfigurationError("need p_min > 0, ratio > 1, n_per_branch >= 1")
    # cell-centred in log |p1|
    mags = p_min * ratio ** (np.arange(n_per_branch) + 0.5)
    p1 = np.concatenate([-mags[::-1], mags])
    nodes = np.stack([np.abs(p1), p1], axis=-1)
    # dp/(2|p|) = d log|p| / 2
    weights = np.full(p1.shape[0], 0.5 * np.log(ratio))
    return MassShellGrid(0.0, 2, "geometric", nodes, weights, (float(p_min), float(ratio), int(n_per_branch)))


def make_grid(spec):
    """Build a grid from a config mapping {mode, mass, theta_max | p_max, n_nodes, ...}."""
    spec = dict(spec)
    mode = spec.pop("mode", "rapidity")
    if mode == "rapidity":
        return rapidity_grid(
            mass=spec.get("mass", 1.0),
            theta_max=spec.get("theta_max", 4.0),
            n_nodes=spec.get("n_nodes", 64),
            d=spec.get("d", 2),
            perp_max=spec.get("perp_max", 1.0),
            n_perp=spec.get("n_perp", 4),
        )
    if mode == "momentum":
        return momentum_grid(spec.get("mass", 1.0), spec.get("p_max", 8.0), spec.get("n_nodes", 64))
    if mode == "geometric":
        if spec.get("mass", 0.0) != 0.0:
            raise ConfigurationError("the geometric grid is massless")
        return geometric_grid(spec.get("p_min", 0.05), spec.get("ratio", 1.25), spec.get("n_per_branch", 24))
    raise ConfigurationError(f"unknown grid mode {mode!r}")


# ----------------------------------------------------- on-shell functions


@dataclass(frozen=True)
class OnShellFunction:
    grid: MassShellGrid
    values: np.ndarray
    sign: int = 1

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.n,):
            raise ConfigurationError(f"{v.shape[0] if v.ndim else 0} values for {self.grid.n} grid nodes")
        if self.sign not in (1, -1):
            raise ConfigurationError("sign must be +1 or -1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def norm(self):
        return float(np.sqrt(np.sum(self.grid.weights * np.abs(self.values) ** 2)))

    def inner(self, other):
        """<self, other> = sum_i w_i conj(self_i) other_i."""
        return complex(np.sum(self.grid.weights * np.conj(self.values) * other.values))

    def conj(self):
        return OnShellFunction(self.grid, np.conj(self.values), -self.sign)

    def with_sign(self, sign):
        return OnShellFunction(self.grid, self.values, sign)

    def with_values(self, values):
        return OnShellFunction(self.grid, values, self.sign)

    def __add__(self, other):
        return OnShellFunction(self.grid, self.values + other.values, self.sign)

    def __mul__(self, c):
        return OnShellFunction(self.grid, c * self.values, self.sign)

    __rmul__ = __mul__


def sample_onshell(f, grid, sign=1, tol=QUAD_TOL):
    """Sample f^{sign} on the grid nodes."""
    if f.d != grid.d:
        raise ConfigurationError(f"test function d={f.d} but grid d={grid.d}")
    return OnShellFunction(grid, transform(f, grid.nodes, sign, tol), sign)


def continue_to_shifted_contour(f, grid, sign=-1, shift=np.pi, tol=QUAD_TOL):
    """f^{sign} evaluated at complex rapidity t + i*shift by direct quadrature."""
    if f.d != grid.d:
        raise ConfigurationError(f"test function d={f.d} but grid d={grid.d}")
    p = grid.complex_nodes(shift)
    vals = transform(f, p, sign, tol)
    if not np.all(np.isfinite(vals)):
        raise RangeError("non-finite value on the shifted contour")
    return OnShellFunction(grid, vals, sign)


def perp_reflection_index(grid):
    """Node permutation p_perp -> -p_perp at fixed rapidity (identity for d = 2)."""
    if grid.mode != "rapidity":
        raise ConfigurationError("perp reflection needs the rapidity grid")
    if grid.d == 2:
        return np.arange(grid.n)
    nt, npp = grid.n_rapidity, grid.n_perp
    per_axis = grid.params[3]
    idx = np.arange(npp).reshape([per_axis] * (grid.d - 2))
    flipped = idx[tuple(slice(None, None, -1) for _ in range(grid.d - 2))].ravel()
    return (np.arange(nt)[:, None] * npp + flipped[None, :]).ravel()


# --------------------------------------------------------- velocity supports


def _onshell_values(f, grid):
    if isinstance(f, OnShellFunction):
        return f.grid, f.values
    if grid is None:
        raise ConfigurationError("a grid is needed to sample a test function")
    return grid, sample_onshell(f, grid, 1).values


def velocity_support(f, grid=None, threshold=SUPPORT_THRESHOLD):
    """Velocities (1, p_vec/omega) of the nodes where |f~| >= threshold * max|f~|.

    ``f`` may be a TestFunction (sampled as f^+) or an OnShellFunction.
    Returns an array of shape (k, d).
    """
    if threshold <= 0:
        raise ConfigurationError("threshold must be positive")
    grid, vals = _onshell_values(f, grid)
    mag = np.abs(vals)
    peak = mag.max() if mag.size else 0.0
    if peak == 0.0:
        raise EmptySupportError("on-shell function vanishes on the grid")
    keep = mag >= threshold * peak
    return grid.velocities[keep]


def is_precursor(xi_a, xi_b, w):
    """True iff every difference v_a - v_b lies in the wedge ``w``."""
    xi_a = np.atleast_2d(np.asarray(xi_a, dtype=float))
    xi_b = np.atleast_2d(np.asarray(xi_b, dtype=float))
    if xi_a.shape[0] == 0 or xi_b.shape[0] == 0:
        raise EmptySupportError("velocity sets must be non-empty")
    diffs = (xi_a[:, None, :] - xi_b[None, :, :]).reshape(-1, xi_a.shape[1])
    return bool(np.all(wedge_contains(w, diffs)))


def sharp_packet(grid, index, smoothing=(0.25, 0.5, 0.25), sign=1):
    """Single-node indicator at ``index`` smoothed over neighbouring nodes."""
    k = len(smoothing)
    if k % 2 != 1:
        raise ConfigurationError("smoothing stencil must have odd length")
    half = k // 2
    vals = np.zeros(grid.n, dtype=complex)
    step = grid.n_perp if grid.mode == "rapidity" else 1
    for j, c in enumerate(smoothing):
        i = index + (j - half) * step
        if not 0 <= i < grid.n:
            raise ConfigurationError(f"packet at node {index} runs off the grid")
        vals[i] = c
    return OnShellFunction(grid, vals, sign)
