"""One-particle unitaries V and the conjugated generator X = Gamma(V^-1) P Gamma(V).

Every cataloged V is realized on a grid as a weighted node permutation

    (V h)[i] = factor[i] * h[src[i]]

with cyclic wrap at the grid edge, so Gamma(V) is exactly unitary on the
truncation.  X is then diagonal in the node basis with eigen-momentum
p[dst[i]] at node i, where dst is the inverse permutation of src.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, PreconditionError, RealizabilityError
from .fock import weight_tensor
from .geometry import stabilizer, wedge_contains
from .testfunctions import OnShellFunction

LATTICE_TOL = 1e-9
BOUNDARY_LOSS_TOL = 1e-8


class BoundaryLossWarning(UserWarning):
    """Norm carried across the cyclic grid edge exceeds the tolerance."""


# ------------------------------------------------------------------ catalog


@dataclass(frozen=True)
class Identity:
    def inverse(self):
        return self

    def to_dict(self):
        return {"variant": "identity"}


@dataclass(frozen=True)
class BoostStabilizer:
    """Boost of rapidity ``rapidity`` along x1, times a rotation of p_perp (d = 4)."""

    rapidity: float
    angle: float = 0.0

    def inverse(self):
        return BoostStabilizer(-self.rapidity, -self.angle)

    def lorentz(self, d):
        return stabilizer(self.rapidity, d, self.angle)

    def to_dict(self):
        return {"variant": "boost", "rapidity": self.rapidity, "angle": self.angle}


@dataclass(frozen=True)
class MomentumShift:
    """(V h)(p) = c(p) h(p - k) with c = sqrt(omega_p / omega_{p-k}); d = 2."""

    k: float

    def inverse(self):
        return MomentumShift(-self.k)

    def to_dict(self):
        return {"variant": "momentum_shift", "k": self.k}


@dataclass(frozen=True)
class Dilation:
    """(V h)(p) = h(e^b p) on the massless shell."""

    b: float

    def inverse(self):
        return Dilation(-self.b)

    def to_dict(self):
        return {"variant": "dilation", "b": self.b}


@dataclass(frozen=True)
class Composition:
    """Ordered product: Composition([V1, V2]) acts as V1 V2 (V2 first)."""

    parts: tuple

    def __init__(self, parts):
        object.__setattr__(self, "parts", tuple(parts))

    def inverse(self):
        return Composition([p.inverse() for p in reversed(self.parts)])

    def to_dict(self):
        return {"variant": "composition", "parts": [p.to_dict() for p in self.parts]}


CATALOG = (Identity, BoostStabilizer, MomentumShift, Dilation, Composition)


def unitary_from_dict(dct):
    variant = dct.get("variant", "identity")
    if variant == "identity":
        return Identity()
    if variant == "boost":
        return BoostStabilizer(float(dct["rapidity"]), float(dct.get("angle", 0.0)))
    if variant == "momentum_shift":
        return MomentumShift(float(dct["k"]))
    if variant == "dilation":
        return Dilation(float(dct["b"]))
    if variant == "composition":
        return Composition([unitary_from_dict(p) for p in dct["parts"]])
    raise ConfigurationError(f"unknown unitary variant {variant!r}")


# -------------------------------------------------------------- realization


@dataclass(frozen=True)
class NodeMap:
    """Realized one-particle unitary: (V h)[i] = factor[i] * h[src[i]]."""

    src: np.ndarray
    factor: np.ndarray
    wrapped: np.ndarray  # True where src[i] was reached across the grid edge

    @property
    def dst(self):
        d = np.empty_like(self.src)
        d[self.src] = np.arange(self.src.shape[0])
        return d

    def apply(self, values):
        return self.factor * np.asarray(values)[self.src]

    def inverse(self):
        dst = self.dst
        return NodeMap(dst, 1.0 / self.factor[dst], self.wrapped[dst])

    def compose(self, inner):
        """self after inner."""
        return NodeMap(inner.src[self.src], self.factor * inner.factor[self.src], self.wrapped | inner.wrapped[self.src])

    def matrix(self):
        n = self.src.shape[0]
        return sp.csr_matrix((self.factor, (np.arange(n), self.src)), shape=(n, n))

    @classmethod
    def identity(cls, n):
        return cls(np.arange(n), np.ones(n), np.zeros(n, dtype=bool))


def _lattice_steps(value, step, what):
    k = value / step
    nearest = round(k)
    if abs(k - nearest) > LATTICE_TOL:
        raise RealizabilityError(
            f"{what} {value} is not a multiple of the lattice step {step}", nearest=nearest * step
        )
    return int(nearest)


def _rapidity_shift_map(grid, steps):
    nt, npp = grid.n_rapidity, grid.n_perp
    it = np.arange(nt)
    src_t = it - steps
    wrapped_t = (src_t < 0) | (src_t >= nt)
    src_t = src_t % nt
    src = (src_t[:, None] * npp + np.arange(npp)[None, :]).ravel()
    wrapped = np.repeat(wrapped_t, npp)
    return src, wrapped


def _perp_rotation_map(grid, angle):
    quarter = angle / (0.5 * math.pi)
    nq = round(quarter)
    if abs(quarter - nq) > LATTICE_TOL:
        raise RealizabilityError(
            f"perpendicular rotation {angle} does not map the square p_perp grid to itself",
            nearest=nq * 0.5 * math.pi,
        )
    nq %= 4
    per = grid.params[3]
    idx = np.arange(per * per).reshape(per, per)
    # (V h)(p_perp) = h(R^-1 p_perp); R^-1 by a quarter turn is a rot90 of the index table
    src_perp = np.rot90(idx, k=nq).ravel()
    nt = grid.n_rapidity
    return (np.arange(nt)[:, None] * per * per + src_perp[None, :]).ravel()


def realize(V, grid):
    """Node map of V on ``grid``; raises RealizabilityError off the lattice."""
    n = grid.n
    if isinstance(V, NodeMap):
        return V
    if isinstance(V, Identity):
        return NodeMap.identity(n)
    if isinstance(V, BoostStabilizer):
        if grid.mode != "rapidity":
            raise RealizabilityError("boosts are realized on the rapidity-uniform grid only")
        steps = _lattice_steps(V.rapidity, grid.rapidity_step, "rapidity")
        src, wrapped = _rapidity_shift_map(grid, steps)
        m = NodeMap(src, np.ones(n), wrapped)
        if V.angle:
            if grid.d != 4:
                raise RealizabilityError("a perpendicular rotation needs d = 4")
            rsrc = _perp_rotation_map(grid, V.angle)
            m = m.compose(NodeMap(rsrc, np.ones(n), np.zeros(n, dtype=bool)))
        return m
    if isinstance(V, MomentumShift):
        if grid.mode != "momentum":
            raise RealizabilityError("momentum shifts are realized on the momentum-uniform grid only")
        steps = _lattice_steps(V.k, grid.momentum_step(), "momentum shift")
        src = np.arange(n) - steps
        wrapped = (src < 0) | (src >= n)
        src = src % n
        omega = grid.energies
        factor = np.sqrt(omega / omega[src])
        return NodeMap(src, factor, wrapped)
    if isinstance(V, Dilation):
        if grid.mass > 0:
            raise RealizabilityError("dilations are unitary on the massless shell only")
        if grid.mode != "geometric":
            raise RealizabilityError("dilations are realized on the geometric massless grid only")
        steps = _lattice_steps(V.b, math.log(grid.geometric_ratio()), "dilation parameter")
        k = grid.params[2]
        # node layout: negative branch stored with decreasing |p|, then positive branch
        mag_index = np.concatenate([np.arange(k)[::-1], np.arange(k)])
        branch = np.concatenate([np.zeros(k, dtype=int), np.ones(k, dtype=int)])
        target = mag_index + steps
        wrapped = (target < 0) | (target >= k)
        target = target % k
        src = np.where(branch == 0, k - 1 - target, k + target)
        return NodeMap(src, np.ones(n), wrapped)
    if isinstance(V, Composition):
        m = NodeMap.identity(n)
        for part in V.parts:
            m = m.compose(realize(part, grid))
        return m
    raise ConfigurationError(f"unsupported unitary {V!r}")


def boundary_loss(nodemap, h):
    """Relative norm of the part of V h that crossed the grid edge."""
    w = h.grid.weights
    v = nodemap.apply(h.values)
    tot = np.sqrt(np.sum(w * np.abs(v) ** 2))
    if tot == 0:
        return 0.0
    lost = np.sqrt(np.sum(w * np.abs(np.where(nodemap.wrapped, v, 0)) ** 2))
    return float(lost / tot)


def apply_unitary(V, h, warn=True):
    """V h for an on-shell function; warns when wrap-around carries norm."""
    m = realize(V, h.grid)
    if warn:
        loss = boundary_loss(m, h)
        if loss > BOUNDARY_LOSS_TOL:
            warnings.warn(f"boundary loss {loss:.2e} exceeds {BOUNDARY_LOSS_TOL}", BoundaryLossWarning, stacklevel=2)
    return OnShellFunction(h.grid, m.apply(h.values), h.sign)


def second_quantize_apply(V, psi):
    """Gamma(V) psi, applying the node map along every tensor axis."""
    m = realize(V, psi.grid)
    secs = []
    for n, s in enumerate(psi.sectors):
        if n == 0:
            secs.append(s)
            continue
        t = s[np.ix_(*([m.src] * n))]
        secs.append(t * weight_tensor(m.factor, n))
    return psi.replace(secs)


# --------------------------------------------------------- support images


def _support_points(V, pts, d):
    if isinstance(V, Identity) or isinstance(V, MomentumShift):
        return pts
    if isinstance(V, BoostStabilizer):
        return V.lorentz(d).apply(pts)
    if isinstance(V, Dilation):
        # (V f)(x) is f(e^b x) up to normalization: support scales by e^{-b}
        return math.exp(-V.b) * pts
    if isinstance(V, Composition):
        for part in reversed(V.parts):
            pts = _support_points(part, pts, d)
            if pts is None:
                return None
        return pts
    return None


def supports_wedge_covariance(V, f, w):
    """Whether the position-space image of supp f under V stays in ``w``.

    Returns True or False, or None when no closed-form support image is
    known for the variant (indeterminate, distinct from False).
    """
    if not f.inside(w):
        raise PreconditionError("supp f is not inside the wedge")
    pts = _support_points(V, f.corners(), f.d)
    if pts is None:
        return None
    # supports are boxes and the maps are linear, so vertices suffice
    return bool(np.all(wedge_contains(w, pts)))


def transformed_test_function(V, f):
    """Position-space image for variants that act by modulation or identity."""
    if isinstance(V, Identity):
        return f
    if isinstance(V, MomentumShift):
        # f^+(p) -> f^+(p - k) with k = (0, k): modulation by exp(-i k.x)
        kvec = np.zeros(f.d)
        kvec[1] = V.k
        return f.modulated(-kvec)
    if isinstance(V, Composition):
        for part in reversed(V.parts):
            f = transformed_test_function(part, f)
        return f
    raise ConfigurationError(f"{type(V).__name__} has no modulation form")


# ------------------------------------------------------------ generator X


@dataclass(frozen=True)
class Generator:
    """X = Gamma(V^-1) P Gamma(V), diagonal in the node basis."""

    V: object = field(default_factory=Identity)

    def momenta(self, grid):
        """Eigen-momentum of X at every node, shape (N, d)."""
        return grid.nodes[realize(self.V, grid).dst]

    def nodemap(self, grid):
        return realize(self.V, grid)


def _kron_power(mat, n):
    out = sp.identity(1, format="csr")
    for _ in range(n):
        out = sp.kron(out, mat, format="csr")
    return out


def conjugated_generator_matrices(V, grid, n_max):
    """X_mu = Gamma(V^-1) P_mu Gamma(V) as sparse matrices, one list per sector.

    Returns a list over mu of lists over n = 0..n_max.  Gamma(V) and
    Gamma(V^-1) are realized independently from V and its inverse.
    """
    fwd = realize(V, grid).matrix()
    bwd = realize(V.inverse(), grid).matrix()
    out = []
    for mu in range(grid.d):
        per_sector = []
        for n in range(n_max + 1):
            if n == 0:
                per_sector.append(sp.csr_matrix((1, 1)))
                continue
            diag = np.zeros(grid.n**n)
            for k in range(n):
                shape = [1] * n
                shape[k] = grid.n
                diag = diag + np.broadcast_to(grid.nodes[:, mu].reshape(shape), (grid.n,) * n).ravel()
            P = sp.diags(diag, format="csr")
            G = _kron_power(fwd, n)
            Gi = _kron_power(bwd, n)
            per_sector.append((Gi @ P @ G).tocsr())
        out.append(per_sector)
    return out


def momentum_matrices(grid, n_max):
    return conjugated_generator_matrices(Identity(), grid, n_max)


def max_commutator(mats):
    """max_{mu,nu,n} of the largest entry of [X_mu, X_nu] in sector n."""
    worst = 0.0
    d = len(mats)
    for mu in range(d):
        for nu in range(mu + 1, d):
            for a, b in zip(mats[mu], mats[nu]):
                c = (a @ b - b @ a).tocoo()
                if c.nnz:
                    worst = max(worst, float(np.abs(c.data).max()))
    return worst
