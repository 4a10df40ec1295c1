"""Run configuration: a single YAML or JSON file, validated before any work."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigurationError
from .geometry import SKEW_TOL, ThetaMatrix, is_admissible
from .testfunctions import TestFunction, make_grid
from .unitaries import unitary_from_dict

SUITES = ("locality", "scatter", "npoint", "rieffel", "twist", "covariance", "bounds")

DEFAULT_TOLERANCES = {
    "generator": 1e-12,
    "oscillatory": 1e-6,
    "rieffel": 1e-12,
    "covariance": 1e-12,
    "transport": 1e-12,
    "hermiticity": 1e-12,
    "bound_slack": 1e-10,
    "locality": 1e-6,
    "locality_control_ratio": 1e-4,
    "contour": 1e-8,
    "scatter_phase": 1e-3,
    "scatter_trivial": 1e-10,
    "scatter_time": 1e-13,
    "npoint": 1e-12,
    "moyal": 1e-6,
    "twist": 1e-6,
}


@dataclass
class GridConfig:
    mode: str = "rapidity"
    theta_max: float = 4.0
    n_nodes: int = 64
    p_max: float = 8.0
    perp_max: float = 1.0
    n_perp: int = 4

    def spec(self, mass, d):
        return {"mode": self.mode, "mass": mass, "d": d, "theta_max": self.theta_max, "n_nodes": self.n_nodes,
                "p_max": self.p_max, "perp_max": self.perp_max, "n_perp": self.n_perp}


@dataclass
class RunConfig:
    dimension: int = 2
    mass: float = 1.0
    grid: GridConfig = field(default_factory=GridConfig)
    n_max: int = 3
    lam: float = 0.5
    eta: float = 0.0
    theta: list = None
    unitary: dict = field(default_factory=lambda: {"variant": "identity"})
    functions: list = field(default_factory=list)
    suites: list = field(default_factory=lambda: list(SUITES))
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    out_dir: str = "warpfock-out"
    seed: int = 0

    def tol(self, key):
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    def option(self, suite, key, default):
        return self.options.get(suite, {}).get(key, default)

    def theta_matrix(self):
        if self.theta is not None:
            return ThetaMatrix(np.asarray(self.theta, dtype=float))
        return ThetaMatrix.from_params(self.lam, self.eta, self.dimension)

    def make_grid(self):
        return make_grid(self.grid.spec(self.mass, self.dimension))

    def test_functions(self):
        return [TestFunction.from_dict(f) for f in self.functions]

    def to_dict(self):
        return asdict(self)

    def digest(self):
        """Hash of every field that can change a result (the output location cannot)."""
        payload = {k: v for k, v in self.to_dict().items() if k != "out_dir"}
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def validate(cfg):
    """Check every field against the module preconditions; raise ConfigurationError."""
    if cfg.dimension not in (2, 3, 4):
        raise ConfigurationError(f"dimension must be 2, 3 or 4, got {cfg.dimension}")
    if cfg.mass < 0:
        raise ConfigurationError("mass must be non-negative")
    if cfg.n_max < 0:
        raise ConfigurationError("n_max must be non-negative")
    if not 0 <= int(cfg.seed) < 2**64:
        raise ConfigurationError("seed must be an unsigned 64-bit integer")
    if cfg.theta is not None:
        t = np.asarray(cfg.theta, dtype=float)
        if t.shape != (cfg.dimension, cfg.dimension):
            raise ConfigurationError(f"theta must be {cfg.dimension}x{cfg.dimension}")
        if np.abs(t + t.T).max() > SKEW_TOL:
            raise ConfigurationError("theta violates skew-symmetry (theta^T = -theta)")
    th = cfg.theta_matrix()
    if not is_admissible(th, cfg.dimension):
        raise ConfigurationError("theta is not admissible for the wedge")
    unknown = [s for s in cfg.suites if s not in SUITES]
    if unknown:
        raise ConfigurationError(f"unknown suites {unknown}; choose from {list(SUITES)}")
    bad = [k for k in cfg.tolerances if k not in DEFAULT_TOLERANCES]
    if bad:
        raise ConfigurationError(f"unknown tolerance keys {bad}")
    cfg.make_grid()
    unitary_from_dict(cfg.unitary)
    for f in cfg.test_functions():
        if f.d != cfg.dimension:
            raise ConfigurationError("test function dimension does not match the run")
    return cfg


def from_dict(data):
    data = dict(data or {})
    grid = GridConfig(**data.pop("grid", {}))
    theta = data.pop("theta", None)
    if isinstance(theta, dict):
        data.setdefault("lam", theta.get("lambda", theta.get("lam", 0.5)))
        data.setdefault("eta", theta.get("eta", 0.0))
        theta = theta.get("matrix")
    known = set(RunConfig.__dataclass_fields__)
    extra = set(data) - known
    if extra:
        raise ConfigurationError(f"unknown config keys {sorted(extra)}")
    return validate(RunConfig(grid=grid, theta=theta, **data))


def load(path):
    """Read a YAML (or JSON, which YAML parses) config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigurationError("config root must be a mapping")
    return from_dict(data)
