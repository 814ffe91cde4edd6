"""Agent dynamics: known nonlinearity, bounded uncertainty and injected faults.

Each agent evolves as

    x' = phi(x) + u + eta(x, t) + beta(t - T) f(x, u)

with ``beta`` a hard step at the occurrence time ``T``. Functions are
named descriptors resolved through small registries so that a scenario
stays serializable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NoBasisDeclared, UnknownFunction


@dataclass(frozen=True)
class FunctionSpec:
    """A registry name plus its keyword parameters."""

    name: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, **self.params}

    @classmethod
    def from_dict(cls, d) -> "FunctionSpec":
        if isinstance(d, str):
            return cls(d)
        d = dict(d)
        return cls(d.pop("name"), d)


def _vec(value, n):
    v = np.asarray(value, dtype=float)
    return np.broadcast_to(v, (n,)).copy() if v.ndim == 0 else v.copy()


# -- state functions phi(x) ------------------------------------------------

def _phi_zero(n):
    zeros = np.zeros(n)
    return lambda x: zeros


def _phi_linear(n, gain=0.0):
    g = _vec(gain, n)
    return lambda x: g * x


def _phi_sin(n, amp=1.0):
    a = _vec(amp, n)
    return lambda x: a * np.sin(x)


PHI_REGISTRY = {"zero": _phi_zero, "linear": _phi_linear, "sin": _phi_sin}


# -- uncertainty eta(x, t) -------------------------------------------------

def _eta_zero(n):
    zeros = np.zeros(n)
    return lambda x, t: zeros


def _eta_constant(n, value=0.0):
    v = _vec(value, n)
    return lambda x, t: v


def _eta_sinusoid(n, amp=1.0, freq=1.0, phase=0.0):
    a, w, ph = _vec(amp, n), _vec(freq, n), _vec(phase, n)
    return lambda x, t: a * np.sin(w * t + ph)


ETA_REGISTRY = {"zero": _eta_zero, "constant": _eta_constant, "sinusoid": _eta_sinusoid}


def _bound_constant(n, value=0.0):
    v = _vec(value, n)
    if np.any(v < 0):
        raise ValueError("bound must be nonnegative")
    return lambda x, t: v


def _bound_affine_abs(n, offset=0.0, slope=0.0):
    # offset + slope*|x|, componentwise
    o, s = _vec(offset, n), _vec(slope, n)
    return lambda x, t: o + s * np.abs(x)


BOUND_REGISTRY = {"zero": lambda n: _bound_constant(n, 0.0), "constant": _bound_constant,
                  "affine_abs": _bound_affine_abs}


# -- fault bases g_p(x, u), each returning an (n, q) array -----------------

def _basis_x2cosx(n):
    return lambda x, u: (x * x * np.cos(x))[:, None]


def _basis_x1sq_cos(n):
    # variant of x2cosx in which every component is driven by x_1
    def g(x, u):
        return np.full((n, 1), x[0] * x[0] * math.cos(x[0]))
    return g


def _basis_input(n):
    return lambda x, u: np.asarray(u, dtype=float)[:, None]


def _basis_state(n):
    return lambda x, u: np.asarray(x, dtype=float)[:, None]


BASIS_REGISTRY = {"x2cosx": _basis_x2cosx, "x1sq_cos": _basis_x1sq_cos,
                  "input": _basis_input, "state": _basis_state}


def resolve(registry, spec: FunctionSpec, n):
    try:
        factory = registry[spec.name]
    except KeyError:
        raise UnknownFunction(f"unknown function {spec.name!r}; known: {sorted(registry)}") from None
    return factory(n, **spec.params)


@dataclass(frozen=True)
class PlantModel:
    """Fault-free part of one agent's dynamics.

    ``phi``, ``uncertainty`` and ``uncertainty_bound`` are the resolved
    callables; the matching ``*_spec`` fields keep the serializable names.
    """

    n: int
    phi_spec: FunctionSpec = FunctionSpec("zero")
    uncertainty_spec: FunctionSpec = FunctionSpec("zero")
    bound_spec: FunctionSpec = FunctionSpec("zero")

    def __post_init__(self):
        object.__setattr__(self, "phi", resolve(PHI_REGISTRY, self.phi_spec, self.n))
        object.__setattr__(self, "uncertainty", resolve(ETA_REGISTRY, self.uncertainty_spec, self.n))
        object.__setattr__(self, "uncertainty_bound", resolve(BOUND_REGISTRY, self.bound_spec, self.n))


@dataclass(frozen=True)
class ParamSet:
    """Known compact set for a fault parameter, one per state component.

    ``shape`` is ``"sphere"`` (``center``, ``radius``) or ``"interval"``
    (``lower``, ``upper``). Intervals are handled as the enclosing sphere
    of center ``(lower+upper)/2`` and radius ``(upper-lower)/2``.
    """

    shape: str
    center: float = 0.0
    radius: float = 0.0

    @classmethod
    def sphere(cls, center, radius):
        return cls("sphere", float(center), float(radius))

    @classmethod
    def interval(cls, lower, upper=0.0):
        lo, hi = float(lower), float(upper)
        return cls("interval", 0.5 * (lo + hi), 0.5 * (hi - lo))

    @property
    def lower(self):
        return self.center - self.radius

    @property
    def upper(self):
        return self.center + self.radius

    def project(self, theta):
        """Nearest point of the set; ``theta`` may be (n, q) or (n,)."""
        theta = np.asarray(theta, dtype=float)
        if self.shape == "interval":
            return np.clip(theta, self.lower, self.upper)
        d = theta - self.center
        if d.ndim < 2:
            return np.clip(theta, self.lower, self.upper)
        norms = np.linalg.norm(d, axis=1)
        over = norms > self.radius
        if not over.any():
            return theta
        out = theta.copy()
        out[over] = self.center + self.radius * d[over] / norms[over, None]
        return out

    def contains(self, theta, tol=0.0) -> bool:
        d = np.atleast_2d(np.asarray(theta, dtype=float) - self.center)
        return bool(np.all(np.linalg.norm(d, axis=-1) <= self.radius + tol))

    def xi(self, theta_hat):
        """Worst-case estimation error ``R + |theta_hat - O|`` per component."""
        d = np.atleast_2d(np.asarray(theta_hat, dtype=float) - self.center)
        return self.radius + np.linalg.norm(d, axis=-1)

    def to_dict(self) -> dict:
        if self.shape == "interval":
            return {"shape": "interval", "lower": self.lower, "upper": self.upper}
        return {"shape": "sphere", "center": self.center, "radius": self.radius}

    @classmethod
    def from_dict(cls, d):
        if d["shape"] == "interval":
            return cls.interval(d["lower"], d.get("upper", 0.0))
        if d["shape"] == "sphere":
            return cls.sphere(d["center"], d["radius"])
        raise ValueError(f"unknown parameter set shape {d['shape']!r}")


@dataclass(frozen=True)
class FaultCandidate:
    """One member of an agent's fault class: kind, basis and parameter set."""

    kind: str
    basis_spec: FunctionSpec
    param_set: ParamSet

    def basis(self, n):
        return resolve(BASIS_REGISTRY, self.basis_spec, n)


@dataclass(frozen=True)
class FaultSpec:
    """The fault actually injected into an agent (or none)."""

    kind: str = "none"
    occurrence_time: float = math.inf
    theta: np.ndarray | None = None
    basis_spec: FunctionSpec | None = None
    param_set: ParamSet | None = None

    @classmethod
    def none(cls):
        return cls()

    @classmethod
    def from_candidate(cls, candidate: FaultCandidate, theta, occurrence_time, n):
        th = np.asarray(theta, dtype=float)
        if th.ndim == 0:
            th = np.full((n, 1), float(th))
        elif th.ndim == 1:
            th = th[:, None]
        return cls(candidate.kind, float(occurrence_time), th, candidate.basis_spec,
                   candidate.param_set)

    def active(self, t) -> bool:
        return self.kind != "none" and t >= self.occurrence_time


def eval_fault_basis(fault: FaultSpec, p, x, u):
    """Basis vector ``g_p`` of component ``p`` (zero-based) at ``(x, u)``.

    For actuator faults the basis is the scalar input ``u_p``.
    """
    if fault.kind == "none" or fault.basis_spec is None:
        raise NoBasisDeclared("fault has no basis")
    x = np.asarray(x, dtype=float)
    return resolve(BASIS_REGISTRY, fault.basis_spec, x.shape[0])(x, u)[p]


def fault_term(fault: FaultSpec, x, u, n):
    """``f(x, u)`` with the true parameters: ``theta_p^T g_p`` per component."""
    g = resolve(BASIS_REGISTRY, fault.basis_spec, n)(x, u)
    return np.sum(fault.theta * g, axis=1)


def plant_derivative(model: PlantModel, fault: FaultSpec, x, u, t, basis=None):
    """State derivative of one agent at time ``t``.

    ``basis`` may carry the already resolved fault basis callable to skip
    the registry lookup in tight loops.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    n = model.n
    if x.shape != (n,) or u.shape != (n,):
        raise DimensionMismatch(f"expected state and input of length {n}, got {x.shape} and {u.shape}")
    dx = model.phi(x) + u + model.uncertainty(x, t)
    if fault.active(t):
        if basis is None:
            basis = resolve(BASIS_REGISTRY, fault.basis_spec, n)
        dx = dx + np.sum(fault.theta * basis(x, u), axis=1)
    return dx
