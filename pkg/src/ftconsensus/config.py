"""Declarative run description and its validation.

A :class:`ScenarioConfig` is built from a plain nested mapping (as read
from a scenario file) and converts back to one with :meth:`to_dict`.
Validation failures raise :class:`ValidationError` carrying the dotted
key path of the offending entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FtcError, ValidationError
from .graph import GraphTopology, build_topology
from .plant import (BASIS_REGISTRY, BOUND_REGISTRY, ETA_REGISTRY, PHI_REGISTRY, FaultCandidate,
                    FunctionSpec, ParamSet, PlantModel)
from .leader import LEADER_REGISTRY, LeaderReference

SCHEMES = ("euler", "rk4")


@dataclass(frozen=True)
class PlantConfig:
    n: int
    phi: FunctionSpec = FunctionSpec("zero")
    uncertainty: FunctionSpec = FunctionSpec("zero")
    uncertainty_bound: FunctionSpec = FunctionSpec("zero")

    def model(self) -> PlantModel:
        return PlantModel(self.n, self.phi, self.uncertainty, self.uncertainty_bound)


@dataclass(frozen=True)
class InjectedFault:
    agent: int          # one-based
    type: int           # one-based index into the fault class
    theta: tuple        # per component; scalar values are broadcast
    occurrence_time: float


@dataclass(frozen=True)
class Gains:
    fde_h: float = 2.0
    fie_lambda: float = 10.0
    fie_gamma: float = 1.0
    rbf_gamma: float = 5.0
    bounding_upsilon: float = 2.0
    actuator_gamma_bar: float = 1.0
    post_isolation_gamma: float = 0.2
    theta_bar: float = -0.8
    delta_bar: float = 1.0
    fde_x_bar: float = 0.0
    fie_x_bar: float = 0.0


@dataclass(frozen=True)
class RbfConfig:
    neurons: int = 21
    interval: tuple = (-10.0, 10.0)
    variance: float = 0.5


@dataclass(frozen=True)
class Integration:
    dt: float = 1e-3
    t_end: float = 30.0
    scheme: str = "euler"
    sgn_layer: float = 0.0

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class Toggles:
    disable_ftc: bool = False
    lyapunov_monitor: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    M: int
    edges: tuple
    leader_links: tuple
    plants: tuple
    initial_states: tuple
    fault_class: tuple
    fault: InjectedFault | None
    leader: FunctionSpec
    kappa: tuple
    gains: Gains = field(default_factory=Gains)
    rbf: RbfConfig = field(default_factory=RbfConfig)
    integration: Integration = field(default_factory=Integration)
    toggles: Toggles = field(default_factory=Toggles)
    output: str | None = None

    @property
    def n(self) -> int:
        return self.plants[0].n

    def topology(self) -> GraphTopology:
        return build_topology(self.M, self.edges, self.leader_links)

    def leader_reference(self) -> LeaderReference:
        return LeaderReference(self.leader, np.asarray(self.kappa, dtype=float), self.n)

    def with_overrides(self, dt=None, t_end=None, disable_ftc=None, sgn_layer=None,
                       lyapunov_monitor=None, output=None) -> "ScenarioConfig":
        integ, tog = self.integration, self.toggles
        if dt is not None:
            integ = replace(integ, dt=float(dt))
        if t_end is not None:
            integ = replace(integ, t_end=float(t_end))
        if sgn_layer is not None:
            integ = replace(integ, sgn_layer=float(sgn_layer))
        if disable_ftc is not None:
            tog = replace(tog, disable_ftc=bool(disable_ftc))
        if lyapunov_monitor is not None:
            tog = replace(tog, lyapunov_monitor=bool(lyapunov_monitor))
        cfg = replace(self, integration=integ, toggles=tog,
                      output=self.output if output is None else output)
        validate(cfg)
        return cfg

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "topology": {
                "followers": self.M,
                "edges": [list(e) for e in self.edges],
                "leader_links": [list(e) for e in self.leader_links],
            },
            "plants": [{
                "n": p.n,
                "phi": p.phi.to_dict(),
                "uncertainty": p.uncertainty.to_dict(),
                "uncertainty_bound": p.uncertainty_bound.to_dict(),
            } for p in self.plants],
            "initial_states": [list(x) for x in self.initial_states],
            "fault_class": [{
                "kind": c.kind,
                "basis": c.basis_spec.to_dict(),
                "param_set": c.param_set.to_dict(),
            } for c in self.fault_class],
            "fault": None if self.fault is None else {
                "agent": self.fault.agent,
                "type": self.fault.type,
                "theta": list(self.fault.theta),
                "occurrence_time_s": self.fault.occurrence_time,
            },
            "leader": {**self.leader.to_dict(), "kappa": list(self.kappa)},
            "gains": dict(vars(self.gains)),
            "rbf": {"neurons": self.rbf.neurons, "interval": list(self.rbf.interval),
                    "variance": self.rbf.variance},
            "integration": {"dt_s": self.integration.dt, "t_end_s": self.integration.t_end,
                            "scheme": self.integration.scheme,
                            "sgn_layer": self.integration.sgn_layer},
            "toggles": dict(vars(self.toggles)),
            "output": self.output,
        }
        return d


def _get(d, key, path, default=...):
    if not isinstance(d, dict):
        raise ValidationError(path, "expected a mapping")
    if key not in d:
        if default is ...:
            raise ValidationError(f"{path}.{key}" if path else key, "missing required key")
        return default
    return d[key]


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(path, f"expected a number, got {value!r}")
    return float(value)


def _function(d, path, registry):
    if isinstance(d, str):
        d = {"name": d}
    if not isinstance(d, dict) or "name" not in d:
        raise ValidationError(path, "expected a mapping with a 'name' entry")
    if d["name"] not in registry:
        raise ValidationError(f"{path}.name", f"unknown function {d['name']!r}; known: {sorted(registry)}")
    return FunctionSpec.from_dict(d)


def _check_known(d, allowed, path):
    extra = set(d) - set(allowed)
    if extra:
        key = sorted(extra)[0]
        raise ValidationError(f"{path}.{key}" if path else key, "unknown key")


def from_dict(d) -> ScenarioConfig:
    """Build and validate a scenario from a nested mapping."""
    if not isinstance(d, dict):
        raise ValidationError("<root>", "scenario must be a mapping")
    _check_known(d, {"name", "topology", "plants", "initial_states", "fault_class", "fault",
                     "leader", "gains", "rbf", "integration", "toggles", "output"}, "")

    topo = _get(d, "topology", "")
    M = _get(topo, "followers", "topology")
    if isinstance(M, bool) or not isinstance(M, int) or M < 1:
        raise ValidationError("topology.followers", f"expected a positive integer, got {M!r}")
    edges = tuple((int(e[0]), int(e[1]), float(e[2])) for e in _get(topo, "edges", "topology", []))
    links = tuple((int(e[0]), float(e[1])) for e in _get(topo, "leader_links", "topology", []))

    raw_plants = _get(d, "plants", "")
    if isinstance(raw_plants, dict):
        raw_plants = [raw_plants] * M
    if len(raw_plants) != M:
        raise ValidationError("plants", f"expected {M} entries or a single mapping, got {len(raw_plants)}")
    plants = []
    for k, p in enumerate(raw_plants):
        path = f"plants[{k}]"
        n = _get(p, "n", path)
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ValidationError(f"{path}.n", "expected a positive integer")
        plants.append(PlantConfig(
            n=n,
            phi=_function(_get(p, "phi", path, "zero"), f"{path}.phi", PHI_REGISTRY),
            uncertainty=_function(_get(p, "uncertainty", path, "zero"), f"{path}.uncertainty", ETA_REGISTRY),
            uncertainty_bound=_function(_get(p, "uncertainty_bound", path, "zero"),
                                        f"{path}.uncertainty_bound", BOUND_REGISTRY),
        ))

    x0 = tuple(tuple(_number(v, f"initial_states[{k}]") for v in row)
               for k, row in enumerate(_get(d, "initial_states", "")))

    fault_class = []
    for k, c in enumerate(_get(d, "fault_class", "", [])):
        path = f"fault_class[{k}]"
        kind = _get(c, "kind", path)
        if kind not in ("process", "actuator"):
            raise ValidationError(f"{path}.kind", f"expected 'process' or 'actuator', got {kind!r}")
        ps = _get(c, "param_set", path)
        try:
            pset = ParamSet.from_dict(ps)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{path}.param_set", str(exc)) from None
        fault_class.append(FaultCandidate(kind, _function(_get(c, "basis", path), f"{path}.basis",
                                                          BASIS_REGISTRY), pset))

    raw_fault = _get(d, "fault", "", None)
    fault = None
    if raw_fault is not None:
        theta = _get(raw_fault, "theta", "fault")
        theta = tuple(theta) if isinstance(theta, (list, tuple)) else (theta,)
        fault = InjectedFault(
            agent=int(_get(raw_fault, "agent", "fault")),
            type=int(_get(raw_fault, "type", "fault")),
            theta=tuple(_number(v, "fault.theta") for v in theta),
            occurrence_time=_number(_get(raw_fault, "occurrence_time_s", "fault"), "fault.occurrence_time_s"),
        )

    leader_raw = dict(_get(d, "leader", ""))
    kappa = leader_raw.pop("kappa", None)
    if kappa is None:
        raise ValidationError("leader.kappa", "missing required key")
    kappa = tuple(_number(v, "leader.kappa") for v in (kappa if isinstance(kappa, list) else [kappa]))
    leader = _function(leader_raw, "leader", LEADER_REGISTRY)

    def section(key, cls, rename=None):
        raw = dict(_get(d, key, "", {}) or {})
        rename = rename or {}
        allowed = {rename.get(f, f) for f in cls.__dataclass_fields__}
        _check_known(raw, allowed, key)
        kwargs = {}
        for f in cls.__dataclass_fields__:
            rk = rename.get(f, f)
            if rk in raw:
                kwargs[f] = raw[rk]
        return cls(**kwargs), raw

    gains, raw_gains = section("gains", Gains)
    for k, v in raw_gains.items():
        _number(v, f"gains.{k}")
    gains = Gains(**{k: float(v) for k, v in vars(gains).items()})
    rbf, _ = section("rbf", RbfConfig)
    rbf = RbfConfig(int(rbf.neurons), tuple(float(v) for v in rbf.interval), float(rbf.variance))
    integ, _ = section("integration", Integration, {"dt": "dt_s", "t_end": "t_end_s"})
    integ = Integration(_number(integ.dt, "integration.dt_s"), _number(integ.t_end, "integration.t_end_s"),
                        integ.scheme, _number(integ.sgn_layer, "integration.sgn_layer"))
    toggles, _ = section("toggles", Toggles)
    toggles = Toggles(bool(toggles.disable_ftc), bool(toggles.lyapunov_monitor))

    cfg = ScenarioConfig(
        name=str(_get(d, "name", "", "scenario")), M=M, edges=edges, leader_links=links,
        plants=tuple(plants), initial_states=x0, fault_class=tuple(fault_class), fault=fault,
        leader=leader, kappa=kappa, gains=gains, rbf=rbf, integration=integ, toggles=toggles,
        output=_get(d, "output", "", None),
    )
    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> None:
    """Raise :class:`ValidationError` if ``cfg`` is inconsistent."""
    try:
        cfg.topology()
    except FtcError as exc:
        raise ValidationError("topology", str(exc)) from None
    n = cfg.plants[0].n
    if any(p.n != n for p in cfg.plants):
        raise ValidationError("plants", "all agents must share the state dimension")
    for k, p in enumerate(cfg.plants):
        try:
            p.model()
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"plants[{k}]", str(exc)) from None
    if len(cfg.initial_states) != cfg.M or any(len(x) != n for x in cfg.initial_states):
        raise ValidationError("initial_states", f"expected {cfg.M} rows of length {n}")

    for name, value in vars(cfg.gains).items():
        if name in ("theta_bar", "fde_x_bar", "fie_x_bar"):
            continue
        if not value > 0.0:
            raise ValidationError(f"gains.{name}", f"must be positive, got {value}")
    if not -1.0 < cfg.gains.theta_bar < 0.0:
        raise ValidationError("gains.theta_bar", f"must lie in the open interval (-1, 0), got {cfg.gains.theta_bar}")
    for name in ("fde_x_bar", "fie_x_bar"):
        if getattr(cfg.gains, name) < 0.0:
            raise ValidationError(f"gains.{name}", "must be nonnegative")

    if cfg.rbf.neurons < 1:
        raise ValidationError("rbf.neurons", "must be at least 1")
    if not cfg.rbf.variance > 0.0:
        raise ValidationError("rbf.variance", "must be positive")
    if len(cfg.rbf.interval) != 2 or cfg.rbf.interval[0] > cfg.rbf.interval[1]:
        raise ValidationError("rbf.interval", "expected [low, high] with low <= high")

    integ = cfg.integration
    if not integ.dt > 0.0:
        raise ValidationError("integration.dt_s", "must be positive")
    if not integ.t_end > 0.0:
        raise ValidationError("integration.t_end_s", "must be positive")
    if integ.scheme not in SCHEMES:
        raise ValidationError("integration.scheme", f"expected one of {SCHEMES}")
    if integ.sgn_layer < 0.0:
        raise ValidationError("integration.sgn_layer", "must be nonnegative")

    if len(cfg.kappa) not in (1, n) or any(k < 0 for k in cfg.kappa):
        raise ValidationError("leader.kappa", f"expected 1 or {n} nonnegative values")
    try:
        ref = cfg.leader_reference()
    except (TypeError, ValueError) as exc:
        raise ValidationError("leader", str(exc)) from None
    if not ref.kappa_holds(integ.t_end):
        raise ValidationError("leader.kappa", "declared bound is below the sampled |leader derivative|")

    for k, c in enumerate(cfg.fault_class):
        if c.param_set.radius < 0:
            raise ValidationError(f"fault_class[{k}].param_set", "radius must be nonnegative")
        if c.kind == "actuator" and not (c.param_set.lower > -1.0 and c.param_set.upper <= 0.0):
            raise ValidationError(f"fault_class[{k}].param_set", "actuator set must lie in (-1, 0]")

    f = cfg.fault
    if f is not None:
        if not 1 <= f.agent <= cfg.M:
            raise ValidationError("fault.agent", f"must be in 1..{cfg.M}")
        if not 1 <= f.type <= len(cfg.fault_class):
            raise ValidationError("fault.type", f"must index the fault class 1..{len(cfg.fault_class)}")
        if len(f.theta) not in (1, n):
            raise ValidationError("fault.theta", f"expected 1 or {n} values")
        cand = cfg.fault_class[f.type - 1]
        theta = np.asarray(f.theta, dtype=float)
        if cand.kind == "actuator" and np.any((theta <= -1.0) | (theta > 0.0)):
            raise ValidationError("fault.theta", "actuator magnitude must lie in (-1, 0]")
        if not cand.param_set.contains(theta[:, None], tol=1e-12):
            raise ValidationError("fault.theta", "true parameter lies outside its declared set")
        if f.occurrence_time < 0:
            raise ValidationError("fault.occurrence_time_s", "must be nonnegative")
        if not integ.t_end > f.occurrence_time:
            raise ValidationError("integration.t_end_s", "must exceed the fault occurrence time")
