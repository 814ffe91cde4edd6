"""Fault detection estimator, isolation estimator bank and decision logic.

Thresholds are the outputs of first-order linear filters

    nu' = -h nu + bound,        nu(0) = x_bar

discretized exactly under a zero-order hold of the filter input, so a
constant input reproduces the closed-form response to rounding error.
Residual comparisons are strict (``>``) and happen after each state update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, EmptyFaultClass
from .plant import FaultCandidate, PlantModel


MONITORING, DETECTED, ISOLATED, UNRESOLVED = "monitoring", "detected", "isolated", "unresolved"


def filter_step(value, rate, drive, dt):
    """One exact ZOH step of ``y' = -rate*y + drive``."""
    decay = math.exp(-rate * dt)
    return decay * value + (1.0 - decay) / rate * drive


@dataclass(frozen=True)
class FdeState:
    x_hat: np.ndarray
    gain: float
    nu: np.ndarray
    x_bar0: np.ndarray

    @classmethod
    def initial(cls, x0, gain, x_bar0=0.0):
        x0 = np.asarray(x0, dtype=float)
        xb = np.broadcast_to(np.asarray(x_bar0, dtype=float), x0.shape).copy()
        return cls(x_hat=x0.copy(), gain=float(gain), nu=xb.copy(), x_bar0=xb)

    def residual(self, x):
        return np.asarray(x, dtype=float) - self.x_hat


def fde_derivative(state: FdeState, plant: PlantModel, x, u):
    return plant.phi(x) + u + state.gain * (x - state.x_hat)


def fde_step(state: FdeState, plant: PlantModel, x, u, t, dt, x_hat_next=None) -> FdeState:
    """Advance the detection estimator and its threshold by ``dt``.

    The estimate uses explicit Euler unless ``x_hat_next`` is supplied by
    a higher-order integrator.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != state.x_hat.shape or u.shape != state.x_hat.shape:
        raise DimensionMismatch(f"state/input shapes {x.shape}/{u.shape} do not match {state.x_hat.shape}")
    if x_hat_next is None:
        x_hat_next = state.x_hat + dt * fde_derivative(state, plant, x, u)
    nu = filter_step(state.nu, state.gain, plant.uncertainty_bound(x, t), dt)
    return FdeState(x_hat_next, state.gain, nu, state.x_bar0)


@dataclass(frozen=True)
class DetectionEvent:
    t: float
    component: int


def detection_decision(state: FdeState, x, t) -> DetectionEvent | None:
    """Detection if any ``|x_p - x_hat_p| > nu_p``; reports the first such ``p``."""
    over = np.abs(state.residual(x)) > state.nu
    if over.any():
        return DetectionEvent(float(t), int(np.flatnonzero(over)[0]))
    return None


@dataclass(frozen=True)
class FieState:
    """Isolation estimator matched to candidate ``index`` (one-based)."""

    index: int
    candidate: FaultCandidate
    x_hat: np.ndarray
    theta_hat: np.ndarray
    gain: float
    learning_rate: float
    mu: np.ndarray
    x_bar0: np.ndarray
    activation_time: float
    excluded: bool = False
    excluded_at: float | None = None

    def residual(self, x):
        return np.asarray(x, dtype=float) - self.x_hat

    def xi(self):
        return self.candidate.param_set.xi(self.theta_hat)


def activate_fies(candidates, x, t_detect, gain, learning_rate, x_bar0=0.0) -> list[FieState]:
    """Start one isolation estimator per candidate at the detection time.

    Each estimate starts at the measured state, each parameter estimate
    at the center of its set, and each threshold at ``x_bar0``.
    """
    candidates = list(candidates)
    if not candidates:
        raise EmptyFaultClass("fault class is empty; nothing to isolate")
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    rates = np.broadcast_to(np.asarray(learning_rate, dtype=float), (len(candidates),))
    xb = np.broadcast_to(np.asarray(x_bar0, dtype=float), (n,)).copy()
    bank = []
    for s, (cand, rate) in enumerate(zip(candidates, rates), start=1):
        q = cand.basis(n)(x, np.zeros(n)).shape[1]
        bank.append(FieState(
            index=s, candidate=cand, x_hat=x.copy(),
            theta_hat=np.full((n, q), cand.param_set.center),
            gain=float(gain), learning_rate=float(rate), mu=xb.copy(), x_bar0=xb,
            activation_time=float(t_detect),
        ))
    return bank


def fie_derivative(state: FieState, plant: PlantModel, x, u, g):
    return plant.phi(x) + u + state.gain * (x - state.x_hat) + np.sum(state.theta_hat * g, axis=1)


def fie_step(state: FieState, plant: PlantModel, x, u, t, dt, basis=None, x_hat_next=None) -> FieState:
    """Advance one isolation estimator, its projected adaptive law and threshold.

    ``basis`` is the resolved candidate basis callable (looked up when
    omitted). The threshold drive uses ``xi`` evaluated at the current
    estimate, before the parameter update.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != state.x_hat.shape or u.shape != state.x_hat.shape:
        raise DimensionMismatch(f"state/input shapes {x.shape}/{u.shape} do not match {state.x_hat.shape}")
    if basis is None:
        basis = state.candidate.basis(x.shape[0])
    g = basis(x, u)
    eps = x - state.x_hat
    if x_hat_next is None:
        x_hat_next = state.x_hat + dt * fie_derivative(state, plant, x, u, g)
    drive = plant.uncertainty_bound(x, t) + state.xi() * np.linalg.norm(g, axis=1)
    mu = filter_step(state.mu, state.gain, drive, dt)
    theta = state.theta_hat + dt * state.learning_rate * g * eps[:, None]
    theta = state.candidate.param_set.project(theta)
    return replace(state, x_hat=x_hat_next, theta_hat=theta, mu=mu)


@dataclass(frozen=True)
class IsolationOutcome:
    bank: list
    exclusions: list = field(default_factory=list)  # (s, p) pairs newly excluded
    isolated: int | None = None
    unresolved: bool = False


def isolation_decision(bank, x, t) -> IsolationOutcome:
    """Exclude every estimator whose residual crosses its threshold.

    Isolation of ``s`` is concluded once ``s`` is the only estimator left;
    if every estimator has been excluded the fault lies outside the class.
    """
    new_bank, exclusions = [], []
    for fie in bank:
        if not fie.excluded:
            over = np.abs(fie.residual(x)) > fie.mu
            if over.any():
                fie = replace(fie, excluded=True, excluded_at=float(t))
                exclusions.append((fie.index, int(np.flatnonzero(over)[0])))
        new_bank.append(fie)
    remaining = [f.index for f in new_bank if not f.excluded]
    if len(remaining) == 1:
        return IsolationOutcome(new_bank, exclusions, isolated=remaining[0])
    return IsolationOutcome(new_bank, exclusions, unresolved=not remaining)


@dataclass
class DiagnosisStatus:
    mode: str = MONITORING
    T_d: float | None = None
    T_isol: float | None = None
    isolated_type: int | None = None
    detected_component: int | None = None
