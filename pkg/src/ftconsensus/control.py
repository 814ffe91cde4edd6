"""Baseline, detection-mode and post-isolation consensus controllers.

All laws are written per state component ``p`` in terms of the weighted
disagreement ``e_p = sum_j k_ij (x_ip - x_jp)`` (leader included), and
are evaluated here on whole ``(n,)`` vectors at once.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateDenominator
from .plant import PlantModel


def consensus_error(x_i, neighbor_states, gains):
    """Weighted disagreement of agent ``i`` with its neighbors.

    Args:
        x_i: own state, shape (n,).
        neighbor_states: mapping neighbor key -> state (n,).
        gains: mapping neighbor key -> ``k_ij``; must cover the same keys.
    """
    x_i = np.asarray(x_i, dtype=float)
    e = np.zeros_like(x_i)
    for j, xj in neighbor_states.items():
        e = e + gains[j] * (x_i - np.asarray(xj, dtype=float))
    return e


def sgn_eval(z, layer=0.0):
    """Sign function, or the smooth surrogate ``z / (|z| + layer)``."""
    if layer > 0.0:
        return z / (np.abs(z) + layer)
    return np.sign(z)


@dataclass(frozen=True)
class BaselineGains:
    kappa: np.ndarray  # bound on |leader derivative|, per component
    sgn_layer: float = 0.0


def _kappa_bar(plant: PlantModel, gains: BaselineGains, x, t):
    return plant.uncertainty_bound(x, t) + gains.kappa


def baseline_control(e, x, t, plant: PlantModel, gains: BaselineGains):
    """``u = -e - phi(x) - (eta_bar + kappa) sgn(e)``."""
    return -e - plant.phi(x) - _kappa_bar(plant, gains, x, t) * sgn_eval(e, gains.sgn_layer)


@dataclass(frozen=True)
class RbfNetwork:
    """Gaussian RBF network on a scalar input, one weight row per component."""

    centers: np.ndarray
    variance: float
    weights: np.ndarray  # (n, n_centers)

    @classmethod
    def uniform(cls, n, neurons=21, interval=(-10.0, 10.0), variance=0.5):
        centers = np.linspace(interval[0], interval[1], int(neurons))
        centers.setflags(write=False)
        return cls(centers, float(variance), np.zeros((n, int(neurons))))

    def features(self, x):
        """(n, n_centers) basis values; row ``p`` uses input ``x_p``."""
        x = np.asarray(x, dtype=float)
        d = x[:, None] - self.centers[None, :]
        return np.exp(-d * d / (2.0 * self.variance))

    def with_weights(self, weights):
        return replace(self, weights=np.asarray(weights, dtype=float))


def rbf_eval(net: RbfNetwork, x, p=None):
    """Network output per component, or only component ``p`` if given."""
    out = np.sum(net.weights * net.features(x), axis=1)
    return out if p is None else out[p]


@dataclass(frozen=True)
class DetectionModeState:
    net: RbfNetwork
    alpha_hat: np.ndarray
    theta_hat: np.ndarray  # actuator effectiveness estimate, in [theta_bar, 0]
    rbf_rate: float
    bounding_rate: float
    actuator_rate: float
    theta_bar: float
    delta_bar: float = 1.0

    @classmethod
    def initial(cls, n, rbf_rate, bounding_rate, actuator_rate, theta_bar, delta_bar=1.0,
                neurons=21, interval=(-10.0, 10.0), variance=0.5):
        return cls(
            net=RbfNetwork.uniform(n, neurons, interval, variance),
            alpha_hat=np.zeros(n), theta_hat=np.zeros(n),
            rbf_rate=float(rbf_rate), bounding_rate=float(bounding_rate),
            actuator_rate=float(actuator_rate), theta_bar=float(theta_bar),
            delta_bar=float(delta_bar),
        )


def _divide_by_effectiveness(u_bar, theta_hat):
    denom = 1.0 + theta_hat
    if np.any(denom <= 0.0):
        raise DegenerateDenominator(f"1 + theta_hat = {denom} is not positive")
    return u_bar / denom


def detection_mode_control(e, x, t, plant, gains: BaselineGains, state: DetectionModeState):
    """Adaptive approximation plus bounding control, scaled by ``1/(1+theta_hat)``."""
    s = sgn_eval(e, gains.sgn_layer)
    psi = state.alpha_hat * state.delta_bar * s
    u_bar = -plant.phi(x) - e - rbf_eval(state.net, x) - psi - _kappa_bar(plant, gains, x, t) * s
    return _divide_by_effectiveness(u_bar, state.theta_hat)


def detection_mode_adapt(state: DetectionModeState, e, x, u, dt) -> DetectionModeState:
    weights = state.net.weights + dt * state.rbf_rate * e[:, None] * state.net.features(x)
    alpha = state.alpha_hat + dt * state.bounding_rate * np.abs(e) * state.delta_bar
    theta = np.clip(state.theta_hat + dt * state.actuator_rate * e * u, state.theta_bar, 0.0)
    return replace(state, net=state.net.with_weights(weights), alpha_hat=alpha, theta_hat=theta)


@dataclass(frozen=True)
class IsolationModeState:
    """Post-isolation estimate: (n, q) for process faults, (n,) for actuator."""

    kind: str
    theta_hat: np.ndarray
    rate: float
    theta_bar: float = -1.0


def process_ftc_control(e, x, t, plant, gains: BaselineGains, state: IsolationModeState, g):
    """Baseline law minus the estimated fault ``theta_hat_p^T g_p(x)``."""
    fault_hat = np.sum(state.theta_hat * g, axis=1)
    return baseline_control(e, x, t, plant, gains) - fault_hat


def process_ftc_adapt(state: IsolationModeState, e, g, dt) -> IsolationModeState:
    return replace(state, theta_hat=state.theta_hat + dt * state.rate * g * e[:, None])


def actuator_ftc_control(e, x, t, plant, gains: BaselineGains, state: IsolationModeState):
    return _divide_by_effectiveness(baseline_control(e, x, t, plant, gains), state.theta_hat)


def actuator_ftc_adapt(state: IsolationModeState, e, u, dt) -> IsolationModeState:
    theta = np.clip(state.theta_hat + dt * state.rate * e * u, state.theta_bar, 0.0)
    return replace(state, theta_hat=theta)
