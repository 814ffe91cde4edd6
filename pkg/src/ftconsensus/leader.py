"""Leader reference trajectories with a declared derivative bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .plant import FunctionSpec, resolve


def _harmonic(n, offset=0.0, amp=1.0, freq=1.0, waves="sin"):
    # x_p = offset_p + amp_p * wave_p(freq_p t), wave in {sin, cos}
    off = np.broadcast_to(np.asarray(offset, dtype=float), (n,)).copy()
    a = np.broadcast_to(np.asarray(amp, dtype=float), (n,)).copy()
    w = np.broadcast_to(np.asarray(freq, dtype=float), (n,)).copy()
    kinds = [waves] * n if isinstance(waves, str) else list(waves)
    if len(kinds) != n or any(k not in ("sin", "cos") for k in kinds):
        raise ValueError(f"waves must be 'sin'/'cos' per component, got {waves!r}")
    is_cos = np.array([k == "cos" for k in kinds])

    def evaluate(t):
        s, c = np.sin(w * t), np.cos(w * t)
        x = off + a * np.where(is_cos, c, s)
        dx = a * w * np.where(is_cos, -s, c)
        return x, dx
    return evaluate


def _constant(n, value=0.0):
    v = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
    zeros = np.zeros(n)
    return lambda t: (v, zeros)


LEADER_REGISTRY = {"harmonic": _harmonic, "constant": _constant}


@dataclass(frozen=True)
class LeaderReference:
    spec: FunctionSpec
    kappa: np.ndarray
    n: int

    def __post_init__(self):
        object.__setattr__(self, "_eval", resolve(LEADER_REGISTRY, self.spec, self.n))
        k = np.broadcast_to(np.asarray(self.kappa, dtype=float), (self.n,)).copy()
        object.__setattr__(self, "kappa", k)

    def kappa_holds(self, t_end, samples=20001) -> bool:
        """Check ``|x_r'(t)| <= kappa`` on a uniform grid over ``[0, t_end]``."""
        for t in np.linspace(0.0, t_end, samples):
            _, dx = self._eval(t)
            if np.any(np.abs(dx) > self.kappa + 1e-12):
                return False
        return True


def leader_state(ref: LeaderReference, t):
    """Leader state and its derivative at ``t``. Controllers never see the derivative."""
    return ref._eval(t)
