"""Fixed-step simulation engine and per-agent mode machine.

Each step reads one frozen snapshot of all agent states, computes every
control from it, advances plants, estimators and adaptive laws by one
integration step, then evaluates detection and isolation decisions. Mode
changes decided at ``t_{k+1}`` govern the control from ``t_{k+1}`` on, so
agents may be processed in any order (or concurrently) without changing
the result.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import control as ctl
from . import diagnosis as dg
from .config import ScenarioConfig
from .graph import augmented_laplacians
from .leader import leader_state
from .plant import FaultSpec, plant_derivative

MODE_INDEX = {dg.MONITORING: 0, dg.DETECTED: 1, dg.UNRESOLVED: 1, dg.ISOLATED: 2}


@dataclass(frozen=True)
class Event:
    t: float
    agent: int       # one-based
    kind: str        # fault_injected, detected, fie_excluded, isolated, unresolved
    s: int | None = None
    p: int | None = None  # one-based component

    def as_row(self):
        return {"t": self.t, "agent": self.agent, "kind": self.kind,
                "s": "" if self.s is None else self.s, "p": "" if self.p is None else self.p}


@dataclass(frozen=True)
class AgentState:
    fde: dg.FdeState
    status: dg.DiagnosisStatus
    bank: tuple = ()
    ctrl: object = None          # DetectionModeState | IsolationModeState | None
    fault_seen: bool = False


@dataclass(frozen=True)
class SimContext:
    """Everything about a run that does not change from step to step."""

    config: ScenarioConfig
    topology: object
    laplacians: object
    plants: tuple
    faults: tuple
    fault_bases: tuple
    candidate_bases: tuple
    candidate_q: tuple
    leader: object
    gains: ctl.BaselineGains
    neighbors: tuple   # per agent: tuple of (j, k_ij)
    leader_gain: np.ndarray

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "SimContext":
        topo = cfg.topology()
        n = cfg.n
        plants = tuple(p.model() for p in cfg.plants)
        faults = [FaultSpec.none()] * cfg.M
        fault_bases = [None] * cfg.M
        if cfg.fault is not None:
            i = cfg.fault.agent - 1
            cand = cfg.fault_class[cfg.fault.type - 1]
            theta = cfg.fault.theta if len(cfg.fault.theta) == n else cfg.fault.theta[0]
            faults[i] = FaultSpec.from_candidate(cand, theta, cfg.fault.occurrence_time, n)
            fault_bases[i] = cand.basis(n)
        cand_bases = tuple(c.basis(n) for c in cfg.fault_class)
        x0 = np.asarray(cfg.initial_states[0], dtype=float)
        cand_q = tuple(b(x0, np.zeros(n)).shape[1] for b in cand_bases)
        ref = cfg.leader_reference()
        neighbors = tuple(tuple((j, float(topo.weights[i, j])) for j in topo.neighbors(i))
                          for i in range(cfg.M))
        return cls(
            config=cfg, topology=topo, laplacians=augmented_laplacians(topo), plants=plants,
            faults=tuple(faults), fault_bases=tuple(fault_bases), candidate_bases=cand_bases,
            candidate_q=cand_q, leader=ref,
            gains=ctl.BaselineGains(kappa=ref.kappa, sgn_layer=cfg.integration.sgn_layer),
            neighbors=neighbors, leader_gain=np.asarray(topo.leader_weights, dtype=float),
        )


@dataclass(frozen=True)
class WorldState:
    ctx: SimContext
    k: int
    X: np.ndarray          # (M, n) follower states
    agents: tuple
    events: tuple = ()

    @property
    def t(self) -> float:
        return self.k * self.ctx.config.integration.dt


def initial_world(cfg: ScenarioConfig) -> WorldState:
    ctx = SimContext.from_config(cfg)
    X = np.array(cfg.initial_states, dtype=float)
    agents = tuple(
        AgentState(fde=dg.FdeState.initial(X[i], cfg.gains.fde_h, cfg.gains.fde_x_bar),
                   status=dg.DiagnosisStatus())
        for i in range(cfg.M))
    return WorldState(ctx, 0, X, agents)


@dataclass(frozen=True)
class Controls:
    U: np.ndarray
    E: np.ndarray
    xr: np.ndarray


def agent_error(ctx: SimContext, X, xr, i):
    """Disagreement of agent ``i`` computed from its neighbor list alone."""
    states = {j: X[j] for j, _ in ctx.neighbors[i]}
    gains = dict(ctx.neighbors[i])
    if ctx.leader_gain[i] > 0:
        states["leader"] = xr
        gains["leader"] = ctx.leader_gain[i]
    return ctl.consensus_error(X[i], states, gains)


def agent_control(ctx: SimContext, i, agent: AgentState, x, e, t):
    """Control of agent ``i`` for its current mode."""
    plant, gains = ctx.plants[i], ctx.gains
    mode = agent.status.mode
    if mode == dg.MONITORING or ctx.config.toggles.disable_ftc:
        return ctl.baseline_control(e, x, t, plant, gains)
    if mode in (dg.DETECTED, dg.UNRESOLVED):
        return ctl.detection_mode_control(e, x, t, plant, gains, agent.ctrl)
    st = agent.ctrl
    if st.kind == "process":
        g = ctx.candidate_bases[agent.status.isolated_type - 1](x, np.zeros_like(x))
        return ctl.process_ftc_control(e, x, t, plant, gains, st, g)
    return ctl.actuator_ftc_control(e, x, t, plant, gains, st)


def compute_controls(world: WorldState, order=None) -> Controls:
    ctx = world.ctx
    M, n = world.X.shape
    t = world.t
    xr, _ = leader_state(ctx.leader, t)
    U = np.empty((M, n))
    # row i of L11 @ X + L12 xr is sum_j k_ij (x_i - x_j): only neighbors of i enter
    L = ctx.laplacians.L
    E = L[:M, :M] @ world.X + L[:M, M:] @ xr[None, :]
    for i in (range(M) if order is None else order):
        U[i] = agent_control(ctx, i, world.agents[i], world.X[i], E[i], t)
    return Controls(U, E, xr)


def _rk4(f, t, z, dt):
    k1 = f(t, z)
    k2 = f(t + 0.5 * dt, z + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, z + 0.5 * dt * k2)
    k4 = f(t + dt, z + dt * k3)
    return z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _advance_agent(ctx: SimContext, i, agent: AgentState, x, u, e, t, dt):
    """One integration step of agent ``i``; returns (x_next, agent, events)."""
    cfg = ctx.config
    plant, fault, fbasis = ctx.plants[i], ctx.faults[i], ctx.fault_bases[i]
    events = []
    fault_seen = agent.fault_seen
    if fault.active(t) and not fault_seen:
        fault_seen = True
        events.append(Event(t, i + 1, "fault_injected"))

    bank = agent.bank
    if cfg.integration.scheme == "rk4":
        x_next, fde_next, bank_next = _rk4_agent(ctx, i, agent, x, u, t, dt)
        fde = dg.fde_step(agent.fde, plant, x, u, t, dt, x_hat_next=fde_next)
        bank = tuple(dg.fie_step(f, plant, x, u, t, dt, basis=ctx.candidate_bases[f.index - 1],
                                 x_hat_next=xh) for f, xh in zip(bank, bank_next))
    else:
        x_next = x + dt * plant_derivative(plant, fault, x, u, t, basis=fbasis)
        fde = dg.fde_step(agent.fde, plant, x, u, t, dt)
        bank = tuple(dg.fie_step(f, plant, x, u, t, dt, basis=ctx.candidate_bases[f.index - 1])
                     for f in bank)

    ctrl = agent.ctrl
    if not cfg.toggles.disable_ftc and ctrl is not None:
        if isinstance(ctrl, ctl.DetectionModeState):
            ctrl = ctl.detection_mode_adapt(ctrl, e, x, u, dt)
        elif ctrl.kind == "process":
            g = ctx.candidate_bases[agent.status.isolated_type - 1](x, np.zeros_like(x))
            ctrl = ctl.process_ftc_adapt(ctrl, e, g, dt)
        else:
            ctrl = ctl.actuator_ftc_adapt(ctrl, e, u, dt)
    return x_next, AgentState(fde, agent.status, bank, ctrl, fault_seen), events


def _rk4_agent(ctx, i, agent, x, u, t, dt):
    # plant, detection estimate and isolation estimates integrated jointly
    plant, fault, fbasis = ctx.plants[i], ctx.faults[i], ctx.fault_bases[i]
    n = x.shape[0]
    bank = agent.bank
    gain = agent.fde.gain

    def f(tau, z):
        xs = z[:n]
        out = [plant_derivative(plant, fault, xs, u, tau, basis=fbasis),
               plant.phi(xs) + u + gain * (xs - z[n:2 * n])]
        for k, fie in enumerate(bank):
            xh = z[(2 + k) * n:(3 + k) * n]
            g = ctx.candidate_bases[fie.index - 1](xs, u)
            out.append(plant.phi(xs) + u + fie.gain * (xs - xh) + np.sum(fie.theta_hat * g, axis=1))
        return np.concatenate(out)

    z0 = np.concatenate([x, agent.fde.x_hat] + [fie.x_hat for fie in bank])
    z1 = _rk4(f, t, z0, dt)
    return z1[:n], z1[n:2 * n], [z1[(2 + k) * n:(3 + k) * n] for k in range(len(bank))]


def _decide(ctx: SimContext, i, agent: AgentState, x, t):
    """Detection / isolation decisions at time ``t`` for agent ``i``."""
    cfg = ctx.config
    status = agent.status
    events = []
    bank, ctrl = agent.bank, agent.ctrl
    if status.mode == dg.MONITORING:
        ev = dg.detection_decision(agent.fde, x, t)
        if ev is None:
            return agent, events
        status = replace(status, mode=dg.DETECTED, T_d=t, detected_component=ev.component)
        events.append(Event(t, i + 1, "detected", p=ev.component + 1))
        if cfg.fault_class:
            bank = tuple(dg.activate_fies(cfg.fault_class, x, t, cfg.gains.fie_lambda,
                                          cfg.gains.fie_gamma, cfg.gains.fie_x_bar))
        if not cfg.toggles.disable_ftc:
            g, r = cfg.gains, cfg.rbf
            ctrl = ctl.DetectionModeState.initial(
                x.shape[0], g.rbf_gamma, g.bounding_upsilon, g.actuator_gamma_bar, g.theta_bar,
                g.delta_bar, r.neurons, r.interval, r.variance)
    if not bank:
        return replace(agent, status=status, bank=bank, ctrl=ctrl), events

    outcome = dg.isolation_decision(bank, x, t)
    bank = tuple(outcome.bank)
    for s, p in outcome.exclusions:
        events.append(Event(t, i + 1, "fie_excluded", s=s, p=p + 1))
    if status.mode == dg.DETECTED:
        if outcome.isolated is not None:
            s = outcome.isolated
            status = replace(status, mode=dg.ISOLATED, T_isol=t, isolated_type=s)
            events.append(Event(t, i + 1, "isolated", s=s))
            if not cfg.toggles.disable_ftc:
                cand = cfg.fault_class[s - 1]
                n = x.shape[0]
                if cand.kind == "process":
                    ctrl = ctl.IsolationModeState("process", np.zeros((n, ctx.candidate_q[s - 1])),
                                                  cfg.gains.post_isolation_gamma)
                else:
                    ctrl = ctl.IsolationModeState("actuator", np.zeros(n), cfg.gains.actuator_gamma_bar,
                                                  cfg.gains.theta_bar)
        elif outcome.unresolved:
            status = replace(status, mode=dg.UNRESOLVED)
            events.append(Event(t, i + 1, "unresolved"))
    return replace(agent, status=status, bank=bank, ctrl=ctrl), events


def advance(world: WorldState, controls: Controls, order=None, executor=None) -> WorldState:
    """Integrate one step using precomputed ``controls`` and apply decisions."""
    ctx = world.ctx
    dt = ctx.config.integration.dt
    M = world.X.shape[0]
    t = world.t
    t_next = (world.k + 1) * dt
    idx = list(range(M)) if order is None else list(order)

    def work(i):
        x_next, agent, ev1 = _advance_agent(ctx, i, world.agents[i], world.X[i],
                                            controls.U[i], controls.E[i], t, dt)
        agent, ev2 = _decide(ctx, i, agent, x_next, t_next)
        return i, x_next, agent, ev1 + ev2

    results = list(executor.map(work, idx)) if executor is not None else [work(i) for i in idx]
    X = np.empty_like(world.X)
    agents = list(world.agents)
    by_agent = {}
    for i, x_next, agent, ev in results:
        X[i] = x_next
        agents[i] = agent
        by_agent[i] = ev
    # event order is canonical (time, agent) regardless of processing order
    new_events = [e for i in range(M) for e in by_agent[i]]
    new_events.sort(key=lambda e: (e.t, e.agent))
    return WorldState(ctx, world.k + 1, X, tuple(agents), world.events + tuple(new_events))


def step(world: WorldState, order=None) -> WorldState:
    return advance(world, compute_controls(world, order), order)


def lyapunov_monitor(world: WorldState, X=None, xr=None) -> np.ndarray:
    """Per-component ``V_p = x_p^T Psi x_p`` plus parameter-error terms.

    Parameter terms use the true injected fault (simulation-only
    knowledge) and are included only where they are well defined: the
    post-isolation estimate of a matched fault, and the actuator estimate
    during detection mode for an actuator fault.
    """
    ctx = world.ctx
    X = world.X if X is None else X
    if xr is None:
        xr, _ = leader_state(ctx.leader, world.t)
    Psi = ctx.laplacians.Psi
    z = np.vstack([X, xr[None, :]])
    V = np.einsum("ip,ij,jp->p", z, Psi, z)
    cfg = ctx.config
    if cfg.fault is None or cfg.toggles.disable_ftc:
        return V
    i = cfg.fault.agent - 1
    agent, fault = world.agents[i], ctx.faults[i]
    ctrl = agent.ctrl
    if ctrl is None:
        return V
    if isinstance(ctrl, ctl.DetectionModeState):
        if fault.kind == "actuator":
            V = V + (fault.theta[:, 0] - ctrl.theta_hat) ** 2 / ctrl.actuator_rate
        return V
    iso = cfg.fault_class[agent.status.isolated_type - 1]
    if iso.basis_spec != fault.basis_spec:
        return V
    if ctrl.kind == "process":
        return V + np.sum((fault.theta - ctrl.theta_hat) ** 2, axis=1) / ctrl.rate
    return V + (fault.theta[:, 0] - ctrl.theta_hat) ** 2 / ctrl.rate


# -- trace -------------------------------------------------------------------

def trace_columns(cfg: ScenarioConfig) -> list[str]:
    """Column names for a scenario; depends on the scenario alone."""
    n, M = cfg.n, cfg.M
    r = len(cfg.fault_class)
    ctx_q = _candidate_q(cfg)
    q_iso = max(ctx_q, default=1)
    cols = ["t"] + [f"xr_{p}" for p in range(1, n + 1)]
    for i in range(1, M + 1):
        for p in range(1, n + 1):
            cols += [f"x_{i}_{p}", f"err_{i}_{p}", f"u_{i}_{p}", f"eps_{i}_{p}", f"nu_{i}_{p}"]
            for s in range(1, r + 1):
                cols += [f"eps_s{s}_{i}_{p}", f"mu_s{s}_{i}_{p}"]
                cols += _suffixed(f"theta_s{s}_{i}_{p}", ctx_q[s - 1])
            cols += [f"rbf_norm_{i}_{p}", f"alpha_hat_{i}_{p}", f"theta_act_{i}_{p}"]
            cols += _suffixed(f"theta_iso_{i}_{p}", q_iso)
        cols.append(f"mode_{i}")
    if cfg.toggles.lyapunov_monitor:
        cols += [f"V_{p}" for p in range(1, n + 1)]
    return cols


def _suffixed(base, q):
    return [base] if q == 1 else [f"{base}_{j}" for j in range(1, q + 1)]


def _candidate_q(cfg):
    n = cfg.n
    x0 = np.asarray(cfg.initial_states[0], dtype=float)
    return [c.basis(n)(x0, np.zeros(n)).shape[1] for c in cfg.fault_class]


@dataclass
class Trace:
    columns: list
    data: np.ndarray
    _index: dict = field(default=None, repr=False)

    def __post_init__(self):
        self._index = {c: k for k, c in enumerate(self.columns)}

    def __getitem__(self, name) -> np.ndarray:
        return self.data[:, self._index[name]]

    def __contains__(self, name):
        return name in self._index

    def __len__(self):
        return self.data.shape[0]

    @property
    def t(self):
        return self["t"]


class _RowWriter:
    """Fills trace rows; column positions are resolved once."""

    def __init__(self, cfg: ScenarioConfig, columns):
        self.cfg = cfg
        idx = {c: k for k, c in enumerate(columns)}
        self.ncols = len(columns)
        n, M, r = cfg.n, cfg.M, len(cfg.fault_class)
        self.q = _candidate_q(cfg)
        q_iso = max(self.q, default=1)
        P = range(1, n + 1)
        self.xr = [idx[f"xr_{p}"] for p in P]
        self.per_agent = []
        for i in range(1, M + 1):
            a = {
                "x": [idx[f"x_{i}_{p}"] for p in P],
                "err": [idx[f"err_{i}_{p}"] for p in P],
                "u": [idx[f"u_{i}_{p}"] for p in P],
                "eps": [idx[f"eps_{i}_{p}"] for p in P],
                "nu": [idx[f"nu_{i}_{p}"] for p in P],
                "eps_s": [[idx[f"eps_s{s}_{i}_{p}"] for p in P] for s in range(1, r + 1)],
                "mu_s": [[idx[f"mu_s{s}_{i}_{p}"] for p in P] for s in range(1, r + 1)],
                "theta_s": [[idx[c] for p in P for c in _suffixed(f"theta_s{s}_{i}_{p}", self.q[s - 1])]
                            for s in range(1, r + 1)],
                "rbf": [idx[f"rbf_norm_{i}_{p}"] for p in P],
                "alpha": [idx[f"alpha_hat_{i}_{p}"] for p in P],
                "theta_act": [idx[f"theta_act_{i}_{p}"] for p in P],
                "theta_iso": [idx[c] for p in P for c in _suffixed(f"theta_iso_{i}_{p}", q_iso)],
                "q_iso": q_iso,
                "mode": idx[f"mode_{i}"],
            }
            self.per_agent.append(a)
        self.V = [idx[f"V_{p}"] for p in P] if cfg.toggles.lyapunov_monitor else None

    def row(self, world: WorldState, controls: Controls) -> np.ndarray:
        row = np.full(self.ncols, np.nan)
        row[0] = world.t
        row[self.xr] = controls.xr
        for i, (a, agent) in enumerate(zip(self.per_agent, world.agents)):
            x = world.X[i]
            row[a["x"]] = x
            row[a["err"]] = x - controls.xr
            row[a["u"]] = controls.U[i]
            row[a["eps"]] = agent.fde.residual(x)
            row[a["nu"]] = agent.fde.nu
            for fie in agent.bank:
                s = fie.index - 1
                row[a["eps_s"][s]] = fie.residual(x)
                row[a["mu_s"][s]] = fie.mu
                row[a["theta_s"][s]] = fie.theta_hat.ravel()
            ctrl = agent.ctrl
            if isinstance(ctrl, ctl.DetectionModeState):
                row[a["rbf"]] = np.linalg.norm(ctrl.net.weights, axis=1)
                row[a["alpha"]] = ctrl.alpha_hat
                row[a["theta_act"]] = ctrl.theta_hat
            elif isinstance(ctrl, ctl.IsolationModeState):
                th = ctrl.theta_hat[:, None] if ctrl.theta_hat.ndim == 1 else ctrl.theta_hat
                padded = np.full((th.shape[0], a["q_iso"]), np.nan)
                padded[:, :th.shape[1]] = th
                row[a["theta_iso"]] = padded.ravel()
            row[a["mode"]] = MODE_INDEX[agent.status.mode]
        if self.V is not None:
            row[self.V] = lyapunov_monitor(world, xr=controls.xr)
        return row


@dataclass
class RunResult:
    trace: Trace
    events: list
    world: WorldState

    def events_of(self, kind, agent=None):
        return [e for e in self.events if e.kind == kind and (agent is None or e.agent == agent)]


def run(cfg: ScenarioConfig, order=None, parallel=False) -> RunResult:
    """Simulate ``cfg`` from ``t = 0`` to ``t_end`` and record every step.

    Args:
        order: optional permutation of zero-based agent indices giving the
            processing order inside each step; the result does not depend
            on it.
        parallel: step agents concurrently on a thread pool.
    """
    world = initial_world(cfg)
    columns = trace_columns(cfg)
    writer = _RowWriter(cfg, columns)
    N = cfg.integration.steps
    data = np.empty((N + 1, len(columns)))
    executor = ThreadPoolExecutor(max_workers=min(cfg.M, 8)) if parallel else None
    try:
        for k in range(N + 1):
            controls = compute_controls(world, order)
            data[k] = writer.row(world, controls)
            if k < N:
                world = advance(world, controls, order, executor)
    finally:
        if executor is not None:
            executor.shutdown()
    return RunResult(Trace(columns, data), list(world.events), world)


def simulated_threshold(h, bound, x_bar, dt, t_end):
    """Threshold filter driven by a constant bound, sampled on the step grid."""
    N = int(round(t_end / dt))
    nu = np.empty(N + 1)
    nu[0] = x_bar
    for k in range(N):
        nu[k + 1] = dg.filter_step(nu[k], h, bound, dt)
    return np.arange(N + 1) * dt, nu


def closed_form_threshold(h, bound, x_bar, t):
    t = np.asarray(t, dtype=float)
    return bound / h * (1.0 - np.exp(-h * t)) + x_bar * np.exp(-h * t)

