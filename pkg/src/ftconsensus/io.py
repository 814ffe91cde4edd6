"""Scenario files, trace CSV output and run summaries.

Scenarios are YAML documents (see the bundled files under
``ftconsensus/scenarios``). Traces are CSV files with one header row and
one row per integration step; the event log is written next to the trace
as ``<stem>.events.csv``.
"""

from __future__ import annotations

import csv
import io as _io
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .config import ScenarioConfig, from_dict
from .errors import ParseError
from .sim import Event, Trace

FLOAT_FORMAT = "%.17g"
EVENT_FIELDS = ("t", "agent", "kind", "s", "p")


def bundled_scenarios() -> list[str]:
    """Names of the scenarios shipped with the package."""
    root = resources.files("ftconsensus") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def scenario_path(name_or_path) -> Path:
    """Resolve a file path, falling back to a bundled scenario name."""
    path = Path(name_or_path)
    if path.exists():
        return path
    bundled = resources.files("ftconsensus") / "scenarios" / f"{path.stem}.yaml"
    if path.suffix in ("", ".yaml") and bundled.is_file():
        return Path(str(bundled))
    raise FileNotFoundError(f"no scenario file or bundled scenario named {str(name_or_path)!r}")


def parse_scenario(text: str, source="<string>") -> ScenarioConfig:
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"{source}: {exc}") from None
    if tree is None:
        raise ParseError(f"{source}: scenario file is empty")
    if not isinstance(tree, dict):
        raise ParseError(f"{source}: top level must be a mapping, got {type(tree).__name__}")
    return from_dict(tree)


def load_scenario(path) -> ScenarioConfig:
    """Read and validate a scenario file or bundled scenario name.

    Raises:
        ParseError: the file is empty or is not a YAML mapping.
        ValidationError: a value is missing or inconsistent; ``.key``
            names the offending key path.
    """
    path = scenario_path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), str(path))


def dump_scenario(cfg: ScenarioConfig, path=None) -> str:
    """Serialize ``cfg`` as YAML; writes to ``path`` when given."""
    text = yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def events_path(trace_path) -> Path:
    p = Path(trace_path)
    return p.with_name(f"{p.stem}.events.csv")


def write_trace(trace: Trace, path, events=None) -> None:
    """Write ``trace`` as CSV (17 significant digits, ``nan`` if inactive).

    When ``events`` is given the event log goes to the sidecar file.
    """
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(trace.columns) + "\n")
        np.savetxt(fh, trace.data, fmt=FLOAT_FORMAT, delimiter=",")
    if events is not None:
        write_events(events, events_path(path))


def write_events(events, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=EVENT_FIELDS)
        w.writeheader()
        for e in events:
            row = e.as_row()
            row["t"] = FLOAT_FORMAT % row["t"]
            w.writerow(row)


def read_events(path) -> list[Event]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(Event(float(row["t"]), int(row["agent"]), row["kind"],
                             int(row["s"]) if row["s"] else None,
                             int(row["p"]) if row["p"] else None))
    return out


def read_trace(path):
    """Load a trace CSV; returns ``(trace, events)`` where ``events`` is
    ``None`` if there is no sidecar file."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise ParseError(f"{path}: empty trace file")
        columns = header.split(",")
        if columns[0] != "t":
            raise ParseError(f"{path}: first column must be 't'")
        body = fh.read()
    try:
        data = np.loadtxt(_io.StringIO(body), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if data.size and data.shape[1] != len(columns):
        raise ParseError(f"{path}: {data.shape[1]} values per row but {len(columns)} columns")
    ev = events_path(path)
    return Trace(columns, data.reshape(-1, len(columns))), (read_events(ev) if ev.exists() else None)


# -- summary -----------------------------------------------------------------

@dataclass
class AgentSummary:
    agent: int
    T_d: float | None
    detected_component: int | None
    T_isol: float | None
    isolated_type: int | None
    unresolved: bool
    terminal_error: float
    rms_error: float
    fde_violations: int
    fie_violations: dict = field(default_factory=dict)  # candidate s -> steps over mu


@dataclass
class RunSummary:
    window: tuple
    agents: list

    @property
    def any_detection(self) -> bool:
        return any(a.T_d is not None for a in self.agents)

    def lines(self) -> list[str]:
        lo, hi = self.window
        out = []
        if not self.any_detection:
            out.append("no detection")
        for a in self.agents:
            head = f"agent {a.agent}:"
            if a.T_d is None:
                diag = "no detection"
            else:
                comp = f" (component {a.detected_component})" if a.detected_component else ""
                diag = f"detected at t={a.T_d:.3f} s{comp}"
                if a.T_isol is not None:
                    diag += f"; isolated fault type {a.isolated_type} at t={a.T_isol:.3f} s"
                elif a.unresolved:
                    diag += "; unresolved (every candidate excluded)"
                else:
                    diag += "; not isolated"
            out.append(f"{head} {diag}")
            out.append(f"{head} terminal error {a.terminal_error:.4g}, "
                       f"RMS error over [{lo:g}, {hi:g}] s {a.rms_error:.4g}")
            fie = ", ".join(f"FIE {s} {c}" for s, c in sorted(a.fie_violations.items()))
            out.append(f"{head} threshold violations: FDE {a.fde_violations}" + (f", {fie}" if fie else ""))
        return out

    def __str__(self):
        return "\n".join(self.lines())


def _agents_in(trace: Trace):
    ids = sorted({int(c.split("_")[1]) for c in trace.columns if c.startswith("mode_")})
    return ids


def _components(trace: Trace):
    return sorted(int(c.split("_")[1]) for c in trace.columns if c.startswith("xr_"))


def _events_from_modes(trace: Trace, i):
    """Recover detection / isolation times from the mode column."""
    mode = trace[f"mode_{i}"]
    t = trace.t
    T_d = T_isol = None
    hit = np.flatnonzero(mode >= 1)
    if hit.size:
        T_d = float(t[hit[0]])
    hit = np.flatnonzero(mode >= 2)
    if hit.size:
        T_isol = float(t[hit[0]])
    return T_d, T_isol


def _count_over(trace: Trace, res_cols, thr_cols):
    res = np.abs(np.column_stack([trace[c] for c in res_cols]))
    thr = np.column_stack([trace[c] for c in thr_cols])
    with np.errstate(invalid="ignore"):
        over = res > thr  # nan (inactive) compares False
    return int(np.count_nonzero(over.any(axis=1)))


def summarize(trace: Trace, events=None, window=5.0) -> RunSummary:
    """Diagnosis times, tracking errors and threshold-violation counts.

    Tracking error of agent ``i`` is ``x_i - x^r``. The terminal value is
    its infinity norm at the last sample; the RMS is the root mean square
    of its Euclidean norm over ``[t_end - window, t_end]``. A violation is
    a step at which some residual component exceeds its threshold.
    """
    t = trace.t
    t_end = float(t[-1])
    lo = max(float(t[0]), t_end - window)
    in_window = t >= lo - 1e-12
    P = _components(trace)
    agents = []
    for i in _agents_in(trace):
        err = np.column_stack([trace[f"err_{i}_{p}"] for p in P])
        terminal = float(np.max(np.abs(err[-1])))
        rms = float(math.sqrt(np.mean(np.sum(err[in_window] ** 2, axis=1))))
        if events is None:
            T_d, T_isol = _events_from_modes(trace, i)
            comp = iso = None
            unresolved = False
        else:
            mine = [e for e in events if e.agent == i]
            det = next((e for e in mine if e.kind == "detected"), None)
            isol = next((e for e in mine if e.kind == "isolated"), None)
            T_d, comp = (det.t, det.p) if det else (None, None)
            T_isol, iso = (isol.t, isol.s) if isol else (None, None)
            unresolved = any(e.kind == "unresolved" for e in mine)
        fde = _count_over(trace, [f"eps_{i}_{p}" for p in P], [f"nu_{i}_{p}" for p in P])
        fie = {}
        s = 1
        while f"mu_s{s}_{i}_{P[0]}" in trace:
            fie[s] = _count_over(trace, [f"eps_s{s}_{i}_{p}" for p in P], [f"mu_s{s}_{i}_{p}" for p in P])
            s += 1
        agents.append(AgentSummary(i, T_d, comp, T_isol, iso, unresolved, terminal, rms, fde, fie))
    return RunSummary((lo, t_end), agents)
