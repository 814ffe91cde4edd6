"""Scenario files, trace CSVs and summaries from Python and the shell.

Run with ``python3 demos/06_scenarios_and_traces.py``. The equivalent
shell session is::

    ftconsensus verify-graph paper_process_fault
    ftconsensus run paper_process_fault --t-end 8 --output out/trace.csv
    ftconsensus summarize out/trace.csv
"""

# %% Load a bundled scenario, tweak it and write it back out.
import tempfile
from pathlib import Path

from ftconsensus import io
from ftconsensus.sim import run

print("bundled:", io.bundled_scenarios())
cfg = io.load_scenario("paper_actuator_fault")
cfg = cfg.with_overrides(t_end=8.0)

out = Path(tempfile.mkdtemp())
io.dump_scenario(cfg, out / "short_actuator.yaml")
assert io.load_scenario(out / "short_actuator.yaml") == cfg

# %% Run it, write the trace and the event log, then summarize from disk.
res = run(cfg)
io.write_trace(res.trace, out / "trace.csv", res.events)
print(f"{len(res.trace.columns)} columns, {len(res.trace)} rows -> {out / 'trace.csv'}")
print("first columns:", res.trace.columns[:8])

trace, events = io.read_trace(out / "trace.csv")
print(io.summarize(trace, events))
