"""Tracking with and without controller reconfiguration after a fault.

Full 30 s runs; takes a little while. Run with
``python3 demos/04_fault_tolerant_control.py``.
"""

# %% Same fault, two controllers.
import numpy as np

from ftconsensus.io import load_scenario, summarize
from ftconsensus.sim import run

results = {name: run(load_scenario(name)) for name in ("paper_process_fault", "paper_process_fault_noftc")}

# %% Compare the tracking error of every agent over the last five seconds.
for name, res in results.items():
    s = summarize(res.trace, res.events)
    rms = ", ".join(f"{a.rms_error:.3f}" for a in s.agents)
    print(f"{name:28s} RMS per agent over [25, 30] s: {rms}")

# %% The post-isolation estimate of the fault magnitude.
tr = results["paper_process_fault"].trace
theta = tr["theta_iso_1_1"]
for tk in (6, 10, 20, 30):
    k = int(round(tk / 1e-3))
    print(f"t={tk:2d} s  estimated process-fault parameter (component 1): {theta[k]:.3f}")

# Without reconfiguration the faulty agent's error stays large and drags
# its neighbors; with it, everyone settles to a small chattering band.
a1 = [np.sqrt(np.mean(res.trace["err_1_1"][-5000:] ** 2)) for res in results.values()]
print(f"agent 1, component 1 RMS: with FTC {a1[0]:.3f}, without {a1[1]:.3f}")
