"""
Flying one episode end to end
==============================

The full backend synthesises every 10 ms capture through the multipath
channel, estimates its frequency, and feeds it to the two-stage seeker:
one 50 m circle to pick an initial heading, then the zig-zag.
"""

import numpy as np

from rfseek import FULL, Scenario, run_episode

log = run_episode(Scenario(), backend=FULL, seed=7)
print(log.summary_line())

# %% Heading error over time, sampled every 20 s
t, err = log["t"], np.degrees(np.abs(np.angle(np.exp(1j * (log["theta_k"] - log["theta_star"])))))
for ts in range(0, int(t[-1]), 20):
    i = np.searchsorted(t, ts)
    print(f"t={t[i]:6.1f} s  d={log['d'][i]:7.1f} m  |heading error|={err[i]:6.2f} deg")

# %% The slot log can be saved as CSV
# log.to_csv("trajectory.csv")
