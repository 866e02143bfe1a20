"""
Monte Carlo: distance to the source over many random worlds
============================================================

Each run draws new scatterers, a new start bearing, a new oscillator offset
and new receiver noise from its own seed stream, so results are reproducible
and independent of how runs are scheduled.
"""

from rfseek import ABSTRACT, FULL, Scenario, monte_carlo

scn = Scenario()

# %% The abstract backend skips signal synthesis: quick, for exploring parameters
fast = monte_carlo(scn, backend=ABSTRACT, n_runs=50, master_seed=1)
print(f"abstract: success {fast.success_rate:.0%}, mean ratio {fast.mean_ratio:.4f}")

# %% Full signal chain, with and without the initial circle (about 2 s per run)
for stage1 in (True, False):
    s = monte_carlo(scn, backend=FULL, n_runs=10, master_seed=1, with_stage1=stage1)
    print(f"full, stage1={stage1}: success {s.success_rate:.0%}, "
          f"mean distance {s.mean_distance:.0f} m, mean ratio {s.mean_ratio:.4f}")

# %% Histogram of traveled distance (250 m bins); a timed-out run lands at 4x
# the straight-line distance, far right of the rest
for lo, hi, count in s.histogram:
    if count:
        print(f"{lo:7.0f}-{hi:7.0f} m  {'#' * count}")
