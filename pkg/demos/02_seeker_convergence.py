"""
How fast the zig-zag closes the heading error
==============================================

Between two legs flown at theta+delta and theta-delta the Doppler difference
is proportional to sin(theta error). That turns the heading update into the
recursion err' = err - 2 sin(err) sin(delta) delta, a discrete gradient step.
"""

import numpy as np

from rfseek import convergence_trace, lyapunov_decrement

delta = np.radians(10)
alpha = delta * np.sin(delta)
print(f"delta = 10 deg, small-angle rate 1 - 2*alpha = {1 - 2 * alpha:.4f}")

# %% Iterations to bring the error below 0.01 rad from various starts
for err0 in (0.1, 0.5, 1.0, 2.0, 3.0):
    trace = np.abs(convergence_trace(err0, delta, 300))
    k = int(np.argmax(trace < 0.01))
    print(f"err0 = {err0:3.1f} rad -> {k:3d} iterations")

# %% The Lyapunov function err^2 decreases everywhere except the fixed point
errs = np.linspace(-np.pi + 0.01, np.pi - 0.01, 7)
print("decrement at delta=10 deg:", np.round(lyapunov_decrement(errs, delta), 5))
