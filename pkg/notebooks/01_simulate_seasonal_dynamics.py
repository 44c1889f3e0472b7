"""Simulate the seasonal SEIRS model at its nominal parameter values.

The nominal scenario seeds a fraction of a person of latent and active
infection into a population whose susceptible pool sits almost exactly at
the endemic threshold. Waning immunity refills the susceptible pool, the
effective reproduction number crosses one, and a large epidemic ignites in
the first year, settling afterwards toward seasonal oscillations.

Run from the repository root:  python notebooks/01_simulate_seasonal_dynamics.py
Figures land in notebooks/output/.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from identifit import TimeGrid, simulate_with_output
from identifit.seirs import NOMINAL, SEIRS, beta_at

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# A denser grid than the screening default, to draw smooth curves.
grid = TimeGrid.regular(0.0, 5.0, 365)
trajectory, new_cases = simulate_with_output(SEIRS, NOMINAL, grid)

fig, axes = plt.subplots(3, 1, figsize=(9, 10), sharex=True)

# Compartments. S and R move on the 1e5 scale, E and I spike during
# epidemics, so each gets its own axis scale.
axes[0].plot(trajectory.times, trajectory.states[:, 0], label="susceptible")
axes[0].plot(trajectory.times, trajectory.states[:, 3], label="recovered")
axes[0].set_ylabel("people")
axes[0].legend(loc="center right")
axes[0].set_title("slow compartments")

axes[1].plot(trajectory.times, trajectory.states[:, 1], label="latent")
axes[1].plot(trajectory.times, trajectory.states[:, 2], label="infectious")
axes[1].set_ylabel("people")
axes[1].legend(loc="upper right")
axes[1].set_title("fast compartments")

# Daily new-case counts against the transmission forcing.
axes[2].plot(grid.points, new_cases, color="tab:red", label="new cases per interval")
ax2 = axes[2].twinx()
ax2.plot(grid.points, beta_at(grid.points, NOMINAL.beta0, NOMINAL.a1, NOMINAL.b1),
         color="tab:gray", alpha=0.6, label="beta(t)")
ax2.set_ylabel("transmission rate (1/years)")
axes[2].set_ylabel("people")
axes[2].set_xlabel("time (years)")
axes[2].set_title("observed incidence and seasonal forcing")

fig.tight_layout()
fig.savefig(OUT / "01_dynamics.png", dpi=130)
print(f"wrote {OUT / '01_dynamics.png'}")

yearly = [new_cases[365 * k: 365 * (k + 1)].sum() for k in range(5)]
print("cases per year:", ", ".join(f"{c:,.0f}" for c in yearly))
print("population conservation error:",
      float(np.max(np.abs(trajectory.states.sum(axis=1) - NOMINAL.N))))
