"""Observation sensitivities and what their singular values reveal.

The sensitivity matrix stacks the derivative of every observation with
respect to every active parameter. Its column norms span nine orders of
magnitude (a day of infectious period moves weekly counts far more than a
person of initial seeding), and its smallest singular directions expose
which parameter combinations the data can barely distinguish: here the
(S0, N, P) demographic trade-offs and the latent-vs-active seed split.

Run:  python notebooks/02_sensitivities_and_rank.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from identifit import (
    finite_difference_sensitivities,
    numerical_rank,
    output_sensitivities,
    rank_tolerance,
    svd,
)
from identifit.seirs import NOMINAL, SEIRS, default_grid

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

grid = default_grid()

# Full 11-parameter sensitivity matrix at the nominal point.
chi = output_sensitivities(SEIRS, NOMINAL, SEIRS.param_names, grid)
res = svd(chi.values)
tol = rank_tolerance(res.singular_values, res.n, res.p)
rank = numerical_rank(res.singular_values, res.n, res.p)

print(f"n = {res.n} observations, p = {res.p} parameters")
print("column norms:")
for name, norm in zip(chi.param_names, np.linalg.norm(chi.values, axis=0)):
    print(f"  {name:>6s}: {norm:10.3e}")
print(f"numerical rank {rank} at tolerance {tol:.3e}")
print("weakest singular directions (dominant parameter weights):")
for k in range(res.p - 3, res.p):
    weights = res.right[:, k]
    top = sorted(zip(chi.param_names, weights), key=lambda nw: -abs(nw[1]))[:3]
    label = ", ".join(f"{n}:{w:+.2f}" for n, w in top)
    print(f"  s_{k + 1} = {res.singular_values[k]:9.3e}  ~  {label}")

# Verify the forward system against central finite differences.
fd = finite_difference_sensitivities(SEIRS, NOMINAL, ("L", "beta0", "a1", "b1"), grid)
fwd = output_sensitivities(SEIRS, NOMINAL, ("L", "beta0", "a1", "b1"), grid)
disc = np.linalg.norm(fwd.values - fd.values, axis=0) / np.linalg.norm(fd.values, axis=0)
print("forward vs finite-difference column discrepancies:",
      ", ".join(f"{n}={d:.1e}" for n, d in zip(fwd.param_names, disc)))

fig, axes = plt.subplots(1, 2, figsize=(12, 4.5))
axes[0].semilogy(np.arange(1, res.p + 1), res.singular_values, "o-")
axes[0].axhline(tol, color="tab:red", ls="--", label="rank tolerance")
axes[0].set_xlabel("index")
axes[0].set_ylabel("singular value")
axes[0].set_title("spectrum of the full sensitivity matrix")
axes[0].legend()

for name in ("D", "M", "a1", "L"):
    col = chi.column(name)
    axes[1].plot(grid.points, col / np.abs(col).max(), label=name)
axes[1].set_xlabel("time (years)")
axes[1].set_ylabel("normalized sensitivity")
axes[1].set_title("selected sensitivity columns (peak-normalized)")
axes[1].legend()
fig.tight_layout()
fig.savefig(OUT / "02_sensitivities.png", dpi=130)
print(f"wrote {OUT / '02_sensitivities.png'}")
