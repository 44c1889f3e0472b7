"""Screen every parameter subset before touching any data.

For each size p = 4..8 the transmission core (beta0, a1, b1) is augmented
with every combination from the remaining pool. Candidates whose
sensitivity matrix loses full rank are discarded; the survivors are ranked
by the selection score, the norm of the nominal coefficient-of-variation
vector. The kappa-vs-score scatter separates subsets worth fitting (lower
left) from hopeless ones.

Run:  python notebooks/03_subset_screening.py   (about a minute)
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from identifit import feasibility_cut, sweep_subsets
from identifit.seirs import NOMINAL, SIGMA0_SQ, default_grid

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

grid = default_grid()

fig, ax = plt.subplots(figsize=(8, 6))
markers = {4: "o", 5: "s", 6: "^", 7: "v", 8: "D"}

for j in range(1, 6):
    p = j + 3
    reports = sweep_subsets(j, NOMINAL, SIGMA0_SQ, grid, n_jobs=2)
    ranked = [r for r in reports if r.rank_ok]
    failed = len(reports) - len(ranked)
    feasible = feasibility_cut(ranked, kappa_max=1e11, alpha_max=1.0)
    print(f"p={p}: {len(reports)} candidates, {failed} rank-deficient, "
          f"{len(feasible)} feasible; best three by score:")
    for r in ranked[:3]:
        print(f"    {r.subset.label:40s} kappa={r.kappa:9.3e} alpha={r.score:9.3e}")
    ax.scatter([r.kappa for r in ranked], [r.score for r in ranked],
               marker=markers[p], alpha=0.75, label=f"p={p}")

ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel("condition number of the sensitivity matrix")
ax.set_ylabel("selection score (norm of nominal CVs)")
ax.set_title("subset screening: conditioning vs expected uncertainty")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "03_screening_scatter.png", dpi=130)
print(f"wrote {OUT / '03_screening_scatter.png'}")
