"""
Best-match rules and per-sample bandwidths
==========================================

The GKL best match weighs the whole lattice neighbourhood against the
data-space cooperativities. Per-sample bandwidths let g adapt to local
density, either through the k-th neighbour or a perplexity target.
"""

import numpy as np

import xim
from xim.assignment import best_match_gkl, best_match_heskes, best_match_min_distance

rng = np.random.default_rng(0)
lattice = xim.build_lattice(3, 3)
w = rng.standard_normal((9, 2))
x = np.array([0.2, -0.1])

h = xim.KernelSpec("cauchy_lorentz", 1.0)
g = xim.KernelSpec("gaussian", 0.8)
print("min distance winner", best_match_min_distance(x, w).winner)
print("heskes winner      ", best_match_heskes(x, w, lattice, h).winner)
print("gkl winner         ", best_match_gkl(x, w, lattice, h, g).winner)

# Bandwidths on a dense cluster next to a sparse one.
pts = np.vstack([rng.normal(0, 0.2, (30, 2)), rng.normal(5, 2.0, (30, 2))])
knn = xim.bandwidths_knn(pts, k=5)
perp = xim.bandwidths_perplexity(pts, perplexity=8.0)
print("median k-NN squared radius  dense %.3f  sparse %.3f" % (np.median(knn[:30]), np.median(knn[30:])))
print("median perplexity gamma     dense %.3f  sparse %.3f" % (np.median(perp[:30]), np.median(perp[30:])))

# Training with either policy is a config switch.
for mode in ("knn", "perplexity"):
    cfg = xim.TrainConfig(method="c-xim", t_max=5000, bandwidth=mode, k=(10, 3), perplexity=8.0, seed=2)
    res = xim.train(pts, lattice, cfg)
    print(mode, "final prototype spread", np.round(res.prototypes.weights.std(axis=0), 3))
