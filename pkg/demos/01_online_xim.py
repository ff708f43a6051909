"""
Online XIM, t-XIM, c-XIM and the SOM baseline
=============================================

Trains each online method on the two-cluster surrogate and compares how
well the Shepard embeddings keep neighbourhoods and separate clusters.
"""

import numpy as np
from sklearn.metrics import silhouette_score

import xim

# A 147 x 79 labelled surrogate: clusters of 22 and 125 points.
data = xim.make_clusters(seed=0)
lattice = xim.build_lattice(10, 10)
print(f"data {data.points.shape}, lattice of {lattice.m} nodes")

# Each method only differs in the neighbourhood kernel h (and SOM drops
# the repulsive g term altogether).
for method in ("som", "xim", "t-xim", "c-xim"):
    cfg = xim.TrainConfig(method=method, t_max=20_000, seed=1)
    result = xim.train(data.points, lattice, cfg)
    emb = xim.embed_dataset(data, result.prototypes)
    t, c = xim.trust_cont_curves(data.points, emb.coords, range(1, 21))
    sil = silhouette_score(emb.coords, data.labels)
    print(f"{method:6s} trust {t.mean():.3f}  cont {c.mean():.3f}  silhouette {sil:.3f}")

# The training log keeps the annealed schedules every ``log_stride`` steps.
log = result.log
print("epsilon", np.round(log["epsilon"][[0, -1]], 4), "sigma", np.round(log["sigma"][[0, -1]], 3))
