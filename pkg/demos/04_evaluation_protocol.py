"""
Quality evaluation protocol
===========================

Ten runs on random 95% subsamples, four quality measures, reported as
mean (std). PCA serves as the linear reference.
"""

import xim
from xim.analysis import MethodSpec, evaluate_protocol, format_table

data = xim.make_clusters(seed=1)

specs = [
    MethodSpec("som", xim.TrainConfig(method="som", t_max=10_000)),
    MethodSpec("c-xim", xim.TrainConfig(method="c-xim", t_max=10_000)),
    MethodSpec("pca", xim.TrainConfig(method="pca")),
]
reports = [evaluate_protocol(data, s, runs=10, fraction=0.95, k_range=(1, 50)) for s in specs]
print(format_table(reports))

# Raw per-run values stay available for further statistics.
print("c-xim trustworthiness per run:", [round(float(v), 3) for v in reports[1].raw[:, 2]])
