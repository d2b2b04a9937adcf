"""A random graph driven by node skills.

An edge between i and j appears with probability lambda_i lambda_j /
(1 + lambda_i lambda_j).  Its conditional for each skill is a generalised
inverse Gaussian, which the package samples directly.
"""
from __future__ import annotations

import numpy as np

from bayesbt import ChainConfig, GraphData, Hyperparams, run_chain
from bayesbt.em import graph_em

rng = np.random.default_rng(11)
K = 12
true = rng.gamma(2.0, 0.5, K)
p = np.outer(true, true) / (1 + np.outer(true, true))
edges = [(i, j) for i in range(K) for j in range(i + 1, K) if rng.random() < p[i, j]]
data = GraphData(K, edges)
degree = np.bincount(np.array(edges).ravel(), minlength=K)

hp = Hyperparams(a=2.0, b=2.0)
fit = graph_em(data, hp)
chain = run_chain("graph", data, hp, ChainConfig(iterations=3000, burn_in=500, seed=6))
post = chain.skills.mean(axis=0)
print(f"{len(edges)} edges among {K} nodes")
print(f"{'node':>4s} {'degree':>6s} {'true':>6s} {'MAP':>6s} {'mean':>6s}")
for k in np.argsort(-degree):
    print(f"{k:4d} {degree[k]:6d} {true[k]:6.2f} {fit.skills[k]:6.2f} {post[k]:6.2f}")
